#include "qrcpipe/classify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

#include <Eigen/Dense>

#include "qrcpipe/errors.hpp"
#include "qrcpipe/rng.hpp"

namespace qrcpipe {

std::string to_string(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::knn: return "knn";
        case ClassifierKind::gnb: return "gnb";
        case ClassifierKind::logistic: return "logistic";
        case ClassifierKind::perceptron: return "perceptron";
        case ClassifierKind::sgd_hinge: return "sgd-hinge";
        case ClassifierKind::svm_linear: return "svm-linear";
    }
    return "knn";
}

ClassifierKind classifier_from_string(const std::string& s) {
    if (s == "knn") return ClassifierKind::knn;
    if (s == "gnb") return ClassifierKind::gnb;
    if (s == "logistic") return ClassifierKind::logistic;
    if (s == "perceptron") return ClassifierKind::perceptron;
    if (s == "sgd-hinge" || s == "sgd") return ClassifierKind::sgd_hinge;
    if (s == "svm-linear" || s == "svm") return ClassifierKind::svm_linear;
    throw ConfigError("unknown classifier '" + s + "'");
}

Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.empty() || predictions.size() != labels.size()) {
        throw DataError("compute_metrics requires equal-length non-empty inputs");
    }
    Metrics m;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (labels[i] == 1) {
            predictions[i] == 1 ? ++m.tp : ++m.fn;
        } else {
            predictions[i] == 1 ? ++m.fp : ++m.tn;
        }
    }
    const double total = double(predictions.size());
    m.accuracy = double(m.tp + m.tn) / total;
    m.precision = (m.tp + m.fp) ? double(m.tp) / double(m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) ? double(m.tp) / double(m.tp + m.fn) : 0.0;
    m.f1 = (m.precision + m.recall > 0.0)
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

std::vector<double> balanced_class_weights(const std::vector<int>& labels) {
    double counts[2] = {0.0, 0.0};
    for (int l : labels) counts[l == 1] += 1.0;
    if (counts[0] == 0.0 || counts[1] == 0.0) {
        throw DataError("class weights need both classes present");
    }
    const double total = counts[0] + counts[1];
    return {total / (2.0 * counts[0]), total / (2.0 * counts[1])};
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void check_table(const Table& train) {
    if (!train.labeled()) throw DataError("training requires a labeled table");
}

}  // namespace

int TrainedClassifier::predict(const std::vector<double>& x) const {
    switch (kind) {
        case ClassifierKind::knn: {
            std::vector<std::pair<double, std::size_t>> dist(points.size());
            for (std::size_t i = 0; i < points.size(); ++i) {
                double s = 0.0;
                for (std::size_t c = 0; c < x.size(); ++c) {
                    const double d = x[c] - points[i][c];
                    s += d * d;
                }
                dist[i] = {s, i};
            }
            const auto kk = std::min<std::size_t>(k, dist.size());
            std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
            int votes = 0;
            for (std::size_t t = 0; t < kk; ++t) votes += point_labels[dist[t].second];
            if (2 * votes == int(kk)) return point_labels[dist[0].second];  // even-k tie
            return 2 * votes > int(kk) ? 1 : 0;
        }
        case ClassifierKind::gnb: {
            double best = -std::numeric_limits<double>::infinity();
            int arg = 0;
            for (int c = 0; c < 2; ++c) {
                double lp = log_prior[c];
                for (std::size_t f = 0; f < x.size(); ++f) {
                    const double d = x[f] - gnb_mean[c][f];
                    lp -= 0.5 * (std::log(2.0 * M_PI * gnb_var[c][f]) + d * d / gnb_var[c][f]);
                }
                if (lp > best) {
                    best = lp;
                    arg = c;
                }
            }
            return arg;
        }
        default:
            return dot(w, x) + b > 0.0 ? 1 : 0;
    }
}

std::vector<int> TrainedClassifier::predict_all(
    const std::vector<std::vector<double>>& xs) const {
    std::vector<int> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = predict(xs[i]);
    return out;
}

TrainedClassifier train_knn(const Table& train, int k) {
    check_table(train);
    if (k < 1 || std::size_t(k) > train.n_rows()) {
        throw DataError("knn: k must be in 1..train size");
    }
    TrainedClassifier c;
    c.kind = ClassifierKind::knn;
    c.hyperparameters = "k=" + std::to_string(k);
    c.points = train.rows;
    c.point_labels = train.labels;
    c.k = k;
    return c;
}

TrainedClassifier train_gnb(const Table& train) {
    check_table(train);
    const auto d = train.n_cols();
    TrainedClassifier c;
    c.kind = ClassifierKind::gnb;
    c.hyperparameters = "-";
    c.log_prior.assign(2, 0.0);
    c.gnb_mean.assign(2, std::vector<double>(d, 0.0));
    c.gnb_var.assign(2, std::vector<double>(d, 0.0));
    double counts[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < train.n_rows(); ++i) {
        const int y = train.labels[i] == 1;
        counts[y] += 1.0;
        for (std::size_t f = 0; f < d; ++f) c.gnb_mean[y][f] += train.rows[i][f];
    }
    if (counts[0] == 0.0 || counts[1] == 0.0) {
        throw DataError("gnb: both classes must be present");
    }
    for (int y = 0; y < 2; ++y)
        for (std::size_t f = 0; f < d; ++f) c.gnb_mean[y][f] /= counts[y];
    // Population variance per class, plus smoothing scaled to the largest
    // overall feature variance.
    std::vector<double> overall_mean(d, 0.0), overall_var(d, 0.0);
    for (const auto& row : train.rows)
        for (std::size_t f = 0; f < d; ++f) overall_mean[f] += row[f];
    for (std::size_t f = 0; f < d; ++f) overall_mean[f] /= double(train.n_rows());
    for (const auto& row : train.rows)
        for (std::size_t f = 0; f < d; ++f) {
            const double dev = row[f] - overall_mean[f];
            overall_var[f] += dev * dev;
        }
    double max_var = 0.0;
    for (std::size_t f = 0; f < d; ++f)
        max_var = std::max(max_var, overall_var[f] / double(train.n_rows()));
    const double eps = 1e-9 * std::max(max_var, 1e-300);
    for (std::size_t i = 0; i < train.n_rows(); ++i) {
        const int y = train.labels[i] == 1;
        for (std::size_t f = 0; f < d; ++f) {
            const double dev = train.rows[i][f] - c.gnb_mean[y][f];
            c.gnb_var[y][f] += dev * dev;
        }
    }
    for (int y = 0; y < 2; ++y) {
        c.log_prior[y] = std::log(counts[y] / (counts[0] + counts[1]));
        for (std::size_t f = 0; f < d; ++f) c.gnb_var[y][f] = c.gnb_var[y][f] / counts[y] + eps;
    }
    return c;
}

TrainedClassifier train_logistic(const Table& train, double C,
                                 const std::vector<double>& class_weights) {
    check_table(train);
    if (C <= 0.0) throw ConfigError("logistic: C must be positive");
    const auto n = train.n_rows();
    const auto d = train.n_cols();
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n), wt(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < d; ++f) x(i, f) = train.rows[i][f];
        y(i) = train.labels[i] == 1 ? 1.0 : -1.0;
        wt(i) = class_weights[train.labels[i] == 1];
    }

    // Parameter vector theta = (w, b); only w is penalized.
    auto loss_grad = [&](const Eigen::VectorXd& th, Eigen::VectorXd& grad) {
        const Eigen::VectorXd m = y.cwiseProduct(x * th.head(d) + Eigen::VectorXd::Constant(n, th(d)));
        double loss = 0.0;
        Eigen::VectorXd coef(n);  // per-sample d loss / d z
        for (std::size_t i = 0; i < n; ++i) {
            const double mi = m(i);
            // log(1 + e^{-m}) stably
            loss += wt(i) * (mi > 0 ? std::log1p(std::exp(-mi))
                                    : -mi + std::log1p(std::exp(mi)));
            coef(i) = -wt(i) * y(i) / (1.0 + std::exp(mi));
        }
        grad.resize(d + 1);
        grad.head(d) = x.transpose() * coef + th.head(d) / C;
        grad(d) = coef.sum();
        return loss + th.head(d).squaredNorm() / (2.0 * C);
    };

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
    Eigen::VectorXd grad, prev_theta, prev_grad, trial, trial_grad;
    double loss = loss_grad(theta, grad);
    bool converged = false;
    double alpha = 1.0;
    double last_step = 1.0;
    for (int iter = 0; iter < 1000; ++iter) {
        const double gnorm = grad.norm();
        if (gnorm < 1e-6) {
            converged = true;
            break;
        }
        // Barzilai-Borwein step estimate with Armijo backtracking. The trial
        // step is capped at a small multiple of the last accepted step so a
        // wild curvature estimate costs a few halvings, not dozens.
        if (prev_theta.size() > 0) {
            const Eigen::VectorXd s = theta - prev_theta;
            const double sy = s.dot(grad - prev_grad);
            if (sy > 1e-300) alpha = s.squaredNorm() / sy;
        }
        alpha = std::clamp(alpha, 1e-12, 4.0 * last_step);
        prev_theta = theta;
        prev_grad = grad;
        double step = alpha;
        for (int bt = 0; bt < 60; ++bt) {
            trial = theta - step * grad;
            const double trial_loss = loss_grad(trial, trial_grad);
            if (trial_loss <= loss - 1e-4 * step * gnorm * gnorm || bt == 59) {
                theta = trial;
                grad = trial_grad;
                loss = trial_loss;
                last_step = step;
                break;
            }
            step *= 0.5;
        }
        if (!std::isfinite(loss)) throw NumericalError("logistic training diverged");
    }

    TrainedClassifier c;
    c.kind = ClassifierKind::logistic;
    c.hyperparameters = "C=" + std::to_string(C);
    c.converged = converged;
    c.w.assign(theta.data(), theta.data() + d);
    c.b = theta(d);
    return c;
}

TrainedClassifier train_perceptron(const Table& train, double eta,
                                   const std::vector<double>& class_weights,
                                   std::uint64_t seed) {
    check_table(train);
    if (eta <= 0.0) throw ConfigError("perceptron: eta must be positive");
    const auto n = train.n_rows();
    const auto d = train.n_cols();
    TrainedClassifier c;
    c.kind = ClassifierKind::perceptron;
    c.hyperparameters = "eta=" + std::to_string(eta);
    c.w.assign(d, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < 1000; ++epoch) {
        auto rng = make_rng(seed, "perceptron/epoch", epoch);
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
            const double y = train.labels[i] == 1 ? 1.0 : -1.0;
            const double wt = class_weights[train.labels[i] == 1];
            if (y * (dot(c.w, train.rows[i]) + c.b) <= 0.0) {
                const double step = eta * wt * y;
                for (std::size_t f = 0; f < d; ++f) c.w[f] += step * train.rows[i][f];
                c.b += step;
            }
        }
    }
    return c;
}

TrainedClassifier train_sgd_hinge(const Table& train, int epochs,
                                  const std::vector<double>& class_weights,
                                  std::uint64_t seed, double lambda) {
    check_table(train);
    if (epochs < 1) throw ConfigError("sgd: epochs must be >= 1");
    const auto n = train.n_rows();
    const auto d = train.n_cols();
    TrainedClassifier c;
    c.kind = ClassifierKind::sgd_hinge;
    c.hyperparameters = "epochs=" + std::to_string(epochs);
    c.w.assign(d, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t t = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        auto rng = make_rng(seed, "sgd/epoch", epoch);
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
            ++t;
            const double eta = 1.0 / (lambda * double(t));
            const double y = train.labels[i] == 1 ? 1.0 : -1.0;
            const double wt = class_weights[train.labels[i] == 1];
            const double margin = y * (dot(c.w, train.rows[i]) + c.b);
            const double shrink = 1.0 - eta * lambda;
            for (std::size_t f = 0; f < d; ++f) c.w[f] *= shrink;
            if (margin < 1.0) {
                const double step = eta * wt * y;
                for (std::size_t f = 0; f < d; ++f) c.w[f] += step * train.rows[i][f];
                c.b += step;
            }
        }
    }
    return c;
}

TrainedClassifier train_svm_linear(const Table& train, double C,
                                   const std::vector<double>& class_weights,
                                   std::uint64_t seed) {
    check_table(train);
    if (C <= 0.0) throw ConfigError("svm: C must be positive");
    const auto n = train.n_rows();
    const auto d = train.n_cols();
    // Dual coordinate descent on the L1-loss SVM with an augmented bias
    // feature; box 0 <= alpha_i <= weight_i C.
    std::vector<double> alpha(n, 0.0);
    std::vector<double> w(d + 1, 0.0);
    std::vector<double> qii(n), y(n), box(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = train.labels[i] == 1 ? 1.0 : -1.0;
        box[i] = class_weights[train.labels[i] == 1] * C;
        qii[i] = dot(train.rows[i], train.rows[i]) + 1.0;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    bool converged = false;
    for (int pass = 0; pass < 1000; ++pass) {
        auto rng = make_rng(seed, "svm/pass", pass);
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
            double score = w[d];
            for (std::size_t f = 0; f < d; ++f) score += w[f] * train.rows[i][f];
            const double g = y[i] * score - 1.0;
            const double old = alpha[i];
            const double next = std::clamp(old - g / qii[i], 0.0, box[i]);
            if (next == old) continue;
            const double delta = (next - old) * y[i];
            for (std::size_t f = 0; f < d; ++f) w[f] += delta * train.rows[i][f];
            w[d] += delta;
            alpha[i] = next;
        }
        // Duality gap: primal (with hinge losses) minus dual objective.
        double wnorm = 0.0;
        for (double v : w) wnorm += v * v;
        double primal = 0.5 * wnorm;
        double dual = -0.5 * wnorm;
        for (std::size_t i = 0; i < n; ++i) {
            double score = w[d];
            for (std::size_t f = 0; f < d; ++f) score += w[f] * train.rows[i][f];
            primal += box[i] * std::max(0.0, 1.0 - y[i] * score);
            dual += alpha[i];
        }
        if (primal - dual <= 1e-3 * (1.0 + std::abs(primal))) {
            converged = true;
            break;
        }
    }

    TrainedClassifier c;
    c.kind = ClassifierKind::svm_linear;
    c.hyperparameters = "C=" + std::to_string(C);
    c.converged = converged;
    c.w.assign(w.begin(), w.begin() + d);
    c.b = w[d];
    return c;
}

namespace {

struct Candidate {
    std::string name;
    std::function<TrainedClassifier()> fit;
};

GridSearchResult search(const std::vector<Candidate>& grid, const Table& validation,
                        const Table& test) {
    if (grid.empty()) throw ConfigError("grid search needs at least one candidate");
    GridSearchResult res;
    double best_f1 = -1.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto t0 = std::chrono::steady_clock::now();
        auto model = grid[g].fit();
        const auto t1 = std::chrono::steady_clock::now();
        GridSearchResult::Cell cell;
        cell.hyperparameters = grid[g].name;
        cell.train_seconds = std::chrono::duration<double>(t1 - t0).count();
        cell.validation = compute_metrics(model.predict_all(validation.rows),
                                          validation.labels);
        res.total_train_seconds += cell.train_seconds;
        if (cell.validation.f1 > best_f1) {
            best_f1 = cell.validation.f1;
            res.selected = g;
            res.best = std::move(model);
            res.validation = cell.validation;
        }
        res.cells.push_back(std::move(cell));
    }
    res.test = compute_metrics(res.best.predict_all(test.rows), test.labels);
    return res;
}

}  // namespace

GridSearchResult run_classifier(ClassifierKind kind, const Table& train,
                                const Table& validation, const Table& test,
                                std::uint64_t seed) {
    std::vector<Candidate> grid;
    const auto weights = balanced_class_weights(train.labels);
    switch (kind) {
        case ClassifierKind::knn:
            for (int k = 2; k <= 15; ++k) {
                grid.push_back({"k=" + std::to_string(k),
                                [&train, k] { return train_knn(train, k); }});
            }
            break;
        case ClassifierKind::gnb: {
            // No hyperparameters: fit once on train + validation.
            Table merged = train;
            merged.rows.insert(merged.rows.end(), validation.rows.begin(),
                               validation.rows.end());
            merged.labels.insert(merged.labels.end(), validation.labels.begin(),
                                 validation.labels.end());
            grid.push_back({"-", [merged] { return train_gnb(merged); }});
            break;
        }
        case ClassifierKind::logistic:
            for (double C : {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2}) {
                grid.push_back({"C=" + std::to_string(C), [&train, C, weights] {
                                    return train_logistic(train, C, weights);
                                }});
            }
            break;
        case ClassifierKind::perceptron:
            for (double eta : {1e-1, 1e-2, 1e-3}) {
                grid.push_back({"eta=" + std::to_string(eta), [&train, eta, weights, seed] {
                                    return train_perceptron(train, eta, weights, seed);
                                }});
            }
            break;
        case ClassifierKind::sgd_hinge:
            for (int epochs = 10; epochs <= 100; epochs += 10) {
                grid.push_back(
                    {"epochs=" + std::to_string(epochs), [&train, epochs, weights, seed] {
                         return train_sgd_hinge(train, epochs, weights, seed);
                     }});
            }
            break;
        case ClassifierKind::svm_linear:
            for (double C : {1e-1, 1.0, 1e1, 1e2}) {
                grid.push_back({"C=" + std::to_string(C), [&train, C, weights, seed] {
                                    return train_svm_linear(train, C, weights, seed);
                                }});
            }
            break;
    }
    return search(grid, validation, test);
}

}  // namespace qrcpipe
