#include "qrcpipe/dnn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "qrcpipe/errors.hpp"
#include "qrcpipe/rng.hpp"

namespace qrcpipe {

namespace {

const int kHidden[] = {64, 128, 256, 128, 64};
constexpr int kOutputs = 2;

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Eigen::MatrixXd x(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[0].size(); ++c) x(r, c) = rows[r][c];
    return x;
}

}  // namespace

MlpModel MlpModel::init(int input_dim, double dropout, std::uint64_t seed) {
    MlpModel m;
    m.dropout = dropout;
    auto rng = make_rng(seed, "dnn/init");
    std::vector<int> widths = {input_dim};
    widths.insert(widths.end(), std::begin(kHidden), std::end(kHidden));
    widths.push_back(kOutputs);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const double bound = std::sqrt(1.0 / widths[l]);
        std::uniform_real_distribution<double> u(-bound, bound);
        Eigen::MatrixXd w(widths[l], widths[l + 1]);
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j) w(i, j) = u(rng);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Eigen::VectorXd::Zero(widths[l + 1]));
    }
    return m;
}

Eigen::MatrixXd MlpModel::forward(const Eigen::MatrixXd& x) const {
    if (x.cols() != weights.front().rows()) {
        throw DataError("mlp: input width " + std::to_string(x.cols()) + ", expected " +
                        std::to_string(weights.front().rows()));
    }
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        a = (a * weights[l]).rowwise() + biases[l].transpose();
        if (l + 1 < weights.size()) a = a.cwiseMax(0.0);
    }
    return a;
}

std::vector<int> MlpModel::predict_all(const std::vector<std::vector<double>>& rows) const {
    const auto logits = forward(to_matrix(rows));
    std::vector<int> out(rows.size());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) out[r] = logits(r, 1) > logits(r, 0);
    return out;
}

double mlp_loss_grad(const MlpModel& model, const Eigen::MatrixXd& x,
                     const std::vector<int>& labels, bool training, std::uint64_t seed,
                     std::vector<Eigen::MatrixXd>& grad_w,
                     std::vector<Eigen::VectorXd>& grad_b) {
    const auto n_layers = model.weights.size();
    const auto batch = x.rows();
    grad_w.resize(n_layers);
    grad_b.resize(n_layers);

    std::vector<Eigen::MatrixXd> acts(n_layers + 1);  // post-activation inputs per layer
    std::vector<Eigen::MatrixXd> masks(n_layers);
    acts[0] = x;
    auto rng = make_rng(seed, "dnn/dropout");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double keep = 1.0 - model.dropout;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd z = (acts[l] * model.weights[l]).rowwise() +
                            model.biases[l].transpose();
        if (l + 1 < n_layers) {
            z = z.cwiseMax(0.0);
            if (training && model.dropout > 0.0) {
                masks[l].resize(z.rows(), z.cols());
                for (Eigen::Index i = 0; i < z.rows(); ++i)
                    for (Eigen::Index j = 0; j < z.cols(); ++j)
                        masks[l](i, j) = unit(rng) < keep ? 1.0 / keep : 0.0;
                z = z.cwiseProduct(masks[l]);
            }
        }
        acts[l + 1] = std::move(z);
    }

    // Softmax cross-entropy, mean over the batch.
    Eigen::MatrixXd probs = acts[n_layers];
    double loss = 0.0;
    for (Eigen::Index r = 0; r < batch; ++r) {
        const double mx = probs.row(r).maxCoeff();
        Eigen::RowVectorXd e = (probs.row(r).array() - mx).exp();
        const double sum = e.sum();
        loss -= std::log(e(labels[r]) / sum);
        probs.row(r) = e / sum;
        probs(r, labels[r]) -= 1.0;
    }
    loss /= double(batch);
    Eigen::MatrixXd delta = probs / double(batch);

    for (std::size_t l = n_layers; l-- > 0;) {
        grad_w[l] = acts[l].transpose() * delta;
        grad_b[l] = delta.colwise().sum();
        if (l == 0) break;
        delta = delta * model.weights[l].transpose();
        if (masks[l - 1].size() > 0) delta = delta.cwiseProduct(masks[l - 1]);
        delta = delta.cwiseProduct(
            (acts[l].array() != 0.0).cast<double>().matrix());
    }
    return loss;
}

DnnResult train_dnn(const Table& train, const Table& validation, const Table& test,
                    const DnnOptions& opts, std::uint64_t seed) {
    if (opts.lr <= 0.0 || opts.batch_size < 1) {
        throw ConfigError("dnn: lr must be positive and batch size >= 1");
    }
    const auto x_train = to_matrix(train.rows);
    const auto n = train.n_rows();

    MlpModel model = MlpModel::init(int(train.n_cols()), opts.dropout, seed);
    std::vector<Eigen::MatrixXd> m_w, v_w, grad_w;
    std::vector<Eigen::VectorXd> m_b, v_b, grad_b;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        m_w.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
        v_w.push_back(m_w.back());
        m_b.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
        v_b.push_back(m_b.back());
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;

    DnnResult res;
    res.hyperparameters =
        "lr=" + std::to_string(opts.lr) + ",batch=" + std::to_string(opts.batch_size);
    double best_f1 = -1.0;
    int since_best = 0;
    MlpModel best = model;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto t0 = std::chrono::steady_clock::now();

    for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
        auto rng = make_rng(seed, "dnn/epoch", epoch);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += opts.batch_size) {
            const auto bsz = std::min<std::size_t>(opts.batch_size, n - start);
            Eigen::MatrixXd xb(bsz, train.n_cols());
            std::vector<int> yb(bsz);
            for (std::size_t r = 0; r < bsz; ++r) {
                xb.row(r) = x_train.row(order[start + r]);
                yb[r] = train.labels[order[start + r]] == 1;
            }
            const double loss =
                mlp_loss_grad(model, xb, yb, true,
                              derive_seed(seed, "dnn/step", epoch, start), grad_w, grad_b);
            if (!std::isfinite(loss)) {
                throw NumericalError("dnn loss became non-finite at epoch " +
                                     std::to_string(epoch));
            }
            ++step;
            const double corr =
                std::sqrt(1.0 - std::pow(beta2, step)) / (1.0 - std::pow(beta1, step));
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                m_w[l] = beta1 * m_w[l] + (1.0 - beta1) * grad_w[l];
                v_w[l] = beta2 * v_w[l] + (1.0 - beta2) * grad_w[l].cwiseProduct(grad_w[l]);
                model.weights[l].array() -=
                    opts.lr * corr * m_w[l].array() / (v_w[l].array().sqrt() + eps);
                m_b[l] = beta1 * m_b[l] + (1.0 - beta1) * grad_b[l];
                v_b[l] = beta2 * v_b[l] + (1.0 - beta2) * grad_b[l].cwiseProduct(grad_b[l]);
                model.biases[l].array() -=
                    opts.lr * corr * m_b[l].array() / (v_b[l].array().sqrt() + eps);
            }
        }
        res.epochs_run = epoch + 1;
        const auto val_metrics =
            compute_metrics(model.predict_all(validation.rows), validation.labels);
        if (val_metrics.f1 > best_f1) {
            best_f1 = val_metrics.f1;
            best = model;
            res.validation = val_metrics;
            res.best_epoch = epoch + 1;
            since_best = 0;
        } else if (++since_best >= opts.patience) {
            break;
        }
    }
    res.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.model = std::move(best);
    res.test = compute_metrics(res.model.predict_all(test.rows), test.labels);
    return res;
}

DnnResult dnn_grid_search(const Table& train, const Table& validation, const Table& test,
                          std::uint64_t seed, int max_epochs) {
    DnnResult best;
    bool have = false;
    double best_f1 = -1.0;
    double total_seconds = 0.0;
    std::string last_error;
    for (double lr : {0.1, 0.01, 0.001}) {
        for (int batch : {64, 128, 256}) {
            DnnOptions opts;
            opts.lr = lr;
            opts.batch_size = batch;
            opts.max_epochs = max_epochs;
            try {
                auto res = train_dnn(train, validation, test, opts, seed);
                total_seconds += res.train_seconds;
                if (res.validation.f1 > best_f1) {
                    best_f1 = res.validation.f1;
                    best = std::move(res);
                    have = true;
                }
            } catch (const NumericalError& e) {
                last_error = e.what();  // diverging candidate, skip it
            }
        }
    }
    if (!have) throw NumericalError("every dnn grid candidate diverged: " + last_error);
    best.train_seconds = total_seconds;
    return best;
}

namespace {
constexpr char kMagic[] = "qrcpipe-mlp-v1";
}

void MlpModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file: " + path);
    out.write(kMagic, sizeof kMagic);
    const std::uint32_t layers = std::uint32_t(weights.size());
    out.write(reinterpret_cast<const char*>(&layers), sizeof layers);
    out.write(reinterpret_cast<const char*>(&dropout), sizeof dropout);
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const std::uint32_t rows = std::uint32_t(weights[l].rows());
        const std::uint32_t cols = std::uint32_t(weights[l].cols());
        out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
        out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
        for (Eigen::Index i = 0; i < weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < weights[l].cols(); ++j) {
                const double v = weights[l](i, j);
                out.write(reinterpret_cast<const char*>(&v), sizeof v);
            }
        for (Eigen::Index j = 0; j < biases[l].size(); ++j) {
            const double v = biases[l](j);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
}

MlpModel MlpModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || std::string(magic) != kMagic) {
        throw DataError("not a model file: " + path);
    }
    MlpModel m;
    std::uint32_t layers = 0;
    in.read(reinterpret_cast<char*>(&layers), sizeof layers);
    in.read(reinterpret_cast<char*>(&m.dropout), sizeof m.dropout);
    for (std::uint32_t l = 0; l < layers; ++l) {
        std::uint32_t rows = 0, cols = 0;
        in.read(reinterpret_cast<char*>(&rows), sizeof rows);
        in.read(reinterpret_cast<char*>(&cols), sizeof cols);
        Eigen::MatrixXd w(rows, cols);
        for (std::uint32_t i = 0; i < rows; ++i)
            for (std::uint32_t j = 0; j < cols; ++j) {
                double v = 0;
                in.read(reinterpret_cast<char*>(&v), sizeof v);
                w(i, j) = v;
            }
        Eigen::VectorXd b(cols);
        for (std::uint32_t j = 0; j < cols; ++j) {
            double v = 0;
            in.read(reinterpret_cast<char*>(&v), sizeof v);
            b(j) = v;
        }
        if (!in) throw DataError("truncated model file: " + path);
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    return m;
}

}  // namespace qrcpipe
