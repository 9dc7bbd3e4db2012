#include "qrcpipe/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "qrcpipe/errors.hpp"

namespace qrcpipe {

const std::vector<std::string> kEncodedColumns = {
    "LIMIT_BAL", "SEX_1",     "EDUCATION", "MARRIAGE_1", "MARRIAGE_2", "AGE",
    "PAY_1",     "PAY_2",     "PAY_3",     "PAY_4",      "PAY_5",      "PAY_6",
    "BILL_AMT1", "BILL_AMT2", "BILL_AMT3", "BILL_AMT4",  "BILL_AMT5",  "BILL_AMT6",
    "PAY_AMT1",  "PAY_AMT2",  "PAY_AMT3",  "PAY_AMT4",   "PAY_AMT5",   "PAY_AMT6"};

Table one_hot_encode(const std::vector<RawRecord>& records) {
    Table t;
    t.columns = kEncodedColumns;
    t.rows.reserve(records.size());
    for (const auto& r : records) {
        if (r.marriage < 1 || r.marriage > 3) {
            throw DataError("uncleaned MARRIAGE value " + std::to_string(r.marriage));
        }
        if (r.education < 1 || r.education > 4) {
            throw DataError("uncleaned EDUCATION value " + std::to_string(r.education));
        }
        std::vector<double> row;
        row.reserve(24);
        row.push_back(r.limit_bal);
        row.push_back(r.sex == 1 ? 1.0 : 0.0);
        row.push_back(static_cast<double>(r.education));
        row.push_back(r.marriage == 1 ? 1.0 : 0.0);
        row.push_back(r.marriage == 2 ? 1.0 : 0.0);
        row.push_back(r.age);
        for (int v : r.pay) row.push_back(static_cast<double>(v));
        for (double v : r.bill_amt) row.push_back(v);
        for (double v : r.pay_amt) row.push_back(v);
        t.rows.push_back(std::move(row));
        t.labels.push_back(r.label);
    }
    return t;
}

ScalerModel fit_maxabs(const Table& table) {
    if (table.n_rows() == 0) throw DataError("max-abs fit requires at least one row");
    ScalerModel m;
    m.columns = table.columns;
    m.max_abs.assign(table.n_cols(), 0.0);
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            m.max_abs[c] = std::max(m.max_abs[c], std::abs(row[c]));
        }
    }
    for (std::size_t c = 0; c < m.max_abs.size(); ++c) {
        if (m.max_abs[c] <= 0.0) {
            throw DataError("constant-zero column cannot be scaled: " + m.columns[c]);
        }
    }
    return m;
}

Table apply_maxabs(const ScalerModel& model, const Table& table) {
    if (table.columns != model.columns) throw DataError("scaler column mismatch");
    Table out = table;
    for (auto& row : out.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) row[c] /= model.max_abs[c];
    }
    return out;
}

static Eigen::MatrixXd to_matrix(const Table& t) {
    Eigen::MatrixXd X(t.n_rows(), t.n_cols());
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
        for (std::size_t c = 0; c < t.n_cols(); ++c) X(r, c) = t.rows[r][c];
    }
    return X;
}

PcaModel fit_pca(const Table& scaled) {
    const std::size_t n = scaled.n_rows(), d = scaled.n_cols();
    if (n < d) throw DataError("PCA requires at least as many rows as columns");
    Eigen::MatrixXd X = to_matrix(scaled);
    PcaModel m;
    m.columns = scaled.columns;
    m.means = X.colwise().mean();
    X.rowwise() -= m.means.transpose();
    Eigen::MatrixXd cov = X.transpose() * X / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericalError("PCA eigendecomposition failed");

    Eigen::VectorXd lam = solver.eigenvalues().reverse();
    Eigen::MatrixXd vec = solver.eigenvectors().rowwise().reverse();
    double total = lam.sum();
    if (total <= 0.0) throw DataError("degenerate covariance: zero total variance");

    // Sign convention: largest-magnitude loading positive.
    for (Eigen::Index c = 0; c < vec.cols(); ++c) {
        Eigen::Index imax;
        vec.col(c).cwiseAbs().maxCoeff(&imax);
        if (vec(imax, c) < 0) vec.col(c) = -vec.col(c);
    }
    m.loadings = vec;
    m.eigenvalues = lam.cwiseMax(0.0);
    m.variance_ratio = m.eigenvalues / total;
    int k = 0;
    while (k < m.variance_ratio.size() && m.variance_ratio[k] >= 0.001) ++k;
    if (k == 0) throw DataError("degenerate covariance: no component meets the variance rule");
    m.n_selected = k;
    return m;
}

Eigen::MatrixXd pca_project(const PcaModel& model, const Table& scaled, int n_components) {
    Eigen::MatrixXd X = to_matrix(scaled);
    X.rowwise() -= model.means.transpose();
    return X * model.loadings.leftCols(n_components);
}

Eigen::MatrixXd pca_back_project(const PcaModel& model, const Eigen::MatrixXd& projected) {
    Eigen::MatrixXd X = projected * model.loadings.leftCols(projected.cols()).transpose();
    X.rowwise() += model.means.transpose();
    return X;
}

FeatureClustering cluster_features(const PcaModel& pca) {
    const int d = static_cast<int>(pca.columns.size());
    const int k = pca.n_selected;
    // Correlation-circle coordinates: loading rows scaled by component sigma.
    Eigen::MatrixXd coords = pca.loadings.leftCols(k);
    for (int c = 0; c < k; ++c) coords.col(c) *= std::sqrt(pca.eigenvalues[c]);

    Eigen::MatrixXd dist(d, d);
    double max_dist = 0.0;
    for (int i = 0; i < d; ++i) {
        dist(i, i) = 0.0;
        for (int j = i + 1; j < d; ++j) {
            double v = (coords.row(i) - coords.row(j)).norm();
            dist(i, j) = dist(j, i) = v;
            max_dist = std::max(max_dist, v);
        }
    }
    const double threshold = 0.5 * max_dist;

    // Ward agglomeration via the Lance-Williams recurrence.
    std::vector<int> size(d, 1);
    std::vector<bool> alive(d, true);
    std::vector<std::vector<int>> members(d);
    for (int i = 0; i < d; ++i) members[i] = {i};
    int n_alive = d;
    while (n_alive > 1) {
        int bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < d; ++i) {
            if (!alive[i]) continue;
            for (int j = i + 1; j < d; ++j) {
                if (!alive[j]) continue;
                if (dist(i, j) < best) {
                    best = dist(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        if (best > threshold) break;
        for (int t = 0; t < d; ++t) {
            if (!alive[t] || t == bi || t == bj) continue;
            double ni = size[bi], nj = size[bj], nt = size[t];
            double v = std::sqrt(((ni + nt) * dist(bi, t) * dist(bi, t) +
                                  (nj + nt) * dist(bj, t) * dist(bj, t) -
                                  nt * best * best) /
                                 (ni + nj + nt));
            dist(bi, t) = dist(t, bi) = v;
        }
        size[bi] += size[bj];
        members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
        alive[bj] = false;
        --n_alive;
    }

    FeatureClustering out;
    out.columns = pca.columns;
    out.threshold = threshold;
    out.cluster_of.assign(d, -1);
    std::vector<std::pair<int, int>> heads;  // (smallest member, root)
    for (int i = 0; i < d; ++i) {
        if (alive[i]) heads.emplace_back(*std::min_element(members[i].begin(), members[i].end()), i);
    }
    std::sort(heads.begin(), heads.end());
    for (std::size_t id = 0; id < heads.size(); ++id) {
        for (int f : members[heads[id].second]) out.cluster_of[f] = static_cast<int>(id);
    }
    out.n_clusters = static_cast<int>(heads.size());
    return out;
}

Table aggregate(const FeatureClustering& clustering, const Table& scaled) {
    if (scaled.columns != clustering.columns) {
        // Report the first column missing from the clustering.
        for (const auto& c : scaled.columns) {
            if (std::find(clustering.columns.begin(), clustering.columns.end(), c) ==
                clustering.columns.end()) {
                throw DataError("column missing from clustering: " + c);
            }
        }
        throw DataError("column order mismatch between table and clustering");
    }
    Table out;
    std::vector<std::vector<std::size_t>> groups(clustering.n_clusters);
    for (std::size_t c = 0; c < clustering.cluster_of.size(); ++c) {
        groups[clustering.cluster_of[c]].push_back(c);
    }
    for (int g = 0; g < clustering.n_clusters; ++g) {
        out.columns.push_back("cluster_" + std::to_string(g));
    }
    out.rows.reserve(scaled.n_rows());
    for (const auto& row : scaled.rows) {
        std::vector<double> agg(groups.size());
        for (std::size_t g = 0; g < groups.size(); ++g) {
            double s = 0.0;
            for (std::size_t c : groups[g]) s += row[c];
            agg[g] = s / static_cast<double>(groups[g].size());
        }
        out.rows.push_back(std::move(agg));
    }
    out.labels = scaled.labels;
    return out;
}

PreprocessModels fit_preprocess(const std::vector<RawRecord>& records) {
    Table encoded = one_hot_encode(records);
    PreprocessModels m;
    m.scaler = fit_maxabs(encoded);
    Table scaled = apply_maxabs(m.scaler, encoded);
    m.pca = fit_pca(scaled);
    m.clustering = cluster_features(m.pca);
    return m;
}

Table apply_preprocess(const PreprocessModels& models, const std::vector<RawRecord>& records) {
    Table encoded = one_hot_encode(records);
    Table scaled = apply_maxabs(models.scaler, encoded);
    return aggregate(models.clustering, scaled);
}

namespace {

nlohmann::json vector_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd json_vector(const nlohmann::json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
    return v;
}

}  // namespace

void save_preprocess(const std::string& path, const PreprocessModels& m) {
    nlohmann::json j;
    j["format"] = "qrcpipe-preprocess-v1";
    j["columns"] = m.scaler.columns;
    j["max_abs"] = m.scaler.max_abs;
    j["means"] = vector_json(m.pca.means);
    j["eigenvalues"] = vector_json(m.pca.eigenvalues);
    j["variance_ratio"] = vector_json(m.pca.variance_ratio);
    j["n_selected"] = m.pca.n_selected;
    nlohmann::json loadings = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.pca.loadings.rows(); ++r) {
        loadings.push_back(vector_json(m.pca.loadings.row(r)));
    }
    j["loadings"] = loadings;
    j["cluster_of"] = m.clustering.cluster_of;
    j["n_clusters"] = m.clustering.n_clusters;
    j["threshold"] = m.clustering.threshold;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

PreprocessModels load_preprocess(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "qrcpipe-preprocess-v1") {
        throw DataError("unrecognized preprocess document: " + path);
    }
    PreprocessModels m;
    m.scaler.columns = j["columns"].get<std::vector<std::string>>();
    m.scaler.max_abs = j["max_abs"].get<std::vector<double>>();
    m.pca.columns = m.scaler.columns;
    m.pca.means = json_vector(j["means"]);
    m.pca.eigenvalues = json_vector(j["eigenvalues"]);
    m.pca.variance_ratio = json_vector(j["variance_ratio"]);
    m.pca.n_selected = j["n_selected"].get<int>();
    const auto& loadings = j["loadings"];
    m.pca.loadings.resize(loadings.size(), loadings.size());
    for (std::size_t r = 0; r < loadings.size(); ++r) {
        m.pca.loadings.row(r) = json_vector(loadings[r]).transpose();
    }
    m.clustering.columns = m.scaler.columns;
    m.clustering.cluster_of = j["cluster_of"].get<std::vector<int>>();
    m.clustering.n_clusters = j["n_clusters"].get<int>();
    m.clustering.threshold = j["threshold"].get<double>();
    return m;
}

}  // namespace qrcpipe
