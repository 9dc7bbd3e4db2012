#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "qrcpipe/dataset.hpp"
#include "qrcpipe/table.hpp"

namespace qrcpipe {

struct ScalerModel {
    std::vector<std::string> columns;
    std::vector<double> max_abs;  // all strictly positive
};

struct PcaModel {
    std::vector<std::string> columns;
    Eigen::VectorXd means;
    Eigen::MatrixXd loadings;        // n_features x n_features, orthonormal columns
    Eigen::VectorXd eigenvalues;     // non-increasing
    Eigen::VectorXd variance_ratio;  // eigenvalues / total variance
    int n_selected = 0;              // greedy cut: first component with ratio < 0.001
};

struct FeatureClustering {
    std::vector<std::string> columns;
    std::vector<int> cluster_of;  // per feature, ids ascending by first member
    int n_clusters = 0;
    double threshold = 0.0;  // half the maximum initial pairwise distance
};

// Fitted preprocessing state persisted as one self-describing document.
struct PreprocessModels {
    ScalerModel scaler;
    PcaModel pca;
    FeatureClustering clustering;
};

// 24 encoded feature names in canonical order.
extern const std::vector<std::string> kEncodedColumns;

// SEX/MARRIAGE one-hot (drop-one), EDUCATION kept ordinal.
Table one_hot_encode(const std::vector<RawRecord>& records);

ScalerModel fit_maxabs(const Table& table);
Table apply_maxabs(const ScalerModel& model, const Table& table);

PcaModel fit_pca(const Table& scaled);
Eigen::MatrixXd pca_project(const PcaModel& model, const Table& scaled, int n_components);
Eigen::MatrixXd pca_back_project(const PcaModel& model, const Eigen::MatrixXd& projected);

FeatureClustering cluster_features(const PcaModel& pca);

// Per-cluster mean of member columns; output columns in cluster-id order.
Table aggregate(const FeatureClustering& clustering, const Table& scaled);

PreprocessModels fit_preprocess(const std::vector<RawRecord>& records);
Table apply_preprocess(const PreprocessModels& models, const std::vector<RawRecord>& records);

void save_preprocess(const std::string& path, const PreprocessModels& models);
PreprocessModels load_preprocess(const std::string& path);

}  // namespace qrcpipe
