#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "qrcpipe/classify.hpp"
#include "qrcpipe/table.hpp"

namespace qrcpipe {

// Fully-connected input -> 64 -> 128 -> 256 -> 128 -> 64 -> 2 with rectified
// hidden layers and inverted dropout during training.
struct MlpModel {
    std::vector<Eigen::MatrixXd> weights;  // weights[l]: fan_in x fan_out
    std::vector<Eigen::VectorXd> biases;
    double dropout = 0.2;

    static MlpModel init(int input_dim, double dropout, std::uint64_t seed);

    // Deterministic inference-mode logits, one row per sample.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    std::vector<int> predict_all(const std::vector<std::vector<double>>& rows) const;

    void save(const std::string& path) const;
    static MlpModel load(const std::string& path);
};

// Mean softmax cross-entropy over the batch and its analytic gradients.
// Dropout masks are applied when `training` (seeded); pass training = false
// for gradient checks.
double mlp_loss_grad(const MlpModel& model, const Eigen::MatrixXd& x,
                     const std::vector<int>& labels, bool training, std::uint64_t seed,
                     std::vector<Eigen::MatrixXd>& grad_w,
                     std::vector<Eigen::VectorXd>& grad_b);

struct DnnOptions {
    double lr = 0.001;
    int batch_size = 128;
    int max_epochs = 1000;
    int patience = 30;  // epochs without validation F1 improvement
    double dropout = 0.2;
};

struct DnnResult {
    MlpModel model;
    std::string hyperparameters;
    Metrics validation;
    Metrics test;
    double train_seconds = 0.0;
    int epochs_run = 0;
    int best_epoch = 0;
};

// Adam training with early stopping on validation F1; returns the best
// validation snapshot, never a later one.
DnnResult train_dnn(const Table& train, const Table& validation, const Table& test,
                    const DnnOptions& opts, std::uint64_t seed);

// lr {0.1, 0.01, 0.001} x batch {64, 128, 256}, selection by validation F1,
// ties to the first candidate in declared order.
DnnResult dnn_grid_search(const Table& train, const Table& validation, const Table& test,
                          std::uint64_t seed, int max_epochs = 1000);

}  // namespace qrcpipe
