#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrcpipe/table.hpp"

namespace qrcpipe {

enum class ClassifierKind { knn, gnb, logistic, perceptron, sgd_hinge, svm_linear };

std::string to_string(ClassifierKind k);
ClassifierKind classifier_from_string(const std::string& s);

struct Metrics {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double accuracy = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

// Binary metrics with class 1 (defaulter) positive.
Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels);

// weight_c = total / (2 count_c), the balanced heuristic; index by class.
std::vector<double> balanced_class_weights(const std::vector<int>& labels);

struct TrainedClassifier {
    ClassifierKind kind = ClassifierKind::knn;
    std::string hyperparameters;
    bool converged = true;

    // Linear families: score = w . x + b, predict 1 when score > 0.
    std::vector<double> w;
    double b = 0.0;

    // KNN memory.
    std::vector<std::vector<double>> points;
    std::vector<int> point_labels;
    int k = 0;

    // Gaussian naive Bayes.
    std::vector<double> log_prior;               // per class
    std::vector<std::vector<double>> gnb_mean;   // [class][feature]
    std::vector<std::vector<double>> gnb_var;

    int predict(const std::vector<double>& x) const;
    std::vector<int> predict_all(const std::vector<std::vector<double>>& xs) const;
};

TrainedClassifier train_knn(const Table& train, int k);
TrainedClassifier train_gnb(const Table& train);  // caller merges train + validation
TrainedClassifier train_logistic(const Table& train, double C,
                                 const std::vector<double>& class_weights);
TrainedClassifier train_perceptron(const Table& train, double eta,
                                   const std::vector<double>& class_weights,
                                   std::uint64_t seed);
TrainedClassifier train_sgd_hinge(const Table& train, int epochs,
                                  const std::vector<double>& class_weights,
                                  std::uint64_t seed, double lambda = 1e-4);
TrainedClassifier train_svm_linear(const Table& train, double C,
                                   const std::vector<double>& class_weights,
                                   std::uint64_t seed);

struct GridSearchResult {
    struct Cell {
        std::string hyperparameters;
        Metrics validation;
        double train_seconds = 0.0;
    };
    std::vector<Cell> cells;
    std::size_t selected = 0;  // argmax validation F1, ties to first in grid order
    TrainedClassifier best;
    Metrics validation;
    Metrics test;
    double total_train_seconds = 0.0;
};

// Runs the published hyperparameter grid for `kind` on the given partitions.
// GNB fits on train + validation and has a single cell.
GridSearchResult run_classifier(ClassifierKind kind, const Table& train,
                                const Table& validation, const Table& test,
                                std::uint64_t seed);

}  // namespace qrcpipe
