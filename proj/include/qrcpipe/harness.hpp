#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qrcpipe/classify.hpp"
#include "qrcpipe/dataset.hpp"
#include "qrcpipe/encoding.hpp"
#include "qrcpipe/qrc.hpp"
#include "qrcpipe/resample.hpp"
#include "qrcpipe/table.hpp"

namespace qrcpipe {

// Flat key-value configuration ("key = value", '#' comments, [section]
// prefixes keys as section.key). Physical keys carry units in their names.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback) const;
    std::string require(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::vector<std::string> get_list(const std::string& key,
                                      const std::string& fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    std::map<std::string, std::string> entries_;
};

struct ExperimentConfig {
    std::size_t dataset_size = 30000;  // post-clean subset target; 30000 = full
    std::string feature_source = "preprocessed";  // qrc-sv, qrc-shots, crc, preprocessed
    int shots = 0;                                // for qrc-shots
    ReservoirConfig reservoir;
    std::vector<ResampleMethod> resamplers = {ResampleMethod::none, ResampleMethod::smote,
                                              ResampleMethod::ksmote, ResampleMethod::cc};
    std::vector<std::string> classifiers = {"knn", "gnb",        "logistic",
                                            "perceptron", "sgd-hinge", "svm-linear"};
    SplitFractions fractions;
    std::uint64_t seed = 11;
    int repeats = 5;  // DNN repetition count for spread reporting
    std::string data_csv;  // empty: deterministic synthetic stand-in
    std::string out_dir = ".";
    int threads = 0;

    static ExperimentConfig from_config(const Config& cfg);
    std::uint64_t hash() const;
};

struct ResultRow {
    std::string dataset;
    std::string feature_source;
    std::string encoding;
    std::string resampler;
    std::string classifier;
    std::string hyperparameters;
    double f1 = 0.0, precision = 0.0, recall = 0.0, accuracy = 0.0, train_time_s = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string error;  // non-empty marks a failed cell
};

void write_results(const std::string& path, const std::vector<ResultRow>& rows);

struct LabeledSplit {
    Table train;
    Table validation;
    Table test;
};

LabeledSplit partition_table(const Table& features, const SplitIndices& idx);

// Loads (or generates), cleans, subsets, and preprocesses; returns the
// 12-feature labeled table plus the split indices for cfg.seed.
struct PreparedData {
    Table preprocessed;
    SplitIndices idx;
    std::vector<int> labels;
};
PreparedData prepare_data(const ExperimentConfig& cfg);

// Feature table for the configured source; passthrough for "preprocessed".
Table feature_table(const Table& preprocessed, const ExperimentConfig& cfg);

// Full benchmark matrix: (resampler x classifier) cells plus dnn rows when
// "dnn" is in the classifier list. Per-cell failures become error rows.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

struct ShotStudyRow {
    int shots = 0;  // 0 marks the exact statevector reference
    std::string classifier;
    double f1 = 0.0;
};
std::vector<ShotStudyRow> shot_study(const ExperimentConfig& cfg,
                                     const std::vector<int>& shot_grid);

struct CorrelationReport {
    std::vector<double> per_timestep;  // undefined entries hold NaN
    std::vector<bool> defined;
    double mean = 0.0;  // over defined timesteps only
};
CorrelationReport correlate_features(const std::vector<ReservoirFeatures>& a,
                                     const std::vector<ReservoirFeatures>& b);

// One program-spec file per sample under out_dir; returns file count.
int export_for_hardware(const ExperimentConfig& cfg, int replicas);

std::vector<ResultRow> import_and_classify(const std::string& shot_record_path,
                                           const ExperimentConfig& cfg);

}  // namespace qrcpipe
