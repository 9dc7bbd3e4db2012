#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace qrcpipe {

// One row of the credit-card default dataset in its documented raw schema.
struct RawRecord {
    double limit_bal = 0;
    int sex = 0;        // {1,2}
    int education = 0;  // {1..4} after cleaning
    int marriage = 0;   // {1,2,3} after cleaning
    double age = 0;
    std::array<int, 6> pay{};        // repayment status, kept verbatim
    std::array<double, 6> bill_amt{};
    std::array<double, 6> pay_amt{};
    int label = 0;  // 1 = default
};

struct SplitFractions {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
};

struct DatasetSplit {
    std::vector<RawRecord> train;
    std::vector<RawRecord> validation;
    std::vector<RawRecord> test;
    std::uint64_t seed = 0;
};

// Partition row indices; shared between raw records and feature tables so the
// reservoir path reproduces exactly the same stratified splits.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

extern const std::vector<std::string> kRawColumns;  // 23 features + "default"

std::vector<RawRecord> load_raw(const std::string& path);
void save_raw(const std::string& path, const std::vector<RawRecord>& records);

// Drops marriage = 0 and education in {0,5,6}; order preserved.
std::vector<RawRecord> clean(const std::vector<RawRecord>& records);

// Stratified nested subsetting: record ranking uses a seeded per-record key,
// so a smaller target with the same seed selects a subset of a larger one.
std::vector<RawRecord> stratified_subset(const std::vector<RawRecord>& records,
                                         std::size_t target_size, std::uint64_t seed);

SplitIndices split_indices(const std::vector<int>& labels, const SplitFractions& fractions,
                           std::uint64_t seed);
DatasetSplit split(const std::vector<RawRecord>& records, const SplitFractions& fractions,
                   std::uint64_t seed);

std::vector<int> labels_of(const std::vector<RawRecord>& records);

}  // namespace qrcpipe
