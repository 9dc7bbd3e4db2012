#include "qrcpipe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "qrcpipe/csv.hpp"
#include "qrcpipe/errors.hpp"
#include "qrcpipe/rng.hpp"

namespace qrcpipe {

const std::vector<std::string> kRawColumns = {
    "LIMIT_BAL", "SEX",       "EDUCATION", "MARRIAGE",  "AGE",       "PAY_1",
    "PAY_2",     "PAY_3",     "PAY_4",     "PAY_5",     "PAY_6",     "BILL_AMT1",
    "BILL_AMT2", "BILL_AMT3", "BILL_AMT4", "BILL_AMT5", "BILL_AMT6", "PAY_AMT1",
    "PAY_AMT2",  "PAY_AMT3",  "PAY_AMT4",  "PAY_AMT5",  "PAY_AMT6",  "default"};

std::vector<RawRecord> load_raw(const std::string& path) {
    Table t = read_csv(path);
    std::vector<std::size_t> idx(kRawColumns.size());
    for (std::size_t c = 0; c < kRawColumns.size(); ++c) {
        auto it = std::find(t.columns.begin(), t.columns.end(), kRawColumns[c]);
        if (it == t.columns.end()) {
            throw DataError("schema error: missing column " + kRawColumns[c]);
        }
        idx[c] = static_cast<std::size_t>(it - t.columns.begin());
    }
    std::vector<RawRecord> records;
    records.reserve(t.n_rows());
    for (const auto& row : t.rows) {
        RawRecord r;
        std::size_t k = 0;
        r.limit_bal = row[idx[k++]];
        r.sex = static_cast<int>(row[idx[k++]]);
        r.education = static_cast<int>(row[idx[k++]]);
        r.marriage = static_cast<int>(row[idx[k++]]);
        r.age = row[idx[k++]];
        for (int i = 0; i < 6; ++i) r.pay[i] = static_cast<int>(row[idx[k++]]);
        for (int i = 0; i < 6; ++i) r.bill_amt[i] = row[idx[k++]];
        for (int i = 0; i < 6; ++i) r.pay_amt[i] = row[idx[k++]];
        r.label = static_cast<int>(row[idx[k++]]);
        records.push_back(r);
    }
    return records;
}

void save_raw(const std::string& path, const std::vector<RawRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    for (std::size_t i = 0; i < kRawColumns.size(); ++i) {
        if (i) out << ',';
        out << kRawColumns[i];
    }
    out << '\n';
    for (const auto& r : records) {
        out << static_cast<long long>(r.limit_bal) << ',' << r.sex << ',' << r.education << ','
            << r.marriage << ',' << static_cast<long long>(r.age);
        for (int v : r.pay) out << ',' << v;
        for (double v : r.bill_amt) out << ',' << static_cast<long long>(v);
        for (double v : r.pay_amt) out << ',' << static_cast<long long>(v);
        out << ',' << r.label << '\n';
    }
}

std::vector<RawRecord> clean(const std::vector<RawRecord>& records) {
    std::vector<RawRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (r.marriage == 0) continue;
        if (r.education == 0 || r.education == 5 || r.education == 6) continue;
        out.push_back(r);
    }
    return out;
}

std::vector<int> labels_of(const std::vector<RawRecord>& records) {
    std::vector<int> labels;
    labels.reserve(records.size());
    for (const auto& r : records) labels.push_back(r.label);
    return labels;
}

namespace {

std::uint64_t record_key(const RawRecord& r, std::uint64_t seed) {
    // Content-based key: stable under subsetting, so nested subsets agree.
    std::uint64_t h = fnv1a(&seed, sizeof seed);
    auto mix = [&h](const void* p, std::size_t n) { h = fnv1a(p, n, h); };
    mix(&r.limit_bal, sizeof r.limit_bal);
    mix(&r.sex, sizeof r.sex);
    mix(&r.education, sizeof r.education);
    mix(&r.marriage, sizeof r.marriage);
    mix(&r.age, sizeof r.age);
    mix(r.pay.data(), sizeof r.pay);
    mix(r.bill_amt.data(), sizeof r.bill_amt);
    mix(r.pay_amt.data(), sizeof r.pay_amt);
    mix(&r.label, sizeof r.label);
    return splitmix64(h);
}

std::size_t ceil_count(double x) {
    return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

// Largest-remainder apportionment of n_draw over per-class counts.
std::vector<std::size_t> allocate(const std::vector<std::size_t>& class_counts,
                                  std::size_t n_draw) {
    std::size_t total = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
    std::vector<std::size_t> out(class_counts.size());
    std::vector<std::pair<double, std::size_t>> fracs;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < class_counts.size(); ++c) {
        double quota = static_cast<double>(n_draw) * static_cast<double>(class_counts[c]) /
                       static_cast<double>(total);
        out[c] = static_cast<std::size_t>(std::floor(quota + 1e-9));
        out[c] = std::min(out[c], class_counts[c]);
        assigned += out[c];
        fracs.emplace_back(quota - static_cast<double>(out[c]), c);
    }
    std::stable_sort(fracs.begin(), fracs.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::size_t i = 0;
    while (assigned < n_draw) {
        std::size_t c = fracs[i % fracs.size()].second;
        if (out[c] < class_counts[c]) {
            ++out[c];
            ++assigned;
        }
        ++i;
    }
    return out;
}

}  // namespace

std::vector<RawRecord> stratified_subset(const std::vector<RawRecord>& records,
                                         std::size_t target_size, std::uint64_t seed) {
    if (target_size > records.size()) {
        throw DataError("subset target " + std::to_string(target_size) +
                        " exceeds input size " + std::to_string(records.size()));
    }
    std::size_t n = records.size();
    std::size_t n1 = 0;
    for (const auto& r : records) n1 += (r.label == 1);
    // Minority count rounds up so small subsets keep a usable class-1 share.
    std::size_t take1 = ceil_count(static_cast<double>(target_size) * static_cast<double>(n1) /
                                   static_cast<double>(n));
    take1 = std::min(take1, std::min(target_size, n1));
    std::size_t take0 = target_size - take1;

    std::vector<std::pair<std::uint64_t, std::size_t>> keyed[2];
    for (std::size_t i = 0; i < n; ++i) {
        int c = records[i].label == 1 ? 1 : 0;
        keyed[c].emplace_back(record_key(records[i], seed), i);
    }
    std::vector<char> selected(n, 0);
    const std::size_t take[2] = {take0, take1};
    for (int c = 0; c < 2; ++c) {
        std::sort(keyed[c].begin(), keyed[c].end());
        for (std::size_t k = 0; k < take[c]; ++k) selected[keyed[c][k].second] = 1;
    }
    std::vector<RawRecord> out;
    out.reserve(target_size);
    for (std::size_t i = 0; i < n; ++i) {
        if (selected[i]) out.push_back(records[i]);
    }
    return out;
}

SplitIndices split_indices(const std::vector<int>& labels, const SplitFractions& fractions,
                           std::uint64_t seed) {
    double sum = fractions.train + fractions.validation + fractions.test;
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
    if (fractions.train <= 0 || fractions.validation <= 0 || fractions.test <= 0) {
        throw ConfigError("split fractions must be positive");
    }
    std::size_t n = labels.size();
    std::vector<std::vector<std::size_t>> by_class(2);
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i] == 1 ? 1 : 0].push_back(i);
    for (int c = 0; c < 2; ++c) {
        auto rng = make_rng(seed, "split/class", static_cast<std::uint64_t>(c));
        std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
    }
    std::vector<std::size_t> counts = {by_class[0].size(), by_class[1].size()};

    // Test partition first, then validation from the remainder; any remainder
    // row lands in test, matching the published 20720/4440/4441 layout.
    std::size_t n_test = ceil_count(fractions.test * static_cast<double>(n));
    std::vector<std::size_t> test_alloc = allocate(counts, n_test);
    std::vector<std::size_t> rem = {counts[0] - test_alloc[0], counts[1] - test_alloc[1]};
    std::size_t n_rem = rem[0] + rem[1];
    std::size_t n_val = ceil_count(fractions.validation / (1.0 - fractions.test) *
                                   static_cast<double>(n_rem));
    std::vector<std::size_t> val_alloc = allocate(rem, n_val);

    SplitIndices out;
    for (int c = 0; c < 2; ++c) {
        const auto& v = by_class[c];
        std::size_t t = test_alloc[c], w = val_alloc[c];
        out.test.insert(out.test.end(), v.begin(), v.begin() + t);
        out.validation.insert(out.validation.end(), v.begin() + t, v.begin() + t + w);
        out.train.insert(out.train.end(), v.begin() + t + w, v.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

DatasetSplit split(const std::vector<RawRecord>& records, const SplitFractions& fractions,
                   std::uint64_t seed) {
    SplitIndices idx = split_indices(labels_of(records), fractions, seed);
    DatasetSplit out;
    out.seed = seed;
    for (std::size_t i : idx.train) out.train.push_back(records[i]);
    for (std::size_t i : idx.validation) out.validation.push_back(records[i]);
    for (std::size_t i : idx.test) out.test.push_back(records[i]);
    return out;
}

}  // namespace qrcpipe
