#include "qrcpipe/dataset_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "qrcpipe/rng.hpp"

namespace qrcpipe {

namespace {

int discretize_pay(double z) {
    return static_cast<int>(std::clamp(std::round(2.0 + 2.6 * z), -2.0, 8.0));
}

}  // namespace

std::vector<RawRecord> generate_synthetic_dataset(std::uint64_t seed, std::size_t n_rows) {
    auto rng = make_rng(seed, "dataset-gen");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);

    std::vector<RawRecord> records(n_rows);
    std::vector<double> scores(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) {
        RawRecord& r = records[i];
        double u34 = normal(rng);
        double u56 = normal(rng);
        double ubill = sym(rng);
        double upayamt = sym(rng);
        double zpay1 = normal(rng);

        r.limit_bal = std::round(10000.0 + 990000.0 * unit(rng));
        r.sex = unit(rng) < 0.113 ? 1 : 2;
        double ue = unit(rng);
        r.education = ue < 0.45 ? 1 : (ue < 0.50 ? 2 : (ue < 0.55 ? 3 : 4));
        double um = unit(rng);
        r.marriage = um < 0.12 ? 1 : (um < 0.24 ? 2 : 3);
        r.age = 34.0 + std::floor(4.0 * unit(rng));
        r.pay[0] = discretize_pay(zpay1);
        r.pay[1] = discretize_pay(normal(rng));
        r.pay[2] = discretize_pay(u34 + 0.04 * normal(rng));
        r.pay[3] = discretize_pay(u34 + 0.04 * normal(rng));
        r.pay[4] = discretize_pay(u56 + 0.04 * normal(rng));
        r.pay[5] = discretize_pay(u56 + 0.04 * normal(rng));
        for (int k = 0; k < 6; ++k) {
            r.bill_amt[k] = std::round(50000.0 + 52000.0 * (ubill + 0.03 * sym(rng)));
            r.pay_amt[k] = std::round(20000.0 + 20500.0 * (upayamt + 0.03 * sym(rng)));
        }
        scores[i] = 1.2 * u34 + 0.9 * u56 + 0.8 * zpay1 + 0.6 * ubill - 0.5 * upayamt +
                    1.6 * normal(rng);
    }

    // Inject the documented undocumented-value rows on a disjoint random set.
    const double scale = static_cast<double>(n_rows) / 30000.0;
    auto scaled = [scale](int c) {
        return static_cast<std::size_t>(std::llround(c * scale));
    };
    std::size_t n_mar0 = scaled(54), n_edu0 = scaled(14), n_edu5 = scaled(280),
                n_edu6 = scaled(51);
    std::vector<std::size_t> order(n_rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto corrupt_rng = make_rng(seed, "dataset-gen/corrupt");
    std::shuffle(order.begin(), order.end(), corrupt_rng);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < n_mar0; ++k) records[order[pos++]].marriage = 0;
    for (std::size_t k = 0; k < n_edu0; ++k) records[order[pos++]].education = 0;
    for (std::size_t k = 0; k < n_edu5; ++k) records[order[pos++]].education = 5;
    for (std::size_t k = 0; k < n_edu6; ++k) records[order[pos++]].education = 6;

    // Labels: exactly the documented defaulter count among rows that survive
    // cleaning; corrupted rows are labeled against the same score threshold.
    std::vector<std::size_t> clean_rows;
    for (std::size_t i = 0; i < n_rows; ++i) {
        const RawRecord& r = records[i];
        bool dirty = r.marriage == 0 || r.education == 0 || r.education == 5 ||
                     r.education == 6;
        if (!dirty) clean_rows.push_back(i);
    }
    std::size_t n_defaulters =
        static_cast<std::size_t>(std::llround(6605.0 / 29601.0 * clean_rows.size()));
    std::vector<std::size_t> by_score = clean_rows;
    std::stable_sort(by_score.begin(), by_score.end(),
                     [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    for (std::size_t k = 0; k < by_score.size(); ++k) {
        records[by_score[k]].label = k < n_defaulters ? 1 : 0;
    }
    double threshold = scores[by_score[n_defaulters - 1]];
    for (std::size_t i = 0; i < n_rows; ++i) {
        const RawRecord& r = records[i];
        bool dirty = r.marriage == 0 || r.education == 0 || r.education == 5 ||
                     r.education == 6;
        if (dirty) records[i].label = scores[i] >= threshold ? 1 : 0;
    }
    return records;
}

}  // namespace qrcpipe
