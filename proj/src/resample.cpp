#include "qrcpipe/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qrcpipe/errors.hpp"
#include "qrcpipe/rng.hpp"

namespace qrcpipe {

std::string to_string(ResampleMethod m) {
    switch (m) {
        case ResampleMethod::none: return "none";
        case ResampleMethod::smote: return "smote";
        case ResampleMethod::ksmote: return "ksmote";
        case ResampleMethod::cc: return "cc";
    }
    return "none";
}

ResampleMethod resample_method_from_string(const std::string& s) {
    if (s == "none") return ResampleMethod::none;
    if (s == "smote") return ResampleMethod::smote;
    if (s == "ksmote" || s == "k-smote") return ResampleMethod::ksmote;
    if (s == "cc" || s == "cluster-centroids") return ResampleMethod::cc;
    throw ConfigError("unknown resampling method '" + s + "'");
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

struct ClassSplit {
    std::vector<std::size_t> minority;  // row indices
    std::vector<std::size_t> majority;
    int minority_label = 1;
};

ClassSplit split_classes(const Table& train) {
    if (!train.labeled()) throw DataError("resampling requires a labeled table");
    ClassSplit cs;
    std::vector<std::size_t> zeros, ones;
    for (std::size_t r = 0; r < train.n_rows(); ++r) {
        (train.labels[r] == 1 ? ones : zeros).push_back(r);
    }
    if (ones.size() <= zeros.size()) {
        cs.minority = std::move(ones);
        cs.majority = std::move(zeros);
        cs.minority_label = 1;
    } else {
        cs.minority = std::move(zeros);
        cs.majority = std::move(ones);
        cs.minority_label = 0;
    }
    return cs;
}

// k nearest minority neighbors (excluding self) of each minority point.
std::vector<std::vector<std::size_t>> minority_neighbors(
    const Table& train, const std::vector<std::size_t>& minority, int k) {
    const auto m = minority.size();
    std::vector<std::vector<std::size_t>> nb(m);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < m; ++i) {
        dist.clear();
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            dist.emplace_back(sq_dist(train.rows[minority[i]], train.rows[minority[j]]), j);
        }
        const auto kk = std::min<std::size_t>(k, dist.size());
        std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
        for (std::size_t t = 0; t < kk; ++t) nb[i].push_back(dist[t].second);
    }
    return nb;
}

// Appends `count` synthetic minority rows interpolated within `minority`.
void generate_synthetics(Table& out, const Table& train,
                         const std::vector<std::size_t>& minority, int minority_label,
                         int k, std::size_t count, std::mt19937_64& rng) {
    if (count == 0) return;
    if (minority.empty()) throw DataError("SMOTE: minority class is empty");
    if (minority.size() == 1) {
        // Degenerate cluster: replicate the lone point.
        for (std::size_t t = 0; t < count; ++t) {
            out.rows.push_back(train.rows[minority[0]]);
            out.labels.push_back(minority_label);
        }
        return;
    }
    const int kk = std::min<int>(k, int(minority.size()) - 1);
    const auto nb = minority_neighbors(train, minority, kk);
    std::uniform_int_distribution<std::size_t> pick_base(0, minority.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t t = 0; t < count; ++t) {
        const auto i = pick_base(rng);
        std::uniform_int_distribution<std::size_t> pick_nb(0, nb[i].size() - 1);
        const auto j = nb[i][pick_nb(rng)];
        double u = unit(rng);
        while (u == 0.0) u = unit(rng);
        const auto& a = train.rows[minority[i]];
        const auto& b = train.rows[minority[j]];
        std::vector<double> row(a.size());
        for (std::size_t c = 0; c < a.size(); ++c) row[c] = a[c] + u * (b[c] - a[c]);
        out.rows.push_back(std::move(row));
        out.labels.push_back(minority_label);
    }
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k,
                    std::uint64_t seed) {
    if (k < 1) throw ConfigError("kmeans requires k >= 1");
    if (std::size_t(k) > points.size()) {
        throw DataError("kmeans: k = " + std::to_string(k) + " exceeds point count " +
                        std::to_string(points.size()));
    }
    const auto n = points.size();
    const auto d = points[0].size();

    // Greedy farthest-point seeding from a seeded random start.
    auto rng = std::mt19937_64(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> centers = {pick(rng)};
    std::vector<double> mindist(n);
    for (std::size_t i = 0; i < n; ++i) mindist[i] = sq_dist(points[i], points[centers[0]]);
    while (int(centers.size()) < k) {
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (mindist[i] > mindist[far]) far = i;
        centers.push_back(far);
        for (std::size_t i = 0; i < n; ++i)
            mindist[i] = std::min(mindist[i], sq_dist(points[i], points[far]));
    }

    KMeansResult res;
    res.centroids.resize(k);
    for (int c = 0; c < k; ++c) res.centroids[c] = points[centers[c]];
    res.assignments.assign(n, -1);

    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = sq_dist(points[i], res.centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double dist = sq_dist(points[i], res.centroids[c]);
                if (dist < bd) {
                    bd = dist;
                    best = c;
                }
            }
            if (res.assignments[i] != best) {
                res.assignments[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[res.assignments[i]];
            for (std::size_t c = 0; c < d; ++c) sums[res.assignments[i]][c] += points[i][c];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // keep the previous centroid
            for (std::size_t j = 0; j < d; ++j)
                res.centroids[c][j] = sums[c][j] / double(counts[c]);
        }
    }
    return res;
}

Table smote(const Table& train, const ResamplePlan& plan) {
    const auto cs = split_classes(train);
    if (cs.minority.size() <= std::size_t(plan.k_neighbors)) {
        throw DataError("SMOTE: minority class of " + std::to_string(cs.minority.size()) +
                        " cannot support k = " + std::to_string(plan.k_neighbors));
    }
    Table out = train;
    auto rng = make_rng(plan.seed, "resample/smote");
    generate_synthetics(out, train, cs.minority, cs.minority_label, plan.k_neighbors,
                        cs.majority.size() - cs.minority.size(), rng);
    return out;
}

Table ksmote(const Table& train, const ResamplePlan& plan) {
    const auto cs = split_classes(train);
    if (cs.minority.size() < std::size_t(plan.kmeans_k)) {
        throw DataError("K-SMOTE: minority class too small for K = " +
                        std::to_string(plan.kmeans_k));
    }
    std::vector<std::vector<double>> pts;
    pts.reserve(cs.minority.size());
    for (auto i : cs.minority) pts.push_back(train.rows[i]);
    const auto km = kmeans(pts, plan.kmeans_k, derive_seed(plan.seed, "resample/ksmote"));

    const std::size_t deficit = cs.majority.size() - cs.minority.size();
    Table out = train;
    auto rng = make_rng(plan.seed, "resample/ksmote/synth");
    for (int c = 0; c < plan.kmeans_k; ++c) {
        std::vector<std::size_t> cluster;
        for (std::size_t i = 0; i < cs.minority.size(); ++i)
            if (km.assignments[i] == c) cluster.push_back(cs.minority[i]);
        if (cluster.empty()) continue;
        // Proportional quota, rounded up; small overshoot is accepted.
        const auto quota = std::size_t(
            std::ceil(double(deficit) * double(cluster.size()) / double(cs.minority.size())));
        generate_synthetics(out, train, cluster, cs.minority_label, plan.k_neighbors, quota,
                            rng);
    }
    return out;
}

Table cluster_centroids(const Table& train, const ResamplePlan& plan) {
    const auto cs = split_classes(train);
    std::vector<std::vector<double>> pts;
    pts.reserve(cs.majority.size());
    for (auto i : cs.majority) pts.push_back(train.rows[i]);
    const auto km =
        kmeans(pts, int(cs.minority.size()), derive_seed(plan.seed, "resample/cc"));

    Table out;
    out.columns = train.columns;
    for (auto i : cs.minority) {
        out.rows.push_back(train.rows[i]);
        out.labels.push_back(cs.minority_label);
    }
    for (const auto& centroid : km.centroids) {
        out.rows.push_back(centroid);
        out.labels.push_back(1 - cs.minority_label);
    }
    return out;
}

Table resample(const Table& train, const ResamplePlan& plan) {
    switch (plan.method) {
        case ResampleMethod::none: return train;
        case ResampleMethod::smote: return smote(train, plan);
        case ResampleMethod::ksmote: return ksmote(train, plan);
        case ResampleMethod::cc: return cluster_centroids(train, plan);
    }
    return train;
}

}  // namespace qrcpipe
