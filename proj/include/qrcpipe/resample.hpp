#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrcpipe/table.hpp"

namespace qrcpipe {

enum class ResampleMethod { none, smote, ksmote, cc };

std::string to_string(ResampleMethod m);
ResampleMethod resample_method_from_string(const std::string& s);

struct ResamplePlan {
    ResampleMethod method = ResampleMethod::none;
    int k_neighbors = 5;  // SMOTE neighborhood
    int kmeans_k = 2;     // minority clusters for K-SMOTE
    std::uint64_t seed = 0;
};

struct KMeansResult {
    std::vector<std::vector<double>> centroids;
    std::vector<int> assignments;
};

// Lloyd iteration with greedy farthest-point seeding; converges when
// assignments stabilize or after 300 iterations.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k,
                    std::uint64_t seed);

// Balanced oversampling: synthetics x + u (x_nb - x) toward one of the
// k nearest minority neighbors. Originals are preserved and come first.
Table smote(const Table& train, const ResamplePlan& plan);

// SMOTE within K-means clusters of the minority class; per-cluster quotas
// proportional to cluster size, rounded up, so counts may overshoot slightly.
Table ksmote(const Table& train, const ResamplePlan& plan);

// Majority class replaced by K-means centroids, K = minority count.
Table cluster_centroids(const Table& train, const ResamplePlan& plan);

Table resample(const Table& train, const ResamplePlan& plan);

}  // namespace qrcpipe
