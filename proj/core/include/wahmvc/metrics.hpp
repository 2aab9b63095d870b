#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace wahmvc::metrics {

struct ClusteringMetrics {
    double acc = 0.0;
    double nmi = 0.0;
};

// Optimal one-to-one assignment minimizing total cost on a square matrix.
// Returns assignment[row] = column.
std::vector<int> hungarian_min_cost(const Eigen::MatrixXd& cost);

// Best-permutation accuracy via Hungarian matching on the contingency table.
double accuracy(std::span<const int> pred, std::span<const int> truth);

// 2 I(Y;C) / (H(Y) + H(C)), natural logs; 0 when both entropies vanish.
double nmi(std::span<const int> pred, std::span<const int> truth);

ClusteringMetrics evaluate(std::span<const int> pred, std::span<const int> truth);

struct KMeansResult {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
};

// Lloyd iterations from k-means++ seeds; best of `restarts` by inertia.
KMeansResult kmeans(const Eigen::MatrixXd& x, int clusters, std::uint64_t seed, int restarts = 10,
                    int max_iter = 300);

}  // namespace wahmvc::metrics
