#include "wahmvc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "wahmvc/error.hpp"
#include "wahmvc/random.hpp"

namespace wahmvc::metrics {

namespace {

void check_labels(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) {
        throw DimensionError("metrics: prediction has " + std::to_string(pred.size()) + " labels, truth has " +
                             std::to_string(truth.size()));
    }
    if (pred.empty()) {
        throw DimensionError("metrics: empty label vectors");
    }
    auto negative = [](int l) { return l < 0; };
    if (std::any_of(pred.begin(), pred.end(), negative) || std::any_of(truth.begin(), truth.end(), negative)) {
        throw ConfigError("metrics: labels must be nonnegative");
    }
}

Eigen::MatrixXd contingency(std::span<const int> pred, std::span<const int> truth) {
    const int k = std::max(*std::max_element(pred.begin(), pred.end()), *std::max_element(truth.begin(), truth.end())) + 1;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < pred.size(); ++i) c(pred[i], truth[i]) += 1.0;
    return c;
}

double entropy(const Eigen::VectorXd& counts, double total) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < counts.size(); ++i) {
        if (counts(i) > 0.0) {
            const double p = counts(i) / total;
            h -= p * std::log(p);
        }
    }
    return h;
}

}  // namespace

std::vector<int> hungarian_min_cost(const Eigen::MatrixXd& cost) {
    if (cost.rows() != cost.cols()) {
        throw DimensionError("hungarian_min_cost: cost matrix must be square");
    }
    // Potential-based O(n^3) Kuhn-Munkres; 1-based internal indexing.
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) {
        if (p[j] > 0) assignment[static_cast<std::size_t>(p[j] - 1)] = j - 1;
    }
    return assignment;
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
    check_labels(pred, truth);
    const Eigen::MatrixXd c = contingency(pred, truth);
    const auto match = hungarian_min_cost(-c);
    double correct = 0.0;
    for (std::size_t r = 0; r < match.size(); ++r) correct += c(static_cast<Eigen::Index>(r), match[r]);
    return correct / static_cast<double>(pred.size());
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
    check_labels(pred, truth);
    const Eigen::MatrixXd c = contingency(pred, truth);
    const double total = static_cast<double>(pred.size());
    const Eigen::VectorXd rows = c.rowwise().sum();
    const Eigen::VectorXd cols = c.colwise().sum().transpose();
    const double h_pred = entropy(rows, total);
    const double h_truth = entropy(cols, total);
    if (h_pred + h_truth <= 0.0) {
        return 0.0;
    }
    double mi = 0.0;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        for (Eigen::Index j = 0; j < c.cols(); ++j) {
            if (c(i, j) > 0.0) {
                mi += c(i, j) / total * std::log(c(i, j) * total / (rows(i) * cols(j)));
            }
        }
    }
    return std::clamp(2.0 * mi / (h_pred + h_truth), 0.0, 1.0);
}

ClusteringMetrics evaluate(std::span<const int> pred, std::span<const int> truth) {
    return {accuracy(pred, truth), nmi(pred, truth)};
}

KMeansResult kmeans(const Eigen::MatrixXd& x, int clusters, std::uint64_t seed, int restarts, int max_iter) {
    const Eigen::Index n = x.rows();
    if (clusters < 1 || clusters > n) {
        throw ConfigError("kmeans: need 1 <= clusters <= samples");
    }
    Rng rng(seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int run = 0; run < std::max(1, restarts); ++run) {
        // k-means++ seeding
        Eigen::MatrixXd centroids(clusters, x.cols());
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        centroids.row(0) = x.row(pick(rng));
        Eigen::VectorXd d2 = (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
        for (int c = 1; c < clusters; ++c) {
            const double sum = d2.sum();
            Eigen::Index chosen = pick(rng);
            if (sum > 0.0) {
                std::uniform_real_distribution<double> u(0.0, sum);
                double r = u(rng);
                for (chosen = 0; chosen < n - 1; ++chosen) {
                    r -= d2(chosen);
                    if (r <= 0.0) break;
                }
            }
            centroids.row(c) = x.row(chosen);
            d2 = d2.cwiseMin((x.rowwise() - centroids.row(c)).rowwise().squaredNorm());
        }

        std::vector<int> labels(static_cast<std::size_t>(n), -1);
        double inertia = 0.0;
        for (int it = 0; it < max_iter; ++it) {
            bool changed = false;
            inertia = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::Index arg = 0;
                const double dist = (centroids.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&arg);
                inertia += dist;
                if (labels[static_cast<std::size_t>(i)] != static_cast<int>(arg)) {
                    labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
                    changed = true;
                }
            }
            if (!changed) break;
            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(clusters, x.cols());
            Eigen::VectorXd counts = Eigen::VectorXd::Zero(clusters);
            for (Eigen::Index i = 0; i < n; ++i) {
                sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
                counts(labels[static_cast<std::size_t>(i)]) += 1.0;
            }
            for (int c = 0; c < clusters; ++c) {
                if (counts(c) > 0.0) centroids.row(c) = sums.row(c) / counts(c);
            }
        }
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
            best.centroids = centroids;
        }
    }
    return best;
}

}  // namespace wahmvc::metrics
