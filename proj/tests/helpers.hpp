#pragma once

#include <random>

#include <Eigen/Core>

#include "wahmvc/geometry.hpp"
#include "wahmvc/random.hpp"

namespace testing {

inline Eigen::VectorXd tangent_at_origin(Eigen::Index n, double radius, wahmvc::Rng& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);
    for (Eigen::Index i = 1; i <= n; ++i) v(i) = g(rng);
    return v * (radius / v.tail(n).norm());
}

inline Eigen::MatrixXd random_points(Eigen::Index b, Eigen::Index n, double spread, std::uint64_t seed,
                                     wahmvc::geometry::Curvature k = {}) {
    return wahmvc::geometry::wrapped_normal_sample(wahmvc::geometry::origin(n, k), spread, b, k, seed);
}

inline Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, wahmvc::Rng& rng) {
    std::normal_distribution<double> g;
    return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return g(rng); });
}

}  // namespace testing
