#pragma once

// Lorentz (hyperboloid) model of hyperbolic space.
//
// A point of L^n_K is stored as n+1 coordinates, index 0 being the time
// coordinate, and satisfies <x, x>_L = 1/K with x_0 > 0. Batches of points
// are stored row-wise in an Eigen::MatrixXd (one point per row).

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

namespace wahmvc::geometry {

using Vector = Eigen::VectorXd;
using Points = Eigen::MatrixXd;
using VectorCRef = Eigen::Ref<const Eigen::VectorXd>;

// Tolerance for the manifold invariant |<x,x>_L - 1/K| on unit-scale points.
inline constexpr double kManifoldTolerance = 1e-9;

// Constant negative sectional curvature.
class Curvature {
public:
    constexpr Curvature() = default;
    // Throws ConfigError unless k < 0 and finite.
    explicit Curvature(double k);

    constexpr double value() const noexcept { return k_; }
    double sqrt_abs() const noexcept;  // sqrt(|K|)
    double inverse() const noexcept { return 1.0 / k_; }  // 1/K

private:
    double k_ = -1.0;
};

// -x0*y0 + sum_{i>=1} xi*yi. Throws DimensionError on length mismatch or length < 2.
double minkowski_inner(VectorCRef x, VectorCRef y);
double lorentz_norm_sq(VectorCRef v);

// Canonical origin [sqrt(-1/K), 0, ..., 0] of L^n_K (n+1 coordinates).
Vector origin(Eigen::Index n, Curvature k);

// |<x,x>_L - 1/K| scaled by max(1, x0^2) so large-radius points are not
// penalized for cancellation error.
double manifold_residual(VectorCRef x, Curvature k);
bool on_manifold(VectorCRef x, Curvature k, double tol = kManifoldTolerance);
// Throws DomainError if the point is off the manifold or has x0 <= 0.
void require_on_manifold(VectorCRef x, Curvature k, const char* what);

// Recompute x0 = sqrt(||x_{1:n}||^2 - 1/K) from the spatial part.
Vector reproject(VectorCRef x, Curvature k);
void reproject_rows(Points& pts, Curvature k);

// (1/sqrt|K|) arccosh(clamp(K <x,y>_L, 1, inf)).
double geodesic_distance(VectorCRef x, VectorCRef y, Curvature k);

// Exponential map at the origin. Throws DomainError for timelike v
// (<v,v>_L < 0 beyond tolerance) or v not tangent at the origin.
Vector exp_origin(VectorCRef v, Curvature k);
// Logarithmic map at the origin.
Vector log_origin(VectorCRef y, Curvature k);
// Logarithmic map at an arbitrary base point x.
Vector log_map(VectorCRef x, VectorCRef y, Curvature k);

// Transport v in T_x to T_y along the geodesic x -> y. x == y returns v.
Vector parallel_transport(VectorCRef v, VectorCRef x, VectorCRef y, Curvature k);

// L unit tangent directions at the origin of L^n_K, one per row
// (L x (n+1)); time coordinate 0, spatial part uniform on S^{n-1}.
struct DirectionSet {
    Eigen::MatrixXd directions;
    std::uint64_t seed = 0;

    Eigen::Index count() const noexcept { return directions.rows(); }
    Eigen::Index ambient_dim() const noexcept { return directions.cols(); }
};

DirectionSet sample_directions(Eigen::Index count, Eigen::Index n, std::uint64_t seed);

// Wrapped normal: Gaussian tangent vectors (std `scale`) at the origin,
// parallel-transported to `mean` and pushed through the exp map there.
Points wrapped_normal_sample(VectorCRef mean, double scale, Eigen::Index count,
                             Curvature k, std::uint64_t seed);

}  // namespace wahmvc::geometry
