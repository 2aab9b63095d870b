#include "wahmvc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wahmvc/error.hpp"
#include "wahmvc/random.hpp"

namespace wahmvc::geometry {

namespace {

// arccosh(b) / sqrt(b^2 - 1), continuous at b = 1 where it tends to 1.
double log_coefficient(double b) {
    const double e = b - 1.0;
    if (e < 1e-7) {
        return 1.0 - e / 3.0;
    }
    return std::acosh(b) / std::sqrt(b * b - 1.0);
}

// sinh(a) / a, continuous at 0.
double sinhc(double a) {
    if (std::abs(a) < 1e-5) {
        return 1.0 + a * a / 6.0;
    }
    return std::sinh(a) / a;
}

double unchecked_distance(VectorCRef x, VectorCRef y, Curvature k) {
    const double c = k.sqrt_abs();
    const double beta = k.value() * minkowski_inner(x, y);
    if (beta < 2.0) {
        // Chord form 2/c * asinh(c * |x - y|_L / 2): same value as the
        // arccosh form, but exact at coincident points.
        const Vector diff = x - y;
        const double chord_sq = std::max(lorentz_norm_sq(diff), 0.0);
        return 2.0 / c * std::asinh(0.5 * c * std::sqrt(chord_sq));
    }
    return std::acosh(beta) / c;
}

// exp map at an arbitrary base point; only used by wrapped_normal_sample.
Vector exp_at(VectorCRef x, VectorCRef w, Curvature k) {
    const double norm = std::sqrt(std::max(lorentz_norm_sq(w), 0.0));
    const double a = k.sqrt_abs() * norm;
    Vector out = std::cosh(a) * x + sinhc(a) * w;
    return reproject(out, k);
}

}  // namespace

Curvature::Curvature(double k) : k_(k) {
    if (!(k < 0.0) || !std::isfinite(k)) {
        throw ConfigError("curvature must be finite and strictly negative, got " + std::to_string(k));
    }
}

double Curvature::sqrt_abs() const noexcept { return std::sqrt(-k_); }

double minkowski_inner(VectorCRef x, VectorCRef y) {
    if (x.size() != y.size()) {
        throw DimensionError("minkowski_inner: length mismatch (" + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()) + ")");
    }
    if (x.size() < 2) {
        throw DimensionError("minkowski_inner: vectors need at least 2 coordinates");
    }
    const Eigen::Index n = x.size() - 1;
    return -x(0) * y(0) + x.tail(n).dot(y.tail(n));
}

double lorentz_norm_sq(VectorCRef v) { return minkowski_inner(v, v); }

Vector origin(Eigen::Index n, Curvature k) {
    Vector o = Vector::Zero(n + 1);
    o(0) = std::sqrt(-k.inverse());
    return o;
}

double manifold_residual(VectorCRef x, Curvature k) {
    const double r = std::abs(lorentz_norm_sq(x) - k.inverse());
    return r / std::max(1.0, x(0) * x(0));
}

bool on_manifold(VectorCRef x, Curvature k, double tol) {
    return x.size() >= 2 && x.allFinite() && x(0) > 0.0 && manifold_residual(x, k) <= tol;
}

void require_on_manifold(VectorCRef x, Curvature k, const char* what) {
    if (!on_manifold(x, k)) {
        throw DomainError(std::string(what) + ": point is not on the Lorentz manifold");
    }
}

Vector reproject(VectorCRef x, Curvature k) {
    Vector out = x;
    const Eigen::Index n = x.size() - 1;
    out(0) = std::sqrt(x.tail(n).squaredNorm() - k.inverse());
    return out;
}

void reproject_rows(Points& pts, Curvature k) {
    const Eigen::Index n = pts.cols() - 1;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        pts(i, 0) = std::sqrt(pts.row(i).tail(n).squaredNorm() - k.inverse());
    }
}

double geodesic_distance(VectorCRef x, VectorCRef y, Curvature k) {
    if (x.size() != y.size()) {
        throw DimensionError("geodesic_distance: dimension mismatch");
    }
    require_on_manifold(x, k, "geodesic_distance");
    require_on_manifold(y, k, "geodesic_distance");
    return unchecked_distance(x, y, k);
}

Vector exp_origin(VectorCRef v, Curvature k) {
    if (v.size() < 2) {
        throw DimensionError("exp_origin: tangent vector needs at least 2 coordinates");
    }
    const double vv = lorentz_norm_sq(v);
    const double scale = std::max(1.0, v.squaredNorm());
    if (vv < -kManifoldTolerance * scale) {
        throw DomainError("exp_origin: timelike tangent vector");
    }
    if (std::abs(v(0)) > kManifoldTolerance * std::sqrt(scale)) {
        throw DomainError("exp_origin: vector is not tangent at the origin");
    }
    const Eigen::Index n = v.size() - 1;
    const double norm = std::sqrt(std::max(vv, 0.0));
    const double a = k.sqrt_abs() * norm;
    Vector out(v.size());
    out(0) = std::cosh(a) / k.sqrt_abs();
    out.tail(n) = sinhc(a) * v.tail(n);
    return out;
}

Vector log_origin(VectorCRef y, Curvature k) {
    require_on_manifold(y, k, "log_origin");
    const Eigen::Index n = y.size() - 1;
    const double beta = std::max(1.0, k.sqrt_abs() * y(0));  // K <x_o, y>_L
    Vector out(y.size());
    out(0) = 0.0;
    out.tail(n) = log_coefficient(beta) * y.tail(n);
    return out;
}

Vector log_map(VectorCRef x, VectorCRef y, Curvature k) {
    if (x.size() != y.size()) {
        throw DimensionError("log_map: dimension mismatch");
    }
    require_on_manifold(x, k, "log_map");
    require_on_manifold(y, k, "log_map");
    const double beta = std::max(1.0, k.value() * minkowski_inner(x, y));
    return log_coefficient(beta) * (y - beta * x);
}

Vector parallel_transport(VectorCRef v, VectorCRef x, VectorCRef y, Curvature k) {
    if (v.size() != x.size() || x.size() != y.size()) {
        throw DimensionError("parallel_transport: dimension mismatch");
    }
    const double d = geodesic_distance(x, y, k);
    if (d < 1e-12) {
        return v;
    }
    const Vector lxy = log_map(x, y, k);
    const Vector lyx = log_map(y, x, k);
    return v - (minkowski_inner(lxy, v) / (d * d)) * (lxy + lyx);
}

DirectionSet sample_directions(Eigen::Index count, Eigen::Index n, std::uint64_t seed) {
    if (count < 1 || n < 1) {
        throw ConfigError("sample_directions: need at least one direction and n >= 1");
    }
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    DirectionSet set;
    set.seed = seed;
    set.directions = Eigen::MatrixXd::Zero(count, n + 1);
    for (Eigen::Index l = 0; l < count; ++l) {
        double norm = 0.0;
        while (norm < 1e-12) {
            for (Eigen::Index j = 1; j <= n; ++j) {
                set.directions(l, j) = normal(rng);
            }
            norm = set.directions.row(l).tail(n).norm();
        }
        set.directions.row(l).tail(n) /= norm;
    }
    return set;
}

Points wrapped_normal_sample(VectorCRef mean, double scale, Eigen::Index count, Curvature k,
                             std::uint64_t seed) {
    require_on_manifold(mean, k, "wrapped_normal_sample");
    if (!(scale >= 0.0)) {
        throw ConfigError("wrapped_normal_sample: scale must be nonnegative");
    }
    const Eigen::Index n = mean.size() - 1;
    const Vector o = origin(n, k);
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Points out(count, n + 1);
    Vector v = Vector::Zero(n + 1);
    for (Eigen::Index i = 0; i < count; ++i) {
        for (Eigen::Index j = 1; j <= n; ++j) {
            v(j) = scale * normal(rng);
        }
        const Vector w = parallel_transport(v, o, mean, k);
        out.row(i) = exp_at(mean, w, k).transpose();
    }
    return out;
}

}  // namespace wahmvc::geometry
