#include "wahmvc/sliced_ot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wahmvc/error.hpp"

namespace wahmvc::sliced_ot {

namespace {

constexpr double kAtanhLimit = 1.0 - 1e-12;

void check_points(const Points& points, const DirectionSet& dirs) {
    if (points.cols() != dirs.ambient_dim()) {
        throw DimensionError("projection: points have " + std::to_string(points.cols()) +
                             " coordinates, directions have " + std::to_string(dirs.ambient_dim()));
    }
}

// |d|^p and its derivative sign(d) p |d|^(p-1).
inline double power_cost(double d, double p) {
    if (p == 2.0) return d * d;
    if (p == 1.0) return std::abs(d);
    return std::pow(std::abs(d), p);
}

inline double power_cost_grad(double d, double p) {
    if (p == 2.0) return 2.0 * d;
    const double s = (d > 0.0) - (d < 0.0);
    if (p == 1.0) return s;
    return s * p * std::pow(std::abs(d), p - 1.0);
}

std::vector<Eigen::Index> argsort(VectorCRef x) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        return x(a) < x(b) || (x(a) == x(b) && a < b);
    });
    return idx;
}

// Gradient of the projections w.r.t. the points, given d loss / d proj.
Points project_backward(const Points& points, const DirectionSet& dirs, ProjectionKind kind,
                        const Eigen::MatrixXd& proj_grad) {
    const Eigen::Index n = points.cols() - 1;
    const auto theta = dirs.directions.rightCols(n);
    const auto spatial = points.rightCols(n);
    Points grad = Points::Zero(points.rows(), points.cols());
    const Eigen::MatrixXd dots = spatial * theta.transpose();  // z_s . theta_s
    if (kind == ProjectionKind::horospherical) {
        // value = log(c) + log(z0 - z_s . theta)
        Eigen::MatrixXd h = proj_grad;
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            for (Eigen::Index l = 0; l < dirs.count(); ++l) {
                h(i, l) /= points(i, 0) - dots(i, l);
            }
        }
        grad.col(0) = h.rowwise().sum();
        grad.rightCols(n) = -h * theta;
    } else {
        // value = atanh(t), t = z_s . theta / z0
        Eigen::MatrixXd h = proj_grad;
        Vector dz0 = Vector::Zero(points.rows());
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            const double z0 = points(i, 0);
            for (Eigen::Index l = 0; l < dirs.count(); ++l) {
                const double t = dots(i, l) / z0;
                if (std::abs(t) >= kAtanhLimit) {
                    h(i, l) = 0.0;
                    continue;
                }
                h(i, l) = h(i, l) / (1.0 - t * t) / z0;
                dz0(i) -= h(i, l) * t;
            }
        }
        grad.col(0) = dz0;
        grad.rightCols(n) = h * theta;
    }
    return grad;
}

struct PairTerm {
    double value = 0.0;
    Eigen::MatrixXd grad_a;  // d value / d projections of a
    Eigen::MatrixXd grad_b;
};

PairTerm sliced_pair(const Eigen::MatrixXd& pa, const Eigen::MatrixXd& pb, double p, bool with_grad) {
    PairTerm out;
    const Eigen::Index count = pa.cols();
    if (with_grad) {
        out.grad_a.resize(pa.rows(), count);
        out.grad_b.resize(pb.rows(), count);
    }
    Vector gu, gv;
    for (Eigen::Index l = 0; l < count; ++l) {
        if (with_grad) {
            out.value += wasserstein_1d(pa.col(l), pb.col(l), p, gu, gv);
            out.grad_a.col(l) = gu;
            out.grad_b.col(l) = gv;
        } else {
            out.value += wasserstein_1d(pa.col(l), pb.col(l), p);
        }
    }
    const double inv = 1.0 / static_cast<double>(count);
    out.value *= inv;
    if (with_grad) {
        out.grad_a *= inv;
        out.grad_b *= inv;
    }
    return out;
}

Points gather_rows(const Points& m, const std::vector<Eigen::Index>& rows) {
    Points out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    }
    return out;
}

}  // namespace

void SwConfig::validate() const {
    if (directions < 1) {
        throw ConfigError("sliced Wasserstein: need at least one direction");
    }
    if (!(p >= 1.0) || !std::isfinite(p)) {
        throw ConfigError("sliced Wasserstein: order p must be >= 1");
    }
}

Vector busemann_project(const Points& points, VectorCRef theta, Curvature k) {
    if (points.cols() != theta.size()) {
        throw DimensionError("busemann_project: dimension mismatch");
    }
    const Eigen::Index n = theta.size() - 1;
    const double log_c = std::log(k.sqrt_abs());
    Vector out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const double w = points(i, 0) - points.row(i).tail(n).dot(theta.tail(n));
        if (!(w > 0.0)) {
            throw NumericalError("busemann_project: nonpositive logarithm argument (off-manifold input)");
        }
        out(i) = log_c + std::log(w);
    }
    return out;
}

Vector geodesic_project(const Points& points, VectorCRef theta, Curvature, std::size_t* clamped) {
    if (points.cols() != theta.size()) {
        throw DimensionError("geodesic_project: dimension mismatch");
    }
    const Eigen::Index n = theta.size() - 1;
    Vector out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double t = points.row(i).tail(n).dot(theta.tail(n)) / points(i, 0);
        if (std::abs(t) >= kAtanhLimit) {
            t = std::copysign(kAtanhLimit, t);
            if (clamped) ++*clamped;
        }
        out(i) = std::atanh(t);
    }
    return out;
}

Eigen::MatrixXd project(const Points& points, const DirectionSet& dirs, ProjectionKind kind, Curvature k,
                        std::size_t* clamped) {
    check_points(points, dirs);
    const Eigen::Index n = points.cols() - 1;
    Eigen::MatrixXd out = points.rightCols(n) * dirs.directions.rightCols(n).transpose();
    if (kind == ProjectionKind::horospherical) {
        const double log_c = std::log(k.sqrt_abs());
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            const double z0 = points(i, 0);
            for (Eigen::Index l = 0; l < out.cols(); ++l) {
                const double w = z0 - out(i, l);
                if (!(w > 0.0)) {
                    throw NumericalError("busemann_project: nonpositive logarithm argument (off-manifold input)");
                }
                out(i, l) = log_c + std::log(w);
            }
        }
    } else {
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            const double z0 = points(i, 0);
            for (Eigen::Index l = 0; l < out.cols(); ++l) {
                double t = out(i, l) / z0;
                if (std::abs(t) >= kAtanhLimit) {
                    t = std::copysign(kAtanhLimit, t);
                    if (clamped) ++*clamped;
                }
                out(i, l) = std::atanh(t);
            }
        }
    }
    return out;
}

double wasserstein_1d(VectorCRef u, VectorCRef v, double p) {
    if (u.size() != v.size() || u.size() == 0) {
        throw DimensionError("wasserstein_1d: samples must be non-empty and of equal size");
    }
    Vector su = u, sv = v;
    std::sort(su.begin(), su.end());
    std::sort(sv.begin(), sv.end());
    double total = 0.0;
    for (Eigen::Index i = 0; i < su.size(); ++i) {
        total += power_cost(su(i) - sv(i), p);
    }
    return total / static_cast<double>(su.size());
}

double wasserstein_1d(VectorCRef u, VectorCRef v, double p, Vector& grad_u, Vector& grad_v) {
    if (u.size() != v.size() || u.size() == 0) {
        throw DimensionError("wasserstein_1d: samples must be non-empty and of equal size");
    }
    const auto iu = argsort(u);
    const auto iv = argsort(v);
    const double inv = 1.0 / static_cast<double>(u.size());
    grad_u.resize(u.size());
    grad_v.resize(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < iu.size(); ++i) {
        const double d = u(iu[i]) - v(iv[i]);
        total += power_cost(d, p);
        const double g = power_cost_grad(d, p) * inv;
        grad_u(iu[i]) = g;
        grad_v(iv[i]) = -g;
    }
    return total * inv;
}

double hhsw_pair(const Points& za, const Points& zb, const DirectionSet& dirs, const SwConfig& cfg,
                 Curvature k) {
    cfg.validate();
    if (za.rows() != zb.rows() || za.cols() != zb.cols()) {
        throw DimensionError("hhsw_pair: batches must have equal shape");
    }
    const Eigen::MatrixXd pa = project(za, dirs, cfg.projection, k);
    const Eigen::MatrixXd pb = project(zb, dirs, cfg.projection, k);
    return sliced_pair(pa, pb, cfg.p, false).value;
}

double hhsw_alignment_loss(std::span<const Points> views, const DirectionSet& dirs, const SwConfig& cfg,
                           Curvature k) {
    cfg.validate();
    if (views.size() < 2) {
        throw ConfigError("alignment loss needs at least two views");
    }
    std::vector<Eigen::MatrixXd> proj;
    proj.reserve(views.size());
    for (const auto& v : views) {
        if (v.rows() != views[0].rows() || v.cols() != views[0].cols()) {
            throw DimensionError("alignment loss: all views must have equal batch shape");
        }
        proj.push_back(project(v, dirs, cfg.projection, k));
    }
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t m = 0; m < views.size(); ++m) {
        for (std::size_t n = m + 1; n < views.size(); ++n) {
            total += sliced_pair(proj[m], proj[n], cfg.p, false).value;
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

AlignmentGradient hhsw_alignment_loss_grad(std::span<const Points> views, const DirectionSet& dirs,
                                           const SwConfig& cfg, Curvature k,
                                           std::span<const Eigen::ArrayX<bool>> present) {
    cfg.validate();
    if (views.size() < 2) {
        throw ConfigError("alignment loss needs at least two views");
    }
    if (!present.empty() && present.size() != views.size()) {
        throw DimensionError("alignment loss: one presence mask per view required");
    }
    const std::size_t count = views.size();
    AlignmentGradient out;
    out.grad.reserve(count);
    for (const auto& v : views) {
        if (v.rows() != views[0].rows() || v.cols() != views[0].cols()) {
            throw DimensionError("alignment loss: all views must have equal batch shape");
        }
        out.grad.push_back(Points::Zero(v.rows(), v.cols()));
    }
    const double pair_weight = 2.0 / static_cast<double>(count * (count - 1));

    if (present.empty()) {
        std::vector<Eigen::MatrixXd> proj;
        std::vector<Eigen::MatrixXd> proj_grad;
        for (const auto& v : views) {
            proj.push_back(project(v, dirs, cfg.projection, k, &out.clamped));
            proj_grad.push_back(Eigen::MatrixXd::Zero(v.rows(), dirs.count()));
        }
        for (std::size_t m = 0; m < count; ++m) {
            for (std::size_t n = m + 1; n < count; ++n) {
                const PairTerm t = sliced_pair(proj[m], proj[n], cfg.p, true);
                out.value += pair_weight * t.value;
                proj_grad[m] += pair_weight * t.grad_a;
                proj_grad[n] += pair_weight * t.grad_b;
            }
        }
        for (std::size_t m = 0; m < count; ++m) {
            out.grad[m] = project_backward(views[m], dirs, cfg.projection, proj_grad[m]);
        }
        return out;
    }

    for (std::size_t m = 0; m < count; ++m) {
        for (std::size_t n = m + 1; n < count; ++n) {
            std::vector<Eigen::Index> rows;
            for (Eigen::Index i = 0; i < views[m].rows(); ++i) {
                if (present[m](i) && present[n](i)) rows.push_back(i);
            }
            if (rows.empty()) continue;
            const Points a = gather_rows(views[m], rows);
            const Points b = gather_rows(views[n], rows);
            const Eigen::MatrixXd pa = project(a, dirs, cfg.projection, k, &out.clamped);
            const Eigen::MatrixXd pb = project(b, dirs, cfg.projection, k, &out.clamped);
            const PairTerm t = sliced_pair(pa, pb, cfg.p, true);
            out.value += pair_weight * t.value;
            const Points ga = project_backward(a, dirs, cfg.projection, pair_weight * t.grad_a);
            const Points gb = project_backward(b, dirs, cfg.projection, pair_weight * t.grad_b);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                out.grad[m].row(rows[i]) += ga.row(static_cast<Eigen::Index>(i));
                out.grad[n].row(rows[i]) += gb.row(static_cast<Eigen::Index>(i));
            }
        }
    }
    return out;
}

}  // namespace wahmvc::sliced_ot
