#pragma once

// Hyperbolic sliced-Wasserstein distances on the Lorentz model.
//
// Points are projected onto the real line along unit tangent directions at
// the origin, either with the Busemann function (horospherical, HHSW) or the
// geodesic projection (GHSW); the sliced distance is the mean over directions
// of the 1D Wasserstein cost W_p^p between the projected empirical measures.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "wahmvc/geometry.hpp"

namespace wahmvc::sliced_ot {

using geometry::Curvature;
using geometry::DirectionSet;
using geometry::Points;
using geometry::Vector;
using geometry::VectorCRef;

enum class ProjectionKind { horospherical, geodesic };

struct SwConfig {
    Eigen::Index directions = 128;
    double p = 2.0;
    ProjectionKind projection = ProjectionKind::horospherical;
    std::uint64_t seed = 0;

    // Throws ConfigError if directions < 1 or p < 1.
    void validate() const;
};

// log(-<z, x_o + theta>_L) per row. For K != -1 points are first rescaled
// onto the K = -1 hyperboloid.
Vector busemann_project(const Points& points, VectorCRef theta, Curvature k = Curvature{});

// arctanh(-<z, theta>_L / <z, x_o>_L) per row (again on the rescaled
// hyperboloid). Arguments with |t| >= 1 - 1e-12 are clamped and counted.
Vector geodesic_project(const Points& points, VectorCRef theta, Curvature k = Curvature{},
                        std::size_t* clamped = nullptr);

// All directions at once: B x L matrix of projections.
Eigen::MatrixXd project(const Points& points, const DirectionSet& dirs, ProjectionKind kind,
                        Curvature k = Curvature{}, std::size_t* clamped = nullptr);

// (1/B) sum_i |u_(i) - v_(i)|^p over sorted samples: the p-th power of W_p
// between uniform empirical measures of equal size.
double wasserstein_1d(VectorCRef u, VectorCRef v, double p);

// Same, also writing the (sort-permutation-constant) gradient w.r.t. u and v.
double wasserstein_1d(VectorCRef u, VectorCRef v, double p, Vector& grad_u, Vector& grad_v);

// Mean over directions of wasserstein_1d of the projected batches.
double hhsw_pair(const Points& za, const Points& zb, const DirectionSet& dirs, const SwConfig& cfg,
                 Curvature k = Curvature{});

// Average of hhsw_pair over the M(M-1)/2 unordered view pairs.
double hhsw_alignment_loss(std::span<const Points> views, const DirectionSet& dirs,
                           const SwConfig& cfg, Curvature k = Curvature{});

struct AlignmentGradient {
    double value = 0.0;
    std::vector<Points> grad;  // d value / d points, one matrix per view
    std::size_t clamped = 0;   // geodesic projections clamped at the boundary
};

// Value and gradient of hhsw_alignment_loss. When `present` is non-empty it
// holds one row-presence flag array per view; each pair is then evaluated on
// the rows present in both views.
AlignmentGradient hhsw_alignment_loss_grad(std::span<const Points> views, const DirectionSet& dirs,
                                           const SwConfig& cfg, Curvature k = Curvature{},
                                           std::span<const Eigen::ArrayX<bool>> present = {});

}  // namespace wahmvc::sliced_ot
