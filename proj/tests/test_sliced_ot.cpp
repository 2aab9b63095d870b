#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "wahmvc/error.hpp"
#include "wahmvc/sliced_ot.hpp"

using namespace wahmvc;
using namespace wahmvc::sliced_ot;
using geometry::Curvature;

namespace {

double scalar_busemann(const Vector& z, const Vector& theta) {
    // -<z, x_o + theta>_L with x_o = e_0
    double s = z(0);
    for (Eigen::Index i = 1; i < z.size(); ++i) s -= z(i) * theta(i);
    return std::log(s);
}

double scalar_geodesic(const Vector& z, const Vector& theta) {
    double num = 0.0;
    for (Eigen::Index i = 1; i < z.size(); ++i) num += z(i) * theta(i);
    return std::atanh(num / z(0));
}

}  // namespace

TEST_CASE("projections at the origin and along the defining geodesic") {
    const Curvature k;
    Rng rng(1);
    const Vector theta = testing::tangent_at_origin(4, 1.0, rng);
    Points o(1, 5);
    o.row(0) = geometry::origin(4, k).transpose();
    CHECK(busemann_project(o, theta)(0) == 0.0);
    CHECK(geodesic_project(o, theta)(0) == 0.0);
    for (double t = -3.0; t <= 3.0; t += 0.25) {
        Points z(1, 5);
        z.row(0) = geometry::exp_origin(t * theta, k).transpose();
        CHECK(std::abs(busemann_project(z, theta)(0) + t) <= 1e-9);
        CHECK(std::abs(geodesic_project(z, theta)(0) - t) <= 1e-9);
    }
}

TEST_CASE("projections match scalar formulas") {
    const Points z = testing::random_points(30, 6, 1.2, 17);
    Rng rng(2);
    const Vector theta = testing::tangent_at_origin(6, 1.0, rng);
    const Vector hb = busemann_project(z, theta);
    const Vector hg = geodesic_project(z, theta);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        CHECK(std::abs(hb(i) - scalar_busemann(z.row(i).transpose(), theta)) < 1e-12);
        CHECK(std::abs(hg(i) - scalar_geodesic(z.row(i).transpose(), theta)) < 1e-12);
    }
    const auto dirs = geometry::sample_directions(3, 6, 5);
    const auto all = project(z, dirs, ProjectionKind::horospherical);
    CHECK(all.rows() == 30);
    CHECK(all.cols() == 3);
    CHECK((all.col(1) - busemann_project(z, dirs.directions.row(1).transpose())).norm() < 1e-14);
}

TEST_CASE("curvature rescaling keeps the closed forms") {
    const Curvature k(-4.0);
    Rng rng(8);
    const Vector theta = testing::tangent_at_origin(3, 1.0, rng);
    // exp_origin(t theta) at K sits at distance t; on the rescaled unit
    // hyperboloid that is t * sqrt|K|.
    Points z(1, 4);
    z.row(0) = geometry::exp_origin(0.8 * theta, k).transpose();
    CHECK(std::abs(geodesic_project(z, theta, k)(0) - 1.6) < 1e-12);
    CHECK(std::abs(busemann_project(z, theta, k)(0) + 1.6) < 1e-12);
}

TEST_CASE("geodesic projection clamps and counts") {
    Points z(1, 3);
    z << 1.0, 1.0, 0.0;  // light-like, off-manifold: ratio exactly 1
    Vector theta(3);
    theta << 0, 1, 0;
    std::size_t clamped = 0;
    const Vector v = geodesic_project(z, theta, Curvature{}, &clamped);
    CHECK(clamped == 1);
    CHECK(std::isfinite(v(0)));
}

TEST_CASE("wasserstein_1d") {
    Vector u(2), v(2);
    u << 0, 1;
    v << 1, 2;
    CHECK(wasserstein_1d(u, v, 2.0) == 1.0);
    CHECK(wasserstein_1d(u, u, 2.0) == 0.0);
    Vector u2(2);
    u2 << 1, 0;
    CHECK(wasserstein_1d(u2, u, 1.0) == 0.0);
    CHECK_THROWS_AS(wasserstein_1d(u, Vector::Zero(3), 2.0), DimensionError);

    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
        const Vector a = testing::gaussian(7, 1, rng), b = testing::gaussian(7, 1, rng);
        const double c = std::normal_distribution<double>(0, 5)(rng);
        CHECK(std::abs(wasserstein_1d(a.array() + c, b.array() + c, 2.0) - wasserstein_1d(a, b, 2.0)) < 1e-12);
    }
}

TEST_CASE("wasserstein_1d equals exact OT for B = 8") {
    Rng rng(12);
    for (int t = 0; t < 5; ++t) {
        const Vector a = testing::gaussian(8, 1, rng), b = testing::gaussian(8, 1, rng);
        std::vector<int> perm(8);
        std::iota(perm.begin(), perm.end(), 0);
        double best = INFINITY;
        do {
            double c = 0;
            for (int i = 0; i < 8; ++i) c += std::pow(a(i) - b(perm[static_cast<std::size_t>(i)]), 2);
            best = std::min(best, c / 8);
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(std::abs(wasserstein_1d(a, b, 2.0) - best) <= 1e-9);
    }
}

TEST_CASE("wasserstein_1d gradient") {
    Rng rng(6);
    for (double p : {1.0, 2.0, 3.0}) {
        const Vector a = testing::gaussian(6, 1, rng), b = testing::gaussian(6, 1, rng);
        Vector ga, gb;
        const double w = wasserstein_1d(a, b, p, ga, gb);
        CHECK(w == doctest::Approx(wasserstein_1d(a, b, p)).epsilon(1e-14));
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < 6; ++i) {
            Vector ap = a, am = a;
            ap(i) += h;
            am(i) -= h;
            CHECK(ga(i) == doctest::Approx((wasserstein_1d(ap, b, p) - wasserstein_1d(am, b, p)) / (2 * h)).epsilon(1e-5));
        }
        CHECK(std::abs(ga.sum() + gb.sum()) < 1e-12);
    }
}

TEST_CASE("hhsw pair and alignment loss") {
    const Points a = testing::random_points(16, 5, 1.0, 1);
    const Points b = testing::random_points(16, 5, 1.0, 2);
    const Points c = testing::random_points(16, 5, 1.0, 3);
    const auto dirs = geometry::sample_directions(32, 5, 7);
    SwConfig cfg;

    CHECK(hhsw_pair(a, a, dirs, cfg) == 0.0);
    CHECK(hhsw_pair(a, b, dirs, cfg) == hhsw_pair(b, a, dirs, cfg));

    const auto one = geometry::sample_directions(1, 5, 3);
    const Vector th = one.directions.row(0).transpose();
    CHECK(hhsw_pair(a, b, one, cfg) == doctest::Approx(wasserstein_1d(busemann_project(a, th), busemann_project(b, th), 2.0)));

    const std::vector<Points> two{a, b};
    CHECK(hhsw_alignment_loss(two, dirs, cfg) == doctest::Approx(hhsw_pair(a, b, dirs, cfg)).epsilon(1e-14));
    const std::vector<Points> three{a, b, c};
    const double mean = (hhsw_pair(a, b, dirs, cfg) + hhsw_pair(a, c, dirs, cfg) + hhsw_pair(b, c, dirs, cfg)) / 3.0;
    CHECK(hhsw_alignment_loss(three, dirs, cfg) == doctest::Approx(mean).epsilon(1e-14));
    const std::vector<Points> same{a, a, a};
    CHECK(hhsw_alignment_loss(same, dirs, cfg) == 0.0);

    const std::vector<Points> single{a};
    CHECK_THROWS_AS(hhsw_alignment_loss(single, dirs, cfg), ConfigError);

    cfg.projection = ProjectionKind::geodesic;
    CHECK(hhsw_pair(a, b, dirs, cfg) > 0.0);
}

TEST_CASE("sliced estimate converges with the number of directions") {
    const Curvature k;
    SwConfig cfg;
    // Spread mismatch: per-direction costs vary little, 128 directions land within 5%.
    const Points a = geometry::wrapped_normal_sample(geometry::origin(3, k), 0.5, 64, k, 21);
    const Points wide = geometry::wrapped_normal_sample(geometry::origin(3, k), 1.0, 64, k, 22);
    const double fine_wide = hhsw_pair(a, wide, geometry::sample_directions(10000, 3, 2), cfg);
    CHECK(std::abs(hhsw_pair(a, wide, geometry::sample_directions(128, 3, 1), cfg) - fine_wide) / fine_wide < 0.05);

    // Location shift: per-direction costs depend strongly on the angle to the
    // shift, so compare against the Monte-Carlo standard error instead.
    Vector shift = Vector::Zero(4);
    shift(1) = 0.8;
    const Points b = geometry::wrapped_normal_sample(geometry::exp_origin(shift, k), 0.5, 64, k, 23);
    const auto coarse_dirs = geometry::sample_directions(128, 3, 1);
    Vector per(128);
    for (Eigen::Index l = 0; l < 128; ++l) {
        geometry::DirectionSet one{coarse_dirs.directions.row(l), 0};
        per(l) = hhsw_pair(a, b, one, cfg);
    }
    const double coarse = per.mean();
    const double se = std::sqrt((per.array() - coarse).square().sum() / 127.0 / 128.0);
    const double fine = hhsw_pair(a, b, geometry::sample_directions(100000, 3, 2), cfg);
    CHECK(coarse == doctest::Approx(hhsw_pair(a, b, coarse_dirs, cfg)).epsilon(1e-12));
    CHECK(std::abs(coarse - fine) <= 3.0 * se);
}

TEST_CASE("alignment gradient matches finite differences on the manifold") {
    const Curvature k(-1.5);
    std::vector<Points> views{testing::random_points(5, 3, 0.8, 31, k), testing::random_points(5, 3, 0.8, 32, k),
                              testing::random_points(5, 3, 0.8, 33, k)};
    const auto dirs = geometry::sample_directions(4, 3, 9);
    for (auto kind : {ProjectionKind::horospherical, ProjectionKind::geodesic}) {
        SwConfig cfg;
        cfg.projection = kind;
        const auto g = hhsw_alignment_loss_grad(views, dirs, cfg, k);
        CHECK(g.value == doctest::Approx(hhsw_alignment_loss(views, dirs, cfg, k)).epsilon(1e-14));
        const double h = 1e-6;
        for (std::size_t m = 0; m < views.size(); ++m) {
            for (Eigen::Index i = 0; i < 5; ++i) {
                for (Eigen::Index j = 0; j < 4; ++j) {
                    auto plus = views, minus = views;
                    plus[m](i, j) += h;
                    minus[m](i, j) -= h;
                    const double fd = (hhsw_alignment_loss(plus, dirs, cfg, k) - hhsw_alignment_loss(minus, dirs, cfg, k)) / (2 * h);
                    CHECK(g.grad[m](i, j) == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
                }
            }
        }
    }
}

TEST_CASE("masked alignment uses rows present in both views") {
    const Points a = testing::random_points(6, 3, 1.0, 41);
    const Points b = testing::random_points(6, 3, 1.0, 42);
    const auto dirs = geometry::sample_directions(8, 3, 1);
    SwConfig cfg;
    Eigen::ArrayX<bool> pa = Eigen::ArrayX<bool>::Constant(6, true), pb = pa;
    pb(2) = false;
    pb(5) = false;
    const std::vector<Points> views{a, b};
    const std::vector<Eigen::ArrayX<bool>> present{pa, pb};
    const auto g = hhsw_alignment_loss_grad(views, dirs, cfg, Curvature{}, present);

    Points sa(4, 4), sb(4, 4);
    int r = 0;
    for (int i : {0, 1, 3, 4}) {
        sa.row(r) = a.row(i);
        sb.row(r++) = b.row(i);
    }
    CHECK(g.value == doctest::Approx(hhsw_pair(sa, sb, dirs, cfg)).epsilon(1e-14));
    CHECK(g.grad[1].row(2).norm() == 0.0);
    CHECK(g.grad[0].row(5).norm() == 0.0);
}

TEST_CASE("config validation") {
    SwConfig cfg;
    cfg.p = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.directions = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
