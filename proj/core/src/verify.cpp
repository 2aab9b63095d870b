#include "wahmvc/verify.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>

#include "wahmvc/checkpoint.hpp"
#include "wahmvc/dataset.hpp"
#include "wahmvc/error.hpp"
#include "wahmvc/geometry.hpp"
#include "wahmvc/losses.hpp"
#include "wahmvc/metrics.hpp"
#include "wahmvc/random.hpp"
#include "wahmvc/sliced_ot.hpp"
#include "wahmvc/training.hpp"

namespace wahmvc::verify {

namespace {

using geometry::Curvature;
using geometry::Points;
using geometry::Vector;

constexpr double kTol = 1e-9;

// Records one comparison; keeps the first failure message.
struct Tally {
    SuiteResult& r;
    double tol;

    void check(double err, const std::string& what) {
        if (!std::isfinite(err)) err = INFINITY;
        r.worst = std::max(r.worst, err);
        if (err <= tol) {
            ++r.passed;
        } else {
            if (r.failed == 0) r.detail = what + ": error " + std::to_string(err);
            ++r.failed;
        }
    }
};

Vector random_tangent_at_origin(Eigen::Index n, double radius, Rng& rng) {
    std::normal_distribution<double> g;
    Vector v = Vector::Zero(n + 1);
    for (Eigen::Index i = 1; i <= n; ++i) v(i) = g(rng);
    v *= radius / v.tail(n).norm();
    return v;
}

double lorentz_norm(const Vector& v) { return std::sqrt(std::max(0.0, geometry::lorentz_norm_sq(v))); }

// Exact 1D OT cost by enumerating every assignment.
double brute_force_ot(const Vector& u, const Vector& v, double p) {
    std::vector<int> perm(static_cast<std::size_t>(u.size()));
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
        double c = 0.0;
        for (Eigen::Index i = 0; i < u.size(); ++i) c += std::pow(std::abs(u(i) - v(perm[static_cast<std::size_t>(i)])), p);
        best = std::min(best, c / static_cast<double>(u.size()));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double brute_force_accuracy(const std::vector<int>& pred, const std::vector<int>& truth, int k) {
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
        std::size_t hit = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) hit += perm[static_cast<std::size_t>(pred[i])] == truth[i];
        best = std::max(best, static_cast<double>(hit) / static_cast<double>(pred.size()));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double oracle_nmi(const std::vector<int>& a, const std::vector<int>& b, int k) {
    const double n = static_cast<double>(a.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < a.size(); ++i) c(a[i], b[i]) += 1.0;
    const Eigen::VectorXd pa = c.rowwise().sum() / n, pb = c.colwise().sum().transpose() / n;
    double ha = 0, hb = 0, mi = 0;
    for (int i = 0; i < k; ++i) {
        if (pa(i) > 0) ha -= pa(i) * std::log(pa(i));
        if (pb(i) > 0) hb -= pb(i) * std::log(pb(i));
        for (int j = 0; j < k; ++j) {
            const double pij = c(i, j) / n;
            if (pij > 0) mi += pij * std::log(pij / (pa(i) * pb(j)));
        }
    }
    return ha + hb > 0 ? 2.0 * mi / (ha + hb) : 0.0;
}

// Max relative error between analytic and central-difference gradients;
// magnitudes below 1e-5 are compared on an absolute scale.
double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-5});
}

SuiteResult timed(const char* name, const std::function<void(SuiteResult&)>& body) {
    SuiteResult r;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(r);
    } catch (const std::exception& e) {
        ++r.failed;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace

SuiteResult manifold_suite(const VerifyOptions& opt) {
    return timed("manifold", [&](SuiteResult& r) {
        Tally t{r, kTol};
        Rng rng(derive_seed(opt.seed, 1));
        std::uniform_real_distribution<double> radius(0.0, 2.5);
        const double curvatures[] = {-1.0, -0.5, -2.0};
        const Eigen::Index dims[] = {2, 8, 64};
        for (int trial = 0; trial < 1000; ++trial) {
            const double kv = curvatures[trial % 3];
            const Curvature k(opt.flip_curvature_sign ? -kv : kv);
            const Eigen::Index n = dims[(trial / 3) % 3];
            const double s = 1.0 / k.sqrt_abs();

            const Vector v = random_tangent_at_origin(n, radius(rng) * s, rng);
            const Vector w = random_tangent_at_origin(n, radius(rng) * s, rng);
            const Vector x = geometry::exp_origin(v, k);
            const Vector y = geometry::exp_origin(w, k);
            t.check(std::abs(geometry::minkowski_inner(x, x) - k.inverse()), "manifold invariant");
            t.check(std::abs(geometry::minkowski_inner(y, y) - k.inverse()), "manifold invariant");
            t.check((geometry::log_origin(x, k) - v).lpNorm<Eigen::Infinity>(), "log_origin(exp_origin(v)) - v");
            t.check((geometry::exp_origin(geometry::log_origin(y, k), k) - y).lpNorm<Eigen::Infinity>(),
                    "exp_origin(log_origin(y)) - y");

            const Vector u = geometry::log_map(x, y, k);
            t.check(std::abs(lorentz_norm(u) - geometry::geodesic_distance(x, y, k)), "||log_x y|| - d(x, y)");

            // Random tangent at x: project an ambient Gaussian onto T_x.
            Vector a = random_tangent_at_origin(n, 1.0, rng);
            a(0) = std::normal_distribution<double>()(rng);
            const Vector tx = a - k.value() * geometry::minkowski_inner(x, a) * x;
            const Vector moved = geometry::parallel_transport(tx, x, y, k);
            t.check(std::abs(lorentz_norm(moved) - lorentz_norm(tx)), "parallel transport norm");
        }
    });
}

SuiteResult ot_suite(const VerifyOptions& opt) {
    return timed("ot_oracle", [&](SuiteResult& r) {
        Tally t{r, kTol};
        Rng rng(derive_seed(opt.seed, 2));
        std::normal_distribution<double> g(0.0, 2.0);
        std::uniform_int_distribution<int> size(1, 8);
        for (double p : {1.0, 2.0, 3.0}) {
            for (int trial = 0; trial < 100; ++trial) {
                const int b = size(rng);
                Vector u(b), v(b);
                for (int i = 0; i < b; ++i) {
                    u(i) = g(rng);
                    v(i) = g(rng);
                }
                t.check(std::abs(sliced_ot::wasserstein_1d(u, v, p) - brute_force_ot(u, v, p)),
                        "wasserstein_1d vs assignment (p=" + std::to_string(p) + ")");
            }
        }
    });
}

SuiteResult projection_suite(const VerifyOptions& opt) {
    return timed("projections", [&](SuiteResult& r) {
        Tally t{r, kTol};
        Rng rng(derive_seed(opt.seed, 3));
        const Curvature k;
        for (int i = 0; i < 100; ++i) {
            const double s = -3.0 + 6.0 * i / 99.0;
            const Vector theta = random_tangent_at_origin(8, 1.0, rng);
            Points z(1, 9);
            z.row(0) = geometry::exp_origin(s * theta, k).transpose();
            t.check(std::abs(sliced_ot::busemann_project(z, theta, k)(0) + s), "Busemann of exp(t theta) + t");
            t.check(std::abs(sliced_ot::geodesic_project(z, theta, k)(0) - s), "geodesic projection - t");
        }
    });
}

SuiteResult gradient_suite(const VerifyOptions& opt) {
    return timed("gradients", [&](SuiteResult& r) {
        Tally t{r, 1e-4};
        const double h = 1e-5;
        for (int seed = 0; seed < 20; ++seed) {
            Rng rng(derive_seed(opt.seed, 400 + static_cast<std::uint64_t>(seed)));
            std::uniform_int_distribution<Eigen::Index> dim(2, 8);
            std::uniform_real_distribution<double> unit(0.5, 1.5);
            std::normal_distribution<double> g;

            training::TrainConfig cfg;
            cfg.seed = derive_seed(opt.seed, 500 + static_cast<std::uint64_t>(seed));
            cfg.hidden = {dim(rng)};
            cfg.euclidean_dim = dim(rng);
            cfg.latent_dim = dim(rng);
            cfg.curvature = seed % 3 == 0 ? -1.0 : -unit(rng);
            cfg.lorentz_activation = seed % 4 == 3 ? nn::Activation::relu : nn::Activation::identity;
            cfg.weights = {unit(rng), unit(rng), unit(rng), 0.3 + 0.5 * unit(rng)};
            cfg.sw.p = seed % 5 == 4 ? 3.0 : 2.0;
            cfg.sw.projection = seed % 2 ? sliced_ot::ProjectionKind::geodesic : sliced_ot::ProjectionKind::horospherical;
            cfg.sw.directions = 6;
            const std::size_t views = seed % 3 == 2 ? 3 : 2;
            const int clusters = 2 + seed % 3;
            const Eigen::Index b = 3 + seed % 2;

            std::vector<Eigen::Index> in_dims;
            training::MultiViewBatch batch;
            for (std::size_t m = 0; m < views; ++m) {
                in_dims.push_back(dim(rng));
                batch.views.push_back(Eigen::MatrixXd::NullaryExpr(b, in_dims.back(), [&] { return g(rng); }));
            }
            training::Model model = training::make_model(in_dims, clusters, cfg);
            for (auto& enc : model.encoders) {
                enc.head().a = Eigen::VectorXd::NullaryExpr(clusters, [&] { return 0.5 * g(rng); });
                enc.head().z *= 5.0;
            }
            const auto dirs = geometry::sample_directions(cfg.sw.directions, cfg.latent_dim, cfg.seed);

            training::accumulate_gradients(model, batch, cfg, dirs);
            std::vector<std::vector<double>> analytic;
            for (auto& enc : model.encoders)
                for (auto& p : enc.parameters()) analytic.emplace_back(p.grad, p.grad + p.size());

            auto loss_at = [&] { return training::accumulate_gradients(model, batch, cfg, dirs).total; };
            std::size_t tensor = 0;
            for (std::size_t m = 0; m < views; ++m) {
                auto params = model.encoders[m].parameters();
                for (auto& p : params) {
                    for (Eigen::Index i = 0; i < p.size(); ++i) {
                        const double saved = p.value[i];
                        p.value[i] = saved + h;
                        const double up = loss_at();
                        p.value[i] = saved - h;
                        const double down = loss_at();
                        p.value[i] = saved;
                        t.check(relative_error(analytic[tensor][static_cast<std::size_t>(i)], (up - down) / (2 * h)),
                                "seed " + std::to_string(seed) + " view " + std::to_string(m) + " " + p.name);
                    }
                    ++tensor;
                }
            }

            // Ambient point gradients of the alignment and instance-contrastive losses.
            const Curvature k(cfg.curvature);
            std::vector<Points> pts;
            for (std::size_t m = 0; m < 2; ++m) {
                pts.push_back(geometry::wrapped_normal_sample(geometry::origin(cfg.latent_dim, k), 0.7, b, k,
                                                              derive_seed(cfg.seed, 600 + m)));
            }
            const auto align = sliced_ot::hhsw_alignment_loss_grad(pts, dirs, cfg.sw, k);
            Points gm, gn;
            losses::hcl_loss(pts[0], pts[1], cfg.weights.tau, k, &gm, &gn);
            // Points stay on the hyperboloid: perturb a spatial coordinate and
            // rebuild x0, so the ambient gradient g maps to g_i + g_0 x_i / x0.
            for (std::size_t m = 0; m < 2; ++m) {
                for (Eigen::Index row = 0; row < b; ++row) {
                    for (Eigen::Index i = 1; i < pts[m].cols(); ++i) {
                        const Vector saved = pts[m].row(row).transpose();
                        auto eval = [&](double delta) {
                            Vector x = saved;
                            x(i) += delta;
                            pts[m].row(row) = geometry::reproject(x, k).transpose();
                            return std::pair{sliced_ot::hhsw_alignment_loss(pts, dirs, cfg.sw, k),
                                             losses::hcl_loss(pts[0], pts[1], cfg.weights.tau, k)};
                        };
                        const auto up = eval(h);
                        const auto down = eval(-h);
                        pts[m].row(row) = saved.transpose();
                        const double chain = saved(i) / saved(0);
                        const Points& gc = m == 0 ? gm : gn;
                        t.check(relative_error(align.grad[m](row, i) + align.grad[m](row, 0) * chain,
                                               (up.first - down.first) / (2 * h)),
                                "alignment point gradient");
                        t.check(relative_error(gc(row, i) + gc(row, 0) * chain, (up.second - down.second) / (2 * h)),
                                "contrastive point gradient");
                    }
                }
            }
        }
    });
}

SuiteResult loss_suite(const VerifyOptions& opt) {
    return timed("loss_closed_forms", [&](SuiteResult& r) {
        Tally t{r, 1e-12};
        Rng rng(derive_seed(opt.seed, 5));
        std::uniform_real_distribution<double> value(-1.0, 1.0), tau(0.1, 2.0);
        for (int k = 2; k <= 10; ++k) {
            const Eigen::MatrixXd s = Eigen::MatrixXd::Constant(k, k, value(rng));
            t.check(std::abs(losses::contrastive_cluster_loss(s, tau(rng)) - std::log(k)), "constant S");

            for (int views = 1; views <= 4; ++views) {
                std::vector<Eigen::MatrixXd> q;
                for (int m = 0; m < views; ++m) {
                    Eigen::MatrixXd qm = Eigen::MatrixXd::Zero(3 * k, k);
                    for (int i = 0; i < 3 * k; ++i) qm(i, (i + m) % k) = 1.0;
                    q.push_back(qm);
                }
                t.check(std::abs(losses::balance_regularizer(q) + views * std::log(k)), "balanced regularizer");
                const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(2 * k, k, 1.0 / k);
                std::vector<Eigen::MatrixXd> qu(static_cast<std::size_t>(views), uniform);
                t.check(std::abs(losses::balance_regularizer(qu) + views * std::log(k)), "uniform regularizer");
            }

            Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(2 * k + 1, k);
            std::uniform_int_distribution<int> col(0, k - 1);
            for (int i = 0; i < onehot.rows(); ++i) onehot(i, i < k ? i : col(rng)) = 1.0;
            t.check((losses::target_distribution(onehot) - onehot).lpNorm<Eigen::Infinity>(), "target on one-hot");
        }
    });
}

SuiteResult metrics_suite(const VerifyOptions& opt) {
    return timed("metrics", [&](SuiteResult& r) {
        Tally t{r, kTol};
        Rng rng(derive_seed(opt.seed, 6));
        for (int trial = 0; trial < 200; ++trial) {
            const int k = 1 + trial % 3;
            const int n = 1 + static_cast<int>(rng() % 8);
            std::uniform_int_distribution<int> lab(0, k - 1);
            std::vector<int> pred(static_cast<std::size_t>(n)), truth(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                pred[static_cast<std::size_t>(i)] = lab(rng);
                truth[static_cast<std::size_t>(i)] = lab(rng);
            }
            t.check(std::abs(metrics::accuracy(pred, truth) - brute_force_accuracy(pred, truth, k)), "accuracy");
            t.check(std::abs(metrics::nmi(pred, truth) - oracle_nmi(pred, truth, k)), "nmi");
        }
    });
}

SuiteResult checkpoint_suite(const VerifyOptions& opt) {
    return timed("checkpoint", [&](SuiteResult& r) {
        Tally t{r, 0.0};
        Rng rng(derive_seed(opt.seed, 7));
        std::normal_distribution<double> g(0.0, 1e3);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<checkpoint::Tensor> tensors;
            for (int i = 0; i <= trial % 5; ++i) {
                checkpoint::Tensor ten;
                ten.name = "t" + std::to_string(trial) + "." + std::to_string(i);
                for (int d = 0; d < i % 4; ++d) ten.dims.push_back(1 + rng() % 4);
                ten.values.resize(static_cast<std::size_t>(ten.element_count()));
                for (auto& v : ten.values) v = g(rng);
                if (!ten.values.empty()) ten.values.front() = -0.0;
                tensors.push_back(std::move(ten));
            }
            const auto back = checkpoint::decode(checkpoint::encode(tensors));
            bool same = back.size() == tensors.size();
            for (std::size_t i = 0; same && i < back.size(); ++i) {
                same = back[i].name == tensors[i].name && back[i].dims == tensors[i].dims &&
                       back[i].values.size() == tensors[i].values.size() &&
                       std::equal(back[i].values.begin(), back[i].values.end(), tensors[i].values.begin(),
                                  [](double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); });
            }
            t.check(same ? 0.0 : 1.0, "encode/decode round trip");
        }
    });
}

Baseline kmeans_baseline(std::uint64_t seed) {
    const auto data = data::generate_synthetic(data::SyntheticSpec{});
    Eigen::Index cols = 0;
    for (const auto& v : data.views) cols += v.cols();
    Eigen::MatrixXd x(data.samples(), cols);
    Eigen::Index at = 0;
    for (const auto& v : data.views) {
        x.middleCols(at, v.cols()) = v;
        at += v.cols();
    }
    const int clusters = 1 + *std::max_element(data.labels->begin(), data.labels->end());
    const auto km = metrics::kmeans(x, clusters, seed);
    const auto m = metrics::evaluate(km.labels, *data.labels);
    return {m.acc, m.nmi};
}

SuiteResult baseline_suite(const VerifyOptions& opt) {
    return timed("kmeans_baseline", [&](SuiteResult& r) {
        const Baseline b = kmeans_baseline(opt.seed);
        r.worst = b.acc;
        char buf[96];
        std::snprintf(buf, sizeof buf, "k-means ACC=%.4f NMI=%.4f", b.acc, b.nmi);
        r.detail = buf;
        if (b.acc < kEndToEndAccThreshold) ++r.passed;
        else ++r.failed;
    });
}

bool VerifyReport::ok() const {
    return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.ok(); });
}

std::string VerifyReport::to_text() const {
    std::string out;
    char buf[160];
    std::size_t bad = 0;
    for (const auto& s : suites) {
        bad += !s.ok();
        std::snprintf(buf, sizeof buf, "%-18s %s  passed=%zu failed=%zu worst=%.3g time=%.2fs", s.name.c_str(),
                      s.ok() ? "PASS" : "FAIL", s.passed, s.failed, s.worst, s.seconds);
        out += buf;
        if (!s.detail.empty()) out += "  (" + s.detail + ")";
        out += '\n';
    }
    std::snprintf(buf, sizeof buf, "%zu/%zu suites passed\n", suites.size() - bad, suites.size());
    out += buf;
    return out;
}

VerifyReport run_verification(const VerifyOptions& opt) {
    VerifyReport rep;
    rep.suites.push_back(manifold_suite(opt));
    rep.suites.push_back(ot_suite(opt));
    rep.suites.push_back(projection_suite(opt));
    rep.suites.push_back(gradient_suite(opt));
    rep.suites.push_back(loss_suite(opt));
    rep.suites.push_back(metrics_suite(opt));
    rep.suites.push_back(checkpoint_suite(opt));
    if (opt.include_baseline) rep.suites.push_back(baseline_suite(opt));
    return rep;
}

}  // namespace wahmvc::verify
