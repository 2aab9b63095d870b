#include "wahmvc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "wahmvc/error.hpp"
#include "wahmvc/geometry.hpp"
#include "wahmvc/losses.hpp"
#include "wahmvc/random.hpp"
#include "wahmvc/sliced_ot.hpp"

namespace wahmvc::bench {

LossKind parse_loss_kind(const std::string& name) {
    if (name == "hhsw") return LossKind::hhsw;
    if (name == "hcl") return LossKind::hcl;
    throw ConfigError("unknown loss '" + name + "' (expected hhsw or hcl)");
}

const char* loss_kind_name(LossKind kind) { return kind == LossKind::hhsw ? "hhsw" : "hcl"; }

void BenchConfig::validate() const {
    if (grid.size() < 4) throw ConfigError("batch grid needs at least 4 points");
    if (std::any_of(grid.begin(), grid.end(), [](Eigen::Index b) { return b < 2; })) {
        throw ConfigError("batch sizes must be >= 2");
    }
    const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
    if (*hi < 8 * *lo) throw ConfigError("batch grid must span at least 8x");
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    if (views < 2) throw ConfigError("need at least two views");
    if (latent_dim < 1 || directions < 1) throw ConfigError("latent_dim and directions must be >= 1");
}

std::size_t pair_count(std::size_t views) { return views * (views - 1) / 2; }

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DimensionError("slope fit needs >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double alignment_once(LossKind kind, const std::vector<Eigen::MatrixXd>& views, const BenchConfig& cfg) {
    const geometry::Curvature k;
    if (kind == LossKind::hhsw) {
        const auto dirs = geometry::sample_directions(cfg.directions, cfg.latent_dim, cfg.seed);
        sliced_ot::SwConfig sw;
        sw.directions = cfg.directions;
        return sliced_ot::hhsw_alignment_loss_grad(views, dirs, sw, k).value;
    }
    double total = 0.0;
    geometry::Points ga, gb;
    for (std::size_t a = 0; a < views.size(); ++a)
        for (std::size_t b = a + 1; b < views.size(); ++b)
            total += losses::hcl_loss(views[a], views[b], cfg.tau, k, &ga, &gb);
    return total;
}

BenchResult bench_alignment(const BenchConfig& cfg) {
    cfg.validate();
    BenchResult result;
    std::vector<double> xs, ys;
    const geometry::Curvature k;
    for (Eigen::Index b : cfg.grid) {
        std::vector<Eigen::MatrixXd> views;
        for (std::size_t m = 0; m < cfg.views; ++m) {
            views.push_back(geometry::wrapped_normal_sample(geometry::origin(cfg.latent_dim, k), 1.0, b, k,
                                                            derive_seed(cfg.seed, 100 * static_cast<std::uint64_t>(b) + m)));
        }
        std::vector<double> times;
        for (int r = 0; r < cfg.repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            volatile double sink = alignment_once(cfg.kind, views, cfg);
            (void)sink;
            const auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
        double median = times[times.size() / 2];
        if (times.size() % 2 == 0) {
            median = 0.5 * (median + *std::max_element(times.begin(), times.begin() + times.size() / 2));
        }
        result.rows.push_back({b, median});
        xs.push_back(static_cast<double>(b));
        ys.push_back(median);
    }
    result.slope = fit_loglog_slope(xs, ys);
    return result;
}

std::string to_csv(const BenchConfig& cfg, const BenchResult& result) {
    std::string out = "batch,median_seconds\n";
    char buf[96];
    for (const auto& r : result.rows) {
        std::snprintf(buf, sizeof buf, "%lld,%.9g\n", static_cast<long long>(r.batch), r.median_seconds);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "# loss=%s slope=%.4f\n", loss_kind_name(cfg.kind), result.slope);
    out += buf;
    return out;
}

}  // namespace wahmvc::bench
