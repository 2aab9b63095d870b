#pragma once

// Timing of the alignment losses (forward + backward) against batch size.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace wahmvc::bench {

enum class LossKind { hhsw, hcl };

LossKind parse_loss_kind(const std::string& name);  // throws ConfigError
const char* loss_kind_name(LossKind kind);

struct BenchConfig {
    LossKind kind = LossKind::hhsw;
    std::vector<Eigen::Index> grid{256, 512, 1024, 2048, 4096};
    int repeats = 3;
    std::size_t views = 2;
    Eigen::Index latent_dim = 32;
    Eigen::Index directions = 128;
    double tau = 0.4;
    std::uint64_t seed = 0;

    // Grid needs >= 4 points spanning >= 8x; repeats >= 1; views >= 2.
    void validate() const;
};

struct BenchRow {
    Eigen::Index batch = 0;
    double median_seconds = 0.0;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    double slope = 0.0;  // least-squares slope of log(time) vs log(B)
};

// Number of unordered view pairs M(M-1)/2.
std::size_t pair_count(std::size_t views);

// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// One full alignment-loss evaluation with gradients over all view pairs.
double alignment_once(LossKind kind, const std::vector<Eigen::MatrixXd>& views, const BenchConfig& cfg);

BenchResult bench_alignment(const BenchConfig& cfg);

// "batch,median_seconds" rows followed by a "# slope=..." footer.
std::string to_csv(const BenchConfig& cfg, const BenchResult& result);

}  // namespace wahmvc::bench
