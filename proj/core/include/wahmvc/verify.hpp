#pragma once

// Self-verification suites behind `wahmvc verify`. Each suite runs a batch of
// randomized checks against independent oracles and counts pass/fail.

#include <cstdint>
#include <string>
#include <vector>

namespace wahmvc::verify {

struct VerifyOptions {
    std::uint64_t seed = 0;
    bool flip_curvature_sign = false;  // fault injection: K > 0 in the manifold suite
    bool include_baseline = true;      // k-means on the acceptance dataset (slowest suite)
};

struct SuiteResult {
    std::string name;
    std::size_t passed = 0;
    std::size_t failed = 0;
    double worst = 0.0;      // largest observed error (suite-specific)
    std::string detail;      // first failure, or a summary value
    double seconds = 0.0;

    bool ok() const { return failed == 0 && passed > 0; }
};

struct VerifyReport {
    std::vector<SuiteResult> suites;
    bool ok() const;
    std::string to_text() const;
};

// |<x,x>_L - 1/K| of produced points, exp/log round trips and transport
// isometry over 1000 trials across n in {2, 8, 64}.
SuiteResult manifold_suite(const VerifyOptions& opt);
// wasserstein_1d against brute-force assignment over all permutations.
SuiteResult ot_suite(const VerifyOptions& opt);
// Busemann / geodesic projections of points on a geodesic ray.
SuiteResult projection_suite(const VerifyOptions& opt);
// Central differences on every parameter of small encoder stacks through the
// full weighted loss, plus the instance contrastive loss.
SuiteResult gradient_suite(const VerifyOptions& opt);
// Closed-form values of the clustering losses.
SuiteResult loss_suite(const VerifyOptions& opt);
// Accuracy vs. brute-force permutations; NMI vs. a contingency-table oracle.
SuiteResult metrics_suite(const VerifyOptions& opt);
// Checkpoint encode/decode identity.
SuiteResult checkpoint_suite(const VerifyOptions& opt);
// k-means on concatenated views of the acceptance dataset; passes when its
// ACC stays below the end-to-end threshold. `worst` holds the ACC.
SuiteResult baseline_suite(const VerifyOptions& opt);

// Acceptance dataset k-means baseline ACC/NMI (10 restarts).
struct Baseline {
    double acc = 0.0;
    double nmi = 0.0;
};
Baseline kmeans_baseline(std::uint64_t seed = 0);

inline constexpr double kEndToEndAccThreshold = 0.95;

VerifyReport run_verification(const VerifyOptions& opt = {});

}  // namespace wahmvc::verify
