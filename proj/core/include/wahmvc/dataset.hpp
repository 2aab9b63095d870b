#pragma once

// Multi-view datasets: in-memory representation, manifest-based CSV I/O,
// the synthetic hierarchical generator and missing-view masking.
//
// Manifest (JSON):
//   { "views": ["view1.csv", ...], "labels": "labels.csv" | null, "mask": "mask.csv" | null }
// Paths are relative to the manifest's directory. View files are headerless
// CSV, one sample per row; labels hold one integer per line; the mask has
// N rows of M 0/1 entries (1 = present).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace wahmvc::data {

using Matrix = Eigen::MatrixXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;  // N x M

struct MultiViewDataset {
    std::vector<Matrix> views;
    std::optional<std::vector<int>> labels;
    std::optional<Mask> mask;

    Eigen::Index samples() const { return views.empty() ? 0 : views.front().rows(); }
    std::size_t view_count() const { return views.size(); }
    bool present(Eigen::Index sample, std::size_t view) const {
        return !mask || (*mask)(sample, static_cast<Eigen::Index>(view));
    }
    // Presence flags of one view (all true without a mask).
    Eigen::ArrayX<bool> presence(std::size_t view) const;

    // Throws DimensionError / ConfigError when views disagree on N, labels
    // are negative or the wrong length, or a sample has no present view.
    void validate() const;
};

Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m);

MultiViewDataset load_dataset(const std::filesystem::path& manifest);
// Writes manifest.json plus view{m}.csv, labels.csv (if any), mask.csv (if any)
// into `dir`; returns the list of files written.
std::vector<std::filesystem::path> save_dataset(const MultiViewDataset& data, const std::filesystem::path& dir);

struct SyntheticSpec {
    Eigen::Index views = 3;
    Eigen::Index clusters = 4;
    Eigen::Index samples = 400;
    std::vector<Eigen::Index> dims{20, 30, 25};  // cycled when shorter than `views`
    int hierarchy_depth = 2;
    double noise = 0.3;
    std::uint64_t seed = 7;
    Eigen::Index latent_dim = 8;
    double level_spread = 1.0;    // std of the first split around the root
    double level_shrink = 0.6;    // per-level spread multiplier
    Eigen::Index nuisance_dims = 2;
    double nuisance_scale = 12.0;  // nuisance std = nuisance_scale * noise

    void validate() const;
};

// Balanced tree of cluster centroids in a latent space (coarse groups
// splitting into finer clusters); each view renders the centroid through its
// own random linear map and adds Gaussian noise: isotropic with std `noise`
// plus a few view-specific high-variance nuisance directions.
MultiViewDataset generate_synthetic(const SyntheticSpec& spec);

// Marks floor(rate * N * M) random (sample, view) cells absent, never
// leaving a sample without a present view; absent rows are zeroed.
MultiViewDataset apply_missing_mask(MultiViewDataset data, double rate, std::uint64_t seed);

}  // namespace wahmvc::data
