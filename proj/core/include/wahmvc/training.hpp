#pragma once

// End-to-end optimization: per-view encoders, mini-batch loss assembly
// (alignment + semantic contrast + balance), backpropagation, Adam/SGD
// updates, and final label voting over the full dataset.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wahmvc/checkpoint.hpp"
#include "wahmvc/dataset.hpp"
#include "wahmvc/geometry.hpp"
#include "wahmvc/lorentz_nn.hpp"
#include "wahmvc/losses.hpp"
#include "wahmvc/metrics.hpp"
#include "wahmvc/random.hpp"
#include "wahmvc/sliced_ot.hpp"

namespace wahmvc::training {

using Matrix = Eigen::MatrixXd;
using geometry::Points;
using Presence = Eigen::ArrayX<bool>;

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    int epochs = 60;
    Eigen::Index batch_size = 32;
    double learning_rate = 1e-3;
    OptimizerConfig optimizer;
    losses::LossWeights weights;
    sliced_ot::SwConfig sw;
    Eigen::Index latent_dim = 32;  // r: embeddings live in L^r
    double curvature = -1.0;
    std::uint64_t seed = 0;
    int clusters = 0;  // 0: number of distinct ground-truth labels
    std::vector<Eigen::Index> hidden{256, 512};
    Eigen::Index euclidean_dim = 64;  // d: lift into L^d
    nn::Activation lorentz_activation = nn::Activation::identity;

    // Throws ConfigError when epochs < 1, batch_size < 2, learning_rate < 0, ...
    void validate() const;
};

std::string config_to_json(const TrainConfig& cfg);
// Fields missing from the JSON keep the values of `base`.
TrainConfig config_from_json(const std::string& text, TrainConfig base = {});

struct LossComponents {
    double total = 0.0;
    double hhsw = 0.0;
    double sem = 0.0;
    double reg = 0.0;
};

struct EpochRecord {
    int epoch = 0;
    LossComponents loss;  // mean over the epoch's batches
    std::optional<metrics::ClusteringMetrics> metrics;
};

struct Model {
    std::vector<nn::ViewEncoder> encoders;
    geometry::Curvature curvature;
    nn::Activation lorentz_activation = nn::Activation::identity;

    std::size_t view_count() const { return encoders.size(); }
    int clusters() const;
};

Model make_model(const std::vector<Eigen::Index>& input_dims, int clusters, const TrainConfig& cfg);

// First and second moments per parameter tensor, ordered like
// ViewEncoder::parameters() for each view.
class Optimizer {
public:
    Optimizer() = default;
    Optimizer(Model& model, const OptimizerConfig& cfg);

    void step(Model& model, double learning_rate);

    long long steps() const { return step_; }
    std::vector<std::vector<Eigen::VectorXd>>& first_moments() { return m_; }
    std::vector<std::vector<Eigen::VectorXd>>& second_moments() { return v_; }
    void set_steps(long long s) { step_ = s; }

private:
    OptimizerConfig cfg_;
    long long step_ = 0;
    std::vector<std::vector<Eigen::VectorXd>> m_;
    std::vector<std::vector<Eigen::VectorXd>> v_;
};

struct TrainState {
    Model model;
    Optimizer optimizer;
    int epoch = 0;
    std::vector<EpochRecord> history;
    Rng rng;
    std::size_t clamped_projections = 0;
};

// One mini-batch: a feature matrix per view; `present` is empty or holds one
// row-presence array per view.
struct MultiViewBatch {
    std::vector<Matrix> views;
    std::vector<Presence> present;
};

TrainState init_state(const data::MultiViewDataset& data, const TrainConfig& cfg);

// Forward + backward only: zeroes and then fills every parameter gradient of
// `model` for the weighted loss on `batch`. `clamped` (optional) accumulates
// geodesic-projection clamps.
LossComponents accumulate_gradients(Model& model, const MultiViewBatch& batch, const TrainConfig& cfg,
                                    const geometry::DirectionSet& dirs, std::size_t* clamped = nullptr);

// Forward every view, assemble the weighted loss, backpropagate and apply one
// optimizer update. Throws NumericalError naming the first non-finite component.
LossComponents train_step(TrainState& state, const MultiViewBatch& batch, const TrainConfig& cfg,
                          const geometry::DirectionSet& dirs);

// Direction seed used for a given epoch.
std::uint64_t direction_seed(const TrainConfig& cfg, int epoch);

struct Prediction {
    std::vector<Matrix> q;            // target distribution per view (absent rows zero)
    std::vector<Points> embeddings;   // per view
    std::vector<int> labels;
};

Prediction predict(const Model& model, const data::MultiViewDataset& data);

struct FitResult {
    TrainState state;
    Prediction prediction;
    std::optional<metrics::ClusteringMetrics> metrics;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Runs cfg.epochs epochs of shuffled, fixed-size mini-batches (the last
// incomplete batch is dropped), then votes labels over the full dataset.
FitResult fit(const data::MultiViewDataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Checkpoint mapping. Tensor names: "view{m}.dense{i}.weight", ...,
// "view{m}.mlr.z", "meta.curvature", "meta.lorentz_relu"; optimizer moments
// under "opt.*" when a state is given.
std::vector<checkpoint::Tensor> model_to_tensors(Model& model, Optimizer* optimizer = nullptr);
Model model_from_tensors(const std::vector<checkpoint::Tensor>& tensors);

void save_model(const std::filesystem::path& path, Model& model, Optimizer* optimizer = nullptr);
Model load_model(const std::filesystem::path& path);

}  // namespace wahmvc::training
