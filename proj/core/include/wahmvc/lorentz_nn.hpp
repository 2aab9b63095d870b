#pragma once

// Per-view encoder: Euclidean dense stack -> exp-map lift at the origin ->
// LorentzFC layers -> Lorentz multinomial logistic regression head.
// Forward passes cache activations; backward() accumulates parameter
// gradients analytically.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wahmvc/geometry.hpp"
#include "wahmvc/random.hpp"

namespace wahmvc::nn {

using geometry::Curvature;
using geometry::Points;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { identity, relu };

struct DenseLayer {
    Matrix weight;  // out x in
    Vector bias;    // out
    Activation activation = Activation::relu;
};

// Spatial part psi(W x + b) of the full (n+1)-coordinate input; the time
// coordinate is rebuilt as sqrt(||s||^2 - 1/K), so outputs are on-manifold
// by construction.
struct LorentzFcLayer {
    Matrix weight;  // m x (n+1)
    Vector bias;    // m
    Activation activation = Activation::identity;
    Curvature curvature;
};

// One (a_c, z_c) pair per class; z has one row per class.
struct LorentzMlrHead {
    Vector a;  // C
    Matrix z;  // C x n
    Curvature curvature;
};

Matrix dense_forward(const DenseLayer& layer, const Matrix& x);
// Rows of x become tangent vectors (0, x_i) at the origin, then exp_origin.
Points lift_to_lorentz(const Matrix& x, Curvature k);
Points lorentz_fc_forward(const LorentzFcLayer& layer, const Points& x);
// B x C logits. Throws DomainError if some ||z_c|| == 0.
Matrix lorentz_mlr_logits(const LorentzMlrHead& head, const Points& x);
// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

struct EncoderArchitecture {
    Eigen::Index input_dim = 0;
    std::vector<Eigen::Index> hidden{256, 512};
    Eigen::Index euclidean_dim = 64;            // d: lift into L^d
    std::vector<Eigen::Index> lorentz_dims{32};  // spatial output dim per LorentzFC layer
    Eigen::Index clusters = 2;
    Activation lorentz_activation = Activation::identity;
    Curvature curvature;
};

struct EncoderOutput {
    Points embeddings;  // B x (r+1)
    Matrix logits;      // B x C
};

// Mutable view of one parameter tensor and its gradient accumulator.
struct ParamRef {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;  // 1 for vectors
    int rank = 2;
    double* value = nullptr;  // column-major storage
    double* grad = nullptr;
    Eigen::Index size() const noexcept { return rows * cols; }
};

class ViewEncoder {
public:
    ViewEncoder() = default;
    // Scaled-uniform fan-in init for dense/LorentzFC, z_c ~ N(0, 0.1^2), a_c = 0.
    ViewEncoder(const EncoderArchitecture& arch, Rng& rng);
    ViewEncoder(std::vector<DenseLayer> dense, std::vector<LorentzFcLayer> lorentz, LorentzMlrHead head);

    // Forward pass; caches activations for backward().
    EncoderOutput forward(const Matrix& x);
    // Forward pass without touching the cache.
    EncoderOutput infer(const Matrix& x) const;

    // Accumulate parameter gradients given d loss / d embeddings and
    // d loss / d logits for the cached batch. Throws StateError without a
    // preceding forward().
    void backward(const Points& grad_embeddings, const Matrix& grad_logits);
    void zero_grad();
    void clear_cache() { cache_.reset(); }

    std::vector<ParamRef> parameters();

    const std::vector<DenseLayer>& dense_layers() const { return dense_; }
    const std::vector<LorentzFcLayer>& lorentz_layers() const { return lorentz_; }
    const LorentzMlrHead& head() const { return head_; }
    std::vector<DenseLayer>& dense_layers() { return dense_; }
    std::vector<LorentzFcLayer>& lorentz_layers() { return lorentz_; }
    LorentzMlrHead& head() { return head_; }
    Curvature curvature() const { return head_.curvature; }
    Eigen::Index input_dim() const;

private:
    struct Cache {
        std::vector<Matrix> dense_in;   // input to each dense layer
        std::vector<Matrix> dense_pre;  // pre-activation of each dense layer
        Matrix lift_in;                 // Euclidean features fed to the lift
        std::vector<Points> fc_in;      // input to each LorentzFC layer
        std::vector<Matrix> fc_pre;
        std::vector<Points> fc_out;
        Points embeddings;
    };

    EncoderOutput run(const Matrix& x, Cache* cache) const;
    void validate() const;
    void allocate_grads();

    std::vector<DenseLayer> dense_;
    std::vector<LorentzFcLayer> lorentz_;
    LorentzMlrHead head_;

    std::vector<DenseLayer> dense_grad_;
    std::vector<LorentzFcLayer> lorentz_grad_;
    LorentzMlrHead head_grad_;

    std::optional<Cache> cache_;
};

// Backward of the lift: d loss / d x given d loss / d lifted points.
Matrix lift_backward(const Matrix& x, const Points& grad_lifted, Curvature k);

}  // namespace wahmvc::nn
