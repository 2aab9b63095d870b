#pragma once

// Clustering objectives on soft assignments: target redistribution,
// cluster-level cross-view contrastive loss, balance regularizer, the
// weighted total, label voting, and the instance-level Lorentz contrastive
// loss used as an alignment baseline.
//
// Functions taking an optional gradient out-parameter fill it with the
// gradient of the returned scalar w.r.t. their matrix inputs.

#include <span>
#include <vector>

#include <Eigen/Core>

#include "wahmvc/geometry.hpp"

namespace wahmvc::losses {

using Matrix = Eigen::MatrixXd;
using geometry::Curvature;
using geometry::Points;
using Presence = Eigen::ArrayX<bool>;

inline constexpr double kEpsilon = 1e-12;

struct LossWeights {
    double alpha = 0.01;  // alignment
    double beta = 1.0;    // semantic contrast
    double gamma = 1.0;   // balance
    double tau = 0.4;

    // Throws ConfigError on negative weights or tau <= 0.
    void validate() const;
};

// q_ij = (a_ij^2 / f_j) / sum_k (a_ik^2 / f_k), f_j = sum_i a_ij.
// Columns with f_j < kEpsilon contribute 0.
Matrix target_distribution(const Matrix& a);
// d loss / d A given d loss / d Q.
Matrix target_distribution_backward(const Matrix& a, const Matrix& grad_q);

// Row-wise softmax backward: d loss / d logits given probabilities and d loss / d probs.
Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs);

// S = Qm^T Qn (K x K); S[k][j] = <q_k^(m), q_j^(n)>.
Matrix cluster_similarity(const Matrix& qm, const Matrix& qn);

// -(1/K) sum_k log softmax_j(S[k][.] / tau)[k], log-sum-exp stabilized.
double contrastive_cluster_loss(const Matrix& s, double tau, Matrix* grad_s = nullptr);

// Sum of contrastive_cluster_loss over ordered view pairs (m != n).
// Pair terms are summed in sorted order, so the result is bit-identical
// under any permutation of the views.
double semantic_loss(std::span<const Matrix> q, double tau, std::vector<Matrix>* grad = nullptr);

// sum_m sum_j p_j log p_j with p_j the mean of column j of Q^(m) over the
// view's present rows (all rows when `present` is empty).
double balance_regularizer(std::span<const Matrix> q, std::vector<Matrix>* grad = nullptr,
                           std::span<const Presence> present = {});

double total_loss(double hhsw, double sem, double reg, const LossWeights& w);

// argmax_j of the mean of q_ij over the views present for sample i; ties go
// to the lowest cluster index.
std::vector<int> infer_labels(std::span<const Matrix> q, std::span<const Presence> present = {});

// Instance-level Lorentz contrastive loss between two views:
// -(1/B) sum_i log( exp(-d_ii/tau) / sum_{j != i} exp(-d_ij/tau) ).
double hcl_loss(const Points& zm, const Points& zn, double tau, Curvature k = Curvature{},
                Points* grad_m = nullptr, Points* grad_n = nullptr);

}  // namespace wahmvc::losses
