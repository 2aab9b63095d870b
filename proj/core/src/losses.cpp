#include "wahmvc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wahmvc/error.hpp"

namespace wahmvc::losses {

namespace {

struct Redistribution {
    Eigen::VectorXd col_sum;  // f_j
    Matrix r;                 // a_ij^2 / f_j
    Eigen::VectorXd row_sum;  // R_i
};

Redistribution redistribute(const Matrix& a) {
    Redistribution out;
    out.col_sum = a.colwise().sum().transpose();
    out.r = Matrix::Zero(a.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        if (out.col_sum(j) < kEpsilon) continue;
        out.r.col(j) = a.col(j).array().square().matrix() / out.col_sum(j);
    }
    out.row_sum = out.r.rowwise().sum();
    return out;
}

void check_same_shape(std::span<const Matrix> q, const char* what) {
    if (q.empty()) {
        throw ConfigError(std::string(what) + ": need at least one view");
    }
    for (const auto& m : q) {
        if (m.rows() != q[0].rows() || m.cols() != q[0].cols()) {
            throw DimensionError(std::string(what) + ": all views must share N x K");
        }
    }
}

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    const double mx = x.maxCoeff();
    return mx + std::log((x.array() - mx).exp().sum());
}

}  // namespace

void LossWeights::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0)) {
        throw ConfigError("loss weights must be nonnegative");
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw ConfigError("temperature tau must be positive");
    }
}

Matrix target_distribution(const Matrix& a) {
    const Redistribution d = redistribute(a);
    Matrix q = d.r;
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        if (d.row_sum(i) > 0.0) q.row(i) /= d.row_sum(i);
    }
    return q;
}

Matrix target_distribution_backward(const Matrix& a, const Matrix& grad_q) {
    if (grad_q.rows() != a.rows() || grad_q.cols() != a.cols()) {
        throw DimensionError("target_distribution_backward: shape mismatch");
    }
    const Redistribution d = redistribute(a);
    Matrix q = d.r;
    Matrix h = Matrix::Zero(a.rows(), a.cols());  // d loss / d r
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        if (!(d.row_sum(i) > 0.0)) continue;
        q.row(i) /= d.row_sum(i);
        const double centre = grad_q.row(i).dot(q.row(i));
        h.row(i) = (grad_q.row(i).array() - centre).matrix() / d.row_sum(i);
    }
    Matrix grad = Matrix::Zero(a.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double f = d.col_sum(j);
        if (f < kEpsilon) continue;
        const double shared = h.col(j).dot(d.r.col(j)) / f;
        grad.col(j) = (2.0 / f) * a.col(j).cwiseProduct(h.col(j));
        grad.col(j).array() -= shared;
    }
    return grad;
}

Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs) {
    Matrix out(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const double centre = probs.row(i).dot(grad_probs.row(i));
        out.row(i) = probs.row(i).cwiseProduct((grad_probs.row(i).array() - centre).matrix());
    }
    return out;
}

Matrix cluster_similarity(const Matrix& qm, const Matrix& qn) {
    if (qm.rows() != qn.rows() || qm.cols() != qn.cols()) {
        throw DimensionError("cluster_similarity: Q matrices must share N x K");
    }
    return qm.transpose() * qn;
}

double contrastive_cluster_loss(const Matrix& s, double tau, Matrix* grad_s) {
    if (s.rows() != s.cols() || s.rows() < 2) {
        throw DimensionError("contrastive_cluster_loss: S must be square with K >= 2");
    }
    if (!(tau > 0.0)) {
        throw ConfigError("contrastive_cluster_loss: tau must be positive");
    }
    const Eigen::Index k = s.rows();
    const Matrix scaled = s / tau;
    double total = 0.0;
    if (grad_s) grad_s->resize(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
        const double lse = log_sum_exp(scaled.row(r));
        total += lse - scaled(r, r);
        if (grad_s) {
            grad_s->row(r) = (scaled.row(r).array() - lse).exp().matrix();
            (*grad_s)(r, r) -= 1.0;
        }
    }
    const double inv_k = 1.0 / static_cast<double>(k);
    if (grad_s) *grad_s *= inv_k / tau;
    return total * inv_k;
}

double semantic_loss(std::span<const Matrix> q, double tau, std::vector<Matrix>* grad) {
    check_same_shape(q, "semantic_loss");
    if (q.size() < 2) {
        throw ConfigError("semantic_loss: need at least two views");
    }
    if (grad) {
        grad->assign(q.size(), Matrix::Zero(q[0].rows(), q[0].cols()));
    }
    std::vector<double> terms;
    terms.reserve(q.size() * (q.size() - 1));
    Matrix gs;
    for (std::size_t m = 0; m < q.size(); ++m) {
        for (std::size_t n = 0; n < q.size(); ++n) {
            if (m == n) continue;
            const Matrix s = cluster_similarity(q[m], q[n]);
            terms.push_back(contrastive_cluster_loss(s, tau, grad ? &gs : nullptr));
            if (grad) {
                (*grad)[m] += q[n] * gs.transpose();
                (*grad)[n] += q[m] * gs;
            }
        }
    }
    std::sort(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += t;
    return total;
}

double balance_regularizer(std::span<const Matrix> q, std::vector<Matrix>* grad, std::span<const Presence> present) {
    check_same_shape(q, "balance_regularizer");
    if (!present.empty() && present.size() != q.size()) {
        throw DimensionError("balance_regularizer: one presence mask per view required");
    }
    if (grad) {
        grad->assign(q.size(), Matrix::Zero(q[0].rows(), q[0].cols()));
    }
    double total = 0.0;
    for (std::size_t m = 0; m < q.size(); ++m) {
        const double rows = present.empty() ? static_cast<double>(q[m].rows())
                                            : static_cast<double>(present[m].count());
        if (rows <= 0.0) continue;
        Eigen::RowVectorXd p = Eigen::RowVectorXd::Zero(q[m].cols());
        for (Eigen::Index i = 0; i < q[m].rows(); ++i) {
            if (present.empty() || present[m](i)) p += q[m].row(i);
        }
        p /= rows;
        for (Eigen::Index j = 0; j < p.size(); ++j) {
            if (p(j) > 0.0) total += p(j) * std::log(p(j));
            if (grad) {
                const double g = (std::log(std::max(p(j), kEpsilon)) + 1.0) / rows;
                for (Eigen::Index i = 0; i < q[m].rows(); ++i) {
                    if (present.empty() || present[m](i)) (*grad)[m](i, j) = g;
                }
            }
        }
    }
    return total;
}

double total_loss(double hhsw, double sem, double reg, const LossWeights& w) {
    return w.alpha * hhsw + w.beta * sem + w.gamma * reg;
}

std::vector<int> infer_labels(std::span<const Matrix> q, std::span<const Presence> present) {
    check_same_shape(q, "infer_labels");
    if (!present.empty() && present.size() != q.size()) {
        throw DimensionError("infer_labels: one presence mask per view required");
    }
    const Eigen::Index n = q[0].rows();
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    Eigen::RowVectorXd mean(q[0].cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        mean.setZero();
        int votes = 0;
        for (std::size_t m = 0; m < q.size(); ++m) {
            if (!present.empty() && !present[m](i)) continue;
            mean += q[m].row(i);
            ++votes;
        }
        if (votes == 0) {
            throw DimensionError("infer_labels: sample " + std::to_string(i) + " has no present view");
        }
        mean /= static_cast<double>(votes);
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < mean.size(); ++j) {
            if (mean(j) > mean(best)) best = j;
        }
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

double hcl_loss(const Points& zm, const Points& zn, double tau, Curvature k, Points* grad_m, Points* grad_n) {
    if (zm.rows() != zn.rows() || zm.cols() != zn.cols()) {
        throw DimensionError("hcl_loss: batches must have equal shape");
    }
    if (zm.rows() < 2) {
        throw ConfigError("hcl_loss: need at least two samples");
    }
    if (!(tau > 0.0)) {
        throw ConfigError("hcl_loss: tau must be positive");
    }
    for (Eigen::Index i = 0; i < zm.rows(); ++i) {
        geometry::require_on_manifold(zm.row(i).transpose(), k, "hcl_loss");
        geometry::require_on_manifold(zn.row(i).transpose(), k, "hcl_loss");
    }
    const Eigen::Index b = zm.rows();
    const double c = k.sqrt_abs();

    // K <z_i^m, z_j^n>_L for all pairs.
    Points zn_metric = zn;
    zn_metric.col(0) *= -1.0;
    const Matrix beta = k.value() * (zm * zn_metric.transpose());
    // Near pairs (beta < 2) use the chord form: arccosh loses half the
    // digits close to 1, which matters for the positive pairs.
    Matrix dist(b, b), chord = Matrix::Zero(b, b);
    for (Eigen::Index j = 0; j < b; ++j) {
        for (Eigen::Index i = 0; i < b; ++i) {
            if (beta(i, j) < 2.0) {
                const Eigen::VectorXd delta = (zm.row(i) - zn.row(j)).transpose();
                chord(i, j) = std::sqrt(std::max(0.0, geometry::lorentz_norm_sq(delta)));
                dist(i, j) = 2.0 / c * std::asinh(0.5 * c * chord(i, j));
            } else {
                dist(i, j) = std::acosh(beta(i, j)) / c;
            }
        }
    }

    const bool want_grad = grad_m || grad_n;
    Matrix g_dist;
    if (want_grad) g_dist = Matrix::Zero(b, b);
    double total = 0.0;
    Eigen::RowVectorXd neg(b - 1);
    const double scale = 1.0 / (static_cast<double>(b) * tau);
    for (Eigen::Index i = 0; i < b; ++i) {
        Eigen::Index t = 0;
        for (Eigen::Index j = 0; j < b; ++j) {
            if (j != i) neg(t++) = -dist(i, j) / tau;
        }
        const double lse = log_sum_exp(neg);
        total += dist(i, i) / tau + lse;
        if (want_grad) {
            g_dist(i, i) = scale;
            t = 0;
            for (Eigen::Index j = 0; j < b; ++j) {
                if (j != i) g_dist(i, j) = -scale * std::exp(neg(t++) - lse);
            }
        }
    }
    if (want_grad) {
        // d dist / d beta = 1 / (c sqrt(beta^2 - 1)); d beta / d z = K * metric(other)
        // Chord pairs: d dist / d s = 1 / sqrt(1 + (c s / 2)^2), d s / d z_m = metric(delta) / s.
        Matrix g_beta = Matrix::Zero(b, b);
        Points near_m = Points::Zero(b, zm.cols()), near_n = Points::Zero(b, zm.cols());
        for (Eigen::Index j = 0; j < b; ++j) {
            for (Eigen::Index i = 0; i < b; ++i) {
                if (beta(i, j) >= 2.0) {
                    const double bb = beta(i, j);
                    g_beta(i, j) = g_dist(i, j) / (c * std::sqrt(bb * bb - 1.0));
                } else if (chord(i, j) > 0.0) {
                    const double s = chord(i, j);
                    Eigen::RowVectorXd d = (zm.row(i) - zn.row(j)) * (g_dist(i, j) / (s * std::sqrt(1.0 + 0.25 * c * c * s * s)));
                    d(0) = -d(0);
                    near_m.row(i) += d;
                    near_n.row(j) -= d;
                }
            }
        }
        if (grad_m) {
            *grad_m = k.value() * (g_beta * zn_metric) + near_m;
        }
        if (grad_n) {
            Points zm_metric = zm;
            zm_metric.col(0) *= -1.0;
            *grad_n = k.value() * (g_beta.transpose() * zm_metric) + near_n;
        }
    }
    return total / static_cast<double>(b);
}

}  // namespace wahmvc::losses
