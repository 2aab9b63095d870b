#include "wahmvc/lorentz_nn.hpp"

#include <cmath>
#include <string>

#include "wahmvc/error.hpp"

namespace wahmvc::nn {

namespace {

void apply_activation(Matrix& m, Activation act) {
    if (act == Activation::relu) {
        m = m.cwiseMax(0.0);
    }
}

// Zero the gradient where relu was inactive (subgradient 0 at the kink).
void activation_backward(Matrix& grad, const Matrix& pre, Activation act) {
    if (act == Activation::relu) {
        grad = (pre.array() > 0.0).select(grad, 0.0);
    }
}

double sinhc(double a) {
    if (std::abs(a) < 1e-5) return 1.0 + a * a / 6.0;
    return std::sinh(a) / a;
}

// (a cosh a - sinh a) / a^3 = sinhc'(a) / a
double sinhc_slope(double a) {
    if (std::abs(a) < 1e-3) return 1.0 / 3.0 + a * a / 30.0;
    return (a * std::cosh(a) - std::sinh(a)) / (a * a * a);
}

void init_uniform(Matrix& m, double bound, Rng& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
}

void init_uniform(Vector& v, double bound, Rng& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
}

}  // namespace

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
    if (x.cols() != layer.weight.cols() || layer.bias.size() != layer.weight.rows()) {
        throw DimensionError("dense_forward: input has " + std::to_string(x.cols()) + " columns, layer expects " +
                             std::to_string(layer.weight.cols()));
    }
    Matrix out = x * layer.weight.transpose();
    out.rowwise() += layer.bias.transpose();
    apply_activation(out, layer.activation);
    return out;
}

Points lift_to_lorentz(const Matrix& x, Curvature k) {
    const double c = k.sqrt_abs();
    Points out(x.rows(), x.cols() + 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double a = c * x.row(i).norm();
        out(i, 0) = std::cosh(a) / c;
        out.row(i).tail(x.cols()) = sinhc(a) * x.row(i);
    }
    return out;
}

Matrix lift_backward(const Matrix& x, const Points& grad_lifted, Curvature k) {
    const double c = k.sqrt_abs();
    const Eigen::Index d = x.cols();
    Matrix grad(x.rows(), d);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto xi = x.row(i);
        const auto gs = grad_lifted.row(i).tail(d);
        const double a = c * xi.norm();
        const double f = sinhc(a);
        const double g = sinhc_slope(a);
        // d y0/dx = c f x ; d ys/dx = f I + c^2 g x x^T
        grad.row(i) = (grad_lifted(i, 0) * c * f + c * c * g * xi.dot(gs)) * xi + f * gs;
    }
    return grad;
}

Points lorentz_fc_forward(const LorentzFcLayer& layer, const Points& x) {
    if (x.cols() != layer.weight.cols() || layer.bias.size() != layer.weight.rows()) {
        throw DimensionError("lorentz_fc_forward: input has " + std::to_string(x.cols()) +
                             " coordinates, layer expects " + std::to_string(layer.weight.cols()));
    }
    Matrix s = x * layer.weight.transpose();
    s.rowwise() += layer.bias.transpose();
    apply_activation(s, layer.activation);
    Points out(x.rows(), s.cols() + 1);
    out.rightCols(s.cols()) = s;
    out.col(0) = (s.rowwise().squaredNorm().array() - layer.curvature.inverse()).sqrt().matrix();
    return out;
}

Matrix lorentz_mlr_logits(const LorentzMlrHead& head, const Points& x) {
    const Eigen::Index n = head.z.cols();
    if (x.cols() != n + 1 || head.a.size() != head.z.rows()) {
        throw DimensionError("lorentz_mlr_logits: embedding dimension does not match head");
    }
    const double c = head.curvature.sqrt_abs();
    const Vector norms = head.z.rowwise().norm();
    if ((norms.array() <= 0.0).any()) {
        throw DomainError("lorentz_mlr_logits: degenerate class with ||z_c|| = 0");
    }
    const Matrix inner = x.rightCols(n) * head.z.transpose();  // <z_c, x_s>
    Matrix logits(x.rows(), head.z.rows());
    for (Eigen::Index cl = 0; cl < head.z.rows(); ++cl) {
        const double ca = std::cosh(c * head.a(cl));
        const double sa = std::sinh(c * head.a(cl));
        const double beta = norms(cl);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double alpha = ca * inner(i, cl) - sa * beta * x(i, 0);
            logits(i, cl) = beta / c * std::asinh(c * alpha / beta);
        }
    }
    return logits;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        out.row(i) = (logits.row(i).array() - mx).exp().matrix();
        out.row(i) /= out.row(i).sum();
    }
    return out;
}

ViewEncoder::ViewEncoder(const EncoderArchitecture& arch, Rng& rng) {
    if (arch.input_dim < 1 || arch.euclidean_dim < 1 || arch.lorentz_dims.empty() || arch.clusters < 2) {
        throw ConfigError("encoder architecture: need input_dim, euclidean_dim >= 1, one LorentzFC layer, C >= 2");
    }
    Eigen::Index in = arch.input_dim;
    std::vector<Eigen::Index> widths = arch.hidden;
    widths.push_back(arch.euclidean_dim);
    for (std::size_t i = 0; i < widths.size(); ++i) {
        DenseLayer layer;
        layer.weight.resize(widths[i], in);
        layer.bias.resize(widths[i]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        init_uniform(layer.weight, bound, rng);
        init_uniform(layer.bias, bound, rng);
        layer.activation = i + 1 < widths.size() ? Activation::relu : Activation::identity;
        dense_.push_back(std::move(layer));
        in = widths[i];
    }
    in = arch.euclidean_dim + 1;
    for (Eigen::Index out : arch.lorentz_dims) {
        LorentzFcLayer layer;
        layer.weight.resize(out, in);
        layer.bias.resize(out);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        init_uniform(layer.weight, bound, rng);
        init_uniform(layer.bias, bound, rng);
        layer.activation = arch.lorentz_activation;
        layer.curvature = arch.curvature;
        lorentz_.push_back(std::move(layer));
        in = out + 1;
    }
    head_.curvature = arch.curvature;
    head_.a = Vector::Zero(arch.clusters);
    head_.z.resize(arch.clusters, in - 1);
    std::normal_distribution<double> normal(0.0, 0.1);
    for (Eigen::Index j = 0; j < head_.z.cols(); ++j)
        for (Eigen::Index i = 0; i < head_.z.rows(); ++i) head_.z(i, j) = normal(rng);
    validate();
    allocate_grads();
}

ViewEncoder::ViewEncoder(std::vector<DenseLayer> dense, std::vector<LorentzFcLayer> lorentz, LorentzMlrHead head)
    : dense_(std::move(dense)), lorentz_(std::move(lorentz)), head_(std::move(head)) {
    validate();
    allocate_grads();
}

void ViewEncoder::validate() const {
    if (dense_.empty() || lorentz_.empty()) {
        throw ConfigError("encoder needs at least one dense and one LorentzFC layer");
    }
    for (std::size_t i = 0; i < dense_.size(); ++i) {
        if (dense_[i].bias.size() != dense_[i].weight.rows()) {
            throw DimensionError("dense layer " + std::to_string(i) + ": bias/weight mismatch");
        }
        if (i > 0 && dense_[i].weight.cols() != dense_[i - 1].weight.rows()) {
            throw DimensionError("dense layer " + std::to_string(i) + ": input width mismatch");
        }
    }
    Eigen::Index in = dense_.back().weight.rows() + 1;
    for (std::size_t i = 0; i < lorentz_.size(); ++i) {
        if (lorentz_[i].weight.cols() != in || lorentz_[i].bias.size() != lorentz_[i].weight.rows()) {
            throw DimensionError("LorentzFC layer " + std::to_string(i) + ": shape mismatch");
        }
        in = lorentz_[i].weight.rows() + 1;
    }
    if (head_.z.cols() != in - 1 || head_.a.size() != head_.z.rows() || head_.z.rows() < 2) {
        throw DimensionError("MLR head: shape mismatch with last LorentzFC layer");
    }
}

void ViewEncoder::allocate_grads() {
    dense_grad_ = dense_;
    lorentz_grad_ = lorentz_;
    head_grad_ = head_;
    zero_grad();
}

Eigen::Index ViewEncoder::input_dim() const { return dense_.empty() ? 0 : dense_.front().weight.cols(); }

void ViewEncoder::zero_grad() {
    for (auto& l : dense_grad_) {
        l.weight.setZero();
        l.bias.setZero();
    }
    for (auto& l : lorentz_grad_) {
        l.weight.setZero();
        l.bias.setZero();
    }
    head_grad_.a.setZero();
    head_grad_.z.setZero();
}

EncoderOutput ViewEncoder::run(const Matrix& x, Cache* cache) const {
    Matrix h = x;
    for (const auto& layer : dense_) {
        if (h.cols() != layer.weight.cols()) {
            throw DimensionError("encoder: input has " + std::to_string(h.cols()) + " features, expected " +
                                 std::to_string(layer.weight.cols()));
        }
        Matrix pre = h * layer.weight.transpose();
        pre.rowwise() += layer.bias.transpose();
        if (cache) {
            cache->dense_in.push_back(h);
            cache->dense_pre.push_back(pre);
        }
        apply_activation(pre, layer.activation);
        h = std::move(pre);
    }
    if (cache) cache->lift_in = h;
    Points z = lift_to_lorentz(h, curvature());
    for (const auto& layer : lorentz_) {
        Matrix pre = z * layer.weight.transpose();
        pre.rowwise() += layer.bias.transpose();
        if (cache) {
            cache->fc_in.push_back(z);
            cache->fc_pre.push_back(pre);
        }
        apply_activation(pre, layer.activation);
        Points out(pre.rows(), pre.cols() + 1);
        out.rightCols(pre.cols()) = pre;
        out.col(0) = (pre.rowwise().squaredNorm().array() - layer.curvature.inverse()).sqrt().matrix();
        if (cache) cache->fc_out.push_back(out);
        z = std::move(out);
    }
    EncoderOutput result;
    result.logits = lorentz_mlr_logits(head_, z);
    if (cache) cache->embeddings = z;
    result.embeddings = std::move(z);
    return result;
}

EncoderOutput ViewEncoder::forward(const Matrix& x) {
    Cache cache;
    EncoderOutput out = run(x, &cache);
    cache_ = std::move(cache);
    return out;
}

EncoderOutput ViewEncoder::infer(const Matrix& x) const { return run(x, nullptr); }

void ViewEncoder::backward(const Points& grad_embeddings, const Matrix& grad_logits) {
    if (!cache_) {
        throw StateError("ViewEncoder::backward called without a cached forward pass");
    }
    const Cache& c = *cache_;
    const Points& z = c.embeddings;
    const Eigen::Index batch = z.rows();
    if (grad_embeddings.rows() != batch || grad_embeddings.cols() != z.cols() || grad_logits.rows() != batch ||
        grad_logits.cols() != head_.z.rows()) {
        throw DimensionError("ViewEncoder::backward: upstream gradient shape does not match cached batch");
    }

    // MLR head.
    const double ck = curvature().sqrt_abs();
    const Eigen::Index n = head_.z.cols();
    const Vector norms = head_.z.rowwise().norm();
    const Matrix inner = z.rightCols(n) * head_.z.transpose();
    Matrix g_alpha(batch, head_.z.rows());
    Vector g_beta = Vector::Zero(head_.z.rows());
    Vector cosh_a(head_.z.rows()), sinh_a(head_.z.rows());
    for (Eigen::Index cl = 0; cl < head_.z.rows(); ++cl) {
        cosh_a(cl) = std::cosh(ck * head_.a(cl));
        sinh_a(cl) = std::sinh(ck * head_.a(cl));
        const double beta = norms(cl);
        for (Eigen::Index i = 0; i < batch; ++i) {
            const double alpha = cosh_a(cl) * inner(i, cl) - sinh_a(cl) * beta * z(i, 0);
            const double u = ck * alpha / beta;
            const double r = 1.0 / std::sqrt(1.0 + u * u);
            g_alpha(i, cl) = grad_logits(i, cl) * r;
            g_beta(cl) += grad_logits(i, cl) * (std::asinh(u) / ck - alpha / beta * r);
        }
    }
    Points gz = grad_embeddings;
    gz.rightCols(n) += g_alpha * cosh_a.asDiagonal() * head_.z;
    gz.col(0) -= g_alpha * (sinh_a.array() * norms.array()).matrix();
    const Vector g_alpha_xt = g_alpha.transpose() * z.col(0);  // sum_i g_alpha_ic x_t,i
    const Matrix g_alpha_xs = g_alpha.transpose() * z.rightCols(n);
    for (Eigen::Index cl = 0; cl < head_.z.rows(); ++cl) {
        const double beta = norms(cl);
        head_grad_.a(cl) += ck * (sinh_a(cl) * g_alpha.col(cl).dot(inner.col(cl)) - cosh_a(cl) * beta * g_alpha_xt(cl));
        head_grad_.z.row(cl) += cosh_a(cl) * g_alpha_xs.row(cl) +
                                (g_beta(cl) - sinh_a(cl) * g_alpha_xt(cl)) / beta * head_.z.row(cl);
    }

    // LorentzFC layers, last to first.
    for (std::size_t li = lorentz_.size(); li-- > 0;) {
        const auto& layer = lorentz_[li];
        const Points& out = c.fc_out[li];
        const Eigen::Index m = layer.weight.rows();
        Matrix g_pre = gz.rightCols(m);
        g_pre += (gz.col(0).array() / out.col(0).array()).matrix().asDiagonal() * out.rightCols(m);
        activation_backward(g_pre, c.fc_pre[li], layer.activation);
        lorentz_grad_[li].weight += g_pre.transpose() * c.fc_in[li];
        lorentz_grad_[li].bias += g_pre.colwise().sum().transpose();
        gz = g_pre * layer.weight;
    }

    Matrix gh = lift_backward(c.lift_in, gz, curvature());

    for (std::size_t li = dense_.size(); li-- > 0;) {
        const auto& layer = dense_[li];
        activation_backward(gh, c.dense_pre[li], layer.activation);
        dense_grad_[li].weight += gh.transpose() * c.dense_in[li];
        dense_grad_[li].bias += gh.colwise().sum().transpose();
        if (li > 0) gh = gh * layer.weight;
    }
}

std::vector<ParamRef> ViewEncoder::parameters() {
    std::vector<ParamRef> out;
    auto add_matrix = [&](std::string name, Matrix& v, Matrix& g) {
        out.push_back({std::move(name), v.rows(), v.cols(), 2, v.data(), g.data()});
    };
    auto add_vector = [&](std::string name, Vector& v, Vector& g) {
        out.push_back({std::move(name), v.size(), 1, 1, v.data(), g.data()});
    };
    for (std::size_t i = 0; i < dense_.size(); ++i) {
        add_matrix("dense" + std::to_string(i) + ".weight", dense_[i].weight, dense_grad_[i].weight);
        add_vector("dense" + std::to_string(i) + ".bias", dense_[i].bias, dense_grad_[i].bias);
    }
    for (std::size_t i = 0; i < lorentz_.size(); ++i) {
        add_matrix("lorentz" + std::to_string(i) + ".weight", lorentz_[i].weight, lorentz_grad_[i].weight);
        add_vector("lorentz" + std::to_string(i) + ".bias", lorentz_[i].bias, lorentz_grad_[i].bias);
    }
    add_vector("mlr.a", head_.a, head_grad_.a);
    add_matrix("mlr.z", head_.z, head_grad_.z);
    return out;
}

}  // namespace wahmvc::nn
