#include "wahmvc/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include <json.hpp>

#include "wahmvc/error.hpp"

namespace wahmvc::training {

namespace {

using nlohmann::json;

const char* projection_name(sliced_ot::ProjectionKind k) {
    return k == sliced_ot::ProjectionKind::horospherical ? "hhsw" : "ghsw";
}

sliced_ot::ProjectionKind parse_projection(const std::string& s) {
    if (s == "hhsw" || s == "horospherical") return sliced_ot::ProjectionKind::horospherical;
    if (s == "ghsw" || s == "geodesic") return sliced_ot::ProjectionKind::geodesic;
    throw ConfigError("unknown projection '" + s + "' (expected hhsw or ghsw)");
}

nn::Activation parse_activation(const std::string& s) {
    if (s == "identity") return nn::Activation::identity;
    if (s == "relu") return nn::Activation::relu;
    throw ConfigError("unknown activation '" + s + "'");
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

Matrix gather_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

std::vector<Eigen::Index> present_rows(const Presence& p) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (p(i)) rows.push_back(i);
    return rows;
}

void require_finite(double value, const char* component) {
    if (!std::isfinite(value)) {
        throw NumericalError(std::string("non-finite loss component '") + component + "'");
    }
}

// Row-major flattening of a column-major parameter.
std::vector<double> to_row_major(const nn::ParamRef& p) {
    std::vector<double> out(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.rows; ++i)
        for (Eigen::Index j = 0; j < p.cols; ++j)
            out[static_cast<std::size_t>(i * p.cols + j)] = p.value[j * p.rows + i];
    return out;
}

checkpoint::Tensor scalar_tensor(std::string name, double v) {
    return checkpoint::Tensor{std::move(name), {}, {v}};
}

checkpoint::Tensor vector_tensor(std::string name, const Eigen::VectorXd& v, const nn::ParamRef& shape) {
    checkpoint::Tensor t{std::move(name), {}, {}};
    t.dims.push_back(static_cast<std::uint64_t>(shape.rows));
    if (shape.rank == 2) t.dims.push_back(static_cast<std::uint64_t>(shape.cols));
    t.values.resize(static_cast<std::size_t>(shape.size()));
    for (Eigen::Index i = 0; i < shape.rows; ++i)
        for (Eigen::Index j = 0; j < shape.cols; ++j)
            t.values[static_cast<std::size_t>(i * shape.cols + j)] = v(j * shape.rows + i);
    return t;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be >= 0");
    if (latent_dim < 1 || euclidean_dim < 1) throw ConfigError("latent_dim and euclidean_dim must be >= 1");
    if (clusters < 0 || clusters == 1) throw ConfigError("clusters must be >= 2 (or 0 to use the label count)");
    if (std::any_of(hidden.begin(), hidden.end(), [](Eigen::Index h) { return h < 1; })) {
        throw ConfigError("hidden widths must be positive");
    }
    if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) || !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0) ||
        !(optimizer.epsilon > 0.0)) {
        throw ConfigError("Adam needs 0 <= beta1, beta2 < 1 and epsilon > 0");
    }
    weights.validate();
    sw.validate();
    geometry::Curvature check(curvature);
    (void)check;
}

std::string config_to_json(const TrainConfig& cfg) {
    json j;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["learning_rate"] = cfg.learning_rate;
    j["optimizer"] = {{"kind", cfg.optimizer.kind == OptimizerKind::adam ? "adam" : "sgd"},
                      {"beta1", cfg.optimizer.beta1},
                      {"beta2", cfg.optimizer.beta2},
                      {"epsilon", cfg.optimizer.epsilon}};
    j["weights"] = {{"alpha", cfg.weights.alpha},
                    {"beta", cfg.weights.beta},
                    {"gamma", cfg.weights.gamma},
                    {"tau", cfg.weights.tau}};
    j["sw"] = {{"directions", cfg.sw.directions},
               {"p", cfg.sw.p},
               {"projection", projection_name(cfg.sw.projection)},
               {"seed", cfg.sw.seed}};
    j["latent_dim"] = cfg.latent_dim;
    j["curvature"] = cfg.curvature;
    j["seed"] = cfg.seed;
    j["clusters"] = cfg.clusters;
    j["hidden"] = cfg.hidden;
    j["euclidean_dim"] = cfg.euclidean_dim;
    j["lorentz_activation"] = cfg.lorentz_activation == nn::Activation::relu ? "relu" : "identity";
    return j.dump(2);
}

TrainConfig config_from_json(const std::string& text, TrainConfig cfg) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    try {
        read_field(j, "epochs", cfg.epochs);
        read_field(j, "batch_size", cfg.batch_size);
        read_field(j, "learning_rate", cfg.learning_rate);
        if (j.contains("optimizer")) {
            const auto& o = j["optimizer"];
            if (o.contains("kind")) {
                const auto kind = o["kind"].get<std::string>();
                if (kind == "adam") cfg.optimizer.kind = OptimizerKind::adam;
                else if (kind == "sgd") cfg.optimizer.kind = OptimizerKind::sgd;
                else throw ConfigError("unknown optimizer '" + kind + "'");
            }
            read_field(o, "beta1", cfg.optimizer.beta1);
            read_field(o, "beta2", cfg.optimizer.beta2);
            read_field(o, "epsilon", cfg.optimizer.epsilon);
        }
        if (j.contains("weights")) {
            const auto& w = j["weights"];
            read_field(w, "alpha", cfg.weights.alpha);
            read_field(w, "beta", cfg.weights.beta);
            read_field(w, "gamma", cfg.weights.gamma);
            read_field(w, "tau", cfg.weights.tau);
        }
        if (j.contains("sw")) {
            const auto& s = j["sw"];
            read_field(s, "directions", cfg.sw.directions);
            read_field(s, "p", cfg.sw.p);
            if (s.contains("projection")) cfg.sw.projection = parse_projection(s["projection"].get<std::string>());
            read_field(s, "seed", cfg.sw.seed);
        }
        read_field(j, "latent_dim", cfg.latent_dim);
        read_field(j, "curvature", cfg.curvature);
        read_field(j, "seed", cfg.seed);
        read_field(j, "clusters", cfg.clusters);
        read_field(j, "hidden", cfg.hidden);
        read_field(j, "euclidean_dim", cfg.euclidean_dim);
        if (j.contains("lorentz_activation")) {
            cfg.lorentz_activation = parse_activation(j["lorentz_activation"].get<std::string>());
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

int Model::clusters() const { return encoders.empty() ? 0 : static_cast<int>(encoders.front().head().a.size()); }

Model make_model(const std::vector<Eigen::Index>& input_dims, int clusters, const TrainConfig& cfg) {
    Model model;
    model.curvature = geometry::Curvature(cfg.curvature);
    model.lorentz_activation = cfg.lorentz_activation;
    for (std::size_t m = 0; m < input_dims.size(); ++m) {
        nn::EncoderArchitecture arch;
        arch.input_dim = input_dims[m];
        arch.hidden = cfg.hidden;
        arch.euclidean_dim = cfg.euclidean_dim;
        arch.lorentz_dims = {cfg.latent_dim};
        arch.clusters = clusters;
        arch.lorentz_activation = cfg.lorentz_activation;
        arch.curvature = model.curvature;
        Rng rng(derive_seed(cfg.seed, 0x1000 + m));
        model.encoders.emplace_back(arch, rng);
    }
    return model;
}

Optimizer::Optimizer(Model& model, const OptimizerConfig& cfg) : cfg_(cfg) {
    for (auto& enc : model.encoders) {
        std::vector<Eigen::VectorXd> m, v;
        for (const auto& p : enc.parameters()) {
            m.push_back(Eigen::VectorXd::Zero(p.size()));
            v.push_back(Eigen::VectorXd::Zero(p.size()));
        }
        m_.push_back(std::move(m));
        v_.push_back(std::move(v));
    }
}

void Optimizer::step(Model& model, double learning_rate) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t e = 0; e < model.encoders.size(); ++e) {
        auto params = model.encoders[e].parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            Eigen::Map<Eigen::VectorXd> w(params[i].value, params[i].size());
            Eigen::Map<const Eigen::VectorXd> g(params[i].grad, params[i].size());
            if (cfg_.kind == OptimizerKind::sgd) {
                w -= learning_rate * g;
                continue;
            }
            auto& m = m_[e][i];
            auto& v = v_[e][i];
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
            w.array() -= learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.epsilon);
        }
    }
}

TrainState init_state(const data::MultiViewDataset& data, const TrainConfig& cfg) {
    cfg.validate();
    data.validate();
    int clusters = cfg.clusters;
    if (clusters == 0) {
        if (!data.labels) {
            throw ConfigError("clusters not set and the dataset has no labels to infer it from");
        }
        clusters = static_cast<int>(std::set<int>(data.labels->begin(), data.labels->end()).size());
    }
    if (clusters < 2) throw ConfigError("need at least two clusters");
    if (clusters > data.samples()) throw ConfigError("more clusters than samples");
    if (data.view_count() < 2) throw ConfigError("training needs at least two views");

    std::vector<Eigen::Index> dims;
    for (const auto& v : data.views) dims.push_back(v.cols());
    TrainState state;
    state.model = make_model(dims, clusters, cfg);
    state.optimizer = Optimizer(state.model, cfg.optimizer);
    state.rng.seed(derive_seed(cfg.seed, 0x5u));
    return state;
}

std::uint64_t direction_seed(const TrainConfig& cfg, int epoch) {
    return derive_seed(cfg.seed ^ mix_seed(cfg.sw.seed), 0x10000 + static_cast<std::uint64_t>(epoch));
}

LossComponents accumulate_gradients(Model& model, const MultiViewBatch& batch, const TrainConfig& cfg,
                                    const geometry::DirectionSet& dirs, std::size_t* clamped) {
    const std::size_t views = model.view_count();
    if (batch.views.size() != views) {
        throw DimensionError("train_step: batch has " + std::to_string(batch.views.size()) + " views, model has " +
                             std::to_string(views));
    }
    if (!batch.present.empty() && batch.present.size() != views) {
        throw DimensionError("train_step: one presence array per view required");
    }
    const Eigen::Index b = batch.views.front().rows();
    if (b < 2) throw ConfigError("train_step: batch needs at least two samples");
    const bool masked = !batch.present.empty();

    std::vector<Points> emb(views);
    std::vector<Matrix> probs(views), q(views);
    std::vector<std::vector<Eigen::Index>> rows(views);
    for (std::size_t m = 0; m < views; ++m) {
        model.encoders[m].zero_grad();
        nn::EncoderOutput out = model.encoders[m].forward(batch.views[m]);
        if (!out.embeddings.allFinite()) {
            throw NumericalError("non-finite loss component 'hhsw': view " + std::to_string(m) +
                                 " produced non-finite embeddings");
        }
        for (Eigen::Index i = 0; i < std::min<Eigen::Index>(4, b); ++i) {
            if (!geometry::on_manifold(out.embeddings.row(i).transpose(), model.curvature, 1e-8)) {
                throw NumericalError("embedding of view " + std::to_string(m) + " left the Lorentz manifold");
            }
        }
        probs[m] = nn::softmax_rows(out.logits);
        emb[m] = std::move(out.embeddings);
        if (!masked) {
            q[m] = losses::target_distribution(probs[m]);
        } else {
            rows[m] = present_rows(batch.present[m]);
            q[m] = Matrix::Zero(b, probs[m].cols());
            if (!rows[m].empty()) {
                const Matrix sub = losses::target_distribution(gather_rows(probs[m], rows[m]));
                for (std::size_t i = 0; i < rows[m].size(); ++i) q[m].row(rows[m][i]) = sub.row(static_cast<Eigen::Index>(i));
            }
        }
    }

    const auto align = sliced_ot::hhsw_alignment_loss_grad(emb, dirs, cfg.sw, model.curvature, batch.present);
    if (clamped) *clamped += align.clamped;
    std::vector<Matrix> g_sem, g_reg;
    LossComponents loss;
    loss.hhsw = align.value;
    require_finite(loss.hhsw, "hhsw");
    loss.sem = losses::semantic_loss(q, cfg.weights.tau, &g_sem);
    require_finite(loss.sem, "sem");
    loss.reg = losses::balance_regularizer(q, &g_reg, batch.present);
    require_finite(loss.reg, "reg");
    loss.total = losses::total_loss(loss.hhsw, loss.sem, loss.reg, cfg.weights);
    require_finite(loss.total, "total");

    const auto& w = cfg.weights;
    for (std::size_t m = 0; m < views; ++m) {
        const Matrix g_q = w.beta * g_sem[m] + w.gamma * g_reg[m];
        Matrix g_a;
        if (!masked) {
            g_a = losses::target_distribution_backward(probs[m], g_q);
        } else {
            g_a = Matrix::Zero(b, probs[m].cols());
            if (!rows[m].empty()) {
                const Matrix sub = losses::target_distribution_backward(gather_rows(probs[m], rows[m]),
                                                                        gather_rows(g_q, rows[m]));
                for (std::size_t i = 0; i < rows[m].size(); ++i) g_a.row(rows[m][i]) = sub.row(static_cast<Eigen::Index>(i));
            }
        }
        const Matrix g_logits = losses::softmax_backward(probs[m], g_a);
        model.encoders[m].backward(w.alpha * align.grad[m], g_logits);
        model.encoders[m].clear_cache();
    }
    return loss;
}

LossComponents train_step(TrainState& state, const MultiViewBatch& batch, const TrainConfig& cfg,
                          const geometry::DirectionSet& dirs) {
    const LossComponents loss = accumulate_gradients(state.model, batch, cfg, dirs, &state.clamped_projections);
    state.optimizer.step(state.model, cfg.learning_rate);
    return loss;
}

Prediction predict(const Model& model, const data::MultiViewDataset& data) {
    data.validate();
    if (data.view_count() != model.view_count()) {
        throw DimensionError("model has " + std::to_string(model.view_count()) + " views, dataset has " +
                             std::to_string(data.view_count()));
    }
    Prediction out;
    std::vector<Presence> present;
    for (std::size_t m = 0; m < model.view_count(); ++m) {
        if (data.views[m].cols() != model.encoders[m].input_dim()) {
            throw DimensionError("view " + std::to_string(m) + " has " + std::to_string(data.views[m].cols()) +
                                 " features, model expects " + std::to_string(model.encoders[m].input_dim()));
        }
        const nn::EncoderOutput enc = model.encoders[m].infer(data.views[m]);
        const Matrix a = nn::softmax_rows(enc.logits);
        Matrix q = Matrix::Zero(a.rows(), a.cols());
        if (!data.mask) {
            q = losses::target_distribution(a);
        } else {
            present.push_back(data.presence(m));
            const auto rows = present_rows(present.back());
            if (!rows.empty()) {
                const Matrix sub = losses::target_distribution(gather_rows(a, rows));
                for (std::size_t i = 0; i < rows.size(); ++i) q.row(rows[i]) = sub.row(static_cast<Eigen::Index>(i));
            }
        }
        out.q.push_back(std::move(q));
        out.embeddings.push_back(enc.embeddings);
    }
    out.labels = losses::infer_labels(out.q, present);
    return out;
}

FitResult fit(const data::MultiViewDataset& input, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    data::MultiViewDataset data = input;
    TrainState state = init_state(data, cfg);
    if (data.mask) {
        for (std::size_t m = 0; m < data.view_count(); ++m)
            for (Eigen::Index i = 0; i < data.samples(); ++i)
                if (!data.present(i, m)) data.views[m].row(i).setZero();
    }

    const Eigen::Index n = data.samples();
    const Eigen::Index batch_size = std::min(cfg.batch_size, n);
    if (batch_size < 2) throw ConfigError("dataset too small for a batch of two samples");
    const Eigen::Index batches = n / batch_size;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    MultiViewBatch batch;
    batch.views.resize(data.view_count());
    if (data.mask) batch.present.resize(data.view_count());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto dirs = geometry::sample_directions(cfg.sw.directions, cfg.latent_dim, direction_seed(cfg, epoch));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::shuffle(order.begin(), order.end(), state.rng);
        LossComponents sum;
        for (Eigen::Index s = 0; s < batches; ++s) {
            const std::vector<Eigen::Index> idx(order.begin() + s * batch_size, order.begin() + (s + 1) * batch_size);
            for (std::size_t m = 0; m < data.view_count(); ++m) {
                batch.views[m] = gather_rows(data.views[m], idx);
                if (data.mask) {
                    batch.present[m].resize(batch_size);
                    for (Eigen::Index i = 0; i < batch_size; ++i)
                        batch.present[m](i) = data.present(idx[static_cast<std::size_t>(i)], m);
                }
            }
            const LossComponents l = train_step(state, batch, cfg, dirs);
            sum.total += l.total;
            sum.hhsw += l.hhsw;
            sum.sem += l.sem;
            sum.reg += l.reg;
        }
        EpochRecord rec;
        rec.epoch = epoch + 1;
        const double inv = 1.0 / static_cast<double>(batches);
        rec.loss = {sum.total * inv, sum.hhsw * inv, sum.sem * inv, sum.reg * inv};
        if (data.labels) {
            const Prediction p = predict(state.model, data);
            rec.metrics = metrics::evaluate(p.labels, *data.labels);
        }
        state.history.push_back(rec);
        state.epoch = epoch + 1;
        if (on_epoch) on_epoch(rec);
    }

    FitResult result;
    result.prediction = predict(state.model, data);
    if (data.labels) result.metrics = metrics::evaluate(result.prediction.labels, *data.labels);
    result.state = std::move(state);
    return result;
}

std::vector<checkpoint::Tensor> model_to_tensors(Model& model, Optimizer* optimizer) {
    std::vector<checkpoint::Tensor> out;
    out.push_back(scalar_tensor("meta.curvature", model.curvature.value()));
    out.push_back(scalar_tensor("meta.lorentz_relu", model.lorentz_activation == nn::Activation::relu ? 1.0 : 0.0));
    for (std::size_t m = 0; m < model.encoders.size(); ++m) {
        const std::string prefix = "view" + std::to_string(m) + ".";
        const auto params = model.encoders[m].parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& p = params[i];
            checkpoint::Tensor t{prefix + p.name, {static_cast<std::uint64_t>(p.rows)}, to_row_major(p)};
            if (p.rank == 2) t.dims.push_back(static_cast<std::uint64_t>(p.cols));
            out.push_back(std::move(t));
            if (optimizer && optimizer->first_moments().size() == model.encoders.size()) {
                out.push_back(vector_tensor("opt." + prefix + p.name + ".m", optimizer->first_moments()[m][i], p));
                out.push_back(vector_tensor("opt." + prefix + p.name + ".v", optimizer->second_moments()[m][i], p));
            }
        }
    }
    if (optimizer) out.push_back(scalar_tensor("opt.steps", static_cast<double>(optimizer->steps())));
    return out;
}

Model model_from_tensors(const std::vector<checkpoint::Tensor>& tensors) {
    auto find = [&](const std::string& name) -> const checkpoint::Tensor* {
        for (const auto& t : tensors)
            if (t.name == name) return &t;
        return nullptr;
    };
    auto matrix = [&](const std::string& name) {
        const auto* t = find(name);
        if (!t || t->dims.size() != 2) throw IoError("checkpoint: missing matrix '" + name + "'");
        Matrix out(static_cast<Eigen::Index>(t->dims[0]), static_cast<Eigen::Index>(t->dims[1]));
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index j = 0; j < out.cols(); ++j)
                out(i, j) = t->values[static_cast<std::size_t>(i * out.cols() + j)];
        return out;
    };
    auto vector = [&](const std::string& name) {
        const auto* t = find(name);
        if (!t || t->dims.size() != 1) throw IoError("checkpoint: missing vector '" + name + "'");
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(t->values.data(), static_cast<Eigen::Index>(t->dims[0])));
    };
    const auto* kt = find("meta.curvature");
    const auto* at = find("meta.lorentz_relu");
    if (!kt || !at || kt->values.size() != 1 || at->values.size() != 1) {
        throw IoError("checkpoint: missing model metadata");
    }
    Model model;
    model.curvature = geometry::Curvature(kt->values[0]);
    model.lorentz_activation = at->values[0] != 0.0 ? nn::Activation::relu : nn::Activation::identity;
    for (std::size_t m = 0;; ++m) {
        const std::string prefix = "view" + std::to_string(m) + ".";
        if (!find(prefix + "mlr.a")) break;
        std::vector<nn::DenseLayer> dense;
        for (std::size_t i = 0; find(prefix + "dense" + std::to_string(i) + ".weight"); ++i) {
            const std::string base = prefix + "dense" + std::to_string(i);
            dense.push_back({matrix(base + ".weight"), vector(base + ".bias"), nn::Activation::relu});
        }
        if (dense.empty()) throw IoError("checkpoint: view " + std::to_string(m) + " has no dense layers");
        dense.back().activation = nn::Activation::identity;
        std::vector<nn::LorentzFcLayer> lorentz;
        for (std::size_t i = 0; find(prefix + "lorentz" + std::to_string(i) + ".weight"); ++i) {
            const std::string base = prefix + "lorentz" + std::to_string(i);
            lorentz.push_back({matrix(base + ".weight"), vector(base + ".bias"), model.lorentz_activation, model.curvature});
        }
        nn::LorentzMlrHead head{vector(prefix + "mlr.a"), matrix(prefix + "mlr.z"), model.curvature};
        try {
            model.encoders.emplace_back(std::move(dense), std::move(lorentz), std::move(head));
        } catch (const std::invalid_argument& e) {
            throw IoError(std::string("checkpoint: inconsistent shapes: ") + e.what());
        }
    }
    if (model.encoders.empty()) throw IoError("checkpoint: no view encoders found");
    return model;
}

void save_model(const std::filesystem::path& path, Model& model, Optimizer* optimizer) {
    checkpoint::save(path, model_to_tensors(model, optimizer));
}

Model load_model(const std::filesystem::path& path) { return model_from_tensors(checkpoint::load(path)); }

}  // namespace wahmvc::training
