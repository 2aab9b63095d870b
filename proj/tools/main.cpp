// wahmvc: data generation, training, evaluation, benchmarking and
// self-verification from the command line.
//
// Exit codes: 0 success, 1 invalid input/config, 2 numerical or runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wahmvc/bench.hpp"
#include "wahmvc/dataset.hpp"
#include "wahmvc/error.hpp"
#include "wahmvc/metrics.hpp"
#include "wahmvc/run_io.hpp"
#include "wahmvc/training.hpp"
#include "wahmvc/verify.hpp"

namespace fs = std::filesystem;
using namespace wahmvc;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

fs::path manifest_path(const fs::path& p) { return fs::is_directory(p) ? p / "manifest.json" : p; }

std::string format_metrics(const metrics::ClusteringMetrics& m) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "ACC=%.4f NMI=%.4f", m.acc, m.nmi);
    return buf;
}

struct GenArgs {
    data::SyntheticSpec spec;
    double missing_rate = 0.0;
    std::string out = "data";
};

int cmd_gen_data(const GenArgs& a) {
    if (a.spec.samples < 1) throw ConfigError("--samples must be >= 1");
    auto data = data::generate_synthetic(a.spec);
    if (a.missing_rate > 0.0) data = data::apply_missing_mask(std::move(data), a.missing_rate, derive_seed(a.spec.seed, 77));
    const auto files = data::save_dataset(data, a.out);
    std::cout << "wrote " << files.size() << " files to " << a.out << ": " << data.view_count() << " views, "
              << data.samples() << " samples, " << a.spec.clusters << " clusters\n";
    return kOk;
}

struct TrainArgs {
    std::string data;
    std::string config;
    std::string out = "run";
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    std::optional<Eigen::Index> batch_size;
    std::optional<double> lr;
    std::optional<double> alpha, beta, gamma, tau, p, curvature;
    std::optional<Eigen::Index> proj;
    std::optional<std::string> projection;
    std::optional<int> clusters;
    std::optional<Eigen::Index> latent_dim;
    std::optional<std::string> optimizer;
    bool quiet = false;
};

training::TrainConfig resolve_config(const TrainArgs& a) {
    training::TrainConfig cfg;
    if (!a.config.empty()) cfg = training::config_from_json(run_io::read_text(a.config), cfg);
    if (a.seed) cfg.seed = *a.seed;
    if (a.epochs) cfg.epochs = *a.epochs;
    if (a.batch_size) cfg.batch_size = *a.batch_size;
    if (a.lr) cfg.learning_rate = *a.lr;
    if (a.alpha) cfg.weights.alpha = *a.alpha;
    if (a.beta) cfg.weights.beta = *a.beta;
    if (a.gamma) cfg.weights.gamma = *a.gamma;
    if (a.tau) cfg.weights.tau = *a.tau;
    if (a.p) cfg.sw.p = *a.p;
    if (a.curvature) cfg.curvature = *a.curvature;
    if (a.proj) cfg.sw.directions = *a.proj;
    if (a.projection) {
        cfg.sw.projection = *a.projection == "ghsw" ? sliced_ot::ProjectionKind::geodesic
                                                    : sliced_ot::ProjectionKind::horospherical;
    }
    if (a.clusters) cfg.clusters = *a.clusters;
    if (a.latent_dim) cfg.latent_dim = *a.latent_dim;
    if (a.optimizer) cfg.optimizer.kind = *a.optimizer == "sgd" ? training::OptimizerKind::sgd : training::OptimizerKind::adam;
    cfg.validate();
    return cfg;
}

int cmd_train(const TrainArgs& a) {
    const auto cfg = resolve_config(a);
    const auto data = data::load_dataset(manifest_path(a.data));
    if (cfg.weights.alpha == 0.0 && cfg.weights.beta == 0.0 && cfg.weights.gamma == 0.0) {
        std::cerr << "warning: alpha, beta and gamma are all zero; parameters will not change\n";
    }
    auto result = training::fit(data, cfg, [&](const training::EpochRecord& r) {
        if (a.quiet) return;
        char buf[160];
        std::snprintf(buf, sizeof buf, "epoch %3d/%d  total=%.5f hhsw=%.5f sem=%.5f reg=%.5f", r.epoch, cfg.epochs,
                      r.loss.total, r.loss.hhsw, r.loss.sem, r.loss.reg);
        std::cerr << buf;
        if (r.metrics) std::cerr << "  " << format_metrics(*r.metrics);
        std::cerr << '\n';
    });
    if (result.state.clamped_projections > 0) {
        std::cerr << "note: " << result.state.clamped_projections << " geodesic projections were clamped\n";
    }
    run_io::write_run_directory(a.out, cfg, result);
    if (result.metrics) std::cout << format_metrics(*result.metrics) << '\n';
    else std::cout << "trained " << cfg.epochs << " epochs; labels in " << (fs::path(a.out) / "labels.csv").string() << '\n';
    return kOk;
}

struct EvalArgs {
    std::string model;
    std::string data;
    std::string labels_out;
};

int cmd_eval(const EvalArgs& a) {
    const auto model = training::load_model(a.model);
    const auto data = data::load_dataset(manifest_path(a.data));
    const auto pred = training::predict(model, data);
    if (!a.labels_out.empty()) run_io::write_text(a.labels_out, run_io::labels_csv(pred.labels));
    if (data.labels) std::cout << format_metrics(metrics::evaluate(pred.labels, *data.labels)) << '\n';
    else std::cout << "predicted " << pred.labels.size() << " labels\n";
    return kOk;
}

struct BenchArgs {
    std::string loss = "hhsw";
    std::vector<Eigen::Index> grid{256, 512, 1024, 2048, 4096};
    int repeats = 3;
    std::size_t views = 2;
    Eigen::Index latent_dim = 32;
    Eigen::Index directions = 128;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_bench(const BenchArgs& a) {
    bench::BenchConfig cfg;
    cfg.kind = bench::parse_loss_kind(a.loss);
    cfg.grid = a.grid;
    cfg.repeats = a.repeats;
    cfg.views = a.views;
    cfg.latent_dim = a.latent_dim;
    cfg.directions = a.directions;
    cfg.seed = a.seed;
    const auto result = bench::bench_alignment(cfg);
    const std::string csv = bench::to_csv(cfg, result);
    if (a.out.empty()) std::cout << csv;
    else run_io::write_text(a.out, csv);
    std::cerr << bench::loss_kind_name(cfg.kind) << " log-log slope " << result.slope << '\n';
    return kOk;
}

int cmd_verify(const verify::VerifyOptions& opt) {
    const auto report = verify::run_verification(opt);
    std::cout << report.to_text();
    return report.ok() ? kOk : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wasserstein-aligned hyperbolic multi-view clustering"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen-data", "Write a synthetic hierarchical multi-view dataset");
    g->add_option("--views", gen.spec.views, "Number of views")->capture_default_str();
    g->add_option("--clusters", gen.spec.clusters, "Number of fine clusters")->capture_default_str();
    g->add_option("--samples", gen.spec.samples, "Number of samples")->capture_default_str();
    g->add_option("--dims", gen.spec.dims, "Feature dimension per view (cycled)")->capture_default_str()->delimiter(',');
    g->add_option("--depth", gen.spec.hierarchy_depth, "Levels of the centroid tree")->capture_default_str();
    g->add_option("--noise", gen.spec.noise, "Isotropic noise std")->capture_default_str();
    g->add_option("--seed", gen.spec.seed, "Random seed")->capture_default_str();
    g->add_option("--missing-rate", gen.missing_rate, "Fraction of (sample, view) cells to mask")->capture_default_str();
    g->add_option("--out", gen.out, "Output directory")->capture_default_str();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Fit the model and write a run directory");
    t->add_option("--data", tr.data, "Dataset manifest (or directory containing manifest.json)")->required();
    t->add_option("--config", tr.config, "JSON config; flags override its fields");
    t->add_option("--out", tr.out, "Run directory")->capture_default_str();
    t->add_option("--seed", tr.seed, "Random seed");
    t->add_option("--epochs", tr.epochs, "Training epochs");
    t->add_option("--batch-size", tr.batch_size, "Mini-batch size");
    t->add_option("--lr", tr.lr, "Learning rate");
    t->add_option("--alpha", tr.alpha, "Weight of the sliced-Wasserstein alignment loss");
    t->add_option("--beta", tr.beta, "Weight of the semantic contrastive loss");
    t->add_option("--gamma", tr.gamma, "Weight of the balance regularizer");
    t->add_option("--tau", tr.tau, "Contrastive temperature");
    t->add_option("--proj", tr.proj, "Number of slicing directions L");
    t->add_option("--p", tr.p, "Wasserstein order");
    t->add_option("--curvature", tr.curvature, "Curvature K (< 0)");
    t->add_option("--projection", tr.projection, "Slicing projection")->check(CLI::IsMember({"hhsw", "ghsw"}));
    t->add_option("--clusters", tr.clusters, "Number of clusters (default: distinct labels)");
    t->add_option("--latent-dim", tr.latent_dim, "Lorentz embedding dimension r");
    t->add_option("--optimizer", tr.optimizer, "Optimizer")->check(CLI::IsMember({"adam", "sgd"}));
    t->add_flag("--quiet", tr.quiet, "No per-epoch progress on stderr");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Infer labels with a saved model");
    e->add_option("--model", ev.model, "Checkpoint (model.wahm)")->required();
    e->add_option("--data", ev.data, "Dataset manifest (or directory)")->required();
    e->add_option("--labels-out", ev.labels_out, "Write sample_id,label CSV here");

    BenchArgs be;
    auto* b = app.add_subcommand("bench", "Time alignment losses against batch size");
    b->add_option("--loss", be.loss, "Loss to time")->check(CLI::IsMember({"hhsw", "hcl"}))->capture_default_str();
    b->add_option("--batch-grid", be.grid, "Comma-separated batch sizes")->delimiter(',')->capture_default_str();
    b->add_option("--repeats", be.repeats, "Timed runs per batch size (median reported)")->capture_default_str();
    b->add_option("--views", be.views, "Number of views")->capture_default_str();
    b->add_option("--latent-dim", be.latent_dim, "Lorentz dimension r")->capture_default_str();
    b->add_option("--directions", be.directions, "Slicing directions L")->capture_default_str();
    b->add_option("--seed", be.seed, "Random seed")->capture_default_str();
    b->add_option("--out", be.out, "CSV output file (default: stdout)");

    verify::VerifyOptions vo;
    bool skip_baseline = false;
    auto* v = app.add_subcommand("verify", "Run the self-verification suites");
    v->add_flag("--inject-bad-curvature", vo.flip_curvature_sign, "Fault injection: positive curvature in the manifold suite");
    v->add_option("--seed", vo.seed, "Random seed")->capture_default_str();
    v->add_flag("--skip-baseline", skip_baseline, "Skip the k-means baseline suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*g) return cmd_gen_data(gen);
        if (*t) return cmd_train(tr);
        if (*e) return cmd_eval(ev);
        if (*b) return cmd_bench(be);
        if (*v) {
            vo.include_baseline = !skip_baseline;
            return cmd_verify(vo);
        }
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kInvalid;
    } catch (const DimensionError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kInvalid;
    } catch (const IoError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kInvalid;
    } catch (const NumericalError& err) {
        std::cerr << "numerical error: " << err.what() << '\n';
        return kRuntime;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kRuntime;
    }
    return kInvalid;
}
