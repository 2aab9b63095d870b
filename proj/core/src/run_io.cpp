#include "wahmvc/run_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wahmvc/error.hpp"

namespace wahmvc::run_io {

namespace {

void append_number(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

std::string history_csv(const std::vector<training::EpochRecord>& history) {
    std::string out = "epoch,total,hhsw,sem,reg,acc,nmi\n";
    for (const auto& r : history) {
        out += std::to_string(r.epoch);
        for (double v : {r.loss.total, r.loss.hhsw, r.loss.sem, r.loss.reg}) {
            out += ',';
            append_number(out, v);
        }
        out += ',';
        if (r.metrics) append_number(out, r.metrics->acc);
        out += ',';
        if (r.metrics) append_number(out, r.metrics->nmi);
        out += '\n';
    }
    return out;
}

std::string labels_csv(const std::vector<int>& labels) {
    std::string out = "sample_id,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out += std::to_string(i) + ',' + std::to_string(labels[i]) + '\n';
    }
    return out;
}

std::string resolved_config_json(const training::TrainConfig& cfg) {
    auto j = nlohmann::json::parse(training::config_to_json(cfg));
    std::vector<std::uint64_t> seeds;
    for (int e = 0; e < cfg.epochs; ++e) seeds.push_back(training::direction_seed(cfg, e));
    j["direction_seeds"] = seeds;
    return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::filesystem::path> write_run_directory(const std::filesystem::path& dir,
                                                       const training::TrainConfig& cfg,
                                                       training::FitResult& result) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> files;
    files.push_back(dir / "config.json");
    write_text(files.back(), resolved_config_json(cfg));
    files.push_back(dir / "history.csv");
    write_text(files.back(), history_csv(result.state.history));
    files.push_back(dir / "labels.csv");
    write_text(files.back(), labels_csv(result.prediction.labels));
    files.push_back(dir / "model.wahm");
    training::save_model(files.back(), result.state.model, &result.state.optimizer);
    for (std::size_t m = 0; m < result.prediction.embeddings.size(); ++m) {
        files.push_back(dir / ("embeddings_view" + std::to_string(m + 1) + ".csv"));
        data::write_csv_matrix(files.back(), result.prediction.embeddings[m]);
    }
    return files;
}

}  // namespace wahmvc::run_io
