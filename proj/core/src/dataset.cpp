#include "wahmvc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "wahmvc/error.hpp"
#include "wahmvc/random.hpp"

namespace wahmvc::data {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::vector<double>> read_rows(const fs::path& path) {
    std::ifstream f(path);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        std::string_view rest = trim(line);
        if (rest.empty()) continue;
        std::vector<double> row;
        while (true) {
            const auto comma = rest.find(',');
            const std::string_view field = trim(rest.substr(0, comma));
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
            if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed number '" +
                              std::string(field) + "'");
            }
            row.push_back(value);
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(rows.front().size()) + " columns, found " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

fs::path resolve(const fs::path& base, const nlohmann::json& entry) {
    if (!entry.is_string()) {
        throw IoError("manifest: file entries must be strings");
    }
    fs::path p = entry.get<std::string>();
    return p.is_absolute() ? p : base / p;
}

}  // namespace

Eigen::ArrayX<bool> MultiViewDataset::presence(std::size_t view) const {
    if (!mask) return Eigen::ArrayX<bool>::Constant(samples(), true);
    return mask->col(static_cast<Eigen::Index>(view));
}

void MultiViewDataset::validate() const {
    if (views.empty()) {
        throw ConfigError("dataset has no views");
    }
    const Eigen::Index n = samples();
    if (n == 0) {
        throw ConfigError("dataset is empty");
    }
    for (std::size_t m = 0; m < views.size(); ++m) {
        if (views[m].rows() != n) {
            throw DimensionError("view " + std::to_string(m) + " has " + std::to_string(views[m].rows()) +
                                 " samples, expected " + std::to_string(n));
        }
        if (views[m].cols() == 0) {
            throw DimensionError("view " + std::to_string(m) + " has no features");
        }
    }
    if (labels) {
        if (static_cast<Eigen::Index>(labels->size()) != n) {
            throw DimensionError("labels: " + std::to_string(labels->size()) + " entries for " + std::to_string(n) +
                                 " samples");
        }
        if (std::any_of(labels->begin(), labels->end(), [](int l) { return l < 0; })) {
            throw ConfigError("labels must be nonnegative integers");
        }
    }
    if (mask) {
        if (mask->rows() != n || mask->cols() != static_cast<Eigen::Index>(views.size())) {
            throw DimensionError("mask must be N x M");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!mask->row(i).any()) {
                throw ConfigError("sample " + std::to_string(i) + " has no present view");
            }
        }
    }
}

Matrix read_csv_matrix(const fs::path& path) {
    const auto rows = read_rows(path);
    if (rows.empty()) {
        throw IoError("'" + path.string() + "' contains no rows");
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

void write_csv_matrix(const fs::path& path, const Matrix& m) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) f << ',';
            f << format_double(m(i, j));
        }
        f << '\n';
    }
    if (!f) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

MultiViewDataset load_dataset(const fs::path& manifest) {
    std::ifstream f(manifest);
    if (!f) {
        throw IoError("cannot open manifest '" + manifest.string() + "'");
    }
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("manifest '" + manifest.string() + "': " + e.what());
    }
    if (!j.is_object() || !j.contains("views") || !j["views"].is_array() || j["views"].empty()) {
        throw IoError("manifest must contain a non-empty \"views\" array");
    }
    const fs::path base = manifest.parent_path();
    MultiViewDataset data;
    for (const auto& v : j["views"]) {
        data.views.push_back(read_csv_matrix(resolve(base, v)));
    }
    if (j.contains("labels") && !j["labels"].is_null()) {
        const Matrix l = read_csv_matrix(resolve(base, j["labels"]));
        if (l.cols() != 1) {
            throw IoError("labels file must hold one integer per line");
        }
        std::vector<int> labels;
        for (Eigen::Index i = 0; i < l.rows(); ++i) {
            if (l(i, 0) != std::floor(l(i, 0))) {
                throw IoError("labels must be integers");
            }
            labels.push_back(static_cast<int>(l(i, 0)));
        }
        data.labels = std::move(labels);
    }
    if (j.contains("mask") && !j["mask"].is_null()) {
        const Matrix mk = read_csv_matrix(resolve(base, j["mask"]));
        if ((mk.array() != 0.0 && mk.array() != 1.0).any()) {
            throw IoError("mask entries must be 0 or 1");
        }
        data.mask = (mk.array() != 0.0);
    }
    data.validate();
    return data;
}

std::vector<fs::path> save_dataset(const MultiViewDataset& data, const fs::path& dir) {
    data.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw IoError("cannot create directory '" + dir.string() + "'");
    }
    std::vector<fs::path> written;
    nlohmann::json manifest;
    manifest["views"] = nlohmann::json::array();
    for (std::size_t m = 0; m < data.views.size(); ++m) {
        const std::string name = "view" + std::to_string(m + 1) + ".csv";
        write_csv_matrix(dir / name, data.views[m]);
        manifest["views"].push_back(name);
        written.push_back(dir / name);
    }
    if (data.labels) {
        Matrix l(static_cast<Eigen::Index>(data.labels->size()), 1);
        for (std::size_t i = 0; i < data.labels->size(); ++i) l(static_cast<Eigen::Index>(i), 0) = (*data.labels)[i];
        write_csv_matrix(dir / "labels.csv", l);
        manifest["labels"] = "labels.csv";
        written.push_back(dir / "labels.csv");
    } else {
        manifest["labels"] = nullptr;
    }
    if (data.mask) {
        write_csv_matrix(dir / "mask.csv", data.mask->cast<double>().matrix());
        manifest["mask"] = "mask.csv";
        written.push_back(dir / "mask.csv");
    } else {
        manifest["mask"] = nullptr;
    }
    std::ofstream f(dir / "manifest.json", std::ios::trunc);
    if (!f) {
        throw IoError("cannot write manifest in '" + dir.string() + "'");
    }
    f << manifest.dump(2) << '\n';
    written.insert(written.begin(), dir / "manifest.json");
    return written;
}

void SyntheticSpec::validate() const {
    if (views < 1 || clusters < 1 || samples < 1) {
        throw ConfigError("synthetic data: views, clusters and samples must be positive");
    }
    if (clusters > samples) {
        throw ConfigError("synthetic data: more clusters than samples");
    }
    if (dims.empty() || std::any_of(dims.begin(), dims.end(), [](Eigen::Index d) { return d < 1; })) {
        throw ConfigError("synthetic data: view dimensions must be positive");
    }
    if (hierarchy_depth < 1 || latent_dim < 1 || !(noise >= 0.0) || nuisance_dims < 0) {
        throw ConfigError("synthetic data: depth, latent_dim must be >= 1 and noise >= 0");
    }
}

MultiViewDataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index latent = spec.latent_dim;

    // Balanced tree: branching^depth >= clusters; leaves taken in order, so
    // consecutive labels share coarse ancestors.
    Eigen::Index branching = 1;
    while (static_cast<double>(std::pow(static_cast<double>(branching), spec.hierarchy_depth)) <
           static_cast<double>(spec.clusters)) {
        ++branching;
    }
    std::vector<Eigen::VectorXd> level{Eigen::VectorXd::Zero(latent)};
    double spread = spec.level_spread;
    for (int depth = 0; depth < spec.hierarchy_depth; ++depth) {
        std::vector<Eigen::VectorXd> next;
        for (const auto& parent : level) {
            for (Eigen::Index b = 0; b < branching; ++b) {
                Eigen::VectorXd child(latent);
                for (Eigen::Index t = 0; t < latent; ++t) child(t) = parent(t) + spread * normal(rng);
                next.push_back(std::move(child));
            }
        }
        level = std::move(next);
        spread *= spec.level_shrink;
    }
    Matrix centroids(spec.clusters, latent);
    for (Eigen::Index c = 0; c < spec.clusters; ++c) centroids.row(c) = level[static_cast<std::size_t>(c)].transpose();

    std::vector<int> labels(static_cast<std::size_t>(spec.samples));
    for (Eigen::Index i = 0; i < spec.samples; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i % spec.clusters);
    std::shuffle(labels.begin(), labels.end(), rng);

    Matrix latent_x(spec.samples, latent);
    for (Eigen::Index i = 0; i < spec.samples; ++i) latent_x.row(i) = centroids.row(labels[static_cast<std::size_t>(i)]);

    MultiViewDataset data;
    for (Eigen::Index m = 0; m < spec.views; ++m) {
        const Eigen::Index d = spec.dims[static_cast<std::size_t>(m) % spec.dims.size()];
        Matrix w(d, latent);
        for (Eigen::Index j = 0; j < latent; ++j)
            for (Eigen::Index i = 0; i < d; ++i) w(i, j) = normal(rng) / std::sqrt(static_cast<double>(latent));
        Matrix x = latent_x * w.transpose();
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index i = 0; i < spec.samples; ++i) x(i, j) += spec.noise * normal(rng);
        if (spec.nuisance_dims > 0) {
            Matrix u(d, spec.nuisance_dims);
            for (Eigen::Index j = 0; j < u.cols(); ++j) {
                for (Eigen::Index i = 0; i < d; ++i) u(i, j) = normal(rng);
                u.col(j).normalize();
            }
            Matrix e(spec.samples, spec.nuisance_dims);
            for (Eigen::Index j = 0; j < e.cols(); ++j)
                for (Eigen::Index i = 0; i < e.rows(); ++i) e(i, j) = normal(rng);
            x += (spec.nuisance_scale * spec.noise) * e * u.transpose();
        }
        data.views.push_back(std::move(x));
    }
    data.labels = std::move(labels);
    return data;
}

MultiViewDataset apply_missing_mask(MultiViewDataset data, double rate, std::uint64_t seed) {
    data.validate();
    if (!(rate >= 0.0) || !(rate < 1.0)) {
        throw ConfigError("missing rate must be in [0, 1)");
    }
    const Eigen::Index n = data.samples();
    const Eigen::Index m = static_cast<Eigen::Index>(data.view_count());
    const auto target = static_cast<Eigen::Index>(std::floor(rate * static_cast<double>(n * m)));
    if (target == 0) return data;

    Mask mask = data.mask ? *data.mask : Mask::Constant(n, m, true);
    Eigen::Index removable = 0;
    for (Eigen::Index i = 0; i < n; ++i) removable += mask.row(i).count() - 1;
    const Eigen::Index already = n * m - mask.count();
    if (target - already > removable) {
        throw ConfigError("missing rate too high: every sample must keep one present view");
    }

    std::vector<Eigen::Index> cells(static_cast<std::size_t>(n * m));
    std::iota(cells.begin(), cells.end(), Eigen::Index{0});
    Rng rng(seed);
    std::shuffle(cells.begin(), cells.end(), rng);
    Eigen::Index absent = already;
    for (Eigen::Index cell : cells) {
        if (absent >= target) break;
        const Eigen::Index i = cell / m;
        const Eigen::Index v = cell % m;
        if (!mask(i, v) || mask.row(i).count() < 2) continue;
        mask(i, v) = false;
        data.views[static_cast<std::size_t>(v)].row(i).setZero();
        ++absent;
    }
    data.mask = std::move(mask);
    return data;
}

}  // namespace wahmvc::data
