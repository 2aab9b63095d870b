#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path& workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "wahmvc_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Run wahmvc(const std::string& args) {
    const auto out = workdir() / "stdout.txt", err = workdir() / "stderr.txt";
    const std::string cmd = std::string(WAHMVC_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string path(const char* name) { return (workdir() / name).string(); }

constexpr const char* kSmall = R"({"epochs": 3, "hidden": [32], "euclidean_dim": 8, "latent_dim": 4,
                                   "sw": {"directions": 16}})";

void write_small_config() { std::ofstream(workdir() / "small.json") << kSmall; }

}  // namespace

TEST_CASE("gen-data") {
    const Run r = wahmvc("gen-data --views 3 --clusters 4 --samples 400 --seed 7 --out " + path("d1"));
    CHECK(r.code == 0);
    CHECK(r.out.find("wrote 5 files") != std::string::npos);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(path("d1"))) files += e.is_regular_file();
    CHECK(files == 5);

    CHECK(wahmvc("gen-data --views 3 --clusters 4 --samples 400 --seed 7 --out " + path("d2")).code == 0);
    for (const char* f : {"manifest.json", "view1.csv", "view2.csv", "view3.csv", "labels.csv"}) {
        CHECK(slurp(workdir() / "d1" / f) == slurp(workdir() / "d2" / f));
    }

    const Run zero = wahmvc("gen-data --samples 0 --out " + path("d0"));
    CHECK(zero.code == 1);
    CHECK(zero.err.find("samples") != std::string::npos);
    CHECK(wahmvc("gen-data --out /dev/null/nope").code == 1);
}

TEST_CASE("train, eval and run directory") {
    write_small_config();
    REQUIRE(wahmvc("gen-data --samples 120 --out " + path("dt")).code == 0);
    const Run t = wahmvc("train --data " + path("dt") + " --config " + path("small.json") + " --out " + path("rt"));
    REQUIRE(t.code == 0);
    CHECK(t.out.rfind("ACC=", 0) == 0);
    CHECK(t.out.find(" NMI=") != std::string::npos);
    CHECK(t.err.find("epoch   3/3") != std::string::npos);
    for (const char* f : {"config.json", "history.csv", "labels.csv", "model.wahm", "embeddings_view1.csv",
                          "embeddings_view2.csv", "embeddings_view3.csv"}) {
        CHECK(fs::exists(workdir() / "rt" / f));
    }

    const Run e = wahmvc("eval --model " + path("rt/model.wahm") + " --data " + path("dt/manifest.json"));
    CHECK(e.code == 0);
    CHECK(e.out == t.out);

    const Run again = wahmvc("train --data " + path("dt") + " --config " + path("small.json") + " --out " + path("rt2"));
    REQUIRE(again.code == 0);
    CHECK(slurp(workdir() / "rt" / "history.csv") == slurp(workdir() / "rt2" / "history.csv"));
    CHECK(slurp(workdir() / "rt" / "labels.csv") == slurp(workdir() / "rt2" / "labels.csv"));
    CHECK(slurp(workdir() / "rt" / "model.wahm") == slurp(workdir() / "rt2" / "model.wahm"));

    const Run flags = wahmvc("train --data " + path("dt") + " --config " + path("small.json") +
                             " --out " + path("rt3") + " --seed 9 --tau 0.5 --proj 8 --p 3 --curvature -0.5 --epochs 2");
    CHECK(flags.code == 0);
    const std::string cfg = slurp(workdir() / "rt3" / "config.json");
    CHECK(cfg.find("\"directions\": 8") != std::string::npos);
    CHECK(cfg.find("\"curvature\": -0.5") != std::string::npos);
    CHECK(cfg.find("\"epochs\": 2") != std::string::npos);
    CHECK(cfg.find("\"direction_seeds\"") != std::string::npos);
}

TEST_CASE("geodesic projection runs with finite losses") {
    write_small_config();
    REQUIRE(wahmvc("gen-data --samples 120 --out " + path("dg")).code == 0);
    const Run r = wahmvc("train --projection ghsw --data " + path("dg") + " --config " + path("small.json") +
                         " --out " + path("rg"));
    CHECK(r.code == 0);
    CHECK(slurp(workdir() / "rg" / "history.csv").find("nan") == std::string::npos);
    CHECK(wahmvc("train --projection euclid --data " + path("dg")).code == 1);
}

TEST_CASE("all-zero weights warn and leave parameters unchanged") {
    write_small_config();
    REQUIRE(wahmvc("gen-data --samples 120 --out " + path("dz")).code == 0);
    const std::string base = "train --alpha 0 --beta 0 --gamma 0 --data " + path("dz") + " --config " + path("small.json");
    const Run one = wahmvc(base + " --epochs 1 --out " + path("rz1"));
    CHECK(one.code == 0);
    CHECK(one.err.find("warning") != std::string::npos);
    CHECK(wahmvc(base + " --epochs 3 --out " + path("rz3")).code == 0);
    CHECK(slurp(workdir() / "rz1" / "embeddings_view1.csv") == slurp(workdir() / "rz3" / "embeddings_view1.csv"));
}

TEST_CASE("error exit codes") {
    write_small_config();
    REQUIRE(wahmvc("gen-data --samples 60 --out " + path("de")).code == 0);
    CHECK(wahmvc("eval --model " + path("missing.wahm") + " --data " + path("de")).code == 1);
    CHECK(wahmvc("train --data " + path("nowhere")).code == 1);
    CHECK(wahmvc("train --epochs 0 --data " + path("de")).code == 1);
    CHECK(wahmvc("train --curvature 1 --data " + path("de")).code == 1);
    CHECK(wahmvc("bogus").code == 1);

    std::ofstream(workdir() / "broken.json") << "{epochs: ";
    CHECK(wahmvc("train --config " + path("broken.json") + " --data " + path("de")).code == 1);

    // Model trained on 3-view data evaluated on 2-view data.
    REQUIRE(wahmvc("train --data " + path("de") + " --config " + path("small.json") + " --out " + path("re")).code == 0);
    REQUIRE(wahmvc("gen-data --views 2 --samples 60 --out " + path("de2")).code == 0);
    CHECK(wahmvc("eval --model " + path("re/model.wahm") + " --data " + path("de2")).code == 1);
    REQUIRE(wahmvc("gen-data --samples 60 --dims 4 --out " + path("de4")).code == 0);
    CHECK(wahmvc("eval --model " + path("re/model.wahm") + " --data " + path("de4")).code == 1);

    // NaN in the input features aborts with exit 2 and names the component.
    fs::create_directories(workdir() / "dn");
    for (const char* f : {"manifest.json", "view1.csv", "view2.csv", "view3.csv", "labels.csv"})
        fs::copy_file(workdir() / "de" / f, workdir() / "dn" / f, fs::copy_options::overwrite_existing);
    {
        std::string v = slurp(workdir() / "dn" / "view2.csv");
        v.replace(0, v.find(','), "nan");
        std::ofstream(workdir() / "dn" / "view2.csv", std::ios::trunc) << v;
    }
    const Run nan = wahmvc("train --data " + path("dn") + " --config " + path("small.json") + " --out " + path("rn"));
    CHECK(nan.code == 2);
    CHECK(nan.err.find("hhsw") != std::string::npos);
}

TEST_CASE("masked data: eval votes over present views") {
    write_small_config();
    REQUIRE(wahmvc("gen-data --samples 120 --missing-rate 0.3 --out " + path("dm")).code == 0);
    CHECK(fs::exists(workdir() / "dm" / "mask.csv"));
    const Run t = wahmvc("train --data " + path("dm") + " --config " + path("small.json") + " --out " + path("rm"));
    REQUIRE(t.code == 0);
    const Run e = wahmvc("eval --model " + path("rm/model.wahm") + " --data " + path("dm") + " --labels-out " + path("rm/eval_labels.csv"));
    CHECK(e.code == 0);
    CHECK(e.out == t.out);
    CHECK(slurp(workdir() / "rm" / "eval_labels.csv") == slurp(workdir() / "rm" / "labels.csv"));
}

TEST_CASE("bench") {
    const Run r = wahmvc("bench --loss hhsw --batch-grid 16,32,64,128 --repeats 5");
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    int rows = 0;
    bool footer = false;
    std::getline(lines, line);
    CHECK(line == "batch,median_seconds");
    while (std::getline(lines, line)) {
        if (line.rfind("# loss=hhsw slope=", 0) == 0) footer = true;
        else ++rows;
    }
    CHECK(rows == 4);
    CHECK(footer);
    CHECK(wahmvc("bench --loss hcl --batch-grid 16,32,64 --repeats 1").code == 1);
    CHECK(wahmvc("bench --loss hcl --batch-grid 16,32,48,64 --repeats 1").code == 1);
    CHECK(wahmvc("bench --loss hcl --batch-grid 16,32,64,128 --repeats 1 --out " + path("b.csv")).code == 0);
    CHECK(slurp(workdir() / "b.csv").find("# loss=hcl") != std::string::npos);
}

TEST_CASE("verify") {
    const Run ok = wahmvc("verify");
    CHECK(ok.code == 0);
    for (const char* s : {"manifold", "ot_oracle", "projections", "gradients", "loss_closed_forms", "metrics",
                          "checkpoint", "kmeans_baseline"}) {
        CHECK(ok.out.find(s) != std::string::npos);
    }
    CHECK(ok.out.find("8/8 suites passed") != std::string::npos);

    const Run bad = wahmvc("verify --inject-bad-curvature --skip-baseline");
    CHECK(bad.code == 2);
    CHECK(bad.out.find("manifold           FAIL") != std::string::npos);
}

TEST_CASE("help on every subcommand") {
    const std::pair<const char*, std::vector<const char*>> cmds[] = {
        {"gen-data", {"--views", "--clusters", "--samples", "--dims", "--depth", "--noise", "--seed", "--missing-rate", "--out"}},
        {"train", {"--data", "--config", "--out", "--seed", "--epochs", "--batch-size", "--lr", "--alpha", "--beta",
                   "--gamma", "--tau", "--proj", "--p", "--curvature", "--projection", "--clusters", "--latent-dim",
                   "--optimizer", "--quiet"}},
        {"eval", {"--model", "--data", "--labels-out"}},
        {"bench", {"--loss", "--batch-grid", "--repeats", "--views", "--latent-dim", "--directions", "--seed", "--out"}},
        {"verify", {"--inject-bad-curvature", "--seed", "--skip-baseline"}},
    };
    for (const auto& [cmd, flags] : cmds) {
        const Run r = wahmvc(std::string(cmd) + " --help");
        CHECK(r.code == 0);
        for (const char* f : flags) {
            INFO(cmd << " " << f);
            CHECK(r.out.find(f) != std::string::npos);
        }
    }
    CHECK(wahmvc("--help").code == 0);
}
