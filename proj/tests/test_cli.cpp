#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using namespace gsmdg;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "gsmdg");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("gsmdg_cli_" + std::to_string(::getpid()) + "_" +
                                             std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string file(const std::string& name, const std::string& text) const {
        const auto p = path_ / name;
        std::ofstream(p) << text;
        return p.string();
    }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

double printed(const std::string& out, const std::string& key) {
    std::istringstream in(out);
    std::string k;
    std::string v;
    while (in >> k >> v) {
        if (k == key) return std::stod(v);
    }
    FAIL("no " << key << " in output");
    return 0.0;
}

const char* kFitConfig = R"({
  "fit": {
    "space": [{"name": "mu", "min": -500, "max": 500, "resolution": 2},
              {"name": "gamma", "min": 0, "max": 50, "resolution": 2},
              {"name": "r", "min": 0, "max": 0.5, "resolution": 2}],
    "surrogate": {"family": "sbm", "nodes": 30, "cluster_ratios": [0.7, 0.3],
                  "intra_probability": 0.3, "inter_probability": 0.1},
    "replicates": 2, "restarts": 2, "anneal": {"iterations": 10}
  }
})";

std::string series_text(std::size_t n) {
    std::string s = "timestamp,value\n";
    for (std::size_t t = 0; t < n; ++t) {
        s += std::to_string(t) + "," + std::to_string(10 + (t * 7) % 5 + t / 3) + "\n";
    }
    return s;
}

}  // namespace

TEST_CASE("gen-graph writes an edge list and a passing report") {
    TempDir tmp;
    const auto cfg = tmp.file("c.json", R"({"graph": {"family": "sbm", "nodes": 60}})");
    const auto r = run({"gen-graph", "--config", cfg, "--seed", "7", "--out", tmp / "a"});
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(slurp(tmp.path() / "a" / "validation.json"));
    CHECK(report["strongly_connected"] == true);
    CHECK(report["normalized"] == true);
    CHECK(slurp(tmp.path() / "a" / "seed.txt") == "7\n");
    const auto resolved = nlohmann::json::parse(slurp(tmp.path() / "a" / "resolved_config.json"));
    CHECK(resolved["seed"] == 7);
    CHECK(resolved["graph"]["family"] == "sbm");

    std::ifstream edges(tmp.path() / "a" / "graph.csv");
    const auto g = read_edge_list(edges);
    CHECK(g.node_count() == 60);
    CHECK(g.is_normalized());

    REQUIRE(run({"gen-graph", "--config", cfg, "--seed", "7", "--out", tmp / "b"}).code == 0);
    CHECK(slurp(tmp.path() / "a" / "graph.csv") == slurp(tmp.path() / "b" / "graph.csv"));
    REQUIRE(run({"gen-graph", "--config", cfg, "--seed", "8", "--out", tmp / "c"}).code == 0);
    CHECK(slurp(tmp.path() / "a" / "graph.csv") != slurp(tmp.path() / "c" / "graph.csv"));
}

TEST_CASE("malformed configs exit 2 with the field path") {
    TempDir tmp;
    auto r = run({"gen-graph", "--config", tmp.file("c.json", R"({"graph": {"nodez": 5}})"), "--out", tmp / "o"});
    CHECK(r.code == 2);
    CHECK(r.err.find("/graph/nodez") != std::string::npos);

    r = run({"simulate", "--config", tmp.file("d.json", R"({"model": {"lambda": -1}})"), "--out", tmp / "o"});
    CHECK(r.code == 2);
    CHECK(r.err.find("/model/lambda") != std::string::npos);

    r = run({"simulate", "--config", tmp.file("e.json", "{ nope"), "--out", tmp / "o"});
    CHECK(r.code == 2);
    CHECK(r.err.find("malformed JSON") != std::string::npos);

    CHECK(run({"simulate", "--config", tmp / "missing.json"}).code == 2);
    CHECK(run({"simulate", "--jobs", "0", "--out", tmp / "o"}).code == 2);
    CHECK(run({"unknown"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("gen-graph exits 2 when generation cannot satisfy validation") {
    TempDir tmp;
    const auto cfg = tmp.file("c.json", R"({"graph": {"family": "erdos-renyi", "nodes": 40, "er_probability": 0.0}})");
    const auto r = run({"gen-graph", "--config", cfg, "--out", tmp / "o"});
    CHECK(r.code == 2);
    CHECK(fs::exists(tmp.path() / "o" / "validation.json"));
}

TEST_CASE("simulate without steering reaches consensus") {
    TempDir tmp;
    const auto cfg = tmp.file("c.json", R"({
        "graph": {"family": "barabasi-albert", "nodes": 40},
        "model": {"gamma": 0.0}, "simulation": {"horizon": 1500}})");
    const auto out = (tmp.path() / "nested" / "dir").string();
    const auto r = run({"simulate", "--config", cfg, "--out", out});
    REQUIRE(r.code == 0);
    CHECK(printed(r.out, "D_max_inf") < 1e-6);
    CHECK(fs::exists(fs::path(out) / "trajectory.csv"));
    CHECK(!fs::exists(fs::path(out) / "opinions.csv"));
    const auto summary = nlohmann::json::parse(slurp(fs::path(out) / "summary.json"));
    const double stored = summary["D_max_inf"];
    CHECK(stored == printed(r.out, "D_max_inf"));
}

TEST_CASE("simulate reports the regime of the sampled population") {
    TempDir tmp;
    const auto cfg_path = tmp.file("c.json", R"({
        "graph": {"family": "identity", "nodes": 30},
        "population": {"positive_fraction": 0.9},
        "model": {"gamma": 1.0, "lambda": 1.0},
        "simulation": {"horizon": 50, "record_agents": true}})");
    const auto r = run({"simulate", "--config", cfg_path, "--seed", "4", "--out", tmp / "o"});
    REQUIRE(r.code == 0);
    auto cfg = load_run_config(cfg_path);
    cfg.seed = 4;
    const auto pop = build_population(cfg.experiment(), 4);
    CHECK(r.out.find("regime " + std::string(to_string(regime(pop)))) != std::string::npos);

    const auto opinions = slurp(tmp.path() / "o" / "opinions.csv");
    CHECK(opinions.rfind("t,agent_0,agent_1,", 0) == 0);
    CHECK(std::count(opinions.begin(), opinions.end(), '\n') == 51);
    CHECK(fs::exists(tmp.path() / "o" / "states.csv"));
}

TEST_CASE("simulate exits 3 on overflow") {
    TempDir tmp;
    const auto cfg = tmp.file("c.json", R"({
        "graph": {"family": "barabasi-albert", "nodes": 20},
        "population": {"positive_fraction": 1.0},
        "model": {"gamma": 0.1},
        "simulation": {"horizon": 200, "weight_scale": 3.0}})");
    const auto r = run({"simulate", "--config", cfg, "--out", tmp / "o"});
    CHECK(r.code == 3);
    CHECK(r.err.find("overflow at step") != std::string::npos);
    CHECK(fs::exists(tmp.path() / "o" / "resolved_config.json"));
}

TEST_CASE("sweep outputs are independent of the worker count") {
    TempDir tmp;
    const auto cfg = tmp.file("c.json", R"({
        "graph": {"family": "barabasi-albert", "nodes": 30},
        "population": {"positive_fraction": 0.95},
        "model": {"lambda": 0.5},
        "simulation": {"horizon": 100},
        "sweep": {"axes": [{"param": "mu", "min": -1, "max": 1, "cells": 3},
                           {"param": "gamma", "min": 0, "max": 1, "cells": 3}],
                  "replicates": 2, "statistics": ["D_max", "D_max_inf", "event_fraction_curve"]}})");
    REQUIRE(run({"sweep", "--config", cfg, "--jobs", "1", "--out", tmp / "j1"}).code == 0);
    REQUIRE(run({"sweep", "--config", cfg, "--jobs", "8", "--out", tmp / "j8"}).code == 0);
    for (const char* f : {"sweep_long.csv", "heatmap_D_max.csv", "heatmap_D_max_inf.csv", "failures.csv"}) {
        CHECK(slurp(tmp.path() / "j1" / f) == slurp(tmp.path() / "j8" / f));
    }
    CHECK(slurp(tmp.path() / "j1" / "heatmap_D_max.csv").rfind("mu\\gamma,0,0.5,1\n", 0) == 0);
    CHECK(slurp(tmp.path() / "j1" / "failures.csv") == "axis1,axis2,replicate,error\n");
}

TEST_CASE("sweep validation and total failure") {
    TempDir tmp;
    auto r = run({"sweep", "--config",
                  tmp.file("a.json", R"({"sweep": {"axes": [{"param": "mu", "min": 1, "max": 0, "cells": 3}]}})"),
                  "--out", tmp / "o"});
    CHECK(r.code == 2);
    CHECK(r.err.find("empty range") != std::string::npos);
    CHECK(run({"sweep", "--out", tmp / "o"}).code == 2);

    const auto failing = tmp.file("b.json", R"({
        "graph": {"family": "barabasi-albert", "nodes": 20},
        "population": {"positive_fraction": 1.0},
        "model": {"gamma": 0.1}, "simulation": {"horizon": 200},
        "sweep": {"axes": [{"param": "alpha", "min": 3, "max": 4, "cells": 2}], "replicates": 2}})");
    r = run({"sweep", "--config", failing, "--out", tmp / "f"});
    CHECK(r.code == 4);
    const auto failures = slurp(tmp.path() / "f" / "failures.csv");
    CHECK(std::count(failures.begin(), failures.end(), '\n') == 5);
}

TEST_CASE("fit writes a table row, a grid and traces") {
    TempDir tmp;
    const auto cfg = tmp.file("c.json", kFitConfig);
    const auto data = tmp.file("term.csv", series_text(40));
    const auto r = run({"fit", "--config", cfg, "--data", data, "--seed", "3", "--out", tmp / "o"});
    REQUIRE(r.code == 0);
    const auto row = slurp(tmp.path() / "o" / "fit.csv");
    CHECK(row.rfind("label,error,mu,gamma,r,p,scale,seed\nterm,", 0) == 0);
    CHECK(row.substr(row.size() - 3) == ",3\n");
    CHECK(r.out == row);
    CHECK(slurp(tmp.path() / "o" / "grid.csv").rfind("mu,gamma,r,score,mean_error,error_std\n", 0) == 0);
    const auto trace = slurp(tmp.path() / "o" / "anneal_trace.csv");
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 1 + 2 * 10);

    // same run under more workers
    REQUIRE(run({"fit", "--config", cfg, "--data", data, "--seed", "3", "--jobs", "3", "--out", tmp / "p"}).code == 0);
    for (const char* f : {"fit.csv", "grid.csv", "anneal_trace.csv", "series.csv"}) {
        CHECK(slurp(tmp.path() / "o" / f) == slurp(tmp.path() / "p" / f));
    }
}

TEST_CASE("a p axis switches to the stubbornness variant") {
    TempDir tmp;
    auto doc = nlohmann::json::parse(kFitConfig);
    doc["fit"]["space"][1] = {{"name", "gamma"}, {"min", 0}, {"max", 0}, {"resolution", 1}};
    doc["fit"]["space"].push_back({{"name", "p"}, {"min", 0}, {"max", 0.5}, {"resolution", 2}});
    const auto cfg = tmp.file("c.json", doc.dump());
    const auto r = run({"fit", "--config", cfg, "--data", tmp.file("s.csv", series_text(30)), "--out", tmp / "o"});
    REQUIRE(r.code == 0);
    std::istringstream rows(slurp(tmp.path() / "o" / "fit.csv"));
    std::string header, row;
    std::getline(rows, header);
    std::getline(rows, row);
    const auto cells = csv::split(row);
    REQUIRE(cells.size() == 8);
    CHECK(std::stod(cells[3]) == 0.0);
    CHECK(std::stod(cells[5]) >= 0.0);
    CHECK(std::stod(cells[5]) <= 0.5);
    CHECK(slurp(tmp.path() / "o" / "grid.csv").rfind("mu,gamma,r,p,score", 0) == 0);
}

TEST_CASE("fit error codes") {
    TempDir tmp;
    const auto cfg = tmp.file("c.json", kFitConfig);
    CHECK(run({"fit", "--config", cfg, "--data", tmp.file("d.csv", "timestamp,value\n1,2\n1,3\n"),
               "--out", tmp / "o"}).code == 2);
    CHECK(run({"fit", "--config", cfg, "--data", tmp.file("n.csv", "timestamp,value\n1,-2\n2,3\n"),
               "--out", tmp / "o"}).code == 2);
    CHECK(run({"fit", "--config", cfg, "--data", tmp / "absent.csv", "--out", tmp / "o"}).code == 1);
    CHECK(run({"fit", "--config", cfg, "--out", tmp / "o"}).code == 2);

    const auto r = run({"fit", "--config", cfg, "--data", tmp.file("z.csv", "timestamp,value\n1,0\n2,0\n3,0\n"),
                        "--out", tmp / "o"});
    CHECK(r.code == 4);
    CHECK(r.err.find("optimization failure") != std::string::npos);
}

TEST_CASE("identify turns a planted grid into a decreasing curve") {
    TempDir tmp;
    GridScores g;
    g.space = ParamSpace::defaults(30);
    for (std::size_t i = 0; i < g.space.cell_count(); ++i) {
        GridCell c;
        c.index = i;
        c.coords = g.space.cell_center(i);
        double s = 0.0;
        const std::vector<double> centre{100.0, 10.0, 0.2};
        for (std::size_t d = 0; d < 3; ++d) s += std::pow((c.coords[d] - centre[d]) / g.space.axes[d].range(), 2);
        c.score.score = s + 1e-9 * static_cast<double>(i);
        g.cells.push_back(c);
    }
    {
        std::ofstream os(tmp.path() / "grid.csv");
        write_grid(os, g);
    }
    const auto cfg = tmp.file("c.json", R"({"identify": {"q_min": 0.001, "q_max": 0.1, "q_count": 5}})");
    const auto r = run({"identify", "--config", cfg, "--grid", tmp / "grid.csv", "--out", tmp / "o"});
    REQUIRE(r.code == 0);
    std::istringstream in(slurp(tmp.path() / "o" / "chi.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "q,chi");
    std::vector<double> chi;
    while (std::getline(in, line)) chi.push_back(std::stod(csv::split(line)[1]));
    REQUIRE(chi.size() == 5);
    for (std::size_t k = 0; k < chi.size(); ++k) {
        CHECK(chi[k] > 0.0);
        if (k > 0) CHECK(chi[k] <= chi[k - 1]);
    }

    CHECK(run({"identify", "--grid", tmp.file("bad.csv", "a,b\n1,2\n"), "--out", tmp / "o"}).code == 2);
    CHECK(run({"identify", "--grid", tmp / "none.csv", "--out", tmp / "o"}).code == 1);
}

TEST_CASE("re-running from a resolved config reproduces every output") {
    TempDir tmp;
    const auto cfg = tmp.file("c.json", R"({
        "graph": {"family": "watts-strogatz", "nodes": 30},
        "population": {"positive_fraction": 0.7},
        "model": {"gamma": 0.4, "lambda": 0.5},
        "simulation": {"horizon": 120, "record_agents": true}})");
    REQUIRE(run({"simulate", "--config", cfg, "--seed", "99", "--out", tmp / "a"}).code == 0);
    const auto resolved = (tmp.path() / "a" / "resolved_config.json").string();
    REQUIRE(run({"simulate", "--config", resolved, "--out", tmp / "b", "--jobs", "4"}).code == 0);
    for (const char* f : {"graph.csv", "trajectory.csv", "opinions.csv", "states.csv", "summary.json", "seed.txt"}) {
        CHECK(slurp(tmp.path() / "a" / f) == slurp(tmp.path() / "b" / f));
    }
}
