#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <gsmdg/config.hpp>

using namespace gsmdg;
using nlohmann::json;

namespace {

std::string error_path(const json& doc) {
    try {
        parse_run_config(doc);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "<none>";
}

}  // namespace

TEST_CASE("empty document gives defaults") {
    const auto c = parse_run_config(json::object());
    CHECK(c.seed == 0);
    CHECK(c.jobs == 1);
    CHECK(c.horizon == 500);
    CHECK(c.fit_space.dims() == 3);
    CHECK(c.fit.anneal.iterations == 2000);
    CHECK(c.fit.anneal.cooling == 0.95);
}

TEST_CASE("fields are read into the run config") {
    const auto doc = json::parse(R"({
        "schema_version": 1, "seed": 7, "jobs": 2, "output_dir": "runs/a",
        "graph": {"family": "sbm", "nodes": 60, "cluster_ratios": [0.5, 0.5]},
        "population": {"cluster_positive_fractions": [0.2, 0.9], "stubborn_fraction": 0.1},
        "model": {"lambda": 0.5, "gamma": 0.3, "mu": -2},
        "simulation": {"horizon": 80, "mode": "expected", "record_agents": true},
        "sweep": {"axes": [{"param": "mu", "min": -1, "max": 1, "cells": 3}],
                  "replicates": 2, "statistics": ["D_max"]},
        "fit": {"space": [{"name": "mu", "min": -100, "max": 100, "resolution": 4},
                          {"name": "p", "min": 0, "max": 0.5, "resolution": 2}],
                "restarts": 3, "anneal": {"iterations": 50}},
        "ingest": {"window_start": "2020-01-01", "smooth": 7, "fill": "previous"},
        "identify": {"q_count": 5, "bootstrap": 20}
    })");
    const auto c = parse_run_config(doc);
    CHECK(c.seed == 7);
    CHECK(c.output_dir == "runs/a");
    CHECK(c.graph.family == GraphFamily::sbm);
    CHECK(c.graph.nodes == 60);
    CHECK(c.population.cluster_positive_fractions == std::vector<double>{0.2, 0.9});
    CHECK(c.model.mu == -2.0);
    CHECK(c.mode == SimMode::expected);
    CHECK(c.record_agents);
    REQUIRE(c.sweep_axes.size() == 1);
    CHECK(c.sweep_axes[0].cells == 3);
    CHECK(c.sweep_statistics == std::vector<Statistic>{Statistic::d_max});
    CHECK(c.fit_space.axes[1].name == "p");
    CHECK(c.fit.restarts == 3);
    CHECK(c.fit.anneal.iterations == 50);
    CHECK(c.ingest.smooth == 7);
    CHECK(c.ingest.fill == GapFill::previous);
    CHECK(c.ingest.options().start.has_value());
    CHECK(c.identify.q_count == 5);

    const auto e = c.experiment();
    CHECK(e.seed == 7);
    CHECK(e.horizon == 80);
    const auto s = c.sweep();
    CHECK(s.jobs == 2);
    CHECK(s.replicates == 2);
    CHECK(c.fit_config().seed == 7);
    CHECK(c.identify_options().seed == 7);
}

TEST_CASE("errors name the offending field") {
    CHECK(error_path({{"graph", {{"nodez", 5}}}}) == "/graph/nodez");
    CHECK(error_path({{"extra", 1}}) == "/extra");
    CHECK(error_path({{"seed", -1}}) == "/seed");
    CHECK(error_path({{"seed", "7"}}) == "/seed");
    CHECK(error_path({{"jobs", 1.5}}) == "/jobs");
    CHECK(error_path({{"graph", {{"family", "lattice"}}}}) == "/graph/family");
    CHECK(error_path({{"graph", {{"nodes", 0}}}}) == "/graph/nodes");
    CHECK(error_path({{"model", {{"lambda", "high"}}}}) == "/model/lambda");
    CHECK(error_path({{"population", {{"positive_fraction", 1.5}}}}) == "/population/positive_fraction");
    CHECK(error_path({{"population", {{"cluster_positive_fractions", {0.5, 0.5, 0.5}}}}}) ==
          "/population/cluster_positive_fractions");
    CHECK(error_path({{"simulation", {{"mode", "exact"}}}}) == "/simulation/mode");
    CHECK(error_path({{"simulation", {{"horizon", 0}}}}) == "/simulation/horizon");
    CHECK(error_path({{"sweep", {{"axes", {{{"param", "mu"}, {"min", 1}, {"max", 0}, {"cells", 3}}}}}}}) ==
          "/sweep/axes/0/max");
    CHECK(error_path({{"sweep", {{"axes", {{{"param", "mu"}, {"min", 0}, {"max", 1}, {"cells", 1}}}}}}}) ==
          "/sweep/axes/0/cells");
    CHECK(error_path({{"sweep", {{"statistics", {"D_max", "D_median"}}}}}) == "/sweep/statistics/1");
    CHECK(error_path({{"fit", {{"space", {{{"name", "alpha"}, {"min", 0}, {"max", 1}}}}}}}) ==
          "/fit/space/0/name");
    CHECK(error_path({{"fit", {{"space", {{{"name", "p"}, {"min", 0}, {"max", 0.9}}}}}}}) == "/fit/space/0");
    CHECK(error_path({{"fit", {{"anneal", {{"cooling", 1.0}}}}}}) == "/fit/anneal/cooling");
    CHECK(error_path({{"ingest", {{"window_end", "soon"}}}}) == "/ingest/window_end");
    CHECK(error_path({{"identify", {{"q_max", 2.0}}}}) == "/identify/q_max");
    CHECK(error_path({{"schema_version", 2}}) == "/schema_version");
    CHECK(error_path(json::array()) == "");
}

TEST_CASE("error messages carry the path") {
    try {
        parse_run_config({{"graph", {{"nodez", 5}}}});
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()) == "/graph/nodez: unknown key");
    }
}

TEST_CASE("resolved documents round trip") {
    const auto doc = json::parse(R"({
        "seed": 99, "graph": {"family": "watts-strogatz", "nodes": 40, "ws_neighbors": 6},
        "model": {"gamma": 1.5}, "sweep": {"axes": [{"param": "gamma", "min": 0, "max": 2, "cells": 5}]},
        "ingest": {"window_end": "120"}
    })");
    const auto c = parse_run_config(doc);
    const json resolved = to_json(c);
    CHECK(resolved["schema_version"] == kSchemaVersion);
    const auto again = parse_run_config(resolved);
    CHECK(to_json(again) == resolved);
    CHECK(to_json(parse_run_config(json::object())) == to_json(RunConfig{}));
}

TEST_CASE("config files") {
    const auto dir = std::filesystem::temp_directory_path() / "gsmdg_config_test";
    std::filesystem::create_directories(dir);
    const auto good = (dir / "good.json").string();
    const auto bad = (dir / "bad.json").string();
    std::ofstream(good) << R"({"seed": 3})";
    std::ofstream(bad) << R"({"seed": 3,)";
    CHECK(load_run_config(good).seed == 3);
    try {
        load_run_config(bad);
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(e.path().empty());
        CHECK(std::string(e.what()).rfind("/: malformed JSON", 0) == 0);
    }
    CHECK_THROWS_AS(load_run_config((dir / "none.json").string()), std::ios_base::failure);
    std::filesystem::remove_all(dir);
}
