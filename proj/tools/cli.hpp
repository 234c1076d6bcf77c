// Command-line front end. Kept in a header so the tests can drive it
// in-process with captured streams.
#ifndef GSMDG_TOOLS_CLI_HPP
#define GSMDG_TOOLS_CLI_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <gsmdg/gsmdg.hpp>

namespace gsmdg::cli {

enum Exit : int { ok = 0, io_error = 1, config_error = 2, numeric_abort = 3, optimization_failure = 4 };

/// Failure that maps to a specific exit code.
class CommandError : public std::runtime_error {
public:
    CommandError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
    int code() const noexcept { return code_; }

private:
    int code_;
};

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> jobs;
};

namespace detail {

namespace fs = std::filesystem;

inline RunConfig resolve(const CommonFlags& flags) {
    RunConfig c = flags.config.empty() ? RunConfig{} : load_run_config(flags.config);
    if (flags.seed) c.seed = *flags.seed;
    if (flags.out) c.output_dir = *flags.out;
    if (flags.jobs) c.jobs = *flags.jobs;
    if (c.jobs < 1) throw ConfigError("/jobs", "must be at least 1");
    return c;
}

inline std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::ios_base::failure("cannot write " + path.string());
    return os;
}

template <class Fn>
void write_file(const fs::path& path, Fn fn) {
    auto os = open_out(path);
    fn(os);
    os.flush();
    if (!os) throw std::ios_base::failure("failed writing " + path.string());
}

/// Creates the output directory and records the run's provenance.
inline fs::path prepare(const RunConfig& c) {
    const fs::path dir(c.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::ios_base::failure("cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / "resolved_config.json", [&](std::ostream& os) { os << to_json(c).dump(2) << '\n'; });
    write_file(dir / "seed.txt", [&](std::ostream& os) { os << c.seed << '\n'; });
    return dir;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
    write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

}  // namespace detail

inline int cmd_gen_graph(const CommonFlags& flags, std::ostream& out) {
    const RunConfig c = detail::resolve(flags);
    const auto dir = detail::prepare(c);
    GraphGenSpec spec = c.graph;
    spec.seed = stream_seed(c.seed, Stream::graph);
    WeightedDigraph g;
    try {
        g = generate(spec);
    } catch (const GraphGenerationError& e) {
        detail::write_json(dir / "validation.json", {{"error", e.what()}});
        throw CommandError(config_error, e.what());
    }
    const auto report = validate(g);
    detail::write_file(dir / "graph.csv", [&](std::ostream& os) { write_edge_list(os, g); });
    detail::write_json(dir / "validation.json", {{"nodes", g.node_count()},
                                                 {"edges", g.edge_count()},
                                                 {"strongly_connected", report.strongly_connected},
                                                 {"aperiodic", report.aperiodic},
                                                 {"normalized", report.normalized}});
    out << "nodes " << g.node_count() << ", edges " << g.edge_count()
        << ", strongly_connected " << (report.strongly_connected ? "true" : "false")
        << ", aperiodic " << (report.aperiodic ? "true" : "false") << '\n';
    if (!report.ok()) throw CommandError(config_error, "generated graph failed validation");
    return ok;
}

inline int cmd_simulate(const CommonFlags& flags, std::ostream& out) {
    const RunConfig c = detail::resolve(flags);
    const auto dir = detail::prepare(c);
    const auto rep = run_replicate(c.experiment(), c.seed, c.record_agents);
    const auto& tr = rep.trajectory;
    detail::write_file(dir / "graph.csv", [&](std::ostream& os) { write_edge_list(os, rep.graph); });
    detail::write_file(dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory(os, tr); });
    if (c.record_agents) {
        detail::write_file(dir / "opinions.csv", [&](std::ostream& os) { write_agent_matrix(os, tr, false); });
        detail::write_file(dir / "states.csv", [&](std::ostream& os) { write_agent_matrix(os, tr, true); });
    }
    const auto idx = polarization_indices(tr);
    const std::string label(to_string(regime(rep.population)));
    detail::write_json(dir / "summary.json", {{"regime", label},
                                              {"D_max", idx.d_max},
                                              {"D_max_inf", idx.d_max_inf},
                                              {"steps", tr.steps},
                                              {"final_mean_opinion", tr.mean_opinion.back()},
                                              {"seed", c.seed}});
    out << "regime " << label << '\n'
        << "D_max " << csv::format(idx.d_max) << '\n'
        << "D_max_inf " << csv::format(idx.d_max_inf) << '\n';
    return ok;
}

inline int cmd_sweep(const CommonFlags& flags, std::ostream& out) {
    const RunConfig c = detail::resolve(flags);
    if (c.sweep_axes.empty()) throw ConfigError("/sweep/axes", "at least one axis is required");
    const auto spec = c.sweep();
    gsmdg::detail::checked("/sweep", {}, [&] { spec.check(); });
    const auto dir = detail::prepare(c);
    const auto res = run_sweep(spec);
    detail::write_file(dir / "sweep_long.csv", [&](std::ostream& os) { write_sweep_long(os, res); });
    for (Statistic s : spec.statistics) {
        if (s == Statistic::event_fraction_curve) continue;
        detail::write_file(dir / ("heatmap_" + std::string(to_string(s)) + ".csv"),
                           [&](std::ostream& os) { write_heatmap(os, res, s); });
    }
    detail::write_file(dir / "failures.csv", [&](std::ostream& os) { write_failures(os, res); });
    out << res.cells.size() << " cells, " << res.failed_cells() << " with failures\n";
    std::size_t all_failed = 0;
    for (const auto& cell : res.cells) all_failed += cell.failure_count() == cell.failures.size();
    if (all_failed == res.cells.size()) throw CommandError(optimization_failure, "every sweep cell failed");
    return ok;
}

inline int cmd_fit(const CommonFlags& flags, const std::string& data_path, std::ostream& out) {
    const RunConfig c = detail::resolve(flags);
    const auto dir = detail::prepare(c);
    const auto raw = load_series(data_path);
    PreprocessOptions opt;
    try {
        opt = c.ingest.options();
    } catch (const DataError& e) {
        throw ConfigError("/ingest", e.what());
    }
    const auto series = preprocess(raw, opt);
    detail::write_file(dir / "series.csv", [&](std::ostream& os) { write_series(os, series); });
    const auto cfg = c.fit_config();
    const FitResult res = c.fit_space.axis_index("p") ? fit_with_stubbornness(series.values, c.fit_space, cfg)
                                                      : fit(series.values, c.fit_space, cfg);
    const std::string label = std::filesystem::path(data_path).stem().string();
    detail::write_file(dir / "fit.csv", [&](std::ostream& os) {
        write_fit_header(os);
        write_fit_row(os, label, res);
    });
    detail::write_file(dir / "grid.csv", [&](std::ostream& os) { write_grid(os, res.grid); });
    detail::write_file(dir / "anneal_trace.csv", [&](std::ostream& os) { write_anneal_traces(os, res); });
    write_fit_header(out);
    write_fit_row(out, label, res);
    return ok;
}

inline int cmd_identify(const CommonFlags& flags, const std::string& grid_path, std::ostream& out) {
    const RunConfig c = detail::resolve(flags);
    const auto dir = detail::prepare(c);
    std::ifstream in(grid_path);
    if (!in) throw std::ios_base::failure("cannot open " + grid_path);
    GridTable table;
    try {
        table = read_grid(in);
    } catch (const std::invalid_argument& e) {
        throw DataError(grid_path + ": " + e.what());
    }
    std::vector<ChiPoint> curve;
    try {
        curve = identifiability(table.points, table.scores, c.identify_options());
    } catch (const std::invalid_argument& e) {
        throw DataError(grid_path + ": " + e.what());
    }
    detail::write_file(dir / "chi.csv", [&](std::ostream& os) { write_chi(os, curve); });
    write_chi(out, curve);
    return ok;
}

/// Parses the command line and runs one subcommand; returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"GSM-DeGroot opinion and event dynamics toolkit", "gsmdg"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    CommonFlags flags;
    std::string data_path, grid_path;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", flags.seed, "master seed (overrides the config)");
        sub->add_option("--out", flags.out, "output directory (overrides the config)");
        sub->add_option("--jobs", flags.jobs, "worker threads (overrides the config)");
    };
    auto* gen = app.add_subcommand("gen-graph", "generate and validate an interaction graph");
    auto* sim = app.add_subcommand("simulate", "run one trajectory");
    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    auto* fit_cmd = app.add_subcommand("fit", "fit the surrogate to an observed series");
    auto* identify = app.add_subcommand("identify", "identifiability curve of a scored grid");
    for (auto* sub : {gen, sim, sweep, fit_cmd, identify}) common(sub);
    fit_cmd->add_option("--data", data_path, "timestamp,value CSV")->required();
    identify->add_option("--grid", grid_path, "grid.csv written by fit")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    }

    try {
        if (*gen) return cmd_gen_graph(flags, out);
        if (*sim) return cmd_simulate(flags, out);
        if (*sweep) return cmd_sweep(flags, out);
        if (*fit_cmd) return cmd_fit(flags, data_path, out);
        return cmd_identify(flags, grid_path, out);
    } catch (const CommandError& e) {
        err << "error: " << e.what() << '\n';
        return e.code();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return config_error;
    } catch (const SimulationError& e) {
        err << "numeric abort: " << e.what() << '\n';
        return numeric_abort;
    } catch (const FitError& e) {
        err << "optimization failure: " << e.what() << '\n';
        return optimization_failure;
    } catch (const std::ios_base::failure& e) {
        err << "i/o error: " << e.what() << '\n';
        return io_error;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return io_error;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << '\n';
        return config_error;
    } catch (const GraphGenerationError& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    } catch (const ConvergenceError& e) {
        err << "numeric abort: " << e.what() << '\n';
        return numeric_abort;
    }
}

}  // namespace gsmdg::cli

#endif
