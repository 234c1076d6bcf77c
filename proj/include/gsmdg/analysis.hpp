#ifndef GSMDG_ANALYSIS_HPP
#define GSMDG_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "csv.hpp"
#include "dynamics.hpp"
#include "graph.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace gsmdg {

// ---------------------------------------------------------------------------
// Polarization indices and regimes
// ---------------------------------------------------------------------------

/// Length of the trailing window used as the finite-horizon stand-in for
/// t -> infinity: the last 10% of the steps, at least one.
inline std::size_t tail_window(std::size_t steps) {
    return std::max<std::size_t>(1, (steps + 9) / 10);
}

inline double tail_mean(std::span<const double> series) {
    if (series.empty()) throw std::invalid_argument("tail_mean: empty series");
    const std::size_t w = tail_window(series.size());
    double sum = 0.0;
    for (std::size_t t = series.size() - w; t < series.size(); ++t) sum += series[t];
    return sum / static_cast<double>(w);
}

struct PolarizationIndices {
    double d_max = 0.0;      // max_t D_max,t
    double d_max_inf = 0.0;  // mean of D_max,t over the final window
};

inline PolarizationIndices polarization_indices(const Trajectory& traj) {
    if (traj.max_diversity.empty()) {
        throw std::invalid_argument("polarization_indices: empty trajectory");
    }
    return {*std::max_element(traj.max_diversity.begin(), traj.max_diversity.end()),
            tail_mean(traj.max_diversity)};
}

enum class Regime { self_cooling, self_exciting, critical };

inline std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::self_cooling: return "self-cooling";
        case Regime::self_exciting: return "self-exciting";
        case Regime::critical: return "critical";
    }
    return "unknown";
}

/// Classifies a +-1 population by its positive fraction beta: the mean
/// opinion drifts by (2 beta - 1) gamma S_t per step.
inline Regime regime(const Population& pop) {
    for (double b : pop.reactions) {
        if (b != 1.0 && b != -1.0) {
            throw std::invalid_argument("regime is only defined for reactions in {-1,+1}");
        }
    }
    const auto n = static_cast<std::size_t>(pop.size());
    const auto pos = static_cast<std::size_t>(
        std::count(pop.reactions.begin(), pop.reactions.end(), 1.0));
    if (2 * pos < n) return Regime::self_cooling;
    if (2 * pos > n) return Regime::self_exciting;
    return Regime::critical;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct PopulationSpec {
    double positive_fraction = 0.5;
    /// Per-cluster positive fractions (SBM layouts); overrides positive_fraction
    /// when non-empty.
    std::vector<double> cluster_positive_fractions;
    double stubborn_fraction = 0.0;
    double susceptibility = 1.0;
};

/// Everything needed to produce one (graph, X0, trajectory) triple.
struct ExperimentConfig {
    GraphGenSpec graph;
    PopulationSpec population;
    ModelParams params;
    std::size_t horizon = 500;
    SimMode mode = SimMode::stochastic;
    double weight_scale = 1.0;
    std::uint64_t seed = 0;
};

/// Sub-stream tags of a replicate seed.
enum class Stream : std::uint64_t { graph = 1, reactions = 2, opinions = 3, stubborn = 4, dynamics = 5 };

inline std::uint64_t stream_seed(std::uint64_t replicate_seed, Stream s) {
    return derive_seed(replicate_seed, static_cast<std::uint64_t>(s));
}

inline Population build_population(const ExperimentConfig& cfg, std::uint64_t replicate_seed) {
    const std::size_t n = cfg.graph.nodes;
    const PopulationSpec& ps = cfg.population;
    Population pop;
    if (!ps.cluster_positive_fractions.empty()) {
        const auto sizes = cluster_sizes(cfg.graph);
        pop.reactions = sample_reactions_by_cluster(sizes, ps.cluster_positive_fractions,
                                                    stream_seed(replicate_seed, Stream::reactions));
    } else {
        pop.reactions = sample_reactions(n, ps.positive_fraction,
                                         stream_seed(replicate_seed, Stream::reactions));
    }
    pop.initial_opinions = init_opinions(n, cfg.params.mu, cfg.params.sigma,
                                         stream_seed(replicate_seed, Stream::opinions));
    pop.fully_stubborn = ps.stubborn_fraction > 0.0
                             ? sample_stubborn_mask(n, ps.stubborn_fraction,
                                                    stream_seed(replicate_seed, Stream::stubborn))
                             : std::vector<bool>(n, false);
    pop.susceptibility.assign(n, ps.susceptibility);
    pop.check();
    return pop;
}

struct Replicate {
    WeightedDigraph graph;
    Population population;
    Trajectory trajectory;
};

/// Generates graph, population and trajectory from one replicate seed.
inline Replicate run_replicate(const ExperimentConfig& cfg, std::uint64_t replicate_seed,
                               bool record_agents = false) {
    GraphGenSpec gs = cfg.graph;
    gs.seed = stream_seed(replicate_seed, Stream::graph);
    Replicate rep;
    rep.graph = generate(gs);
    rep.population = build_population(cfg, replicate_seed);
    SimOptions opts;
    opts.mode = cfg.mode;
    opts.record_agents = record_agents;
    opts.weight_scale = cfg.weight_scale;
    rep.trajectory = simulate(rep.graph, rep.population, cfg.params, cfg.horizon,
                              stream_seed(replicate_seed, Stream::dynamics), opts);
    return rep;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepParam { mu, gamma, r, beta, alpha, network_size, family_param };

inline std::string_view to_string(SweepParam p) {
    switch (p) {
        case SweepParam::mu: return "mu";
        case SweepParam::gamma: return "gamma";
        case SweepParam::r: return "r";
        case SweepParam::beta: return "beta";
        case SweepParam::alpha: return "alpha";
        case SweepParam::network_size: return "network-size";
        case SweepParam::family_param: return "family-param";
    }
    return "unknown";
}

inline SweepParam parse_sweep_param(std::string_view name) {
    for (auto p : {SweepParam::mu, SweepParam::gamma, SweepParam::r, SweepParam::beta,
                   SweepParam::alpha, SweepParam::network_size, SweepParam::family_param}) {
        if (name == to_string(p)) return p;
    }
    throw std::invalid_argument("unknown sweep parameter '" + std::string(name) + "'");
}

enum class Statistic { d_max, d_max_inf, x_min_final, x_max_final, event_fraction_curve };

inline std::string_view to_string(Statistic s) {
    switch (s) {
        case Statistic::d_max: return "D_max";
        case Statistic::d_max_inf: return "D_max_inf";
        case Statistic::x_min_final: return "X_min_final";
        case Statistic::x_max_final: return "X_max_final";
        case Statistic::event_fraction_curve: return "event_fraction_curve";
    }
    return "unknown";
}

inline Statistic parse_statistic(std::string_view name) {
    for (auto s : {Statistic::d_max, Statistic::d_max_inf, Statistic::x_min_final,
                   Statistic::x_max_final, Statistic::event_fraction_curve}) {
        if (name == to_string(s)) return s;
    }
    throw std::invalid_argument("unknown statistic '" + std::string(name) + "'");
}

struct SweepAxis {
    SweepParam param = SweepParam::gamma;
    double lo = 0.0;
    double hi = 1.0;
    std::size_t cells = 2;

    /// Inclusive linear grid lo .. hi with `cells` points.
    std::vector<double> values() const {
        std::vector<double> v(cells);
        for (std::size_t k = 0; k < cells; ++k) {
            v[k] = cells == 1 ? lo
                              : lo + (hi - lo) * static_cast<double>(k) /
                                         static_cast<double>(cells - 1);
        }
        return v;
    }
};

struct SweepSpec {
    std::vector<SweepAxis> axes;
    std::size_t replicates = 5;
    std::vector<Statistic> statistics{Statistic::d_max, Statistic::d_max_inf};
    ExperimentConfig base;
    std::size_t jobs = 1;

    void check() const {
        if (axes.empty() || axes.size() > 2) {
            throw std::invalid_argument("a sweep needs one or two axes");
        }
        for (const auto& a : axes) {
            if (a.cells < 2) throw std::invalid_argument("sweep axis needs at least 2 cells");
            if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.hi < a.lo) {
                throw std::invalid_argument("sweep axis range must be finite with min <= max");
            }
        }
        if (replicates < 1) throw std::invalid_argument("replicates must be at least 1");
        if (statistics.empty()) throw std::invalid_argument("no statistics requested");
    }

    std::size_t cell_count() const {
        std::size_t c = 1;
        for (const auto& a : axes) c *= a.cells;
        return c;
    }
};

/// Writes one axis value into an experiment configuration.
inline void apply_axis(ExperimentConfig& cfg, SweepParam p, double v) {
    switch (p) {
        case SweepParam::mu: cfg.params.mu = v; break;
        case SweepParam::gamma: cfg.params.gamma = v; break;
        case SweepParam::r: cfg.graph.inter_probability = v; break;
        case SweepParam::beta:
            cfg.population.positive_fraction = v;
            cfg.population.cluster_positive_fractions.clear();
            break;
        case SweepParam::alpha: cfg.weight_scale = v; break;
        case SweepParam::network_size:
            cfg.graph.nodes = static_cast<std::size_t>(std::llround(v));
            break;
        case SweepParam::family_param:
            switch (cfg.graph.family) {
                case GraphFamily::barabasi_albert:
                    cfg.graph.ba_attachment = static_cast<std::size_t>(std::llround(v));
                    break;
                case GraphFamily::watts_strogatz:
                    cfg.graph.ws_neighbors = static_cast<std::size_t>(std::llround(v / 2.0)) * 2;
                    break;
                case GraphFamily::erdos_renyi: cfg.graph.er_probability = v; break;
                case GraphFamily::sbm: cfg.graph.intra_probability = v; break;
                case GraphFamily::identity: break;
            }
            break;
    }
}

struct SweepCell {
    std::vector<double> coords;
    std::map<Statistic, std::vector<double>> values;  // replicate-indexed; NaN on failure
    std::vector<std::vector<double>> curves;          // event-fraction curves, if requested
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> failures;  // replicate-indexed; empty string = success

    std::size_t failure_count() const {
        return static_cast<std::size_t>(std::count_if(
            failures.begin(), failures.end(), [](const std::string& f) { return !f.empty(); }));
    }

    /// Mean over successful replicates (NaN if none).
    double mean(Statistic s) const {
        const auto& v = values.at(s);
        double sum = 0.0;
        std::size_t k = 0;
        for (double x : v) {
            if (std::isnan(x)) continue;
            sum += x;
            ++k;
        }
        return k ? sum / static_cast<double>(k) : std::numeric_limits<double>::quiet_NaN();
    }

    /// Sample standard deviation over successful replicates (0 for one).
    double stddev(Statistic s) const {
        const auto& v = values.at(s);
        const double m = mean(s);
        double ss = 0.0;
        std::size_t k = 0;
        for (double x : v) {
            if (std::isnan(x)) continue;
            ss += (x - m) * (x - m);
            ++k;
        }
        return k > 1 ? std::sqrt(ss / static_cast<double>(k - 1)) : 0.0;
    }
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepCell> cells;  // row-major, first axis slowest

    const SweepCell& at(std::size_t i, std::size_t j = 0) const {
        const std::size_t inner = spec.axes.size() > 1 ? spec.axes[1].cells : 1;
        return cells.at(i * inner + j);
    }

    std::size_t failed_cells() const {
        return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const SweepCell& c) {
            return c.failure_count() == c.failures.size();
        }));
    }
};

/// Replicate seed of (cell, replicate) under the base seed.
inline std::uint64_t sweep_seed(std::uint64_t base_seed, std::size_t cell, std::size_t replicate) {
    return derive_seed(base_seed, cell, replicate);
}

/// Runs every (cell, replicate) pair, possibly concurrently. A failing
/// replicate is recorded in its cell (NaN statistics plus the error message)
/// without stopping the sweep. The result does not depend on `spec.jobs`.
inline SweepResult run_sweep(const SweepSpec& spec) {
    spec.check();
    SweepResult result;
    result.spec = spec;
    const std::size_t cells = spec.cell_count();
    const std::size_t reps = spec.replicates;
    const std::size_t inner = spec.axes.size() > 1 ? spec.axes[1].cells : 1;

    std::vector<std::vector<double>> axis_values;
    for (const auto& a : spec.axes) axis_values.push_back(a.values());

    result.cells.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        SweepCell& cell = result.cells[c];
        cell.coords.push_back(axis_values[0][c / inner]);
        if (spec.axes.size() > 1) cell.coords.push_back(axis_values[1][c % inner]);
        for (Statistic s : spec.statistics) {
            if (s != Statistic::event_fraction_curve) {
                cell.values[s].assign(reps, std::numeric_limits<double>::quiet_NaN());
            }
        }
        cell.curves.resize(reps);
        cell.failures.resize(reps);
        cell.seeds.resize(reps);
    }

    parallel_for(cells * reps, spec.jobs, [&](std::size_t task) {
        const std::size_t c = task / reps;
        const std::size_t r = task % reps;
        SweepCell& cell = result.cells[c];
        ExperimentConfig cfg = spec.base;
        for (std::size_t a = 0; a < spec.axes.size(); ++a) {
            apply_axis(cfg, spec.axes[a].param, cell.coords[a]);
        }
        const std::uint64_t seed = sweep_seed(spec.base.seed, c, r);
        cell.seeds[r] = seed;
        try {
            const Replicate rep = run_replicate(cfg, seed);
            const Trajectory& tr = rep.trajectory;
            const auto idx = polarization_indices(tr);
            for (Statistic s : spec.statistics) {
                switch (s) {
                    case Statistic::d_max: cell.values.at(s)[r] = idx.d_max; break;
                    case Statistic::d_max_inf: cell.values.at(s)[r] = idx.d_max_inf; break;
                    case Statistic::x_min_final: cell.values.at(s)[r] = tr.min_opinion.back(); break;
                    case Statistic::x_max_final: cell.values.at(s)[r] = tr.max_opinion.back(); break;
                    case Statistic::event_fraction_curve: cell.curves[r] = tr.event_fraction; break;
                }
            }
        } catch (const std::exception& e) {
            cell.failures[r] = e.what();
        }
    });
    return result;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// Long format: `axis1,axis2,replicate,statistic,value` (axis2 empty for
/// one-axis sweeps; curve points are named event_fraction_curve[t]).
inline void write_sweep_long(std::ostream& os, const SweepResult& res) {
    os << "axis1,axis2,replicate,statistic,value\n";
    for (const SweepCell& cell : res.cells) {
        const std::string a1 = csv::format(cell.coords[0]);
        const std::string a2 = cell.coords.size() > 1 ? csv::format(cell.coords[1]) : "";
        for (std::size_t r = 0; r < cell.failures.size(); ++r) {
            for (Statistic s : res.spec.statistics) {
                if (s == Statistic::event_fraction_curve) {
                    for (std::size_t t = 0; t < cell.curves[r].size(); ++t) {
                        os << a1 << ',' << a2 << ',' << r << ",event_fraction_curve[" << t << "],"
                           << csv::format(cell.curves[r][t]) << '\n';
                    }
                } else {
                    os << a1 << ',' << a2 << ',' << r << ',' << to_string(s) << ','
                       << csv::format(cell.values.at(s)[r]) << '\n';
                }
            }
        }
    }
}

/// Cell means pivoted into a grid: header row holds the second-axis values,
/// each following row starts with a first-axis value. One-axis sweeps give a
/// two-column table.
inline void write_heatmap(std::ostream& os, const SweepResult& res, Statistic s) {
    const auto& axes = res.spec.axes;
    const auto v1 = axes[0].values();
    if (axes.size() == 1) {
        os << to_string(axes[0].param) << ",mean\n";
        for (std::size_t i = 0; i < v1.size(); ++i) {
            os << csv::format(v1[i]) << ',' << csv::format(res.at(i).mean(s)) << '\n';
        }
        return;
    }
    const auto v2 = axes[1].values();
    os << to_string(axes[0].param) << '\\' << to_string(axes[1].param);
    for (double v : v2) os << ',' << csv::format(v);
    os << '\n';
    for (std::size_t i = 0; i < v1.size(); ++i) {
        os << csv::format(v1[i]);
        for (std::size_t j = 0; j < v2.size(); ++j) os << ',' << csv::format(res.at(i, j).mean(s));
        os << '\n';
    }
}

/// `axis1,axis2,replicate,error` for every failed replicate.
inline void write_failures(std::ostream& os, const SweepResult& res) {
    os << "axis1,axis2,replicate,error\n";
    for (const SweepCell& cell : res.cells) {
        for (std::size_t r = 0; r < cell.failures.size(); ++r) {
            if (cell.failures[r].empty()) continue;
            std::string msg = cell.failures[r];
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            os << csv::format(cell.coords[0]) << ','
               << (cell.coords.size() > 1 ? csv::format(cell.coords[1]) : "") << ',' << r << ','
               << msg << '\n';
        }
    }
}

}  // namespace gsmdg

#endif  // GSMDG_ANALYSIS_HPP
