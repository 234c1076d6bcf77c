#ifndef GSMDG_FITTING_HPP
#define GSMDG_FITTING_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "analysis.hpp"
#include "csv.hpp"
#include "dynamics.hpp"
#include "graph.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace gsmdg {

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scale-invariant distance
// ---------------------------------------------------------------------------

struct Distance {
    double distance = 0.0;  // ||data - s model|| / ||data||
    double scale = 0.0;     // s*
};

/// Residual of the best non-negative rescaling of `model` against `data`,
/// relative to the norm of the data. s* = <data,model>/<model,model> clamped
/// at 0, and 0 for an all-zero model.
inline Distance scale_invariant_distance(std::span<const double> data,
                                         std::span<const double> model) {
    if (data.size() != model.size()) {
        throw std::invalid_argument("scale_invariant_distance: length mismatch (" +
                                    std::to_string(data.size()) + " vs " +
                                    std::to_string(model.size()) + ")");
    }
    if (data.empty()) throw std::invalid_argument("scale_invariant_distance: empty series");
    double dd = 0.0, dm = 0.0, mm = 0.0;
    for (std::size_t t = 0; t < data.size(); ++t) {
        dd += data[t] * data[t];
        dm += data[t] * model[t];
        mm += model[t] * model[t];
    }
    if (!(dd > 0.0)) throw std::invalid_argument("scale_invariant_distance: data norm is zero");
    const double s = mm > 0.0 ? std::max(0.0, dm / mm) : 0.0;
    double rr = 0.0;
    for (std::size_t t = 0; t < data.size(); ++t) {
        const double e = data[t] - s * model[t];
        rr += e * e;
    }
    return {std::sqrt(rr / dd), s};
}

// ---------------------------------------------------------------------------
// Parameter space
// ---------------------------------------------------------------------------

/// One optimization axis. An axis with lo == hi is fixed (resolution 1).
struct ParamAxis {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    std::size_t resolution = 2;

    bool fixed() const noexcept { return lo == hi; }
    double range() const noexcept { return hi - lo; }
    double cell_width() const noexcept { return range() / static_cast<double>(resolution); }
    double center(std::size_t k) const noexcept {
        return fixed() ? lo : lo + (static_cast<double>(k) + 0.5) * cell_width();
    }
};

/// Box of admissible (mu, gamma, r[, p]) triplets, gridded per axis.
struct ParamSpace {
    std::vector<ParamAxis> axes;

    static ParamSpace defaults(std::size_t resolution = 8) {
        return ParamSpace{{{"mu", -500.0, 500.0, resolution},
                           {"gamma", 0.0, 50.0, resolution},
                           {"r", 0.0, 0.5, resolution}}};
    }

    /// Adds (or replaces) the stubborn-proportion axis p in [0, p_max].
    ParamSpace with_stubbornness(double p_max, std::size_t resolution) const {
        ParamSpace s = *this;
        std::erase_if(s.axes, [](const ParamAxis& a) { return a.name == "p"; });
        s.axes.push_back({"p", 0.0, p_max, resolution});
        return s;
    }

    /// Same space with one axis pinned to a single value.
    ParamSpace with_fixed(const std::string& name, double value) const {
        ParamSpace s = *this;
        for (auto& a : s.axes) {
            if (a.name == name) a = {name, value, value, 1};
        }
        return s;
    }

    void check() const {
        if (axes.empty()) throw std::invalid_argument("parameter space has no axes");
        for (const auto& a : axes) {
            if (!std::isfinite(a.lo) || !std::isfinite(a.hi)) {
                throw std::invalid_argument("axis " + a.name + " has non-finite bounds");
            }
            if (a.fixed()) {
                if (a.resolution != 1) {
                    throw std::invalid_argument("fixed axis " + a.name + " needs resolution 1");
                }
            } else if (!(a.lo < a.hi) || a.resolution < 2) {
                throw std::invalid_argument("axis " + a.name +
                                            " needs lower < upper and resolution >= 2");
            }
        }
    }

    std::size_t dims() const noexcept { return axes.size(); }

    std::size_t free_dims() const noexcept {
        return static_cast<std::size_t>(
            std::count_if(axes.begin(), axes.end(), [](const ParamAxis& a) { return !a.fixed(); }));
    }

    std::size_t cell_count() const noexcept {
        std::size_t c = 1;
        for (const auto& a : axes) c *= a.resolution;
        return c;
    }

    /// Per-axis cell indices of a flat index (last axis fastest).
    std::vector<std::size_t> cell_indices(std::size_t flat) const {
        std::vector<std::size_t> idx(axes.size());
        for (std::size_t d = axes.size(); d-- > 0;) {
            idx[d] = flat % axes[d].resolution;
            flat /= axes[d].resolution;
        }
        return idx;
    }

    std::vector<double> cell_center(std::size_t flat) const {
        const auto idx = cell_indices(flat);
        std::vector<double> c(axes.size());
        for (std::size_t d = 0; d < axes.size(); ++d) c[d] = axes[d].center(idx[d]);
        return c;
    }

    bool contains(std::span<const double> point) const {
        if (point.size() != axes.size()) return false;
        for (std::size_t d = 0; d < axes.size(); ++d) {
            if (!(point[d] >= axes[d].lo && point[d] <= axes[d].hi)) return false;
        }
        return true;
    }

    std::optional<std::size_t> axis_index(const std::string& name) const {
        for (std::size_t d = 0; d < axes.size(); ++d) {
            if (axes[d].name == name) return d;
        }
        return std::nullopt;
    }

    double value_or(std::span<const double> point, const std::string& name, double fallback) const {
        const auto d = axis_index(name);
        return d ? point[*d] : fallback;
    }
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct AnnealSettings {
    double initial_temperature = 10.0;    // T0
    double cooling = 0.95;                // eta
    double neighborhood_volume = 0.001;   // vol, fraction of |Omega|
    std::size_t iterations = 2000;

    void check() const {
        if (!(initial_temperature > 0.0)) throw std::invalid_argument("T0 must be positive");
        if (!(cooling > 0.0 && cooling < 1.0)) throw std::invalid_argument("cooling must lie in (0,1)");
        if (!(neighborhood_volume > 0.0 && neighborhood_volume < 1.0)) {
            throw std::invalid_argument("neighborhood volume must lie in (0,1)");
        }
    }
};

inline GraphGenSpec default_surrogate() {
    GraphGenSpec g;
    g.family = GraphFamily::sbm;
    g.nodes = 100;
    g.cluster_ratios = {0.7, 0.3};
    g.intra_probability = 0.5;
    g.inter_probability = 0.1;
    return g;
}

struct FitConfig {
    GraphGenSpec surrogate = default_surrogate();
    std::vector<double> cluster_positive_fractions{0.3, 0.7};
    double lambda = 0.01;
    double sigma = 1.0;
    std::size_t replicates = 5;
    double noise_weight = 1.0;  // omega in score = mean + omega * std
    std::size_t restarts = 5;   // K
    AnnealSettings anneal;
    SimMode mode = SimMode::stochastic;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    void check() const {
        validate_spec(surrogate);
        if (surrogate.family == GraphFamily::sbm &&
            cluster_positive_fractions.size() != surrogate.cluster_ratios.size()) {
            throw std::invalid_argument("one positive fraction per surrogate cluster is required");
        }
        if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
        if (replicates < 1) throw std::invalid_argument("replicates must be at least 1");
        if (!(noise_weight >= 0.0)) throw std::invalid_argument("noise_weight must be >= 0");
        anneal.check();
    }
};

// ---------------------------------------------------------------------------
// Point evaluation
// ---------------------------------------------------------------------------

struct PointScore {
    double score = 0.0;       // mean_error + omega * error_std
    double mean_error = 0.0;  // mean distance over replicates
    double error_std = 0.0;   // sample std of the distance (0 for one replicate)
    double mean_scale = 0.0;  // mean s* over replicates
};

namespace detail {

inline std::string describe_point(const ParamSpace& space, std::span<const double> point) {
    std::string s = "(";
    for (std::size_t d = 0; d < point.size() && d < space.axes.size(); ++d) {
        if (d) s += ", ";
        s += space.axes[d].name + "=" + csv::format(point[d]);
    }
    return s + ")";
}

}  // namespace detail

/// Event-fraction series of one surrogate replicate at (mu, gamma, r, p).
/// Replicate seeds are shared by all points (common random numbers), so the
/// score is a deterministic function of (config seed, point).
inline std::vector<double> surrogate_series(double mu, double gamma, double r, double p,
                                            std::size_t horizon, const FitConfig& config,
                                            std::uint64_t replicate_seed) {
    ExperimentConfig exp;
    exp.graph = config.surrogate;
    exp.graph.inter_probability = r;
    exp.population.cluster_positive_fractions = config.cluster_positive_fractions;
    if (config.surrogate.family != GraphFamily::sbm) {
        exp.population.cluster_positive_fractions.resize(1);
    }
    exp.population.stubborn_fraction = p;
    exp.params.lambda = config.lambda;
    exp.params.gamma = gamma;
    exp.params.mu = mu;
    exp.params.sigma = config.sigma;
    exp.horizon = horizon;
    exp.mode = config.mode;
    return run_replicate(exp, replicate_seed).trajectory.event_fraction;
}

inline std::uint64_t evaluation_seed(const FitConfig& config, std::size_t replicate) {
    return derive_seed(config.seed, 0x6576616c, replicate);
}

/// Scores one point of the space against the data: R surrogate replicates of
/// length len(data), mean and spread of their distances to the data.
inline PointScore evaluate_point(std::span<const double> point, std::span<const double> data,
                                 const ParamSpace& space, const FitConfig& config) {
    if (!space.contains(point)) {
        throw FitError("point " + detail::describe_point(space, point) +
                       " lies outside the parameter space");
    }
    const double mu = space.value_or(point, "mu", 0.0);
    const double gamma = space.value_or(point, "gamma", 0.0);
    const double r = space.value_or(point, "r", config.surrogate.inter_probability);
    const double p = space.value_or(point, "p", 0.0);

    std::vector<double> errors(config.replicates);
    double scale_sum = 0.0;
    try {
        for (std::size_t k = 0; k < config.replicates; ++k) {
            const auto model =
                surrogate_series(mu, gamma, r, p, data.size(), config, evaluation_seed(config, k));
            const Distance d = scale_invariant_distance(data, model);
            errors[k] = d.distance;
            scale_sum += d.scale;
        }
    } catch (const std::exception& e) {
        throw FitError("evaluation failed at " + detail::describe_point(space, point) + ": " +
                       e.what());
    }

    PointScore ps;
    const double n = static_cast<double>(errors.size());
    ps.mean_error = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
    double ss = 0.0;
    for (double e : errors) ss += (e - ps.mean_error) * (e - ps.mean_error);
    ps.error_std = errors.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    ps.score = config.noise_weight == 0.0 ? ps.mean_error
                                          : ps.mean_error + config.noise_weight * ps.error_std;
    ps.mean_scale = scale_sum / n;
    return ps;
}

// ---------------------------------------------------------------------------
// Grid exploration
// ---------------------------------------------------------------------------

struct GridCell {
    std::size_t index = 0;
    std::vector<double> coords;  // cell center
    PointScore score;
    std::string error;  // empty on success

    bool ok() const noexcept { return error.empty(); }
};

struct GridScores {
    ParamSpace space;
    std::vector<GridCell> cells;

    std::size_t failures() const {
        return static_cast<std::size_t>(
            std::count_if(cells.begin(), cells.end(), [](const GridCell& c) { return !c.ok(); }));
    }
};

/// Evaluates `scorer` at every cell center. Failures are recorded per cell.
template <class Scorer>
GridScores grid_explore(const ParamSpace& space, Scorer&& scorer, std::size_t jobs) {
    space.check();
    GridScores grid;
    grid.space = space;
    grid.cells.resize(space.cell_count());
    parallel_for(grid.cells.size(), jobs, [&](std::size_t i) {
        GridCell& cell = grid.cells[i];
        cell.index = i;
        cell.coords = space.cell_center(i);
        try {
            cell.score = scorer(std::span<const double>(cell.coords));
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    });
    return grid;
}

inline GridScores grid_explore(std::span<const double> data, const ParamSpace& space,
                               const FitConfig& config) {
    config.check();
    return grid_explore(
        space, [&](std::span<const double> p) { return evaluate_point(p, data, space, config); },
        config.jobs);
}

// ---------------------------------------------------------------------------
// Simulated annealing
// ---------------------------------------------------------------------------

/// Metropolis rule: improvements are always taken, a worsening by `delta` is
/// taken when u < exp(-delta / temperature).
inline bool accept_move(double delta, double temperature, double u) {
    if (delta < 0.0) return true;
    return u < std::exp(-delta / temperature);
}

struct AnnealStep {
    std::size_t iteration = 0;
    double temperature = 0.0;
    double candidate_score = 0.0;
    double current_score = 0.0;
    double best_score = 0.0;
    bool accepted = false;
};

struct AnnealResult {
    std::vector<double> best_point;
    double best_score = 0.0;
    std::vector<AnnealStep> trace;
};

/// Half-widths of the neighborhood cuboid: together the free axes span
/// vol * |Omega|, split evenly in relative terms across axes.
inline std::vector<double> neighborhood_half_widths(const ParamSpace& space, double vol) {
    const std::size_t free = space.free_dims();
    const double rel = free ? std::pow(vol, 1.0 / static_cast<double>(free)) : 0.0;
    std::vector<double> h(space.dims(), 0.0);
    for (std::size_t d = 0; d < space.dims(); ++d) {
        if (!space.axes[d].fixed()) h[d] = space.axes[d].range() * rel / 2.0;
    }
    return h;
}

/// Simulated annealing from `start`. Proposals are uniform in the
/// neighborhood cuboid clipped to the space; temperature starts at T0 and is
/// multiplied by eta after every iteration. Returns the best point ever
/// visited (the start included).
template <class Scorer>
AnnealResult anneal(std::span<const double> start, const ParamSpace& space,
                    const AnnealSettings& settings, Scorer&& scorer, std::uint64_t seed) {
    settings.check();
    if (!space.contains(start)) throw FitError("annealing start lies outside the space");
    Rng rng(seed);
    const auto half = neighborhood_half_widths(space, settings.neighborhood_volume);

    std::vector<double> current(start.begin(), start.end());
    double current_score = scorer(std::span<const double>(current));
    AnnealResult res{current, current_score, {}};
    res.trace.reserve(settings.iterations);

    std::vector<double> candidate(current.size());
    double temperature = settings.initial_temperature;
    for (std::size_t it = 0; it < settings.iterations; ++it) {
        for (std::size_t d = 0; d < candidate.size(); ++d) {
            const auto& axis = space.axes[d];
            if (axis.fixed()) {
                candidate[d] = axis.lo;
                continue;
            }
            const double lo = std::max(axis.lo, current[d] - half[d]);
            const double hi = std::min(axis.hi, current[d] + half[d]);
            candidate[d] = lo + (hi - lo) * uniform01(rng);
        }
        const double cand_score = scorer(std::span<const double>(candidate));
        const bool accepted = accept_move(cand_score - current_score, temperature, uniform01(rng));
        if (accepted) {
            current = candidate;
            current_score = cand_score;
            if (current_score < res.best_score) {
                res.best_score = current_score;
                res.best_point = current;
            }
        }
        res.trace.push_back({it, temperature, cand_score, current_score, res.best_score, accepted});
        temperature *= settings.cooling;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

/// Picks up to k best successful cells, skipping any cell closer than one
/// cell diagonal (in cell-index units) to an already chosen one. If too few
/// separated cells exist, the best remaining cells fill the quota.
inline std::vector<std::size_t> select_starts(const GridScores& grid, std::size_t k) {
    std::vector<std::size_t> order;
    for (const auto& c : grid.cells) {
        if (c.ok()) order.push_back(c.index);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return grid.cells[a].score.score < grid.cells[b].score.score;
    });
    const double diagonal = std::sqrt(static_cast<double>(grid.space.free_dims()));
    auto separated = [&](std::size_t a, std::size_t b) {
        const auto ia = grid.space.cell_indices(a);
        const auto ib = grid.space.cell_indices(b);
        double d2 = 0.0;
        for (std::size_t d = 0; d < ia.size(); ++d) {
            const double diff = static_cast<double>(ia[d]) - static_cast<double>(ib[d]);
            d2 += diff * diff;
        }
        return std::sqrt(d2) >= diagonal - 1e-12;
    };
    std::vector<std::size_t> chosen;
    for (std::size_t c : order) {
        if (chosen.size() == k) break;
        if (std::all_of(chosen.begin(), chosen.end(), [&](std::size_t o) { return separated(c, o); })) {
            chosen.push_back(c);
        }
    }
    for (std::size_t c : order) {
        if (chosen.size() == k) break;
        if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) chosen.push_back(c);
    }
    return chosen;
}

struct FitResult {
    ParamSpace space;
    std::vector<double> best_point;
    double score = 0.0;      // optimized objective at the best point
    double error = 0.0;      // mean distance d at the best point
    double error_std = 0.0;
    double scale = 0.0;      // mean s* at the best point
    GridScores grid;
    std::vector<std::size_t> start_cells;
    std::vector<AnnealResult> anneals;
    std::uint64_t seed = 0;

    double value(const std::string& name, double fallback = 0.0) const {
        return space.value_or(best_point, name, fallback);
    }
};

/// Grid exploration, then K annealing runs started from the K best separated
/// cells; returns the overall best point with full provenance.
inline FitResult fit(std::span<const double> data, const ParamSpace& space,
                     const FitConfig& config) {
    config.check();
    space.check();
    if (data.size() < 1) throw FitError("empty data series");

    FitResult res;
    res.space = space;
    res.seed = config.seed;
    res.grid = grid_explore(data, space, config);
    if (res.grid.failures() == res.grid.cells.size()) {
        throw FitError("every grid cell failed to evaluate; first error: " +
                       res.grid.cells.front().error);
    }
    res.start_cells = select_starts(res.grid, config.restarts);

    auto scorer = [&](std::span<const double> p) {
        return evaluate_point(p, data, space, config).score;
    };
    res.anneals.resize(res.start_cells.size());
    parallel_for(res.start_cells.size(), config.jobs, [&](std::size_t k) {
        const auto& start = res.grid.cells[res.start_cells[k]].coords;
        res.anneals[k] = anneal(start, space, config.anneal, scorer,
                                derive_seed(config.seed, 0x616e6e, k));
    });

    std::size_t best = 0;
    for (std::size_t k = 1; k < res.anneals.size(); ++k) {
        if (res.anneals[k].best_score < res.anneals[best].best_score) best = k;
    }
    res.best_point = res.anneals[best].best_point;
    const PointScore ps = evaluate_point(res.best_point, data, space, config);
    res.score = ps.score;
    res.error = ps.mean_error;
    res.error_std = ps.error_std;
    res.scale = ps.mean_scale;
    return res;
}

/// The same pipeline over a space that includes the stubborn proportion p.
inline FitResult fit_with_stubbornness(std::span<const double> data, const ParamSpace& space,
                                       const FitConfig& config) {
    const auto d = space.axis_index("p");
    if (!d) throw std::invalid_argument("fit_with_stubbornness needs a 'p' axis");
    if (space.axes[*d].lo < 0.0 || space.axes[*d].hi > 0.5) {
        throw std::invalid_argument("the p axis must lie within [0, 0.5]");
    }
    return fit(data, space, config);
}

// ---------------------------------------------------------------------------
// Identifiability
// ---------------------------------------------------------------------------

struct IdentifiabilityOptions {
    double q_min = 1e-4;
    double q_max = 1e-2;
    std::size_t q_count = 10;
    std::size_t bootstrap = 10;  // B
    std::uint64_t seed = 0;
};

struct ChiPoint {
    double q = 0.0;
    std::size_t set_size = 0;
    double chi = 0.0;
    double best_variance = 0.0;       // Variance(P*(q))
    double bootstrap_variance = 0.0;  // mean over b of Variance(P_b(q))
    double bootstrap_std = 0.0;       // sample std over b of Variance(P_b(q))
};

namespace detail {

/// Mean Euclidean distance to the barycenter.
inline double set_variance(const std::vector<std::vector<double>>& pts,
                           std::span<const std::size_t> members) {
    if (members.empty()) return 0.0;
    const std::size_t dims = pts[members[0]].size();
    std::vector<double> bary(dims, 0.0);
    for (std::size_t m : members) {
        for (std::size_t d = 0; d < dims; ++d) bary[d] += pts[m][d];
    }
    for (double& b : bary) b /= static_cast<double>(members.size());
    double total = 0.0;
    for (std::size_t m : members) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < dims; ++d) d2 += (pts[m][d] - bary[d]) * (pts[m][d] - bary[d]);
        total += std::sqrt(d2);
    }
    return total / static_cast<double>(members.size());
}

}  // namespace detail

/// Bootstrap identifiability curve chi(q) over a scored grid. Coordinates
/// are min-max normalized per axis; non-finite scores are ignored. For every
/// q, P*(q) holds the floor(q M) best points and each of the B bootstrap sets
/// is a uniform random subset of the same size (bootstrap set b for a larger q
/// extends the one for a smaller q).
inline std::vector<ChiPoint> identifiability(std::span<const std::vector<double>> points,
                                             std::span<const double> scores,
                                             const IdentifiabilityOptions& opt = {}) {
    if (points.size() != scores.size()) {
        throw std::invalid_argument("identifiability: points and scores differ in length");
    }
    if (!(opt.q_min > 0.0 && opt.q_min <= opt.q_max && opt.q_max <= 1.0) || opt.q_count < 1) {
        throw std::invalid_argument("identifiability: need 0 < q_min <= q_max <= 1 and q_count >= 1");
    }
    if (opt.bootstrap < 1) throw std::invalid_argument("identifiability: bootstrap must be >= 1");

    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (std::isfinite(scores[i])) valid.push_back(i);
    }
    const std::size_t m = valid.size();
    const auto size_for = [m](double q) {
        return static_cast<std::size_t>(std::floor(q * static_cast<double>(m) + 1e-9));
    };
    if (size_for(opt.q_min) < 1) {
        throw std::invalid_argument(
            "identifiability: grid has " + std::to_string(m) + " scored cells; at least " +
            std::to_string(static_cast<std::size_t>(std::ceil(1.0 / opt.q_min - 1e-9))) +
            " are needed for q_min = " + csv::format(opt.q_min));
    }

    const std::size_t dims = points[valid[0]].size();
    std::vector<double> lo(dims, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dims, -std::numeric_limits<double>::infinity());
    for (std::size_t i : valid) {
        for (std::size_t d = 0; d < dims; ++d) {
            lo[d] = std::min(lo[d], points[i][d]);
            hi[d] = std::max(hi[d], points[i][d]);
        }
    }
    std::vector<std::vector<double>> norm(m, std::vector<double>(dims, 0.0));
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t d = 0; d < dims; ++d) {
            norm[k][d] = hi[d] > lo[d] ? (points[valid[k]][d] - lo[d]) / (hi[d] - lo[d]) : 0.0;
        }
    }

    std::vector<std::size_t> ranking(m);
    std::iota(ranking.begin(), ranking.end(), std::size_t{0});
    std::stable_sort(ranking.begin(), ranking.end(), [&](std::size_t a, std::size_t b) {
        return scores[valid[a]] < scores[valid[b]];
    });

    std::vector<double> qs(opt.q_count);
    for (std::size_t k = 0; k < opt.q_count; ++k) {
        qs[k] = opt.q_count == 1
                    ? opt.q_min
                    : opt.q_min * std::pow(opt.q_max / opt.q_min,
                                           static_cast<double>(k) / static_cast<double>(opt.q_count - 1));
    }
    std::size_t largest = 0;
    for (double q : qs) largest = std::max(largest, size_for(q));

    std::vector<std::vector<std::size_t>> boot(opt.bootstrap);
    for (std::size_t b = 0; b < opt.bootstrap; ++b) {
        Rng rng(derive_seed(opt.seed, 0x626f6f74, b));
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t k = 0; k < largest; ++k) {
            std::swap(perm[k], perm[k + uniform_index(rng, m - k)]);
        }
        perm.resize(largest);
        boot[b] = std::move(perm);
    }

    std::vector<ChiPoint> out;
    for (double q : qs) {
        ChiPoint cp;
        cp.q = q;
        cp.set_size = size_for(q);
        const std::span<const std::size_t> best(ranking.data(), cp.set_size);
        cp.best_variance = detail::set_variance(norm, best);
        std::vector<double> v(opt.bootstrap);
        for (std::size_t b = 0; b < opt.bootstrap; ++b) {
            v[b] = detail::set_variance(norm, std::span<const std::size_t>(boot[b].data(), cp.set_size));
        }
        cp.bootstrap_variance = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - cp.bootstrap_variance) * (x - cp.bootstrap_variance);
        cp.bootstrap_std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        cp.chi = cp.bootstrap_variance - cp.best_variance;
        out.push_back(cp);
    }
    return out;
}

inline std::vector<ChiPoint> identifiability(const GridScores& grid,
                                             const IdentifiabilityOptions& opt = {}) {
    std::vector<std::vector<double>> pts;
    std::vector<double> scores;
    for (const auto& c : grid.cells) {
        pts.push_back(c.coords);
        scores.push_back(c.ok() ? c.score.score : std::numeric_limits<double>::quiet_NaN());
    }
    return identifiability(pts, scores, opt);
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline void write_fit_header(std::ostream& os) { os << "label,error,mu,gamma,r,p,scale,seed\n"; }

/// One row `label,error,mu,gamma,r,p,scale,seed`; p is 0 without a p axis.
inline void write_fit_row(std::ostream& os, const std::string& label, const FitResult& res) {
    os << label << ',' << csv::format(res.error) << ',' << csv::format(res.value("mu")) << ','
       << csv::format(res.value("gamma")) << ',' << csv::format(res.value("r")) << ','
       << csv::format(res.value("p")) << ',' << csv::format(res.scale) << ',' << res.seed << '\n';
}

/// `<axis names...>,score,mean_error,error_std`; failed cells carry nan.
inline void write_grid(std::ostream& os, const GridScores& grid) {
    for (const auto& a : grid.space.axes) os << a.name << ',';
    os << "score,mean_error,error_std\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& c : grid.cells) {
        for (double v : c.coords) os << csv::format(v) << ',';
        os << csv::format(c.ok() ? c.score.score : nan) << ','
           << csv::format(c.ok() ? c.score.mean_error : nan) << ','
           << csv::format(c.ok() ? c.score.error_std : nan) << '\n';
    }
}

/// Scored points read back from a grid file.
struct GridTable {
    std::vector<std::string> axes;
    std::vector<std::vector<double>> points;
    std::vector<double> scores;
};

inline GridTable read_grid(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("grid file is empty");
    auto header = csv::split(line);
    const auto score_col = std::find(header.begin(), header.end(), "score");
    if (score_col == header.end() || score_col == header.begin()) {
        throw std::invalid_argument("grid header needs parameter columns followed by 'score'");
    }
    GridTable table;
    table.axes.assign(header.begin(), score_col);
    const std::size_t dims = table.axes.size();
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line);
        if (fields.size() != header.size()) {
            throw std::invalid_argument("grid file: wrong field count at line " + std::to_string(line_no));
        }
        std::vector<double> p(dims);
        for (std::size_t d = 0; d < dims; ++d) {
            const auto v = csv::parse_double(fields[d]);
            if (!v) throw std::invalid_argument("grid file: bad number at line " + std::to_string(line_no));
            p[d] = *v;
        }
        const auto s = csv::parse_double(fields[dims]);
        if (!s) throw std::invalid_argument("grid file: bad score at line " + std::to_string(line_no));
        table.points.push_back(std::move(p));
        table.scores.push_back(*s);
    }
    return table;
}

inline void write_chi(std::ostream& os, std::span<const ChiPoint> curve) {
    os << "q,chi\n";
    for (const auto& c : curve) os << csv::format(c.q) << ',' << csv::format(c.chi) << '\n';
}

inline void write_anneal_traces(std::ostream& os, const FitResult& res) {
    os << "restart,iteration,temperature,candidate_score,current_score,best_score,accepted\n";
    for (std::size_t k = 0; k < res.anneals.size(); ++k) {
        for (const auto& s : res.anneals[k].trace) {
            os << k << ',' << s.iteration << ',' << csv::format(s.temperature) << ','
               << csv::format(s.candidate_score) << ',' << csv::format(s.current_score) << ','
               << csv::format(s.best_score) << ',' << (s.accepted ? 1 : 0) << '\n';
        }
    }
}

}  // namespace gsmdg

#endif  // GSMDG_FITTING_HPP
