#ifndef GSMDG_DYNAMICS_HPP
#define GSMDG_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "csv.hpp"
#include "graph.hpp"
#include "rng.hpp"

namespace gsmdg {

/// Global scalars of the model.
struct ModelParams {
    double lambda = 1.0;  // event sensitivity
    double gamma = 0.0;   // steering scale
    double mu = 0.0;      // initial opinion mean
    double sigma = 1.0;   // initial opinion standard deviation

    void check() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            throw std::invalid_argument("lambda must be positive and finite");
        }
        if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
            throw std::invalid_argument("gamma must be non-negative and finite");
        }
        if (!std::isfinite(mu)) throw std::invalid_argument("mu must be finite");
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
            throw std::invalid_argument("sigma must be non-negative and finite");
        }
    }
};

/// Per-agent attributes. All vectors have one entry per agent.
struct Population {
    std::vector<double> reactions;         // beta_i
    std::vector<bool> fully_stubborn;      // never update when set
    std::vector<double> susceptibility;    // xi_i in [0,1]; 1 = no stubbornness
    std::vector<double> initial_opinions;  // X_0

    /// Population without stubbornness.
    static Population make(std::vector<double> reactions, std::vector<double> initial_opinions) {
        Population p;
        const std::size_t n = initial_opinions.size();
        p.reactions = std::move(reactions);
        p.initial_opinions = std::move(initial_opinions);
        p.fully_stubborn.assign(n, false);
        p.susceptibility.assign(n, 1.0);
        p.check();
        return p;
    }

    std::size_t size() const noexcept { return initial_opinions.size(); }

    void check() const {
        const std::size_t n = size();
        if (reactions.size() != n || fully_stubborn.size() != n || susceptibility.size() != n) {
            throw std::invalid_argument("population vectors must all have length " +
                                        std::to_string(n));
        }
        for (double xi : susceptibility) {
            if (!(xi >= 0.0 && xi <= 1.0)) {
                throw std::invalid_argument("susceptibility values must lie in [0,1]");
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(reactions[i]) || !std::isfinite(initial_opinions[i])) {
                throw std::invalid_argument("population values must be finite");
            }
        }
    }

    /// Fraction of agents with a positive reaction.
    double positive_fraction() const {
        if (size() == 0) return 0.0;
        const auto pos = std::count_if(reactions.begin(), reactions.end(),
                                       [](double b) { return b > 0.0; });
        return static_cast<double>(pos) / static_cast<double>(size());
    }
};

// ---------------------------------------------------------------------------
// Sampling of populations
// ---------------------------------------------------------------------------

/// N iid Normal(mu, sigma) opinions.
inline std::vector<double> init_opinions(std::size_t n, double mu, double sigma,
                                         std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
    Rng rng(seed);
    std::vector<double> x(n);
    for (double& v : x) v = sigma == 0.0 ? mu : mu + sigma * standard_normal(rng);
    return x;
}

/// Reactions +1 with probability `positive_fraction`, -1 otherwise, iid.
inline std::vector<double> sample_reactions(std::size_t n, double positive_fraction,
                                            std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> beta(n);
    for (double& b : beta) b = bernoulli(rng, positive_fraction) ? 1.0 : -1.0;
    return beta;
}

/// Cluster-wise reactions: agents of cluster k (contiguous ids, sizes given)
/// react +1 with probability fractions[k].
inline std::vector<double> sample_reactions_by_cluster(std::span<const std::size_t> sizes,
                                                       std::span<const double> fractions,
                                                       std::uint64_t seed) {
    if (sizes.size() != fractions.size()) {
        throw std::invalid_argument("one positive fraction per cluster is required");
    }
    Rng rng(seed);
    std::vector<double> beta;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        for (std::size_t i = 0; i < sizes[k]; ++i) {
            beta.push_back(bernoulli(rng, fractions[k]) ? 1.0 : -1.0);
        }
    }
    return beta;
}

/// Marks round(proportion * n) agents, chosen uniformly without replacement.
inline std::vector<bool> sample_stubborn_mask(std::size_t n, double proportion,
                                              std::uint64_t seed) {
    if (!(proportion >= 0.0 && proportion <= 1.0)) {
        throw std::invalid_argument("stubborn proportion must lie in [0,1]");
    }
    const auto count = static_cast<std::size_t>(std::floor(proportion * static_cast<double>(n) + 0.5));
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    Rng rng(seed);
    std::vector<bool> mask(n, false);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t pick = k + uniform_index(rng, n - k);
        std::swap(ids[k], ids[pick]);
        mask[ids[k]] = true;
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Single-step rules
// ---------------------------------------------------------------------------

/// P(S_i = 1) = 1 / (1 + exp(-lambda x)).
inline double event_probability(double opinion, double lambda) {
    return 1.0 / (1.0 + std::exp(-lambda * opinion));
}

/// g(S) = gamma * (fraction of agents in state 1). States may also be
/// probabilities (expected mode), in which case the mean probability is used.
inline double steering(std::span<const double> states, double gamma) {
    if (states.empty()) return 0.0;
    const double total = std::accumulate(states.begin(), states.end(), 0.0);
    return gamma * total / static_cast<double>(states.size());
}

/// Independent Bernoulli event draws, one per agent.
inline std::vector<double> state_step(std::span<const double> opinions, double lambda, Rng& rng) {
    std::vector<double> s(opinions.size());
    for (std::size_t i = 0; i < opinions.size(); ++i) {
        s[i] = bernoulli(rng, event_probability(opinions[i], lambda)) ? 1.0 : 0.0;
    }
    return s;
}

inline std::vector<double> state_step(std::span<const double> opinions, double lambda,
                                      std::uint64_t seed) {
    Rng rng(seed);
    return state_step(opinions, lambda, rng);
}

namespace detail {

inline void check_lengths(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) {
        throw std::invalid_argument(std::string(what) + " has length " + std::to_string(got) +
                                    ", expected " + std::to_string(expected));
    }
}

/// next_i = xi_i (beta_i g + alpha sum_j w_ji x_j) + (1 - xi_i) x0_i, or x0_i
/// for fully stubborn agents.
inline void opinion_update(std::span<const double> x, double g, const WeightedDigraph& graph,
                           const Population& pop, double alpha, std::span<double> next) {
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (pop.fully_stubborn[i]) {
            next[i] = pop.initial_opinions[i];
            continue;
        }
        const auto src = graph.sources(i);
        const auto w = graph.weights(i);
        double local = 0.0;
        for (std::size_t k = 0; k < src.size(); ++k) local += w[k] * x[src[k]];
        const double update = pop.reactions[i] * g + alpha * local;
        const double xi = pop.susceptibility[i];
        next[i] = xi == 1.0 ? update : xi * update + (1.0 - xi) * pop.initial_opinions[i];
    }
}

}  // namespace detail

/// One opinion update given the current opinions and states.
inline std::vector<double> opinion_step(std::span<const double> opinions,
                                        std::span<const double> states,
                                        const WeightedDigraph& graph, const Population& pop,
                                        double gamma) {
    const std::size_t n = pop.size();
    detail::check_lengths(n, opinions.size(), "opinion row");
    detail::check_lengths(n, states.size(), "state row");
    detail::check_lengths(n, graph.node_count(), "graph");
    std::vector<double> next(n);
    detail::opinion_update(opinions, steering(states, gamma), graph, pop, 1.0, next);
    return next;
}

/// DeGroot step with every node's incoming weights scaled to sum to alpha.
/// `graph` is the normalized graph; the scaling is applied on the fly.
inline std::vector<double> scaled_weight_step(std::span<const double> opinions,
                                              const WeightedDigraph& graph, double alpha) {
    detail::check_lengths(graph.node_count(), opinions.size(), "opinion row");
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
    std::vector<double> next(opinions.size(), 0.0);
    for (std::size_t i = 0; i < next.size(); ++i) {
        const auto src = graph.sources(i);
        const auto w = graph.weights(i);
        double local = 0.0;
        for (std::size_t k = 0; k < src.size(); ++k) local += w[k] * opinions[src[k]];
        next[i] = alpha * local;
    }
    return next;
}

/// Dense signed influence matrix: at(j, i) = w_ji in [-1, 1], with
/// sum_j |w_ji| = 1 for every agent i.
class SignedWeights {
public:
    explicit SignedWeights(std::size_t n) : n_(n), w_(n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }
    double& at(std::size_t source, std::size_t target) { return w_[target * n_ + source]; }
    double at(std::size_t source, std::size_t target) const { return w_[target * n_ + source]; }

    /// Throws if a weight leaves [-1, 1] or a node's absolute sum is not 1.
    void check() const {
        for (std::size_t i = 0; i < n_; ++i) {
            double abs_sum = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
                const double w = at(j, i);
                if (!(w >= -1.0 && w <= 1.0)) {
                    throw std::invalid_argument("signed weight outside [-1,1]");
                }
                abs_sum += std::abs(w);
            }
            if (std::abs(abs_sum - 1.0) > kNormalizationTolerance) {
                throw std::invalid_argument("absolute incoming weights of node " +
                                            std::to_string(i) + " do not sum to 1");
            }
        }
    }

private:
    std::size_t n_;
    std::vector<double> w_;
};

/// x'_i = sum_j w_ji x_j over a signed network.
inline std::vector<double> signed_opinion_step(std::span<const double> opinions,
                                               const SignedWeights& weights) {
    detail::check_lengths(weights.size(), opinions.size(), "opinion row");
    weights.check();
    std::vector<double> next(opinions.size(), 0.0);
    for (std::size_t i = 0; i < next.size(); ++i) {
        for (std::size_t j = 0; j < next.size(); ++j) next[i] += weights.at(j, i) * opinions[j];
    }
    return next;
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// Opinions beyond this magnitude abort a simulation.
inline constexpr double kOpinionOverflow = 1e12;

class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, std::size_t step)
        : std::runtime_error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

enum class SimMode {
    stochastic,  // Bernoulli events
    expected,    // events replaced by their probabilities (deterministic surrogate)
};

struct SimOptions {
    SimMode mode = SimMode::stochastic;
    bool record_agents = true;  // keep the T x N opinion and state matrices
    double weight_scale = 1.0;  // alpha: every node's incoming weights sum to this
};

/// Recorded run. Row t holds X_t and the states S_t drawn from X_t, for
/// t = 0 .. steps-1; X_{t+1} is computed from (X_t, S_t).
struct Trajectory {
    std::size_t agents = 0;
    std::size_t steps = 0;
    std::vector<double> opinions;  // steps x agents, row-major (empty unless recorded)
    std::vector<double> states;    // steps x agents, row-major (empty unless recorded)
    std::vector<double> event_fraction;
    std::vector<double> mean_opinion;
    std::vector<double> max_diversity;
    std::vector<double> min_opinion;
    std::vector<double> max_opinion;
    std::vector<double> final_opinions;  // X_{steps-1}
    std::uint64_t seed = 0;

    bool has_agents() const noexcept { return !opinions.empty(); }
    std::span<const double> opinion_row(std::size_t t) const {
        return {opinions.data() + t * agents, agents};
    }
    std::span<const double> state_row(std::size_t t) const {
        return {states.data() + t * agents, agents};
    }
};

/// Runs the coupled event/opinion process for `horizon` recorded steps. Each
/// step draws S_t from X_t and then computes X_{t+1}. Requires a graph with
/// normalized incoming weights (strong connectivity is not required, so the
/// pure steering process on the identity graph is admissible). Throws
/// SimulationError naming the step when an opinion leaves
/// [-kOpinionOverflow, kOpinionOverflow] or becomes non-finite.
inline Trajectory simulate(const WeightedDigraph& graph, const Population& pop,
                           const ModelParams& params, std::size_t horizon, std::uint64_t seed,
                           const SimOptions& options = {}) {
    params.check();
    pop.check();
    const std::size_t n = pop.size();
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (n == 0) throw std::invalid_argument("population is empty");
    detail::check_lengths(n, graph.node_count(), "graph");
    if (!graph.is_normalized()) {
        throw std::invalid_argument("graph weights are not normalized per node");
    }

    Trajectory traj;
    traj.agents = n;
    traj.steps = horizon;
    traj.seed = seed;
    if (options.record_agents) {
        traj.opinions.reserve(horizon * n);
        traj.states.reserve(horizon * n);
    }
    for (auto* series : {&traj.event_fraction, &traj.mean_opinion, &traj.max_diversity,
                         &traj.min_opinion, &traj.max_opinion}) {
        series->reserve(horizon);
    }

    Rng rng(seed);
    std::vector<double> x = pop.initial_opinions;
    std::vector<double> s(n);
    std::vector<double> next(n);
    for (std::size_t t = 0; t < horizon; ++t) {
        double lo = x[0], hi = x[0], sum = 0.0;
        for (double v : x) {
            if (!std::isfinite(v) || std::abs(v) > kOpinionOverflow) {
                throw SimulationError("opinion overflow at step " + std::to_string(t) +
                                          " (|X| > 1e12 or non-finite)",
                                      t);
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }

        double events = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = event_probability(x[i], params.lambda);
            s[i] = options.mode == SimMode::expected ? p : (uniform01(rng) < p ? 1.0 : 0.0);
            events += s[i];
        }

        traj.event_fraction.push_back(events / static_cast<double>(n));
        traj.mean_opinion.push_back(sum / static_cast<double>(n));
        traj.min_opinion.push_back(lo);
        traj.max_opinion.push_back(hi);
        traj.max_diversity.push_back(hi - lo);
        if (options.record_agents) {
            traj.opinions.insert(traj.opinions.end(), x.begin(), x.end());
            traj.states.insert(traj.states.end(), s.begin(), s.end());
        }
        if (t + 1 == horizon) break;

        const double g = params.gamma * events / static_cast<double>(n);
        detail::opinion_update(x, g, graph, pop, options.weight_scale, next);
        x.swap(next);
    }
    traj.final_opinions = std::move(x);
    return traj;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// `t,event_fraction,mean_opinion,max_diversity`, one row per step.
inline void write_trajectory(std::ostream& os, const Trajectory& traj) {
    os << "t,event_fraction,mean_opinion,max_diversity\n";
    for (std::size_t t = 0; t < traj.steps; ++t) {
        os << t << ',' << csv::format(traj.event_fraction[t]) << ','
           << csv::format(traj.mean_opinion[t]) << ',' << csv::format(traj.max_diversity[t]) << '\n';
    }
}

/// Wide per-agent matrix (`t,agent_0..agent_{N-1}`) of opinions or states.
inline void write_agent_matrix(std::ostream& os, const Trajectory& traj, bool states) {
    if (!traj.has_agents()) throw std::invalid_argument("trajectory has no per-agent records");
    os << 't';
    for (std::size_t i = 0; i < traj.agents; ++i) os << ",agent_" << i;
    os << '\n';
    for (std::size_t t = 0; t < traj.steps; ++t) {
        const auto row = states ? traj.state_row(t) : traj.opinion_row(t);
        os << t;
        for (double v : row) os << ',' << csv::format(v);
        os << '\n';
    }
}

}  // namespace gsmdg

#endif  // GSMDG_DYNAMICS_HPP
