#ifndef GSMDG_GRAPH_HPP
#define GSMDG_GRAPH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "csv.hpp"
#include "rng.hpp"

namespace gsmdg {

/// Tolerance of the normalized-weights invariant: every node's incoming
/// weights sum to one within this absolute error.
inline constexpr double kNormalizationTolerance = 1e-12;

/// Directed edge j -> i carrying the influence weight w_ji of j on i.
struct Edge {
    std::size_t source;
    std::size_t target;
    double weight;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Fixed weighted digraph stored by incoming edges (compressed rows keyed by
/// target). Immutable once built: every transformation returns a new graph.
class WeightedDigraph {
public:
    WeightedDigraph() = default;

    /// Builds a graph from an edge list. Edges may come in any order; within a
    /// target they are stored sorted by source. Throws std::invalid_argument on
    /// out-of-range ids, duplicate (source, target) pairs, or negative or
    /// non-finite weights.
    static WeightedDigraph from_edges(std::size_t node_count, std::span<const Edge> edges) {
        WeightedDigraph g;
        g.offsets_.assign(node_count + 1, 0);
        for (const Edge& e : edges) {
            if (e.source >= node_count || e.target >= node_count) {
                throw std::invalid_argument("edge (" + std::to_string(e.source) + "," +
                                            std::to_string(e.target) + ") references a node >= " +
                                            std::to_string(node_count));
            }
            if (!std::isfinite(e.weight) || e.weight < 0.0) {
                throw std::invalid_argument("edge (" + std::to_string(e.source) + "," +
                                            std::to_string(e.target) +
                                            ") has a negative or non-finite weight");
            }
            ++g.offsets_[e.target + 1];
        }
        std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());

        std::vector<std::pair<std::size_t, double>> slots(edges.size());
        std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
        for (const Edge& e : edges) slots[fill[e.target]++] = {e.source, e.weight};

        g.sources_.resize(edges.size());
        g.weights_.resize(edges.size());
        for (std::size_t i = 0; i < node_count; ++i) {
            auto first = slots.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]);
            auto last = slots.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]);
            std::sort(first, last, [](const auto& a, const auto& b) { return a.first < b.first; });
            for (auto it = first; it != last; ++it) {
                if (it != first && std::prev(it)->first == it->first) {
                    throw std::invalid_argument("duplicate edge (" + std::to_string(it->first) +
                                                "," + std::to_string(i) + ")");
                }
                const auto k = static_cast<std::size_t>(it - slots.begin());
                g.sources_[k] = it->first;
                g.weights_[k] = it->second;
            }
        }
        return g;
    }

    std::size_t node_count() const noexcept { return offsets_.size() - 1; }
    std::size_t edge_count() const noexcept { return sources_.size(); }

    std::size_t in_degree(std::size_t i) const { return offsets_.at(i + 1) - offsets_[i]; }

    std::span<const std::size_t> sources(std::size_t i) const {
        return {sources_.data() + offsets_[i], in_degree(i)};
    }
    std::span<const double> weights(std::size_t i) const {
        return {weights_.data() + offsets_[i], in_degree(i)};
    }

    /// All weights in storage order (target-major, source-minor).
    std::span<const double> all_weights() const noexcept { return weights_; }

    /// w_ji, or 0 when there is no edge source -> target.
    double weight(std::size_t source, std::size_t target) const {
        const auto src = sources(target);
        const auto it = std::lower_bound(src.begin(), src.end(), source);
        if (it == src.end() || *it != source) return 0.0;
        return weights(target)[static_cast<std::size_t>(it - src.begin())];
    }

    bool has_self_loop(std::size_t i) const { return weight(i, i) > 0.0; }

    /// Edge list sorted by (source, target).
    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        out.reserve(edge_count());
        for (std::size_t i = 0; i < node_count(); ++i) {
            for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
                out.push_back({sources_[k], i, weights_[k]});
            }
        }
        std::sort(out.begin(), out.end(), [](const Edge& a, const Edge& b) {
            return a.source != b.source ? a.source < b.source : a.target < b.target;
        });
        return out;
    }

    /// Same structure, new weights given in storage order.
    WeightedDigraph with_weights(std::vector<double> weights) const {
        if (weights.size() != weights_.size()) {
            throw std::invalid_argument("with_weights: expected " + std::to_string(weights_.size()) +
                                        " weights, got " + std::to_string(weights.size()));
        }
        WeightedDigraph g = *this;
        g.weights_ = std::move(weights);
        return g;
    }

    /// Divides every node's incoming weights by their sum. Throws if a node has
    /// no incoming mass.
    WeightedDigraph normalized() const {
        std::vector<double> w = weights_;
        for (std::size_t i = 0; i < node_count(); ++i) {
            double sum = 0.0;
            for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) sum += w[k];
            if (!(sum > 0.0)) {
                throw std::invalid_argument("node " + std::to_string(i) +
                                            " has no incoming weight to normalize");
            }
            for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) w[k] /= sum;
        }
        return with_weights(std::move(w));
    }

    std::vector<double> in_weight_sums() const {
        std::vector<double> sums(node_count(), 0.0);
        for (std::size_t i = 0; i < node_count(); ++i) {
            for (double w : weights(i)) sums[i] += w;
        }
        return sums;
    }

    /// Incoming weights sum to one at every node (within kNormalizationTolerance).
    bool is_normalized() const {
        for (std::size_t i = 0; i < node_count(); ++i) {
            if (in_degree(i) == 0) return false;
        }
        for (double s : in_weight_sums()) {
            if (std::abs(s - 1.0) > kNormalizationTolerance) return false;
        }
        return true;
    }

    friend bool operator==(const WeightedDigraph&, const WeightedDigraph&) = default;

private:
    std::vector<std::size_t> offsets_{0};
    std::vector<std::size_t> sources_;
    std::vector<double> weights_;
};

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

enum class GraphFamily { barabasi_albert, sbm, watts_strogatz, erdos_renyi, identity };

inline std::string_view to_string(GraphFamily f) {
    switch (f) {
        case GraphFamily::barabasi_albert: return "barabasi-albert";
        case GraphFamily::sbm: return "sbm";
        case GraphFamily::watts_strogatz: return "watts-strogatz";
        case GraphFamily::erdos_renyi: return "erdos-renyi";
        case GraphFamily::identity: return "identity";
    }
    return "unknown";
}

inline GraphFamily parse_graph_family(std::string_view name) {
    for (auto f : {GraphFamily::barabasi_albert, GraphFamily::sbm, GraphFamily::watts_strogatz,
                   GraphFamily::erdos_renyi, GraphFamily::identity}) {
        if (name == to_string(f)) return f;
    }
    throw std::invalid_argument("unknown graph family '" + std::string(name) + "'");
}

/// Recipe for a random interaction graph. Only the parameters of the chosen
/// family are read. The identity family (isolated agents with w_ii = 1) is
/// the substrate of the pure steering process.
struct GraphGenSpec {
    GraphFamily family = GraphFamily::barabasi_albert;
    std::size_t nodes = 100;

    std::size_t ba_attachment = 2;                   // m
    std::vector<double> cluster_ratios{0.7, 0.3};    // c(1), c(2), ...
    double intra_probability = 0.5;                  // rho
    double inter_probability = 0.1;                  // r
    std::size_t ws_neighbors = 4;                    // k, even
    double ws_rewire = 0.1;
    double er_probability = 0.1;

    bool ensure_self_loops = false;
    std::size_t rounds_per_node = 10;  // weight randomization moves, 0 keeps uniform weights
    std::uint64_t seed = 0;
};

/// Throws std::invalid_argument describing the first invalid field.
inline void validate_spec(const GraphGenSpec& spec) {
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
        }
    };
    if (spec.nodes < 1) throw std::invalid_argument("nodes must be positive");
    if (spec.family != GraphFamily::identity && spec.nodes < 2) {
        throw std::invalid_argument("random graph families need at least 2 nodes");
    }
    switch (spec.family) {
        case GraphFamily::barabasi_albert:
            if (spec.ba_attachment < 1 || spec.ba_attachment >= spec.nodes) {
                throw std::invalid_argument("ba_attachment must be in [1, nodes)");
            }
            break;
        case GraphFamily::sbm: {
            if (spec.cluster_ratios.empty()) {
                throw std::invalid_argument("cluster_ratios must not be empty");
            }
            double total = 0.0;
            for (double c : spec.cluster_ratios) {
                prob(c, "cluster_ratios");
                total += c;
            }
            if (std::abs(total - 1.0) > 1e-9) {
                throw std::invalid_argument("cluster_ratios must sum to 1");
            }
            prob(spec.intra_probability, "intra_probability");
            prob(spec.inter_probability, "inter_probability");
            break;
        }
        case GraphFamily::watts_strogatz:
            if (spec.ws_neighbors < 2 || spec.ws_neighbors % 2 != 0 ||
                spec.ws_neighbors >= spec.nodes) {
                throw std::invalid_argument("ws_neighbors must be even, >= 2 and < nodes");
            }
            prob(spec.ws_rewire, "ws_rewire");
            break;
        case GraphFamily::erdos_renyi:
            prob(spec.er_probability, "er_probability");
            break;
        case GraphFamily::identity:
            break;
    }
}

/// Cluster sizes of the SBM layout: floor(c_k N) for all but the last
/// cluster, the remainder for the last. Clusters occupy contiguous node ids.
/// Non-SBM families form one cluster.
inline std::vector<std::size_t> cluster_sizes(const GraphGenSpec& spec) {
    if (spec.family != GraphFamily::sbm) return {spec.nodes};
    std::vector<std::size_t> sizes;
    std::size_t used = 0;
    for (std::size_t k = 0; k + 1 < spec.cluster_ratios.size(); ++k) {
        const auto n = static_cast<std::size_t>(
            std::floor(spec.cluster_ratios[k] * static_cast<double>(spec.nodes) + 1e-9));
        sizes.push_back(std::min(n, spec.nodes - used));
        used += sizes.back();
    }
    sizes.push_back(spec.nodes - used);
    return sizes;
}

/// Cluster id of every node, following cluster_sizes().
inline std::vector<std::size_t> cluster_labels(const GraphGenSpec& spec) {
    std::vector<std::size_t> labels;
    labels.reserve(spec.nodes);
    const auto sizes = cluster_sizes(spec);
    for (std::size_t k = 0; k < sizes.size(); ++k) labels.insert(labels.end(), sizes[k], k);
    return labels;
}

class GraphGenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Resets every node's incoming weights to 1/indegree, then `rounds_per_node`
/// times picks two distinct incoming edges uniformly and moves half of the
/// first one's weight to the second. Indegree-1 nodes get weight 1 and are
/// otherwise skipped. The per-node sum is conserved by every move.
inline WeightedDigraph randomize_weights(const WeightedDigraph& graph,
                                         std::size_t rounds_per_node, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> w(graph.all_weights().begin(), graph.all_weights().end());
    std::size_t offset = 0;
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
        const std::size_t k = graph.in_degree(i);
        if (k == 0) {
            throw std::invalid_argument("randomize_weights: node " + std::to_string(i) +
                                        " has no incoming edge");
        }
        double* node_w = w.data() + offset;
        offset += k;
        std::fill(node_w, node_w + k, 1.0 / static_cast<double>(k));
        if (k < 2) continue;
        for (std::size_t round = 0; round < rounds_per_node; ++round) {
            const std::size_t from = uniform_index(rng, k);
            std::size_t to = uniform_index(rng, k - 1);
            if (to >= from) ++to;
            const double half = node_w[from] * 0.5;
            node_w[from] -= half;
            node_w[to] += half;
        }
    }
    return graph.with_weights(std::move(w));
}

namespace detail {

using UndirectedEdges = std::vector<std::pair<std::size_t, std::size_t>>;

inline bool undirected_connected(std::size_t n, const UndirectedEdges& edges) {
    std::vector<std::vector<std::size_t>> adj(n);
    for (auto [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == n;
}

inline UndirectedEdges barabasi_albert(const GraphGenSpec& spec, Rng& rng) {
    const std::size_t n = spec.nodes;
    const std::size_t m = spec.ba_attachment;
    UndirectedEdges edges;
    // Degree-proportional sampling via the list of edge endpoints.
    std::vector<std::size_t> endpoints;
    const std::size_t core = std::min(n, m + 1);
    for (std::size_t u = 0; u < core; ++u) {
        for (std::size_t v = u + 1; v < core; ++v) {
            edges.emplace_back(u, v);
            endpoints.push_back(u);
            endpoints.push_back(v);
        }
    }
    std::vector<std::size_t> chosen;
    for (std::size_t v = core; v < n; ++v) {
        chosen.clear();
        while (chosen.size() < m) {
            const std::size_t u = endpoints[uniform_index(rng, endpoints.size())];
            if (std::find(chosen.begin(), chosen.end(), u) == chosen.end()) chosen.push_back(u);
        }
        for (std::size_t u : chosen) {
            edges.emplace_back(u, v);
            endpoints.push_back(u);
            endpoints.push_back(v);
        }
    }
    return edges;
}

inline UndirectedEdges stochastic_block(const GraphGenSpec& spec, Rng& rng) {
    const auto labels = cluster_labels(spec);
    UndirectedEdges edges;
    for (std::size_t u = 0; u < spec.nodes; ++u) {
        for (std::size_t v = u + 1; v < spec.nodes; ++v) {
            const double p =
                labels[u] == labels[v] ? spec.intra_probability : spec.inter_probability;
            if (bernoulli(rng, p)) edges.emplace_back(u, v);
        }
    }
    return edges;
}

inline UndirectedEdges watts_strogatz(const GraphGenSpec& spec, Rng& rng) {
    const std::size_t n = spec.nodes;
    const std::size_t half = spec.ws_neighbors / 2;
    std::vector<std::vector<std::size_t>> adj(n);
    auto connected = [&](std::size_t u, std::size_t v) {
        return std::find(adj[u].begin(), adj[u].end(), v) != adj[u].end();
    };
    auto link = [&](std::size_t u, std::size_t v) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    };
    auto unlink = [&](std::size_t u, std::size_t v) {
        adj[u].erase(std::find(adj[u].begin(), adj[u].end(), v));
        adj[v].erase(std::find(adj[v].begin(), adj[v].end(), u));
    };
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t j = 1; j <= half; ++j) link(u, (u + j) % n);
    }
    for (std::size_t j = 1; j <= half; ++j) {
        for (std::size_t u = 0; u < n; ++u) {
            if (!bernoulli(rng, spec.ws_rewire)) continue;
            const std::size_t v = (u + j) % n;
            if (adj[u].size() >= n - 1) continue;  // nowhere to rewire to
            std::size_t w;
            do {
                w = uniform_index(rng, n);
            } while (w == u || connected(u, w));
            unlink(u, v);
            link(u, w);
        }
    }
    UndirectedEdges edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v : adj[u]) {
            if (u < v) edges.emplace_back(u, v);
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

inline UndirectedEdges erdos_renyi(const GraphGenSpec& spec, Rng& rng) {
    UndirectedEdges edges;
    for (std::size_t u = 0; u < spec.nodes; ++u) {
        for (std::size_t v = u + 1; v < spec.nodes; ++v) {
            if (bernoulli(rng, spec.er_probability)) edges.emplace_back(u, v);
        }
    }
    return edges;
}

}  // namespace detail

inline constexpr std::size_t kGenerationAttempts = 100;

/// Samples a graph from `spec`. Undirected families are turned into digraphs
/// with both edge directions. Structures that are not connected are
/// resampled (up to kGenerationAttempts times). Weights start uniform per
/// node and are then randomized with randomize_weights(). A pure function of
/// the spec, including its seed.
inline WeightedDigraph generate(const GraphGenSpec& spec) {
    validate_spec(spec);
    const std::size_t n = spec.nodes;

    detail::UndirectedEdges undirected;
    std::size_t attempt = 0;
    if (spec.family != GraphFamily::identity) {
        bool ok = false;
        for (; attempt < kGenerationAttempts; ++attempt) {
            Rng rng(derive_seed(spec.seed, attempt, 0x67656e));
            switch (spec.family) {
                case GraphFamily::barabasi_albert: undirected = detail::barabasi_albert(spec, rng); break;
                case GraphFamily::sbm: undirected = detail::stochastic_block(spec, rng); break;
                case GraphFamily::watts_strogatz: undirected = detail::watts_strogatz(spec, rng); break;
                case GraphFamily::erdos_renyi: undirected = detail::erdos_renyi(spec, rng); break;
                case GraphFamily::identity: break;
            }
            if (detail::undirected_connected(n, undirected)) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw GraphGenerationError(
                "could not generate a strongly connected " + std::string(to_string(spec.family)) +
                " graph with seed " + std::to_string(spec.seed) + " after " +
                std::to_string(kGenerationAttempts) + " attempts");
        }
    }

    std::vector<Edge> edges;
    edges.reserve(2 * undirected.size() + n);
    for (auto [u, v] : undirected) {
        edges.push_back({u, v, 1.0});
        edges.push_back({v, u, 1.0});
    }
    if (spec.ensure_self_loops || spec.family == GraphFamily::identity) {
        for (std::size_t i = 0; i < n; ++i) edges.push_back({i, i, 1.0});
    }
    const auto graph = WeightedDigraph::from_edges(n, edges);
    return randomize_weights(graph, spec.rounds_per_node, derive_seed(spec.seed, attempt, 0x776774));
}

/// Graph where every agent only listens to itself (w_ii = 1).
inline WeightedDigraph identity_graph(std::size_t n) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) edges.push_back({i, i, 1.0});
    return WeightedDigraph::from_edges(n, edges);
}

/// Returns a copy of `graph` with a self-loop of weight `self_weight` at every
/// node and the remaining incoming weights rescaled to 1 - self_weight.
inline WeightedDigraph with_self_loops(const WeightedDigraph& graph, double self_weight) {
    if (!(self_weight > 0.0 && self_weight < 1.0)) {
        throw std::invalid_argument("self_weight must lie in (0,1)");
    }
    std::vector<Edge> edges;
    for (const Edge& e : graph.edges()) {
        if (e.source != e.target) edges.push_back(e);
    }
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
        edges.push_back({i, i, 0.0});
    }
    auto out = WeightedDigraph::from_edges(graph.node_count(), edges);
    std::vector<double> w(out.all_weights().begin(), out.all_weights().end());
    std::size_t k = 0;
    for (std::size_t i = 0; i < out.node_count(); ++i) {
        double others = 0.0;
        for (std::size_t src : out.sources(i)) {
            if (src != i) others += graph.weight(src, i);
        }
        for (std::size_t src : out.sources(i)) {
            if (src == i) {
                w[k] = others > 0.0 ? self_weight : 1.0;
            } else {
                w[k] = graph.weight(src, i) / others * (1.0 - self_weight);
            }
            ++k;
        }
    }
    return out.with_weights(std::move(w));
}

// ---------------------------------------------------------------------------
// Validation and the stationary distribution
// ---------------------------------------------------------------------------

struct GraphReport {
    bool strongly_connected = false;
    bool aperiodic = false;
    bool normalized = false;

    bool ok() const noexcept { return strongly_connected && normalized; }
};

/// Structural report. Only edges with positive weight count. Strong
/// connectivity uses a forward and a backward search from node 0; the period
/// is the gcd of level[j] + 1 - level[i] over edges j -> i in the forward
/// search tree's reach (a self-loop anywhere makes it 1).
inline GraphReport validate(const WeightedDigraph& graph) {
    GraphReport report;
    const std::size_t n = graph.node_count();
    report.normalized = graph.is_normalized();
    if (n == 0) return report;

    std::vector<std::vector<std::size_t>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto src = graph.sources(i);
        const auto w = graph.weights(i);
        for (std::size_t k = 0; k < src.size(); ++k) {
            if (w[k] > 0.0) out[src[k]].push_back(i);
        }
    }

    constexpr std::size_t kUnseen = static_cast<std::size_t>(-1);
    std::vector<std::size_t> level(n, kUnseen);
    std::queue<std::size_t> queue;
    level[0] = 0;
    queue.push(0);
    std::size_t reached = 1;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop();
        for (std::size_t v : out[u]) {
            if (level[v] == kUnseen) {
                level[v] = level[u] + 1;
                ++reached;
                queue.push(v);
            }
        }
    }

    std::vector<char> back(n, 0);
    std::vector<std::size_t> stack{0};
    back[0] = 1;
    std::size_t back_reached = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        const auto src = graph.sources(u);
        const auto w = graph.weights(u);
        for (std::size_t k = 0; k < src.size(); ++k) {
            if (w[k] > 0.0 && !back[src[k]]) {
                back[src[k]] = 1;
                ++back_reached;
                stack.push_back(src[k]);
            }
        }
    }
    report.strongly_connected = reached == n && back_reached == n;

    std::size_t period = 0;
    for (std::size_t u = 0; u < n; ++u) {
        if (level[u] == kUnseen) continue;
        for (std::size_t v : out[u]) {
            const auto a = static_cast<long long>(level[u]) + 1;
            const auto b = static_cast<long long>(level[v]);
            period = std::gcd(period, static_cast<std::size_t>(a > b ? a - b : b - a));
        }
    }
    report.aperiodic = period == 1;
    return report;
}

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Left Perron vector of the row-stochastic matrix W^T (row i holds node i's
/// incoming weights): pi_j = sum_i pi_i w_ji. Power iteration from the
/// uniform vector until the L1 change drops below `tol`. The DeGroot
/// consensus value of initial opinions X0 is dot(pi, X0).
inline std::vector<double> stationary_distribution(const WeightedDigraph& graph,
                                                   double tol = 1e-12,
                                                   std::size_t max_iterations = 1'000'000) {
    const std::size_t n = graph.node_count();
    if (n == 0) throw std::invalid_argument("stationary_distribution: empty graph");
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    for (std::size_t it = 0; it < max_iterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto src = graph.sources(i);
            const auto w = graph.weights(i);
            for (std::size_t k = 0; k < src.size(); ++k) next[src[k]] += pi[i] * w[k];
        }
        const double total = std::accumulate(next.begin(), next.end(), 0.0);
        double change = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] /= total;
            change += std::abs(next[j] - pi[j]);
        }
        pi.swap(next);
        if (change <= tol) return pi;
    }
    throw ConvergenceError("stationary_distribution: power iteration did not converge within " +
                           std::to_string(max_iterations) +
                           " iterations (periodic or disconnected chain?)");
}

// ---------------------------------------------------------------------------
// Edge-list CSV: header `source,target,weight`, 0-based ids.
// ---------------------------------------------------------------------------

inline void write_edge_list(std::ostream& os, const WeightedDigraph& graph) {
    os << "source,target,weight\n";
    for (const Edge& e : graph.edges()) {
        os << e.source << ',' << e.target << ',' << csv::format(e.weight) << '\n';
    }
}

/// Parses an edge list written by write_edge_list(). The node count is one
/// more than the largest id (every node has an incoming edge in valid graphs).
inline WeightedDigraph read_edge_list(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || csv::trim(line) != "source,target,weight") {
        throw std::invalid_argument("edge list: expected header 'source,target,weight'");
    }
    std::vector<Edge> edges;
    std::size_t n = 0;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line);
        const auto s = fields.size() == 3 ? csv::parse_int(fields[0]) : std::nullopt;
        const auto t = fields.size() == 3 ? csv::parse_int(fields[1]) : std::nullopt;
        const auto w = fields.size() == 3 ? csv::parse_double(fields[2]) : std::nullopt;
        if (!s || !t || !w || *s < 0 || *t < 0) {
            throw std::invalid_argument("edge list: malformed row at line " +
                                        std::to_string(line_no));
        }
        edges.push_back({static_cast<std::size_t>(*s), static_cast<std::size_t>(*t), *w});
        n = std::max({n, edges.back().source + 1, edges.back().target + 1});
    }
    return WeightedDigraph::from_edges(n, edges);
}

}  // namespace gsmdg

#endif  // GSMDG_GRAPH_HPP
