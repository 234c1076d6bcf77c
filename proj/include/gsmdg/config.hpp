#ifndef GSMDG_CONFIG_HPP
#define GSMDG_CONFIG_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "dynamics.hpp"
#include "fitting.hpp"
#include "graph.hpp"
#include "ingest.hpp"

namespace gsmdg {

inline constexpr int kSchemaVersion = 1;

/// Invalid run configuration; `path()` is the JSON pointer of the field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error((path.empty() ? std::string("/") : path) + ": " + what),
          path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

struct IngestSettings {
    std::optional<std::string> window_start;
    std::optional<std::string> window_end;
    std::size_t smooth = 1;
    GapFill fill = GapFill::zero;

    PreprocessOptions options() const {
        PreprocessOptions o;
        if (window_start) o.start = parse_timestamp(*window_start);
        if (window_end) o.end = parse_timestamp(*window_end);
        o.smooth = smooth;
        o.fill = fill;
        return o;
    }
};

/// The declarative document behind every CLI command.
struct RunConfig {
    int schema_version = kSchemaVersion;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::size_t jobs = 1;

    GraphGenSpec graph;
    PopulationSpec population;
    ModelParams model;

    std::size_t horizon = 500;
    SimMode mode = SimMode::stochastic;
    double weight_scale = 1.0;
    bool record_agents = false;

    std::vector<SweepAxis> sweep_axes;
    std::size_t sweep_replicates = 5;
    std::vector<Statistic> sweep_statistics{Statistic::d_max, Statistic::d_max_inf};

    ParamSpace fit_space = ParamSpace::defaults();
    FitConfig fit;

    IngestSettings ingest;
    IdentifiabilityOptions identify;

    ExperimentConfig experiment() const {
        ExperimentConfig e;
        e.graph = graph;
        e.graph.seed = seed;
        e.population = population;
        e.params = model;
        e.horizon = horizon;
        e.mode = mode;
        e.weight_scale = weight_scale;
        e.seed = seed;
        return e;
    }

    SweepSpec sweep() const {
        SweepSpec s;
        s.axes = sweep_axes;
        s.replicates = sweep_replicates;
        s.statistics = sweep_statistics;
        s.base = experiment();
        s.jobs = jobs;
        return s;
    }

    FitConfig fit_config() const {
        FitConfig f = fit;
        f.seed = seed;
        f.jobs = jobs;
        return f;
    }

    IdentifiabilityOptions identify_options() const {
        IdentifiabilityOptions o = identify;
        o.seed = seed;
        return o;
    }
};

namespace detail {

inline std::string pointer_token(std::string_view key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

/// Reads one JSON object, remembering which keys were consumed so that
/// leftovers can be reported as unknown.
class Section {
public:
    Section(const nlohmann::json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_, "expected an object");
    }

    const std::string& path() const { return path_; }
    std::string at(std::string_view key) const { return path_ + "/" + pointer_token(key); }

    const nlohmann::json* find(std::string_view key) {
        known_.insert(std::string(key));
        auto it = node_.find(std::string(key));
        if (it == node_.end() || it->is_null()) return nullptr;
        return &*it;
    }

    void number(std::string_view key, double& out) {
        if (const auto* v = find(key)) out = as_number(*v, at(key));
    }

    void count(std::string_view key, std::size_t& out) {
        if (const auto* v = find(key)) {
            if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                             v->get<std::int64_t>() < 0)) {
                throw ConfigError(at(key), "expected a non-negative integer");
            }
            out = v->get<std::size_t>();
        }
    }

    void u64(std::string_view key, std::uint64_t& out) {
        if (const auto* v = find(key)) {
            if (!v->is_number_unsigned()) {
                throw ConfigError(at(key), "expected an unsigned 64-bit integer");
            }
            out = v->get<std::uint64_t>();
        }
    }

    void boolean(std::string_view key, bool& out) {
        if (const auto* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void string(std::string_view key, std::string& out) {
        if (const auto* v = find(key)) {
            if (!v->is_string()) throw ConfigError(at(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    void numbers(std::string_view key, std::vector<double>& out) {
        if (const auto* v = find(key)) {
            if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
            out.clear();
            for (std::size_t k = 0; k < v->size(); ++k) {
                out.push_back(as_number((*v)[k], at(key) + "/" + std::to_string(k)));
            }
        }
    }

    template <class Parse>
    void choice(std::string_view key, Parse parse) {
        if (const auto* v = find(key)) {
            if (!v->is_string()) throw ConfigError(at(key), "expected a string");
            try {
                parse(v->get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw ConfigError(at(key), e.what());
            }
        }
    }

    std::optional<Section> child(std::string_view key) {
        if (const auto* v = find(key)) return Section(*v, at(key));
        return std::nullopt;
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!known_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
        }
    }

private:
    static double as_number(const nlohmann::json& v, const std::string& path) {
        if (!v.is_number()) throw ConfigError(path, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
        return d;
    }

    const nlohmann::json& node_;
    std::string path_;
    std::set<std::string> known_;
};

/// Re-raises a library validation error at the path of the field it names.
template <class Fn>
void checked(const std::string& base, std::initializer_list<std::string_view> fields, Fn fn) {
    try {
        fn();
    } catch (const std::invalid_argument& e) {
        const std::string_view msg = e.what();
        for (auto f : fields) {
            if (msg.substr(0, f.size()) == f &&
                (msg.size() == f.size() || msg[f.size()] == ' ')) {
                throw ConfigError(base + "/" + std::string(f), e.what());
            }
        }
        throw ConfigError(base, e.what());
    }
}

inline void read_graph(Section s, GraphGenSpec& g) {
    s.choice("family", [&](const std::string& v) { g.family = parse_graph_family(v); });
    s.count("nodes", g.nodes);
    s.count("ba_attachment", g.ba_attachment);
    s.numbers("cluster_ratios", g.cluster_ratios);
    s.number("intra_probability", g.intra_probability);
    s.number("inter_probability", g.inter_probability);
    s.count("ws_neighbors", g.ws_neighbors);
    s.number("ws_rewire", g.ws_rewire);
    s.number("er_probability", g.er_probability);
    s.boolean("ensure_self_loops", g.ensure_self_loops);
    s.count("rounds_per_node", g.rounds_per_node);
    s.finish();
    checked(s.path(),
            {"nodes", "ba_attachment", "cluster_ratios", "intra_probability",
             "inter_probability", "ws_neighbors", "ws_rewire", "er_probability"},
            [&] { validate_spec(g); });
}

inline nlohmann::json graph_json(const GraphGenSpec& g) {
    return {{"family", std::string(to_string(g.family))},
            {"nodes", g.nodes},
            {"ba_attachment", g.ba_attachment},
            {"cluster_ratios", g.cluster_ratios},
            {"intra_probability", g.intra_probability},
            {"inter_probability", g.inter_probability},
            {"ws_neighbors", g.ws_neighbors},
            {"ws_rewire", g.ws_rewire},
            {"er_probability", g.er_probability},
            {"ensure_self_loops", g.ensure_self_loops},
            {"rounds_per_node", g.rounds_per_node}};
}

inline SimMode parse_mode(std::string_view s) {
    if (s == "stochastic") return SimMode::stochastic;
    if (s == "expected") return SimMode::expected;
    throw std::invalid_argument("unknown simulation mode '" + std::string(s) + "'");
}

inline std::string mode_name(SimMode m) { return m == SimMode::expected ? "expected" : "stochastic"; }

inline void probability(const std::string& path, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(path, "must lie in [0,1]");
}

}  // namespace detail

/// Parses and validates a configuration document. Missing fields keep their
/// defaults; unknown keys and ill-typed or out-of-range values raise
/// ConfigError naming the offending field.
inline RunConfig parse_run_config(const nlohmann::json& doc) {
    using detail::Section;
    RunConfig c;
    Section root(doc, "");
    if (const auto* v = root.find("schema_version")) {
        if (!v->is_number_integer() || v->get<int>() != kSchemaVersion) {
            throw ConfigError("/schema_version",
                              "unsupported schema version (expected " +
                                  std::to_string(kSchemaVersion) + ")");
        }
    }
    root.u64("seed", c.seed);
    root.string("output_dir", c.output_dir);
    root.count("jobs", c.jobs);

    if (auto s = root.child("graph")) detail::read_graph(*s, c.graph);

    if (auto s = root.child("population")) {
        auto& p = c.population;
        s->number("positive_fraction", p.positive_fraction);
        s->numbers("cluster_positive_fractions", p.cluster_positive_fractions);
        s->number("stubborn_fraction", p.stubborn_fraction);
        s->number("susceptibility", p.susceptibility);
        s->finish();
        detail::probability(s->at("positive_fraction"), p.positive_fraction);
        for (std::size_t k = 0; k < p.cluster_positive_fractions.size(); ++k) {
            detail::probability(s->at("cluster_positive_fractions") + "/" + std::to_string(k),
                                p.cluster_positive_fractions[k]);
        }
        detail::probability(s->at("stubborn_fraction"), p.stubborn_fraction);
        detail::probability(s->at("susceptibility"), p.susceptibility);
    }
    if (!c.population.cluster_positive_fractions.empty() &&
        c.population.cluster_positive_fractions.size() != cluster_sizes(c.graph).size()) {
        throw ConfigError("/population/cluster_positive_fractions",
                          "needs one entry per graph cluster");
    }

    if (auto s = root.child("model")) {
        s->number("lambda", c.model.lambda);
        s->number("gamma", c.model.gamma);
        s->number("mu", c.model.mu);
        s->number("sigma", c.model.sigma);
        s->finish();
        detail::checked(s->path(), {"lambda", "gamma", "mu", "sigma"}, [&] { c.model.check(); });
    }

    if (auto s = root.child("simulation")) {
        s->count("horizon", c.horizon);
        s->choice("mode", [&](const std::string& v) { c.mode = detail::parse_mode(v); });
        s->number("weight_scale", c.weight_scale);
        s->boolean("record_agents", c.record_agents);
        s->finish();
        if (c.horizon < 1) throw ConfigError(s->at("horizon"), "must be at least 1");
        if (!(c.weight_scale > 0.0)) throw ConfigError(s->at("weight_scale"), "must be positive");
    }

    if (auto s = root.child("sweep")) {
        if (const auto* axes = s->find("axes")) {
            const std::string path = s->at("axes");
            if (!axes->is_array()) throw ConfigError(path, "expected an array");
            c.sweep_axes.clear();
            for (std::size_t k = 0; k < axes->size(); ++k) {
                Section a((*axes)[k], path + "/" + std::to_string(k));
                SweepAxis axis;
                a.choice("param", [&](const std::string& v) { axis.param = parse_sweep_param(v); });
                a.number("min", axis.lo);
                a.number("max", axis.hi);
                a.count("cells", axis.cells);
                a.finish();
                if (axis.cells < 2) throw ConfigError(a.at("cells"), "needs at least 2 cells");
                if (axis.hi < axis.lo) throw ConfigError(a.at("max"), "empty range (max < min)");
                c.sweep_axes.push_back(axis);
            }
            if (c.sweep_axes.size() > 2) throw ConfigError(path, "at most two axes");
        }
        s->count("replicates", c.sweep_replicates);
        if (const auto* stats = s->find("statistics")) {
            const std::string path = s->at("statistics");
            if (!stats->is_array()) throw ConfigError(path, "expected an array of names");
            c.sweep_statistics.clear();
            for (std::size_t k = 0; k < stats->size(); ++k) {
                const auto& v = (*stats)[k];
                const std::string item = path + "/" + std::to_string(k);
                if (!v.is_string()) throw ConfigError(item, "expected a string");
                try {
                    c.sweep_statistics.push_back(parse_statistic(v.get<std::string>()));
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(item, e.what());
                }
            }
            if (c.sweep_statistics.empty()) throw ConfigError(path, "no statistics requested");
        }
        s->finish();
        if (c.sweep_replicates < 1) throw ConfigError(s->at("replicates"), "must be at least 1");
    }

    if (auto s = root.child("fit")) {
        FitConfig& f = c.fit;
        if (const auto* axes = s->find("space")) {
            const std::string path = s->at("space");
            if (!axes->is_array()) throw ConfigError(path, "expected an array of axes");
            c.fit_space.axes.clear();
            for (std::size_t k = 0; k < axes->size(); ++k) {
                Section a((*axes)[k], path + "/" + std::to_string(k));
                ParamAxis axis;
                a.choice("name", [&](const std::string& v) {
                    if (v != "mu" && v != "gamma" && v != "r" && v != "p") {
                        throw std::invalid_argument("axis name must be mu, gamma, r or p");
                    }
                    axis.name = v;
                });
                if (axis.name.empty()) throw ConfigError(a.at("name"), "required");
                a.number("min", axis.lo);
                a.number("max", axis.hi);
                a.count("resolution", axis.resolution);
                a.finish();
                if (c.fit_space.axis_index(axis.name)) {
                    throw ConfigError(a.at("name"), "duplicate axis " + axis.name);
                }
                if (axis.name == "p" && (axis.lo < 0.0 || axis.hi > 0.5)) {
                    throw ConfigError(a.path(), "the p axis must lie within [0, 0.5]");
                }
                c.fit_space.axes.push_back(axis);
                detail::checked(a.path(), {}, [&] { ParamSpace{{axis}}.check(); });
            }
            if (c.fit_space.axes.empty()) throw ConfigError(path, "needs at least one axis");
        }
        if (auto g = s->child("surrogate")) detail::read_graph(*g, f.surrogate);
        s->numbers("cluster_positive_fractions", f.cluster_positive_fractions);
        s->number("lambda", f.lambda);
        s->number("sigma", f.sigma);
        s->count("replicates", f.replicates);
        s->number("noise_weight", f.noise_weight);
        s->count("restarts", f.restarts);
        s->choice("mode", [&](const std::string& v) { f.mode = detail::parse_mode(v); });
        if (auto a = s->child("anneal")) {
            a->number("initial_temperature", f.anneal.initial_temperature);
            a->number("cooling", f.anneal.cooling);
            a->number("neighborhood_volume", f.anneal.neighborhood_volume);
            a->count("iterations", f.anneal.iterations);
            a->finish();
            if (!(f.anneal.initial_temperature > 0.0)) {
                throw ConfigError(a->at("initial_temperature"), "must be positive");
            }
            if (!(f.anneal.cooling > 0.0 && f.anneal.cooling < 1.0)) {
                throw ConfigError(a->at("cooling"), "must lie in (0,1)");
            }
            if (!(f.anneal.neighborhood_volume > 0.0 && f.anneal.neighborhood_volume < 1.0)) {
                throw ConfigError(a->at("neighborhood_volume"), "must lie in (0,1)");
            }
        }
        s->finish();
        for (std::size_t k = 0; k < f.cluster_positive_fractions.size(); ++k) {
            detail::probability(s->at("cluster_positive_fractions") + "/" + std::to_string(k),
                                f.cluster_positive_fractions[k]);
        }
        if (!(f.lambda > 0.0)) throw ConfigError(s->at("lambda"), "must be positive");
        if (!(f.sigma >= 0.0)) throw ConfigError(s->at("sigma"), "must be non-negative");
        if (f.replicates < 1) throw ConfigError(s->at("replicates"), "must be at least 1");
        if (!(f.noise_weight >= 0.0)) throw ConfigError(s->at("noise_weight"), "must be non-negative");
        if (f.restarts < 1) throw ConfigError(s->at("restarts"), "must be at least 1");
        detail::checked(s->path(), {}, [&] { f.check(); });
    }

    if (auto s = root.child("ingest")) {
        auto& in = c.ingest;
        std::string start, end, fill;
        if (s->find("window_start")) {
            s->string("window_start", start);
            in.window_start = start;
        }
        if (s->find("window_end")) {
            s->string("window_end", end);
            in.window_end = end;
        }
        s->count("smooth", in.smooth);
        s->choice("fill", [&](const std::string& v) { in.fill = parse_gap_fill(v); });
        s->finish();
        try {
            if (in.window_start) parse_timestamp(*in.window_start);
        } catch (const DataError& e) {
            throw ConfigError(s->at("window_start"), e.what());
        }
        try {
            if (in.window_end) parse_timestamp(*in.window_end);
        } catch (const DataError& e) {
            throw ConfigError(s->at("window_end"), e.what());
        }
        if (in.smooth < 1) throw ConfigError(s->at("smooth"), "must be at least 1");
    }

    if (auto s = root.child("identify")) {
        auto& id = c.identify;
        s->number("q_min", id.q_min);
        s->number("q_max", id.q_max);
        s->count("q_count", id.q_count);
        s->count("bootstrap", id.bootstrap);
        s->finish();
        if (!(id.q_min > 0.0 && id.q_min <= 1.0)) throw ConfigError(s->at("q_min"), "must lie in (0,1]");
        if (!(id.q_max >= id.q_min && id.q_max <= 1.0)) {
            throw ConfigError(s->at("q_max"), "must lie in [q_min, 1]");
        }
        if (id.q_count < 1) throw ConfigError(s->at("q_count"), "must be at least 1");
        if (id.bootstrap < 2) throw ConfigError(s->at("bootstrap"), "must be at least 2");
    }
    root.finish();
    return c;
}

/// The fully resolved document: every field, defaults included.
inline nlohmann::json to_json(const RunConfig& c) {
    using nlohmann::json;
    json axes = json::array();
    for (const auto& a : c.sweep_axes) {
        axes.push_back({{"param", std::string(to_string(a.param))},
                        {"min", a.lo},
                        {"max", a.hi},
                        {"cells", a.cells}});
    }
    json stats = json::array();
    for (auto s : c.sweep_statistics) stats.push_back(std::string(to_string(s)));
    json space = json::array();
    for (const auto& a : c.fit_space.axes) {
        space.push_back({{"name", a.name}, {"min", a.lo}, {"max", a.hi}, {"resolution", a.resolution}});
    }
    json ingest = {{"smooth", c.ingest.smooth},
                   {"fill", c.ingest.fill == GapFill::zero ? "zero" : "previous"}};
    ingest["window_start"] = c.ingest.window_start ? json(*c.ingest.window_start) : json(nullptr);
    ingest["window_end"] = c.ingest.window_end ? json(*c.ingest.window_end) : json(nullptr);

    return {
        {"schema_version", c.schema_version},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"jobs", c.jobs},
        {"graph", detail::graph_json(c.graph)},
        {"population",
         {{"positive_fraction", c.population.positive_fraction},
          {"cluster_positive_fractions", c.population.cluster_positive_fractions},
          {"stubborn_fraction", c.population.stubborn_fraction},
          {"susceptibility", c.population.susceptibility}}},
        {"model",
         {{"lambda", c.model.lambda},
          {"gamma", c.model.gamma},
          {"mu", c.model.mu},
          {"sigma", c.model.sigma}}},
        {"simulation",
         {{"horizon", c.horizon},
          {"mode", detail::mode_name(c.mode)},
          {"weight_scale", c.weight_scale},
          {"record_agents", c.record_agents}}},
        {"sweep", {{"axes", axes}, {"replicates", c.sweep_replicates}, {"statistics", stats}}},
        {"fit",
         {{"space", space},
          {"surrogate", detail::graph_json(c.fit.surrogate)},
          {"cluster_positive_fractions", c.fit.cluster_positive_fractions},
          {"lambda", c.fit.lambda},
          {"sigma", c.fit.sigma},
          {"replicates", c.fit.replicates},
          {"noise_weight", c.fit.noise_weight},
          {"restarts", c.fit.restarts},
          {"mode", detail::mode_name(c.fit.mode)},
          {"anneal",
           {{"initial_temperature", c.fit.anneal.initial_temperature},
            {"cooling", c.fit.anneal.cooling},
            {"neighborhood_volume", c.fit.anneal.neighborhood_volume},
            {"iterations", c.fit.anneal.iterations}}}}},
        {"ingest", ingest},
        {"identify",
         {{"q_min", c.identify.q_min},
          {"q_max", c.identify.q_max},
          {"q_count", c.identify.q_count},
          {"bootstrap", c.identify.bootstrap}}},
    };
}

/// Reads a configuration file. Syntax errors are reported as ConfigError at
/// the document root.
inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_run_config(doc);
}

}  // namespace gsmdg

#endif  // GSMDG_CONFIG_HPP
