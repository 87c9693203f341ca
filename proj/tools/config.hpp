#pragma once

// JSON experiment configs. Unknown keys are rejected; node indices are 1-based
// in files and 0-based in memory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssdyn/error.hpp"
#include "ssdyn/experiments.hpp"
#include "ssdyn/io.hpp"

namespace ssdyn::cli {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

class JsonReader {
public:
    JsonReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        require(j_.is_object(), where() + " must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    template <class T>
    T get(const std::string& key, const T& fallback) {
        used_.insert(key);
        if (!has(key)) return fallback;
        return convert<T>(key);
    }

    template <class T>
    T req(const std::string& key) {
        used_.insert(key);
        require(has(key), "missing required key '" + join(key) + "'");
        return convert<T>(key);
    }

    template <class T>
    std::optional<T> opt(const std::string& key) {
        used_.insert(key);
        if (!has(key)) return std::nullopt;
        return convert<T>(key);
    }

    JsonReader child(const std::string& key) {
        used_.insert(key);
        require(has(key), "missing required key '" + join(key) + "'");
        return JsonReader(j_.at(key), join(key));
    }

    void allow(const std::string& key) { used_.insert(key); }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ValidationError("unknown key '" + join(it.key()) + "'");
    }

    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

private:
    template <class T>
    T convert(const std::string& key) const {
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("key '" + join(key) + "' has the wrong type: " + e.what());
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

/// Parses text, converting parser byte offsets to line:column.
inline json parse_json_text(const std::string& text, const std::string& name) {
    try {
        return json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        long line = 1, col = 1;
        for (std::size_t k = 0; k < text.size() && k + 1 < e.byte; ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ValidationError(name + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON parse error: " +
                              e.what());
    }
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Sections.

inline NetworkGroundTruth parse_network(JsonReader r) {
    NetworkGroundTruth t;
    t.n_nodes = r.req<int>("n_nodes");
    t.omega = r.req<std::vector<double>>("omega");
    t.l2_true = r.get<int>("l2_true", 1);
    t.l3_true = r.get<int>("l3_true", 1);
    const json pairs = r.get<json>("pairwise", json::array());
    require(pairs.is_array(), "'network.pairwise' must be an array");
    for (std::size_t n = 0; n < pairs.size(); ++n) {
        JsonReader c(pairs[n], "network.pairwise[" + std::to_string(n) + "]");
        t.pairwise.push_back({c.req<int>("i") - 1, c.req<int>("j") - 1, c.get<int>("l", 1), c.req<double>("strength"),
                              c.get<double>("alpha", 0.0)});
        c.finish();
    }
    for (const char* name : {"threebody_asym", "threebody_sym"}) {
        const json arr = r.get<json>(name, json::array());
        require(arr.is_array(), std::string("'network.") + name + "' must be an array");
        auto& dst = std::string(name) == "threebody_asym" ? t.threebody_asym : t.threebody_sym;
        for (std::size_t n = 0; n < arr.size(); ++n) {
            JsonReader c(arr[n], std::string("network.") + name + "[" + std::to_string(n) + "]");
            dst.push_back({c.req<int>("i") - 1, c.req<int>("j") - 1, c.req<int>("k") - 1, c.get<int>("l", 1),
                           c.req<double>("strength"), c.get<double>("alpha", 0.0)});
            c.finish();
        }
    }
    r.finish();
    t.validate();
    return t;
}

inline json network_to_json(const NetworkGroundTruth& t) {
    json j;
    j["n_nodes"] = t.n_nodes;
    j["omega"] = t.omega;
    j["l2_true"] = t.l2_true;
    j["l3_true"] = t.l3_true;
    j["pairwise"] = json::array();
    for (const auto& c : t.pairwise)
        j["pairwise"].push_back({{"i", c.i + 1}, {"j", c.j + 1}, {"l", c.l}, {"strength", c.strength}, {"alpha", c.alpha}});
    for (const char* name : {"threebody_asym", "threebody_sym"}) {
        const auto& src = std::string(name) == "threebody_asym" ? t.threebody_asym : t.threebody_sym;
        j[name] = json::array();
        for (const auto& c : src)
            j[name].push_back({{"i", c.i + 1}, {"j", c.j + 1}, {"k", c.k + 1}, {"l", c.l}, {"strength", c.strength},
                               {"alpha", c.alpha}});
    }
    return j;
}

inline SimConfig parse_simulation(JsonReader r, int n_nodes) {
    SimConfig s;
    s.dt = r.get<double>("dt", s.dt);
    s.n_steps = r.get<long>("n_steps", s.n_steps);
    s.sigma_d = r.get<double>("sigma_d", s.sigma_d);
    s.sigma_o = r.get<double>("sigma_o", s.sigma_o);
    s.x0 = r.req<std::vector<double>>("x0");
    s.substeps = r.get<int>("substeps", s.substeps);
    r.finish();
    s.validate(n_nodes);
    return s;
}

inline json simulation_to_json(const SimConfig& s) {
    return {{"dt", s.dt}, {"n_steps", s.n_steps}, {"sigma_d", s.sigma_d}, {"sigma_o", s.sigma_o},
            {"x0", s.x0},  {"substeps", s.substeps}};
}

inline Range parse_range(JsonReader& r, const std::string& key, Range fallback) {
    r.allow(key);
    if (!r.has(key)) return fallback;
    const auto v = r.req<std::vector<double>>(key);
    require(v.size() == 2, "'" + r.join(key) + "' must be [min, max]");
    return {v[0], v[1]};
}

inline void parse_priors(JsonReader r, Priors& p) {
    p.p = r.get<double>("p", p.p);
    p.p_d = r.opt<double>("p_d");
    p.sigma = parse_range(r, "sigma_range", p.sigma);
    p.tau = parse_range(r, "tau_range", p.tau);
    p.l2_max = r.get<int>("l2_max", p.l2_max);
    p.l3_max = r.get<int>("l3_max", p.l3_max);
    p.pinned_sigma = r.opt<double>("pinned_sigma");
    p.pinned_tau = r.opt<double>("pinned_tau");
    r.finish();
    p.validate();
}

inline void parse_sampler(JsonReader r, SamplerConfig& s) {
    s.n_sweeps = r.get<long>("n_sweeps", s.n_sweeps);
    s.burn_in = r.get<long>("burn_in", s.burn_in);
    s.thinning = r.get<long>("thinning", s.thinning);
    s.exchange_period = r.get<long>("exchange_period", s.exchange_period);
    s.sigma_step = r.get<double>("sigma_step", s.sigma_step);
    s.tau_step = r.get<double>("tau_step", s.tau_step);
    s.adapt = r.get<bool>("adapt", s.adapt);
    s.adapt_interval = r.get<long>("adapt_interval", s.adapt_interval);
    s.adapt_target = r.get<double>("adapt_target", s.adapt_target);
    s.exchanges = r.get<bool>("exchanges", s.exchanges);
    r.finish();
    s.validate();
}

inline void parse_ladder(JsonReader r, InferenceSettings& s) {
    s.replicas = r.get<int>("replicas", s.replicas);
    s.eta = r.get<double>("eta", s.eta);
    r.finish();
}

inline MetronomeSpec parse_metronome(JsonReader r) {
    MetronomeSpec m;
    m.eps = r.get<double>("eps", m.eps);
    m.mu = r.get<double>("mu", m.mu);
    m.beta_damp = r.get<double>("beta_damp", m.beta_damp);
    m.a = r.get<double>("a", m.a);
    m.b = r.get<double>("b", m.b);
    m.sigma = r.get<double>("sigma", m.sigma);
    m.dt_int = r.get<double>("dt_int", m.dt_int);
    m.dt_sample = r.get<double>("dt_sample", m.dt_sample);
    m.t_end = r.get<double>("t_end", m.t_end);
    auto pair = [&](const char* key, std::array<double, 2> fallback) {
        const auto v = r.get<std::vector<double>>(key, {fallback[0], fallback[1]});
        require(v.size() == 2, "'" + r.join(key) + "' must have 2 entries");
        return std::array<double, 2>{v[0], v[1]};
    };
    m.x0 = pair("x0", m.x0);
    m.v0 = pair("v0", m.v0);
    r.finish();
    m.validate();
    return m;
}

enum class ConfigKind { Oscillator, Metronome, Sweep };

struct ExperimentConfig {
    ConfigKind kind = ConfigKind::Oscillator;
    std::uint64_t seed = 1;
    std::optional<NetworkGroundTruth> truth;
    std::optional<SimConfig> sim;
    InferenceSettings inference;
    MetronomeSettings metronome;
    SweepSpec sweep;
    std::string hash;
};

/// Parses the inference-related sections shared by every kind.
inline void parse_inference_sections(JsonReader& root, InferenceSettings& inf) {
    for (const char* key : {"priors", "ladder", "sampler"}) root.allow(key);
    if (root.has("priors")) parse_priors(root.child("priors"), inf.priors);
    if (root.has("ladder")) parse_ladder(root.child("ladder"), inf);
    if (root.has("sampler")) parse_sampler(root.child("sampler"), inf.sampler);
    inf.cutoff = root.get<double>("threshold", inf.cutoff);
    inf.per_node_gates = root.get<bool>("per_node_gates", inf.per_node_gates);
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::string& name) {
    const json j = parse_json_text(text, name);
    JsonReader root(j, "");
    ExperimentConfig cfg;
    cfg.hash = hex64(fnv1a64(text));
    const int version = root.req<int>("schema_version");
    require(version == kSchemaVersion, "unsupported schema_version " + std::to_string(version) + " (expected " +
                                           std::to_string(kSchemaVersion) + ")");
    const auto kind = root.req<std::string>("kind");
    if (kind == "oscillator") cfg.kind = ConfigKind::Oscillator;
    else if (kind == "metronome") cfg.kind = ConfigKind::Metronome;
    else if (kind == "sweep") cfg.kind = ConfigKind::Sweep;
    else throw ValidationError("unknown kind '" + kind + "' (expected oscillator, metronome or sweep)");
    cfg.seed = root.get<std::uint64_t>("seed", cfg.seed);
    parse_inference_sections(root, cfg.inference);
    cfg.inference.sampler.seed = cfg.seed;

    if (cfg.kind == ConfigKind::Metronome) {
        auto& m = cfg.metronome;
        m.inference = cfg.inference;
        root.allow("metronome");
        if (root.has("metronome")) m.spec = parse_metronome(root.child("metronome"));
        m.spec.seed = cfg.seed;
        m.windows = root.get<std::vector<double>>("windows", m.windows);
        m.l_max = root.get<int>("l_max", m.l_max);
        require(m.l_max >= 1, "'l_max' must be >= 1");
        for (double w : m.windows)
            require(w > 0.0 && w <= m.spec.t_end + 1e-9,
                    "window [0, " + fmt(w) + "] is longer than the simulation (t_end=" + fmt(m.spec.t_end) + ")");
        root.finish();
        return cfg;
    }

    cfg.truth = parse_network(root.child("network"));
    cfg.sim = parse_simulation(root.child("simulation"), cfg.truth->n_nodes);
    cfg.sim->seed = cfg.seed;
    if (cfg.kind == ConfigKind::Sweep) {
        JsonReader s = root.child("sweep");
        cfg.sweep.axis = parse_sweep_axis(s.req<std::string>("axis"));
        cfg.sweep.values = s.req<std::vector<double>>("values");
        cfg.sweep.repeats = s.get<int>("repeats", 10);
        s.finish();
        require(!cfg.sweep.values.empty(), "'sweep.values' must not be empty");
        require(cfg.sweep.repeats >= 1, "'sweep.repeats' must be >= 1");
        cfg.sweep.base = {*cfg.truth, *cfg.sim};
        cfg.sweep.settings = cfg.inference;
        cfg.sweep.seed = cfg.seed;
    }
    root.finish();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    return parse_config_text(read_text(path), path.string());
}

}  // namespace ssdyn::cli
