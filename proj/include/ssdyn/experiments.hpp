#pragma once

// End-to-end pipelines: the three reference network configurations,
// simulate -> infer -> estimate, and repeated-run grids.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssdyn/bayes_core.hpp"
#include "ssdyn/dictionary.hpp"
#include "ssdyn/error.hpp"
#include "ssdyn/estimation.hpp"
#include "ssdyn/metronome.hpp"
#include "ssdyn/oscillator_sim.hpp"
#include "ssdyn/parallel.hpp"
#include "ssdyn/pt_sampler.hpp"
#include "ssdyn/rng.hpp"

namespace ssdyn {

struct NetworkExperiment {
    NetworkGroundTruth truth;
    SimConfig sim;
};

/// Reference configurations 1-3 (0-based node indices). Configuration 2 uses
/// alpha_ijk = alpha'_ijk = `threebody_alpha` (0 by default) and K = 0.5 at
/// every three-body harmonic up to L3 = 2.
inline NetworkExperiment paper_configuration(int id, std::uint64_t seed = 0, double threebody_alpha = 0.0) {
    require(id >= 1 && id <= 3, "configuration id must be 1, 2 or 3");
    NetworkExperiment e;
    auto& t = e.truth;
    t.n_nodes = 3;
    e.sim.dt = 0.1;
    e.sim.n_steps = 2000;
    e.sim.sigma_o = 0.0;
    e.sim.x0 = {0.0, 2.0, 4.0};
    e.sim.seed = seed;
    const double k = 0.5;
    if (id == 1) {
        t.omega = {0.5, 1.0, 1.5};
        t.l2_true = 1;
        t.l3_true = 1;
        t.pairwise = {{1, 0, 1, k, 1.0}, {2, 0, 1, k, 1.0}};
        t.threebody_asym = {{0, 1, 2, 1, k, 1.0}};
        t.threebody_sym = {{2, 0, 1, 1, k, 1.0}};
        e.sim.sigma_d = 0.1;
        return e;
    }
    t.omega = {0.4, 0.8, 1.2};
    t.l2_true = 1;
    t.l3_true = 2;
    t.pairwise = {{1, 0, 1, k, 1.0}, {2, 0, 1, k, 1.0}};
    for (int l = 1; l <= 2; ++l) {
        t.threebody_asym.push_back({0, 1, 2, l, k, threebody_alpha});
        t.threebody_sym.push_back({2, 0, 1, l, k, threebody_alpha});
    }
    e.sim.sigma_d = id == 2 ? 0.1 : 0.5;
    return e;
}

struct InferenceSettings {
    Priors priors;
    int replicas = 40;
    double eta = 1.3;
    SamplerConfig sampler;
    double cutoff = 0.5;
    bool per_node_gates = false;

    void validate() const {
        priors.validate();
        sampler.validate();
        require(replicas >= 2, "inference: replicas must be >= 2");
        require(eta > 1.0, "inference: eta must be > 1");
        require(cutoff > 0.0 && cutoff < 1.0, "inference: cutoff must lie in (0, 1)");
    }
};

struct InferenceResult {
    std::vector<Dictionary> dicts;
    ModelLayout layout;
    std::vector<NodeSuffStats> stats;
    ReplicaLadder ladder;
    PosteriorSamples samples;
    InclusionTable table;
    PointEstimate estimate;
    double dt = 0.0;
};

inline std::vector<NodeSuffStats> network_suff_stats(const Trajectory& traj, std::span<const Dictionary> dicts) {
    const auto y = compute_targets(traj);
    std::vector<NodeSuffStats> stats;
    for (const auto& d : dicts)
        stats.push_back(NodeSuffStats::from(evaluate_design_matrix(traj, d).g, y[static_cast<std::size_t>(d.node)]));
    return stats;
}

/// Posterior sampling, BMA summaries and the thresholded point estimate.
inline InferenceResult infer_network(const Trajectory& traj, const InferenceSettings& settings,
                                     ThreadPool* pool = nullptr) {
    settings.validate();
    require(traj.n_nodes() >= 2, "inference: need at least 2 nodes");
    require(traj.n_samples() >= 2, "inference: trajectory needs at least 2 samples");
    require(traj.x.allFinite(), "inference: trajectory contains non-finite values");
    InferenceResult r;
    r.dt = traj.dt;
    r.dicts = build_dictionaries(traj.n_nodes(), settings.priors.l2_max, settings.priors.l3_max);
    r.layout = make_layout(r.dicts, settings.per_node_gates);
    r.stats = network_suff_stats(traj, r.dicts);
    r.ladder = build_ladder(settings.replicas, settings.eta);
    r.samples = run_sampler(r.stats, r.layout, settings.priors, r.ladder, settings.sampler, r.dt, pool);
    r.table = inclusion_probabilities(r.samples, r.layout);
    r.estimate = point_estimate(r.samples, r.table, r.stats, r.layout, settings.cutoff, r.dt);
    return r;
}

struct ExperimentOutcome {
    Trajectory traj;
    InferenceResult result;
    MetricValues metrics;
};

inline ExperimentOutcome run_network_experiment(const NetworkExperiment& e, const InferenceSettings& settings,
                                                ThreadPool* pool = nullptr) {
    ExperimentOutcome out;
    out.traj = simulate_network(e.truth, e.sim);
    out.result = infer_network(out.traj, settings, pool);
    out.metrics = evaluate_metrics(e.truth, out.result.dicts, out.result.layout, out.result.estimate);
    return out;
}

// ---------------------------------------------------------------------------
// Repeated-run grids over M, sigma_d or sigma_o.

enum class SweepAxis { DataCount, SigmaD, SigmaO };

inline const char* to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::DataCount: return "M";
        case SweepAxis::SigmaD: return "sigma_d";
        case SweepAxis::SigmaO: return "sigma_o";
    }
    return "?";
}

inline SweepAxis parse_sweep_axis(const std::string& s) {
    if (s == "M" || s == "n_steps") return SweepAxis::DataCount;
    if (s == "sigma_d") return SweepAxis::SigmaD;
    if (s == "sigma_o") return SweepAxis::SigmaO;
    throw ValidationError("sweep: unknown axis '" + s + "' (expected M, sigma_d or sigma_o)");
}

struct SweepSpec {
    NetworkExperiment base;
    InferenceSettings settings;
    SweepAxis axis = SweepAxis::DataCount;
    std::vector<double> values;
    int repeats = 10;
    std::uint64_t seed = 1;
};

struct SweepRun {
    double value = 0.0;
    int repeat = 0;
    std::uint64_t data_seed = 0;
    std::uint64_t sampler_seed = 0;
    bool ok = false;
    std::string error;
    MetricValues metrics;
};

struct SweepPoint {
    double value = 0.0;
    MeanSe e_c, e_c_edges, e_theta;
    int failures = 0;
};

struct SweepReport {
    SweepAxis axis = SweepAxis::DataCount;
    std::vector<SweepRun> runs;
    std::vector<SweepPoint> points;
};

/// Repeat r uses the same data and sampler seeds at every grid value, so the
/// grid compares like with like. Failed runs are recorded with their error.
inline SweepReport run_sweep(const SweepSpec& spec, ThreadPool* pool = nullptr,
                             const std::function<void(const SweepRun&)>& progress = {}) {
    require(!spec.values.empty(), "sweep: grid is empty");
    require(spec.repeats >= 1, "sweep: repeats must be >= 1");
    spec.settings.validate();
    SweepReport rep;
    rep.axis = spec.axis;
    for (double v : spec.values) {
        SweepPoint pt;
        pt.value = v;
        std::vector<double> ec, ece, et;
        for (int r = 0; r < spec.repeats; ++r) {
            SweepRun run;
            run.value = v;
            run.repeat = r;
            run.data_seed = derive_seed(spec.seed, 2 * static_cast<std::uint64_t>(r));
            run.sampler_seed = derive_seed(spec.seed, 2 * static_cast<std::uint64_t>(r) + 1);
            NetworkExperiment e = spec.base;
            e.sim.seed = run.data_seed;
            switch (spec.axis) {
                case SweepAxis::DataCount: e.sim.n_steps = std::lround(v); break;
                case SweepAxis::SigmaD: e.sim.sigma_d = v; break;
                case SweepAxis::SigmaO: e.sim.sigma_o = v; break;
            }
            InferenceSettings s = spec.settings;
            s.sampler.seed = run.sampler_seed;
            try {
                run.metrics = run_network_experiment(e, s, pool).metrics;
                run.ok = true;
                ec.push_back(run.metrics.e_c);
                ece.push_back(run.metrics.e_c_edges);
                et.push_back(run.metrics.e_theta);
            } catch (const std::exception& ex) {
                run.error = std::string(to_string(spec.axis)) + "=" + std::to_string(v) + " repeat " +
                            std::to_string(r) + ": " + ex.what();
                ++pt.failures;
            }
            if (progress) progress(run);
            rep.runs.push_back(run);
        }
        pt.e_c = mean_se(ec);
        pt.e_c_edges = mean_se(ece);
        pt.e_theta = mean_se(et);
        rep.points.push_back(pt);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Metronome phase-difference study.

struct MetronomeWindowResult {
    double t_max = 0.0;
    std::vector<double> inclusion;  // per column
    Eigen::VectorXd theta_hat;      // per column, zero where excluded
    double sigma_hat = 0.0;
};

struct MetronomeStudy {
    PhaseSeries phases;
    std::vector<std::string> labels;
    std::vector<MetronomeWindowResult> windows;
    TrigField field;  // from the last window
    std::vector<FixedPoint> fixed;
};

struct MetronomeSettings {
    MetronomeSpec spec;
    std::vector<double> windows{300.0, 500.0, 1000.0};
    int l_max = 3;
    InferenceSettings inference;
};

inline MetronomeWindowResult infer_psi_window(const PhaseSeries& ps, double t_max, int l_max,
                                              const InferenceSettings& settings, ThreadPool* pool = nullptr) {
    const auto w = window(ps, t_max);
    const auto reg = build_psi_regression(w, l_max);
    const auto layout = psi_layout(l_max);
    std::vector<NodeSuffStats> stats{NodeSuffStats::from(reg.g, reg.y)};
    const auto ladder = build_ladder(settings.replicas, settings.eta);
    Priors priors = settings.priors;
    priors.l2_max = l_max;
    priors.l3_max = 1;
    const auto samples = run_sampler(stats, layout, priors, ladder, settings.sampler, ps.dt, pool);
    const auto table = inclusion_probabilities(samples, layout);
    const auto pe = point_estimate(samples, table, stats, layout, settings.cutoff, ps.dt);
    MetronomeWindowResult r;
    r.t_max = t_max;
    r.inclusion = table.columns[0];
    r.theta_hat = pe.theta_hat[0];
    r.sigma_hat = pe.sigma_hat[0];
    return r;
}

inline MetronomeStudy run_metronome_study(const MetronomeSettings& s, ThreadPool* pool = nullptr) {
    require(!s.windows.empty(), "metronome: no windows");
    s.inference.validate();
    for (double w : s.windows)
        require(w > 0.0 && w <= s.spec.t_end + 1e-9,
                "metronome: window [0, " + std::to_string(w) + "] is longer than the simulation");
    MetronomeStudy study;
    study.phases = extract_phase(simulate_metronomes(s.spec));
    for (int l = 1; l <= s.l_max; ++l)
        for (Trig t : {Trig::Sin, Trig::Cos}) study.labels.push_back(psi_column_label(l, t));
    for (std::size_t k = 0; k < s.windows.size(); ++k) {
        InferenceSettings inf = s.inference;
        inf.sampler.seed = derive_seed(s.inference.sampler.seed, k);
        study.windows.push_back(infer_psi_window(study.phases, s.windows[k], s.l_max, inf, pool));
    }
    study.field = TrigField::from_columns(study.windows.back().theta_hat);
    study.fixed = fixed_points(study.field);
    return study;
}

}  // namespace ssdyn
