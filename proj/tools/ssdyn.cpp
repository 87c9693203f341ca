// ssdyn command-line front end: simulate, infer, reproduce, sweep, metronome.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "config.hpp"
#include "ssdyn/experiments.hpp"
#include "ssdyn/io.hpp"

namespace fs = std::filesystem;
using namespace ssdyn;
using namespace ssdyn::cli;

namespace {

enum Exit { kOk = 0, kValidation = 2, kNumerical = 3, kIo = 4 };

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

json provenance_json(const Provenance& p) {
    return {{"tool", "ssdyn"}, {"version", kVersion}, {"config", p.config_hash}, {"seed", p.seed}};
}

json diagnostics_json(const InferenceResult& r, const InferenceSettings& s, const Provenance& prov) {
    json j;
    j["provenance"] = provenance_json(prov);
    j["replicas"] = s.replicas;
    j["eta"] = s.eta;
    j["n_sweeps"] = s.sampler.n_sweeps;
    j["burn_in"] = s.sampler.burn_in;
    j["thinning"] = s.sampler.thinning;
    j["exchange_period"] = s.sampler.exchange_period;
    j["records"] = r.samples.records.size();
    j["betas"] = r.samples.betas;
    json swaps = json::array();
    for (const auto& t : r.samples.swaps) swaps.push_back(t.rate());
    j["swap_acceptance"] = swaps;
    j["mean_log_likelihood"] = r.samples.mean_log_lik;
    const auto& mv = r.samples.moves.back();
    j["move_acceptance_beta1"] = {{"edge", mv.edge.rate()}, {"gate", mv.gate.rate()}, {"order", mv.order.rate()},
                                  {"sigma", mv.sigma.rate()}, {"tau", mv.tau.rate()}};
    j["sigma_hat"] = r.estimate.sigma_hat;
    j["l2_hat"] = r.estimate.structure.orders[0];
    j["l3_hat"] = r.estimate.structure.orders[1];
    return j;
}

json dictionary_json(const std::vector<Dictionary>& dicts) {
    json j = json::array();
    for (const auto& d : dicts) {
        json cols = json::array();
        for (int c = 0; c < d.size(); ++c) {
            const auto& b = d.entries[static_cast<std::size_t>(c)];
            json e = {{"column", c}, {"kind", to_string(b.kind)}, {"basis", basis_label(b)}};
            if (b.kind != BasisKind::Intrinsic) {
                json edge = json::array();
                for (int n : b.edge)
                    if (n >= 0) edge.push_back(n + 1);
                e["edge"] = edge;
                e["harmonic"] = b.harmonic;
                e["trig"] = to_string(b.trig);
            }
            cols.push_back(e);
        }
        j.push_back({{"node", d.node + 1}, {"l2_max", d.l2_max}, {"l3_max", d.l3_max}, {"columns", cols}});
    }
    return j;
}

void write_samples_ndjson(const fs::path& path, const InferenceResult& r) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const auto& rec : r.samples.records) {
        const auto& s = rec.state.structure;
        json c = json::array();
        for (const auto& node_edges : s.edges) {
            std::uint64_t v = 0;
            for (std::size_t k = 0; k < node_edges.size() && k < 64; ++k)
                if (node_edges[k]) v |= 1ULL << k;
            c.push_back(hex64(v));
        }
        json d = json::array();
        for (auto b : s.gates) d.push_back(static_cast<int>(b));
        json sigma = json::array();
        for (const auto& ns : rec.state.nodes) sigma.push_back(ns.sigma);
        out << json{{"sweep", rec.sweep}, {"logpost", rec.log_post}, {"c", c}, {"d", d},
                    {"l2", s.orders[0]},  {"l3", s.orders[1]},       {"sigma", sigma}}
                   .dump()
            << '\n';
    }
}

void write_inference_outputs(const fs::path& out, const InferenceResult& r, const InferenceSettings& s,
                             const Provenance& prov, bool samples) {
    write_pairwise_csv(out / "c_pairwise.csv", r, &prov);
    write_triplet_csv(out / "c_asym.csv", r, BasisKind::ThreeBodyAsym, &prov);
    write_triplet_csv(out / "c_sym.csv", r, BasisKind::ThreeBodySym, &prov);
    write_gates_csv(out / "d.csv", r, &prov);
    write_histogram_csv(out / "L2_hist.csv", r.table.order_hist[0], &prov);
    write_histogram_csv(out / "L3_hist.csv", r.table.order_hist[1], &prov);
    write_theta_csv(out / "theta_hat.csv", r, &prov);
    write_json(out / "diagnostics.json", diagnostics_json(r, s, prov));
    write_json(out / "dictionary.json", {{"provenance", provenance_json(prov)}, {"nodes", dictionary_json(r.dicts)}});
    if (samples) write_samples_ndjson(out / "samples.ndjson", r);
}

void write_metrics_csv(const fs::path& path, const std::vector<std::pair<std::uint64_t, MetricValues>>& runs,
                       const Provenance& prov) {
    CsvWriter w(path, &prov);
    w.row({"seed", "e_c", "e_c_edges", "e_theta"});
    std::vector<double> ec, ece, et;
    for (const auto& [seed, m] : runs) {
        w.row({std::to_string(seed), fmt(m.e_c), fmt(m.e_c_edges), fmt(m.e_theta)});
        ec.push_back(m.e_c);
        ece.push_back(m.e_c_edges);
        et.push_back(m.e_theta);
    }
    w.close();
    CsvWriter s(path.parent_path() / "metric_report.csv", &prov);
    s.row({"metric", "mean", "se", "n", "se_flag"});
    auto put = [&](const char* name, const std::vector<double>& v) {
        const auto m = mean_se(v);
        s.row({name, fmt(m.mean), fmt(m.se), std::to_string(m.n), m.single ? "single_run" : ""});
    };
    put("e_c", ec);
    put("e_c_edges", ece);
    put("e_theta", et);
    s.close();
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    int threads = 0;
};

void add_common(CLI::App* app, Common& c, bool config_required) {
    auto* opt = app->add_option("--config", c.config, "experiment config (JSON)");
    if (config_required) opt->required();
    app->add_option("--seed", c.seed, "RNG seed (overrides the config)");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--threads", c.threads, "worker threads (0 = hardware concurrency)");
}

ExperimentConfig load(const Common& c) {
    auto cfg = load_config(c.config);
    if (c.seed) {
        cfg.seed = *c.seed;
        cfg.inference.sampler.seed = cfg.seed;
        cfg.metronome.inference.sampler.seed = cfg.seed;
        cfg.metronome.spec.seed = cfg.seed;
        cfg.sweep.seed = cfg.seed;
        if (cfg.sim) cfg.sim->seed = cfg.seed;
    }
    cfg.inference.sampler.threads = c.threads;
    return cfg;
}

void log(const std::string& msg) { std::cerr << "ssdyn: " << msg << '\n'; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_simulate(const Common& c) {
    const auto cfg = load(c);
    require(cfg.truth && cfg.sim, "simulate: config needs 'network' and 'simulation' sections");
    const fs::path out = c.out;
    ensure_dir(out);
    const Provenance prov{cfg.hash, cfg.seed};
    const auto traj = simulate_network(*cfg.truth, *cfg.sim);
    write_trajectory_csv(out / "trajectory.csv", traj, &prov);
    write_json(out / "ground_truth.json", {{"provenance", provenance_json(prov)},
                                           {"network", network_to_json(*cfg.truth)},
                                           {"simulation", simulation_to_json(*cfg.sim)}});
    log("wrote " + std::to_string(traj.n_samples()) + " samples to " + (out / "trajectory.csv").string());
    return kOk;
}

int cmd_infer(const Common& c, const std::string& trajectory_path, bool samples) {
    const auto cfg = load(c);
    const fs::path out = c.out;
    const auto traj = read_trajectory_csv(trajectory_path);
    if (cfg.truth)
        require(cfg.truth->n_nodes == traj.n_nodes(), "infer: trajectory has " + std::to_string(traj.n_nodes()) +
                                                          " nodes but the config network has " +
                                                          std::to_string(cfg.truth->n_nodes));
    ensure_dir(out);
    const Provenance prov{cfg.hash, cfg.seed};
    ThreadPool pool(c.threads);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = infer_network(traj, cfg.inference, &pool);
    log("sampling finished in " + fmt(seconds_since(t0)) + " s");
    write_inference_outputs(out, r, cfg.inference, prov, samples);
    if (cfg.truth) {
        const auto m = evaluate_metrics(*cfg.truth, r.dicts, r.layout, r.estimate);
        write_metrics_csv(out / "metrics.csv", {{cfg.seed, m}}, prov);
        log("E_c=" + fmt(m.e_c) + " E_theta=" + fmt(m.e_theta));
    }
    return kOk;
}

int cmd_reproduce(const Common& c, int id, int repeats, double threebody_alpha, bool samples) {
    InferenceSettings settings;
    std::string hash = hex64(fnv1a64("reproduce:" + std::to_string(id) + ":" + fmt(threebody_alpha)));
    std::uint64_t seed = c.seed.value_or(1);
    if (!c.config.empty()) {
        auto cfg = load(c);
        settings = cfg.inference;
        hash = cfg.hash;
        seed = cfg.seed;
    }
    settings.sampler.threads = c.threads;
    require(repeats >= 1, "reproduce: repeats must be >= 1");
    const fs::path out = c.out;
    ensure_dir(out);
    const Provenance prov{hash, seed};
    ThreadPool pool(c.threads);
    std::vector<std::pair<std::uint64_t, MetricValues>> runs;
    for (int k = 0; k < repeats; ++k) {
        const std::uint64_t run_seed = repeats == 1 ? seed : derive_seed(seed, static_cast<std::uint64_t>(k));
        auto e = paper_configuration(id, run_seed, threebody_alpha);
        InferenceSettings s = settings;
        s.sampler.seed = derive_seed(run_seed, 1);
        const auto t0 = std::chrono::steady_clock::now();
        const auto o = run_network_experiment(e, s, &pool);
        log("configuration " + std::to_string(id) + " seed " + std::to_string(run_seed) + ": E_c=" + fmt(o.metrics.e_c) +
            " E_theta=" + fmt(o.metrics.e_theta) + " (" + fmt(seconds_since(t0)) + " s)");
        runs.push_back({run_seed, o.metrics});
        const fs::path dir = repeats == 1 ? out : out / ("run" + std::to_string(k + 1));
        ensure_dir(dir);
        const Provenance run_prov{hash, run_seed};
        write_trajectory_csv(dir / "trajectory.csv", o.traj, &run_prov);
        write_json(dir / "ground_truth.json", {{"provenance", provenance_json(run_prov)},
                                               {"network", network_to_json(e.truth)},
                                               {"simulation", simulation_to_json(e.sim)}});
        write_inference_outputs(dir, o.result, s, run_prov, samples);
    }
    write_metrics_csv(out / "metrics.csv", runs, prov);
    return kOk;
}

int cmd_sweep(const Common& c) {
    auto cfg = load(c);
    require(cfg.kind == ConfigKind::Sweep, "sweep: config kind must be 'sweep'");
    cfg.sweep.settings.sampler.threads = c.threads;
    const fs::path out = c.out;
    ensure_dir(out);
    const Provenance prov{cfg.hash, cfg.seed};
    ThreadPool pool(c.threads);
    const auto rep = run_sweep(cfg.sweep, &pool, [](const SweepRun& r) {
        log(std::string("grid value ") + fmt(r.value) + " repeat " + std::to_string(r.repeat) +
            (r.ok ? ": E_c=" + fmt(r.metrics.e_c) + " E_theta=" + fmt(r.metrics.e_theta) : ": FAILED " + r.error));
    });
    write_sweep_csv(out / "metric_report.csv", rep, &prov);
    write_sweep_runs_csv(out / "sweep_runs.csv", rep, &prov);
    return kOk;
}

int cmd_metronome(const Common& c) {
    auto cfg = load(c);
    require(cfg.kind == ConfigKind::Metronome, "metronome: config kind must be 'metronome'");
    cfg.metronome.inference.sampler.threads = c.threads;
    const fs::path out = c.out;
    ensure_dir(out);
    const Provenance prov{cfg.hash, cfg.seed};
    ThreadPool pool(c.threads);
    const auto study = run_metronome_study(cfg.metronome, &pool);
    write_phase_series_csv(out / "phase_series.csv", study.phases, &prov);
    for (const auto& w : study.windows)
        write_window_csv(out / ("inclusion_window_" + fmt(w.t_max) + ".csv"), w, study.labels, &prov);
    write_fitted_field_csv(out / "fitted_field.csv", study.field, &prov);
    json fp = json::array();
    for (const auto& p : study.fixed) fp.push_back({{"psi", p.psi}, {"stable", p.stable}});
    json windows = json::array();
    for (const auto& w : study.windows) windows.push_back({{"t_max", w.t_max}, {"sigma_hat", w.sigma_hat}});
    write_json(out / "fixed_points.json",
               {{"provenance", provenance_json(prov)}, {"fixed_points", fp}, {"windows", windows}});
    int stable = 0;
    for (const auto& p : study.fixed) stable += p.stable ? 1 : 0;
    log(std::to_string(study.fixed.size()) + " fixed points, " + std::to_string(stable) + " stable");
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse Bayesian identification of coupled oscillator dynamics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    Common sim_c, inf_c, rep_c, sweep_c, met_c;
    std::string trajectory;
    bool samples = false;
    int id = 1, repeats = 1;
    double threebody_alpha = 0.0;

    auto* sim = app.add_subcommand("simulate", "simulate a network and write trajectory.csv");
    add_common(sim, sim_c, true);
    auto* inf = app.add_subcommand("infer", "run PT inference on a trajectory CSV");
    add_common(inf, inf_c, true);
    inf->add_option("--trajectory", trajectory, "trajectory CSV (t,x1,...,xN)")->required();
    inf->add_flag("--samples", samples, "also write samples.ndjson");
    auto* rep = app.add_subcommand("reproduce", "simulate + infer + evaluate a reference configuration");
    add_common(rep, rep_c, false);
    rep->add_option("--id", id, "configuration id (1, 2 or 3)")->required()->check(CLI::Range(1, 3));
    rep->add_option("--repeats", repeats, "independent seeds");
    rep->add_option("--threebody-alpha", threebody_alpha, "three-body phase lag for configurations 2 and 3");
    rep->add_flag("--samples", samples, "also write samples.ndjson");
    auto* sw = app.add_subcommand("sweep", "repeated runs over an M, sigma_d or sigma_o grid");
    add_common(sw, sweep_c, true);
    auto* met = app.add_subcommand("metronome", "two-metronome phase-difference study");
    add_common(met, met_c, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidation;
    }

    try {
        if (*sim) return cmd_simulate(sim_c);
        if (*inf) return cmd_infer(inf_c, trajectory, samples);
        if (*rep) return cmd_reproduce(rep_c, id, repeats, threebody_alpha, samples);
        if (*sw) return cmd_sweep(sweep_c);
        if (*met) return cmd_metronome(met_c);
    } catch (const ValidationError& e) {
        std::cerr << "ssdyn: error: " << e.what() << '\n';
        return kValidation;
    } catch (const NumericalError& e) {
        std::cerr << "ssdyn: numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const IoError& e) {
        std::cerr << "ssdyn: I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "ssdyn: error: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}
