#pragma once

// CSV readers/writers for trajectories, inclusion tables, estimates and
// reports. Comma separated, LF line endings, header row always present; an
// optional leading "# ..." provenance line precedes the header.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ssdyn/dictionary.hpp"
#include "ssdyn/error.hpp"
#include "ssdyn/estimation.hpp"
#include "ssdyn/experiments.hpp"
#include "ssdyn/metronome.hpp"
#include "ssdyn/oscillator_sim.hpp"
#include "ssdyn/pt_sampler.hpp"

namespace ssdyn {

inline constexpr const char* kVersion = "0.1.0";

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;

    std::string line() const {
        return std::string("# ssdyn ") + kVersion + " config=" + config_hash + " seed=" + std::to_string(seed);
    }
};

/// Shortest round-trip representation (17 significant digits at most).
inline std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const Provenance* prov) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open " + path.string() + " for writing");
        if (prov) out_ << prov->line() << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out_ << ',';
            out_ << cells[c];
        }
        out_ << '\n';
    }

    ~CsvWriter() = default;

    void close() {
        out_.close();
        if (!out_) throw IoError("failed writing " + path_.string());
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ') ++b;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw ValidationError(where + ": cannot parse number '" + s + "'");
    return v;
}

// ---------------------------------------------------------------------------
// Trajectories.

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj, const Provenance* prov) {
    CsvWriter w(path, prov);
    std::vector<std::string> header{"t"};
    for (int i = 0; i < traj.n_nodes(); ++i) header.push_back("x" + std::to_string(i + 1));
    w.row(header);
    for (long m = 0; m < traj.n_samples(); ++m) {
        std::vector<std::string> r{fmt17(static_cast<double>(m) * traj.dt)};
        for (int i = 0; i < traj.n_nodes(); ++i) r.push_back(fmt17(traj.x(i, m)));
        w.row(r);
    }
    w.close();
}

/// Reads `t,x1,...,xN`; dt is taken from the first two time stamps and must be uniform.
inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open trajectory " + path.string());
    std::string line;
    long line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        header = split_csv(line);
        break;
    }
    const std::string file = path.string();
    require(!header.empty(), file + ": empty trajectory file (no header row)");
    require(header.size() >= 2 && header[0] == "t", file + ":" + std::to_string(line_no) + ": header must be t,x1,...,xN");
    for (std::size_t c = 1; c < header.size(); ++c)
        require(header[c] == "x" + std::to_string(c),
                file + ":" + std::to_string(line_no) + ": unexpected column '" + header[c] + "'");
    const int n = static_cast<int>(header.size()) - 1;
    std::vector<double> t;
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(n));
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split_csv(line);
        const std::string where = file + ":" + std::to_string(line_no);
        require(static_cast<int>(cells.size()) == n + 1, where + ": expected " + std::to_string(n + 1) + " columns");
        t.push_back(parse_double(cells[0], where));
        for (int i = 0; i < n; ++i) {
            const double v = parse_double(cells[static_cast<std::size_t>(i + 1)], where);
            require(std::isfinite(v), where + ": non-finite value");
            cols[static_cast<std::size_t>(i)].push_back(v);
        }
    }
    require(t.size() >= 2, file + ": trajectory needs at least 2 samples");
    Trajectory traj;
    traj.dt = t[1] - t[0];
    require(traj.dt > 0.0, file + ": time stamps must increase");
    for (std::size_t m = 1; m < t.size(); ++m)
        require(std::abs((t[m] - t[m - 1]) - traj.dt) <= 1e-6 * traj.dt,
                file + ": non-uniform sampling at row " + std::to_string(m + 1));
    traj.x.resize(n, static_cast<Eigen::Index>(t.size()));
    for (int i = 0; i < n; ++i)
        for (std::size_t m = 0; m < t.size(); ++m)
            traj.x(i, static_cast<Eigen::Index>(m)) = cols[static_cast<std::size_t>(i)][m];
    traj.meta["source"] = file;
    return traj;
}

// ---------------------------------------------------------------------------
// Inference outputs (1-based node indices).

inline std::string edge_label(const EdgeKey& k) {
    std::string s = std::to_string(k.nodes[0] + 1) + "-" + std::to_string(k.nodes[1] + 1);
    if (k.nodes[2] >= 0) s += "-" + std::to_string(k.nodes[2] + 1);
    return s;
}

/// Row i (target), column j (source); diagonal left empty.
inline void write_pairwise_csv(const std::filesystem::path& path, const InferenceResult& r, const Provenance* prov) {
    const int n = static_cast<int>(r.dicts.size());
    CsvWriter w(path, prov);
    std::vector<std::string> header{"i"};
    for (int j = 0; j < n; ++j) header.push_back("j" + std::to_string(j + 1));
    w.row(header);
    for (int i = 0; i < n; ++i) {
        std::vector<std::string> row{std::to_string(i + 1)};
        const auto& d = r.dicts[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                row.emplace_back();
                continue;
            }
            const int slot = d.edge_slot({BasisKind::Pairwise, {i, j, -1}});
            row.push_back(fmt(r.table.edges[static_cast<std::size_t>(i)][static_cast<std::size_t>(slot)]));
        }
        w.row(row);
    }
    w.close();
}

inline void write_triplet_csv(const std::filesystem::path& path, const InferenceResult& r, BasisKind kind,
                              const Provenance* prov) {
    CsvWriter w(path, prov);
    w.row({"i", "j", "k", "probability"});
    for (const auto& d : r.dicts)
        for (std::size_t e = 0; e < d.edges.size(); ++e) {
            const auto& key = d.edges[e];
            if (key.kind != kind) continue;
            w.row({std::to_string(key.nodes[0] + 1), std::to_string(key.nodes[1] + 1), std::to_string(key.nodes[2] + 1),
                   fmt(r.table.edges[static_cast<std::size_t>(d.node)][e])});
        }
    w.close();
}

inline void write_gates_csv(const std::filesystem::path& path, const InferenceResult& r, const Provenance* prov) {
    CsvWriter w(path, prov);
    w.row({"component", "probability"});
    for (std::size_t g = 0; g < r.table.gates.size(); ++g) {
        std::string label = gate_label(static_cast<int>(g % kGateCount));
        if (r.table.gates.size() > static_cast<std::size_t>(kGateCount))
            label = "node" + std::to_string(g / kGateCount + 1) + "_" + label;
        w.row({label, fmt(r.table.gates[g])});
    }
    w.close();
}

inline void write_histogram_csv(const std::filesystem::path& path, const std::vector<double>& hist,
                                const Provenance* prov) {
    CsvWriter w(path, prov);
    w.row({"l", "probability"});
    for (std::size_t l = 0; l < hist.size(); ++l) w.row({std::to_string(l + 1), fmt(hist[l])});
    w.close();
}

inline std::string basis_label(const BasisId& b) {
    if (b.kind == BasisKind::Intrinsic) return "1";
    std::string phase;
    const auto n = [&](int k) { return "x" + std::to_string(b.edge[static_cast<std::size_t>(k)] + 1); };
    switch (b.kind) {
        case BasisKind::Pairwise: phase = n(1) + "-" + n(0); break;
        case BasisKind::ThreeBodyAsym: phase = "2" + n(2) + "-" + n(0) + "-" + n(1); break;
        case BasisKind::ThreeBodySym: phase = n(2) + "+" + n(1) + "-2" + n(0); break;
        case BasisKind::Intrinsic: break;
    }
    const std::string l = b.harmonic == 1 ? "" : std::to_string(b.harmonic);
    return std::string(to_string(b.trig)) + "(" + l + (l.empty() ? "" : "*") + "(" + phase + "))";
}

inline void write_theta_csv(const std::filesystem::path& path, const InferenceResult& r, const Provenance* prov) {
    CsvWriter w(path, prov);
    w.row({"node", "column", "kind", "edge", "harmonic", "trig", "basis", "inclusion", "included", "theta"});
    for (const auto& d : r.dicts) {
        const auto ui = static_cast<std::size_t>(d.node);
        for (int c = 0; c < d.size(); ++c) {
            const auto& b = d.entries[static_cast<std::size_t>(c)];
            const bool intrinsic = b.kind == BasisKind::Intrinsic;
            w.row({std::to_string(d.node + 1), std::to_string(c), to_string(b.kind),
                   intrinsic ? "" : edge_label({b.kind, b.edge}), intrinsic ? "" : std::to_string(b.harmonic),
                   intrinsic ? "" : to_string(b.trig), basis_label(b),
                   fmt(r.table.columns[ui][static_cast<std::size_t>(c)]),
                   std::to_string(static_cast<int>(r.estimate.columns[ui][static_cast<std::size_t>(c)])),
                   fmt(r.estimate.theta_hat[ui][c])});
        }
    }
    w.close();
}

// ---------------------------------------------------------------------------
// Reports and metronome outputs.

inline void write_sweep_csv(const std::filesystem::path& path, const SweepReport& rep, const Provenance* prov) {
    CsvWriter w(path, prov);
    w.row({to_string(rep.axis), "e_c_mean", "e_c_se", "e_c_edges_mean", "e_c_edges_se", "e_theta_mean", "e_theta_se",
           "n_ok", "n_failed", "se_flag"});
    for (const auto& p : rep.points)
        w.row({fmt(p.value), fmt(p.e_c.mean), fmt(p.e_c.se), fmt(p.e_c_edges.mean), fmt(p.e_c_edges.se),
               fmt(p.e_theta.mean), fmt(p.e_theta.se), std::to_string(p.e_c.n), std::to_string(p.failures),
               p.e_c.single ? "single_run" : ""});
    w.close();
}

inline void write_sweep_runs_csv(const std::filesystem::path& path, const SweepReport& rep, const Provenance* prov) {
    CsvWriter w(path, prov);
    w.row({to_string(rep.axis), "repeat", "data_seed", "sampler_seed", "ok", "e_c", "e_c_edges", "e_theta", "error"});
    for (const auto& r : rep.runs) {
        std::string err = r.error;
        for (auto& ch : err)
            if (ch == ',' || ch == '\n') ch = ';';
        w.row({fmt(r.value), std::to_string(r.repeat), std::to_string(r.data_seed), std::to_string(r.sampler_seed),
               r.ok ? "1" : "0", r.ok ? fmt(r.metrics.e_c) : "", r.ok ? fmt(r.metrics.e_c_edges) : "",
               r.ok ? fmt(r.metrics.e_theta) : "", err});
    }
    w.close();
}

inline void write_phase_series_csv(const std::filesystem::path& path, const PhaseSeries& ps, const Provenance* prov) {
    CsvWriter w(path, prov);
    w.row({"t", "theta1", "theta2", "psi"});
    for (std::size_t m = 0; m < ps.psi.size(); ++m)
        w.row({fmt17(ps.t[m]), fmt17(ps.theta[0][m]), fmt17(ps.theta[1][m]), fmt17(ps.psi[m])});
    w.close();
}

inline void write_fitted_field_csv(const std::filesystem::path& path, const TrigField& f, const Provenance* prov,
                                   int points = 512) {
    CsvWriter w(path, prov);
    w.row({"psi", "dpsi_dt"});
    for (int k = 0; k < points; ++k) {
        const double psi = 2.0 * std::numbers::pi * k / points;
        w.row({fmt17(psi), fmt17(f(psi))});
    }
    w.close();
}

inline void write_window_csv(const std::filesystem::path& path, const MetronomeWindowResult& wr,
                             const std::vector<std::string>& labels, const Provenance* prov) {
    CsvWriter w(path, prov);
    w.row({"basis", "probability", "theta"});
    for (std::size_t c = 0; c < labels.size(); ++c)
        w.row({labels[c], fmt(wr.inclusion[c]), fmt(wr.theta_hat[static_cast<Eigen::Index>(c)])});
    w.close();
}

}  // namespace ssdyn
