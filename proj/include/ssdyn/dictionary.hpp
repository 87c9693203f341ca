#pragma once

// Candidate basis library for the oscillator network and the mapping from
// structural indicators (edge bits, sin/cos gates, harmonic orders) to active
// design-matrix columns.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssdyn/error.hpp"
#include "ssdyn/oscillator_sim.hpp"

namespace ssdyn {

enum class BasisKind : std::uint8_t { Intrinsic, Pairwise, ThreeBodyAsym, ThreeBodySym };
enum class Trig : std::uint8_t { Sin, Cos };

inline const char* to_string(BasisKind k) {
    switch (k) {
        case BasisKind::Intrinsic: return "intrinsic";
        case BasisKind::Pairwise: return "pairwise";
        case BasisKind::ThreeBodyAsym: return "asym";
        case BasisKind::ThreeBodySym: return "sym";
    }
    return "?";
}

inline const char* to_string(Trig t) { return t == Trig::Sin ? "sin" : "cos"; }

/// One candidate column. `edge` holds (i), (i,j) or (i,j,k) with the target
/// node first; unused slots are -1.
struct BasisId {
    BasisKind kind = BasisKind::Intrinsic;
    std::array<int, 3> edge{-1, -1, -1};
    int harmonic = 0;
    Trig trig = Trig::Sin;

    friend bool operator==(const BasisId&, const BasisId&) = default;
};

struct EdgeKey {
    BasisKind kind = BasisKind::Pairwise;
    std::array<int, 3> nodes{-1, -1, -1};

    friend bool operator==(const EdgeKey&, const EdgeKey&) = default;
};

/// Gating metadata of one column: which node-local edge bit, which global gate
/// bit and which harmonic-order class switch it on. -1 means "not gated".
struct ColumnGate {
    int edge = -1;
    int gate = -1;
    int order_class = -1;
    int harmonic = 0;
};

inline constexpr int kGateCount = 6;
inline constexpr int kOrderClasses = 2;

// d = (pair sin, pair cos, asym sin, asym cos, sym sin, sym cos)
inline int gate_index(BasisKind kind, Trig trig) {
    const int base = kind == BasisKind::Pairwise ? 0 : kind == BasisKind::ThreeBodyAsym ? 2 : 4;
    return base + (trig == Trig::Cos ? 1 : 0);
}

inline const char* gate_label(int g) {
    static constexpr std::array<const char*, kGateCount> labels{"pair_sin", "pair_cos", "asym_sin",
                                                                "asym_cos", "sym_sin",  "sym_cos"};
    return labels.at(static_cast<std::size_t>(g));
}

struct Dictionary {
    int n_nodes = 0;
    int node = 0;
    int l2_max = 1;
    int l3_max = 1;
    std::vector<BasisId> entries;
    std::vector<EdgeKey> edges;
    std::vector<ColumnGate> gates;

    int size() const { return static_cast<int>(entries.size()); }

    int edge_slot(const EdgeKey& key) const {
        auto it = std::find(edges.begin(), edges.end(), key);
        return it == edges.end() ? -1 : static_cast<int>(it - edges.begin());
    }

    int column(const BasisId& id) const {
        auto it = std::find(entries.begin(), entries.end(), id);
        return it == entries.end() ? -1 : static_cast<int>(it - entries.begin());
    }
};

inline long expected_dictionary_size(int n_nodes, int l2_max, int l3_max) {
    const long n1 = n_nodes - 1;
    return 1 + 2L * l2_max * n1 + 3L * l3_max * n1 * (n1 - 1);
}

inline Dictionary build_dictionary(int n_nodes, int node, int l2_max, int l3_max) {
    require(n_nodes >= 2, "dictionary: n_nodes must be >= 2");
    require(node >= 0 && node < n_nodes, "dictionary: node " + std::to_string(node) + " out of range");
    require(l2_max >= 1 && l3_max >= 1, "dictionary: harmonic caps must be >= 1");

    Dictionary d;
    d.n_nodes = n_nodes;
    d.node = node;
    d.l2_max = l2_max;
    d.l3_max = l3_max;
    d.entries.push_back({BasisKind::Intrinsic, {node, -1, -1}, 0, Trig::Sin});
    d.gates.push_back({});

    auto add_edge = [&](BasisKind kind, std::array<int, 3> nodes, int l_max, int order_class) {
        const int slot = static_cast<int>(d.edges.size());
        d.edges.push_back({kind, nodes});
        for (int l = 1; l <= l_max; ++l)
            for (Trig t : {Trig::Sin, Trig::Cos}) {
                d.entries.push_back({kind, nodes, l, t});
                d.gates.push_back({slot, gate_index(kind, t), order_class, l});
            }
    };

    const int i = node;
    for (int j = 0; j < n_nodes; ++j)
        if (j != i) add_edge(BasisKind::Pairwise, {i, j, -1}, l2_max, 0);
    for (int j = 0; j < n_nodes; ++j)
        for (int k = 0; k < n_nodes; ++k)
            if (j != i && k != i && j != k) add_edge(BasisKind::ThreeBodyAsym, {i, j, k}, l3_max, 1);
    for (int j = 0; j < n_nodes; ++j)
        for (int k = j + 1; k < n_nodes; ++k)
            if (j != i && k != i) add_edge(BasisKind::ThreeBodySym, {i, j, k}, l3_max, 1);
    return d;
}

inline std::vector<Dictionary> build_dictionaries(int n_nodes, int l2_max, int l3_max) {
    std::vector<Dictionary> out;
    for (int i = 0; i < n_nodes; ++i) out.push_back(build_dictionary(n_nodes, i, l2_max, l3_max));
    return out;
}

/// Phase argument of a basis column at state x.
inline double basis_phase(const BasisId& b, const double* x) {
    const auto [i, j, k] = b.edge;
    switch (b.kind) {
        case BasisKind::Pairwise: return x[j] - x[i];
        case BasisKind::ThreeBodyAsym: return 2.0 * x[k] - x[i] - x[j];
        case BasisKind::ThreeBodySym: return x[k] + x[j] - 2.0 * x[i];
        case BasisKind::Intrinsic: break;
    }
    return 0.0;
}

inline double basis_value(const BasisId& b, const double* x) {
    if (b.kind == BasisKind::Intrinsic) return 1.0;
    const double arg = b.harmonic * basis_phase(b, x);
    return b.trig == Trig::Sin ? std::sin(arg) : std::cos(arg);
}

struct DesignMatrix {
    Eigen::MatrixXd g;  // M x Gamma_max
    int node = 0;
};

/// Rows m = 0..M-1, aligned with the targets Y_{i,m}.
inline DesignMatrix evaluate_design_matrix(const Trajectory& traj, const Dictionary& dict) {
    require(traj.n_nodes() == dict.n_nodes, "design matrix: trajectory has " + std::to_string(traj.n_nodes()) +
                                                " nodes, dictionary expects " + std::to_string(dict.n_nodes));
    require(traj.n_samples() >= 2, "design matrix: trajectory needs at least 2 samples");
    const long m_rows = traj.n_samples() - 1;
    DesignMatrix dm;
    dm.node = dict.node;
    dm.g.resize(m_rows, dict.size());
    std::vector<double> x(static_cast<std::size_t>(traj.n_nodes()));
    for (long m = 0; m < m_rows; ++m) {
        for (int n = 0; n < traj.n_nodes(); ++n) x[static_cast<std::size_t>(n)] = traj.x(n, m);
        for (int c = 0; c < dict.size(); ++c) dm.g(m, c) = basis_value(dict.entries[static_cast<std::size_t>(c)], x.data());
    }
    return dm;
}

// ---------------------------------------------------------------------------
// Layout-generic structure representation shared with the sampler.

/// Per-node column gating plus the global gate and order dimensions.
struct ModelLayout {
    std::vector<std::vector<ColumnGate>> columns;
    std::vector<int> edge_count;
    int gate_count = 0;
    std::array<int, kOrderClasses> order_max{1, 1};
    std::array<bool, kOrderClasses> order_used{false, false};

    int n_nodes() const { return static_cast<int>(columns.size()); }
    int n_columns(int node) const { return static_cast<int>(columns[static_cast<std::size_t>(node)].size()); }
};

/// Edge bits per node, gate bits (d) and harmonic orders (l2, l3).
struct StructureState {
    std::vector<std::vector<std::uint8_t>> edges;
    std::vector<std::uint8_t> gates;
    std::array<int, kOrderClasses> orders{1, 1};

    friend bool operator==(const StructureState&, const StructureState&) = default;
};

/// Global d by default; `per_node_gates` gives each node its own six gate bits.
inline ModelLayout make_layout(std::span<const Dictionary> dicts, bool per_node_gates = false) {
    require(!dicts.empty(), "layout: no dictionaries");
    ModelLayout layout;
    layout.gate_count = per_node_gates ? kGateCount * static_cast<int>(dicts.size()) : kGateCount;
    layout.order_max = {dicts.front().l2_max, dicts.front().l3_max};
    for (const auto& d : dicts) {
        require(d.l2_max == layout.order_max[0] && d.l3_max == layout.order_max[1],
                "layout: dictionaries must share harmonic caps");
        auto cols = d.gates;
        if (per_node_gates)
            for (auto& c : cols)
                if (c.gate >= 0) c.gate += kGateCount * d.node;
        for (const auto& c : cols)
            if (c.order_class >= 0) layout.order_used[static_cast<std::size_t>(c.order_class)] = true;
        layout.columns.push_back(std::move(cols));
        layout.edge_count.push_back(static_cast<int>(d.edges.size()));
    }
    return layout;
}

inline StructureState empty_structure(const ModelLayout& layout) {
    StructureState s;
    for (int n : layout.edge_count) s.edges.emplace_back(static_cast<std::size_t>(n), 0);
    s.gates.assign(static_cast<std::size_t>(layout.gate_count), 0);
    s.orders = {1, 1};
    return s;
}

inline bool column_active(const StructureState& s, const ColumnGate& c, int node) {
    if (c.edge >= 0 && !s.edges[static_cast<std::size_t>(node)][static_cast<std::size_t>(c.edge)]) return false;
    if (c.gate >= 0 && !s.gates[static_cast<std::size_t>(c.gate)]) return false;
    if (c.order_class >= 0 && c.harmonic > s.orders[static_cast<std::size_t>(c.order_class)]) return false;
    return true;
}

/// Ascending list of active columns of `node`, written into `out`.
inline void active_columns(const StructureState& s, const ModelLayout& layout, int node, std::vector<int>& out) {
    out.clear();
    const auto& cols = layout.columns[static_cast<std::size_t>(node)];
    for (int c = 0; c < static_cast<int>(cols.size()); ++c)
        if (column_active(s, cols[static_cast<std::size_t>(c)], node)) out.push_back(c);
}

inline std::vector<int> active_columns(const StructureState& s, const ModelLayout& layout, int node) {
    std::vector<int> out;
    active_columns(s, layout, node, out);
    return out;
}

inline std::vector<int> active_columns(const StructureState& s, const Dictionary& dict) {
    require(static_cast<int>(s.edges.size()) > dict.node &&
                static_cast<int>(s.edges[static_cast<std::size_t>(dict.node)].size()) == static_cast<int>(dict.edges.size()),
            "active_columns: structure does not match dictionary");
    require(s.gates.size() >= static_cast<std::size_t>(kGateCount), "active_columns: missing gate bits");
    require(s.orders[0] >= 1 && s.orders[0] <= dict.l2_max && s.orders[1] >= 1 && s.orders[1] <= dict.l3_max,
            "active_columns: harmonic orders outside dictionary caps");
    std::vector<int> out;
    for (int c = 0; c < dict.size(); ++c)
        if (column_active(s, dict.gates[static_cast<std::size_t>(c)], dict.node)) out.push_back(c);
    return out;
}

/// Column-level effective indicator (edge x gate x harmonic gate), length Gamma_max.
inline std::vector<std::uint8_t> effective_indicators(const StructureState& s, const ModelLayout& layout, int node) {
    const auto& cols = layout.columns[static_cast<std::size_t>(node)];
    std::vector<std::uint8_t> bits(cols.size(), 0);
    for (std::size_t c = 0; c < cols.size(); ++c) bits[c] = column_active(s, cols[c], node) ? 1 : 0;
    return bits;
}

// ---------------------------------------------------------------------------
// Ground truth expressed in dictionary coordinates.

/// Indicators implied by a ground-truth network: an edge bit is set when any
/// of its couplings is nonzero, a gate bit when any coefficient of that
/// class/trig is nonzero after expanding K sin(l phi + alpha).
inline StructureState truth_structure(const NetworkGroundTruth& truth, std::span<const Dictionary> dicts,
                                      double zero_tol = 1e-12) {
    require(static_cast<int>(dicts.size()) == truth.n_nodes, "truth_structure: one dictionary per node required");
    const auto layout = make_layout(dicts);
    StructureState s = empty_structure(layout);
    require(truth.l2_true <= layout.order_max[0] && truth.l3_true <= layout.order_max[1],
            "truth_structure: true harmonic orders exceed dictionary caps");
    s.orders = {truth.l2_true, truth.l3_true};
    auto mark = [&](BasisKind kind, std::array<int, 3> nodes, double k, double alpha) {
        if (std::abs(k) <= zero_tol) return;
        const auto& d = dicts[static_cast<std::size_t>(nodes[0])];
        const int slot = d.edge_slot({kind, nodes});
        require(slot >= 0, "truth_structure: coupling has no dictionary edge");
        s.edges[static_cast<std::size_t>(nodes[0])][static_cast<std::size_t>(slot)] = 1;
        if (std::abs(k * std::cos(alpha)) > zero_tol) s.gates[static_cast<std::size_t>(gate_index(kind, Trig::Sin))] = 1;
        if (std::abs(k * std::sin(alpha)) > zero_tol) s.gates[static_cast<std::size_t>(gate_index(kind, Trig::Cos))] = 1;
    };
    for (const auto& c : truth.pairwise) mark(BasisKind::Pairwise, {c.i, c.j, -1}, c.strength, c.alpha);
    for (const auto& c : truth.threebody_asym) mark(BasisKind::ThreeBodyAsym, {c.i, c.j, c.k}, c.strength, c.alpha);
    for (const auto& c : truth.threebody_sym) mark(BasisKind::ThreeBodySym, {c.i, c.j, c.k}, c.strength, c.alpha);
    return s;
}

/// True coefficient vector of one node at dictionary caps:
/// K sin(l phi + alpha) = K cos(alpha) sin(l phi) + K sin(alpha) cos(l phi).
inline Eigen::VectorXd truth_coefficients(const NetworkGroundTruth& truth, const Dictionary& dict) {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(dict.size());
    theta[0] = truth.omega[static_cast<std::size_t>(dict.node)];
    auto put = [&](BasisKind kind, std::array<int, 3> nodes, int l, double k, double alpha) {
        if (nodes[0] != dict.node) return;
        const int cs = dict.column({kind, nodes, l, Trig::Sin});
        const int cc = dict.column({kind, nodes, l, Trig::Cos});
        require(cs >= 0 && cc >= 0, "truth_coefficients: coupling outside dictionary caps");
        theta[cs] += k * std::cos(alpha);
        theta[cc] += k * std::sin(alpha);
    };
    for (const auto& c : truth.pairwise) put(BasisKind::Pairwise, {c.i, c.j, -1}, c.l, c.strength, c.alpha);
    for (const auto& c : truth.threebody_asym)
        put(BasisKind::ThreeBodyAsym, {c.i, c.j, c.k}, c.l, c.strength, c.alpha);
    for (const auto& c : truth.threebody_sym)
        put(BasisKind::ThreeBodySym, {c.i, c.j, c.k}, c.l, c.strength, c.alpha);
    return theta;
}

}  // namespace ssdyn
