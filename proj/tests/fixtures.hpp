#pragma once

// Small enumerable problem shared by the sampler tests and the acceptance run.

#include <array>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "ssdyn/experiments.hpp"

namespace fixture {

using namespace ssdyn;

/// Two nodes, caps (1, 1) so Gamma = 3 per node, M = 200. The coupling is
/// weak enough that the structure posterior is not saturated.
struct TinyInstance {
    NetworkGroundTruth truth;
    Trajectory traj;
    std::vector<Dictionary> dicts;
    ModelLayout layout;
    std::vector<NodeSuffStats> stats;
    std::vector<Eigen::MatrixXd> g;
    std::vector<Eigen::VectorXd> y;
    double sigma = 0.0;
    double tau = 0.0;
    Priors priors;
};

inline TinyInstance tiny_instance(std::uint64_t seed = 3, double k = 0.06) {
    TinyInstance t;
    t.truth.n_nodes = 2;
    t.truth.omega = {0.7, 1.1};
    t.truth.pairwise = {{1, 0, 1, k, 1.0}};
    SimConfig sim;
    sim.dt = 0.1;
    sim.n_steps = 200;
    sim.sigma_d = 0.1;
    sim.x0 = {0.0, 1.0};
    sim.seed = seed;
    t.traj = simulate_network(t.truth, sim);
    t.dicts = build_dictionaries(2, 1, 1);
    t.layout = make_layout(t.dicts);
    t.y = compute_targets(t.traj);
    for (const auto& d : t.dicts) {
        t.g.push_back(evaluate_design_matrix(t.traj, d).g);
        t.stats.push_back(NodeSuffStats::from(t.g.back(), t.y[static_cast<std::size_t>(d.node)]));
    }
    // noise of one Euler step, slab scale of the true coefficient magnitude
    t.sigma = sim.sigma_d * std::sqrt(sim.dt);
    t.tau = 1.0;
    t.priors.l2_max = 1;
    t.priors.l3_max = 1;
    t.priors.pinned_sigma = t.sigma;
    t.priors.pinned_tau = t.tau;
    return t;
}

inline oracle::Enumeration exact(const TinyInstance& t) {
    return oracle::enumerate_posterior(t.layout, t.g, t.y, t.sigma, t.tau, t.traj.dt, t.priors.p);
}

/// Index over the bits that change the likelihood: two edges and the two
/// pairwise gates (16 states). The other gates only carry prior mass.
inline int relevant_key(const StructureState& s) {
    return s.edges[0][0] | (s.edges[1][0] << 1) | (s.gates[0] << 2) | (s.gates[1] << 3);
}

inline std::array<double, 16> exact_relevant(const oracle::Enumeration& e) {
    std::array<double, 16> p{};
    for (std::size_t k = 0; k < e.states.size(); ++k) p[static_cast<std::size_t>(relevant_key(e.state_list[k]))] += e.states[k];
    return p;
}

inline std::array<double, 16> empirical_relevant(const PosteriorSamples& s) {
    std::array<double, 16> p{};
    for (const auto& r : s.records) p[static_cast<std::size_t>(relevant_key(r.state.structure))] += 1.0;
    for (auto& v : p) v /= static_cast<double>(s.records.size());
    return p;
}

inline double total_variation(const std::array<double, 16>& a, const std::array<double, 16>& b) {
    double tv = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) tv += std::abs(a[k] - b[k]);
    return 0.5 * tv;
}

inline std::vector<NodeSuffStats> config1_stats(std::uint64_t seed, std::vector<Dictionary>& dicts, double& dt) {
    const auto e = paper_configuration(1, seed);
    const auto traj = simulate_network(e.truth, e.sim);
    dicts = build_dictionaries(3, 3, 3);
    dt = traj.dt;
    return network_suff_stats(traj, dicts);
}

}  // namespace fixture
