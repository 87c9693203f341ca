#pragma once

// Synthetic phase trajectories for oscillator networks with pairwise and
// three-body (asymmetric / symmetric) couplings, integrated by Euler-Maruyama.

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "ssdyn/error.hpp"
#include "ssdyn/rng.hpp"

namespace ssdyn {

// Node indices are 0-based in code; the CLI and file formats are 1-based.

/// K sin(l (X_j - X_i) + alpha) acting on node i.
struct PairCoupling {
    int i = 0;
    int j = 0;
    int l = 1;
    double strength = 0.0;
    double alpha = 0.0;
};

/// Asymmetric: K sin(l (2X_k - X_i - X_j) + alpha).
/// Symmetric (j < k): K sin(l (X_k + X_j - 2X_i) + alpha).
struct TripletCoupling {
    int i = 0;
    int j = 0;
    int k = 0;
    int l = 1;
    double strength = 0.0;
    double alpha = 0.0;
};

struct NetworkGroundTruth {
    int n_nodes = 0;
    std::vector<double> omega;
    std::vector<PairCoupling> pairwise;
    std::vector<TripletCoupling> threebody_asym;
    std::vector<TripletCoupling> threebody_sym;
    int l2_true = 1;
    int l3_true = 1;

    void validate() const {
        require(n_nodes >= 1, "truth: n_nodes must be >= 1");
        require(static_cast<int>(omega.size()) == n_nodes, "truth: omega must have n_nodes entries");
        require(l2_true >= 1 && l3_true >= 1, "truth: harmonic orders must be >= 1");
        auto in_range = [&](int v) { return v >= 0 && v < n_nodes; };
        std::set<std::tuple<int, int, int>> seen2;
        for (const auto& c : pairwise) {
            require(in_range(c.i) && in_range(c.j), "truth: pairwise node index out of range");
            require(c.i != c.j, "truth: pairwise coupling requires i != j");
            require(c.l >= 1 && c.l <= l2_true, "truth: pairwise harmonic must lie in [1, l2_true]");
            require(seen2.insert({c.i, c.j, c.l}).second, "truth: duplicate pairwise coupling");
        }
        auto check3 = [&](const std::vector<TripletCoupling>& v, bool symmetric, const char* name) {
            std::set<std::tuple<int, int, int, int>> seen;
            for (const auto& c : v) {
                require(in_range(c.i) && in_range(c.j) && in_range(c.k),
                        std::string("truth: ") + name + " node index out of range");
                require(c.i != c.j && c.i != c.k && c.j != c.k,
                        std::string("truth: ") + name + " nodes must be mutually distinct");
                if (symmetric) require(c.j < c.k, "truth: symmetric triplets require j < k");
                require(c.l >= 1 && c.l <= l3_true,
                        std::string("truth: ") + name + " harmonic must lie in [1, l3_true]");
                require(seen.insert({c.i, c.j, c.k, c.l}).second,
                        std::string("truth: duplicate ") + name + " coupling");
            }
        };
        check3(threebody_asym, false, "threebody_asym");
        check3(threebody_sym, true, "threebody_sym");
    }
};

struct SimConfig {
    double dt = 0.1;
    long n_steps = 2000;
    double sigma_d = 0.0;
    double sigma_o = 0.0;
    std::vector<double> x0;
    std::uint64_t seed = 0;
    /// Internal Euler steps per observation interval; 1 integrates at dt.
    int substeps = 1;

    void validate(int n_nodes) const {
        require(dt > 0.0 && std::isfinite(dt), "sim: dt must be > 0");
        require(n_steps >= 1, "sim: n_steps must be >= 1");
        require(sigma_d >= 0.0, "sim: sigma_d must be >= 0");
        require(sigma_o >= 0.0, "sim: sigma_o must be >= 0");
        require(substeps >= 1, "sim: substeps must be >= 1");
        require(static_cast<int>(x0.size()) == n_nodes, "sim: x0 must have n_nodes entries");
    }
};

struct Trajectory {
    Eigen::MatrixXd x;  // n_nodes x (n_steps + 1), unwrapped phases
    double dt = 0.0;
    std::map<std::string, std::string> meta;

    int n_nodes() const { return static_cast<int>(x.rows()); }
    long n_samples() const { return static_cast<long>(x.cols()); }
};

/// Right-hand side f(X) of the network equations.
inline void network_drift(const NetworkGroundTruth& truth, const Eigen::Ref<const Eigen::VectorXd>& x,
                          Eigen::Ref<Eigen::VectorXd> f) {
    for (int i = 0; i < truth.n_nodes; ++i) f[i] = truth.omega[i];
    for (const auto& c : truth.pairwise) f[c.i] += c.strength * std::sin(c.l * (x[c.j] - x[c.i]) + c.alpha);
    for (const auto& c : truth.threebody_asym)
        f[c.i] += c.strength * std::sin(c.l * (2.0 * x[c.k] - x[c.i] - x[c.j]) + c.alpha);
    for (const auto& c : truth.threebody_sym)
        f[c.i] += c.strength * std::sin(c.l * (x[c.k] + x[c.j] - 2.0 * x[c.i]) + c.alpha);
}

/// Euler-Maruyama at dt / substeps, stored every dt, then observational noise
/// added to each stored sample. Node n draws dynamical noise from stream 2n and
/// observational noise from stream 2n+1, so draws do not depend on loop order.
inline Trajectory simulate_network(const NetworkGroundTruth& truth, const SimConfig& cfg) {
    truth.validate();
    cfg.validate(truth.n_nodes);
    const int n = truth.n_nodes;
    const double h = cfg.dt / cfg.substeps;
    const double noise_scale = cfg.sigma_d * std::sqrt(h);

    std::vector<Rng> dyn;
    std::vector<Rng> obs;
    for (int i = 0; i < n; ++i) {
        dyn.push_back(make_stream(cfg.seed, 2 * static_cast<std::uint64_t>(i)));
        obs.push_back(make_stream(cfg.seed, 2 * static_cast<std::uint64_t>(i) + 1));
    }

    Trajectory traj;
    traj.dt = cfg.dt;
    traj.x.resize(n, cfg.n_steps + 1);
    Eigen::VectorXd state = Eigen::Map<const Eigen::VectorXd>(cfg.x0.data(), n);
    Eigen::VectorXd f(n);
    traj.x.col(0) = state;
    for (long m = 0; m < cfg.n_steps; ++m) {
        for (int s = 0; s < cfg.substeps; ++s) {
            network_drift(truth, state, f);
            if (!f.allFinite()) throw IntegrationError("non-finite drift", m);
            state += h * f;
            if (noise_scale > 0.0)
                for (int i = 0; i < n; ++i) state[i] += noise_scale * standard_normal(dyn[i]);
        }
        if (!state.allFinite()) throw IntegrationError("non-finite state", m + 1);
        traj.x.col(m + 1) = state;
    }
    if (cfg.sigma_o > 0.0)
        for (int i = 0; i < n; ++i)
            for (long m = 0; m <= cfg.n_steps; ++m) traj.x(i, m) += cfg.sigma_o * standard_normal(obs[i]);

    traj.meta["generator"] = "oscillator_network";
    traj.meta["seed"] = std::to_string(cfg.seed);
    return traj;
}

/// Y_{i,m} = X_{i,m+1} - X_{i,m}; one vector of length M per node.
inline std::vector<Eigen::VectorXd> compute_targets(const Trajectory& traj) {
    require(traj.n_samples() >= 2, "trajectory needs at least 2 samples");
    std::vector<Eigen::VectorXd> y;
    const long m = traj.n_samples() - 1;
    for (int i = 0; i < traj.n_nodes(); ++i)
        y.emplace_back(traj.x.row(i).segment(1, m).transpose() - traj.x.row(i).segment(0, m).transpose());
    return y;
}

}  // namespace ssdyn
