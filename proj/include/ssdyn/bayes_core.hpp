#pragma once

// Spike-and-slab regression with the coefficients integrated out: priors,
// marginal likelihood via the matrix determinant / inversion lemmas, tempered
// posterior and the conditional Gaussian posterior of the active coefficients.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssdyn/dictionary.hpp"
#include "ssdyn/error.hpp"

namespace ssdyn {

struct Range {
    double lo = 0.0;
    double hi = 1.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    double width() const { return hi - lo; }
};

struct Priors {
    double p = 0.5;
    /// Inclusion probability of the gate (d) bits; defaults to p.
    std::optional<double> p_d;
    Range sigma{0.025, 5.77};
    Range tau{0.01, 10.0};
    int l2_max = 3;
    int l3_max = 3;
    /// Point masses replacing the uniform priors (test instances, fixed-noise fits).
    std::optional<double> pinned_sigma;
    std::optional<double> pinned_tau;
    /// Holds every structural indicator fixed.
    std::optional<StructureState> pinned_structure;

    double gate_p() const { return p_d.value_or(p); }
    int order_max(int cls) const { return cls == 0 ? l2_max : l3_max; }

    void validate() const {
        require(p > 0.0 && p < 1.0, "priors: p must lie in (0, 1)");
        require(gate_p() > 0.0 && gate_p() < 1.0, "priors: p_d must lie in (0, 1)");
        require(sigma.lo > 0.0 && sigma.lo < sigma.hi, "priors: need 0 < sigma_min < sigma_max");
        require(tau.lo > 0.0 && tau.lo < tau.hi, "priors: need 0 < tau_min < tau_max");
        require(l2_max >= 1 && l3_max >= 1, "priors: harmonic caps must be >= 1");
        if (pinned_sigma) require(*pinned_sigma > 0.0, "priors: pinned sigma must be > 0");
        if (pinned_tau) require(*pinned_tau > 0.0, "priors: pinned tau must be > 0");
    }
};

struct NodeState {
    double sigma = 1.0;
    std::vector<double> tau;  // one per column at dictionary caps

    friend bool operator==(const NodeState&, const NodeState&) = default;
};

struct ModelState {
    StructureState structure;
    std::vector<NodeState> nodes;

    friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// Gram statistics of one node at dictionary caps.
struct NodeSuffStats {
    Eigen::MatrixXd gtg;
    Eigen::VectorXd gty;
    double yty = 0.0;
    long m = 0;

    static NodeSuffStats from(const Eigen::MatrixXd& g, const Eigen::VectorXd& y) {
        require(g.rows() == y.size(), "sufficient statistics: design rows != target length");
        NodeSuffStats s;
        s.gtg = g.transpose() * g;
        s.gty = g.transpose() * y;
        s.yty = y.squaredNorm();
        s.m = static_cast<long>(y.size());
        return s;
    }

    int n_columns() const { return static_cast<int>(gty.size()); }
};

namespace detail {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct Workspace {
    std::vector<double> a;
    std::vector<double> b;

    void reserve(std::size_t k) {
        if (a.size() < k * k) a.resize(k * k);
        if (b.size() < k) b.resize(k);
    }
};

inline Workspace& workspace() {
    thread_local Workspace ws;
    return ws;
}

/// Cholesky of the k x k matrix in `a` (column-major) with diagonal jitter
/// escalating from 1e-12 to 1e-8 of the mean diagonal. Returns false on failure.
inline bool cholesky_with_jitter(Eigen::Map<Eigen::MatrixXd> a, std::vector<double>& scratch) {
    const Eigen::Index k = a.rows();
    if (scratch.size() < static_cast<std::size_t>(k * k)) scratch.resize(static_cast<std::size_t>(k * k));
    Eigen::Map<Eigen::MatrixXd> saved(scratch.data(), k, k);
    saved = a;
    const double scale = a.diagonal().mean();
    for (double jitter : {0.0, 1e-12, 1e-10, 1e-8}) {
        if (jitter > 0.0) {
            a = saved;
            a.diagonal().array() += jitter * scale;
        }
        Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(a);
        if (llt.info() == Eigen::Success) return true;
    }
    return false;
}

inline std::vector<double>& jitter_scratch() {
    thread_local std::vector<double> s;
    return s;
}

template <class TauAt>
double log_marginal_likelihood_impl(const NodeSuffStats& stats, std::span<const int> active, double sigma, TauAt tau_at,
                                    double dt) {
    const double s2 = sigma * sigma;
    const double m = static_cast<double>(stats.m);
    const auto k = static_cast<Eigen::Index>(active.size());
    if (k == 0) return -0.5 * (m * (kLog2Pi + std::log(s2)) + stats.yty / s2);

    auto& ws = workspace();
    ws.reserve(static_cast<std::size_t>(k));
    Eigen::Map<Eigen::MatrixXd> a(ws.a.data(), k, k);
    Eigen::Map<Eigen::VectorXd> b(ws.b.data(), k);
    const double dt2 = dt * dt;
    double log_tau2 = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
        const int gc = active[static_cast<std::size_t>(c)];
        for (Eigen::Index r = c; r < k; ++r) a(r, c) = dt2 * stats.gtg(active[static_cast<std::size_t>(r)], gc);
        const double t2 = tau_at(c) * tau_at(c);
        a(c, c) += s2 / t2;
        log_tau2 += std::log(t2);
        b[c] = stats.gty[gc];
    }
    if (!cholesky_with_jitter(a, jitter_scratch()))
        throw NumericalError("marginal likelihood: A = sigma^2 Lambda^-1 + dt^2 G^T G is not positive definite (k=" +
                             std::to_string(k) + ", sigma=" + std::to_string(sigma) + ")");
    const auto l = a.triangularView<Eigen::Lower>();
    double logdet_a = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) logdet_a += std::log(a(c, c));
    logdet_a *= 2.0;
    l.solveInPlace(b);
    const double quad = (stats.yty - dt2 * b.squaredNorm()) / s2;
    const double logdet_sigma = m * std::log(s2) + logdet_a + log_tau2 - static_cast<double>(k) * std::log(s2);
    return -0.5 * (m * kLog2Pi + logdet_sigma + quad);
}

}  // namespace detail

/// log N(Y | 0, sigma^2 I + dt^2 G_c Lambda_c G_c^T) evaluated in O(k^3) from
/// cached Gram statistics. `tau_active[c]` is the slab scale of `active[c]`.
inline double log_marginal_likelihood(const NodeSuffStats& stats, std::span<const int> active, double sigma,
                                      std::span<const double> tau_active, double dt) {
    require(active.size() == tau_active.size(), "log_marginal_likelihood: active/tau size mismatch");
    require(sigma > 0.0, "log_marginal_likelihood: sigma must be > 0");
    return detail::log_marginal_likelihood_impl(
        stats, active, sigma, [&](Eigen::Index c) { return tau_active[static_cast<std::size_t>(c)]; }, dt);
}

/// Same, reading tau from a full per-column vector (sampler hot path).
inline double log_marginal_likelihood_masked(const NodeSuffStats& stats, std::span<const int> active, double sigma,
                                             std::span<const double> tau_full, double dt) {
    return detail::log_marginal_likelihood_impl(
        stats, active, sigma,
        [&](Eigen::Index c) { return tau_full[static_cast<std::size_t>(active[static_cast<std::size_t>(c)])]; }, dt);
}

inline double bernoulli_log_mass(bool bit, double p) { return bit ? std::log(p) : std::log1p(-p); }

/// Bernoulli mass of every edge and gate bit, uniform densities of sigma and the
/// active tau, uniform mass of the used harmonic orders; -inf outside support.
inline double log_prior(const ModelState& state, const Priors& priors, const ModelLayout& layout) {
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    const auto& s = state.structure;
    double lp = 0.0;
    if (priors.pinned_structure) {
        if (!(s == *priors.pinned_structure)) return neg_inf;
    } else {
        for (const auto& node_edges : s.edges)
            for (auto bit : node_edges) lp += bernoulli_log_mass(bit != 0, priors.p);
        for (auto bit : s.gates) lp += bernoulli_log_mass(bit != 0, priors.gate_p());
        for (int cls = 0; cls < kOrderClasses; ++cls) {
            if (!layout.order_used[static_cast<std::size_t>(cls)]) continue;
            const int l = s.orders[static_cast<std::size_t>(cls)];
            if (l < 1 || l > priors.order_max(cls)) return neg_inf;
            lp -= std::log(static_cast<double>(priors.order_max(cls)));
        }
    }
    const double log_u_sigma = -std::log(priors.sigma.width());
    const double log_u_tau = -std::log(priors.tau.width());
    for (int i = 0; i < layout.n_nodes(); ++i) {
        const auto& ns = state.nodes[static_cast<std::size_t>(i)];
        if (!priors.pinned_sigma) {
            if (!priors.sigma.contains(ns.sigma)) return neg_inf;
            lp += log_u_sigma;
        }
        if (priors.pinned_tau) continue;
        const auto& cols = layout.columns[static_cast<std::size_t>(i)];
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (!column_active(s, cols[c], i)) continue;
            if (!priors.tau.contains(ns.tau[c])) return neg_inf;
            lp += log_u_tau;
        }
    }
    return lp;
}

/// Per-node log marginal likelihoods of a full model state.
inline std::vector<double> node_log_likelihoods(const ModelState& state, std::span<const NodeSuffStats> stats,
                                                const ModelLayout& layout, double dt) {
    std::vector<double> out;
    std::vector<int> active;
    for (int i = 0; i < layout.n_nodes(); ++i) {
        active_columns(state.structure, layout, i, active);
        const auto& ns = state.nodes[static_cast<std::size_t>(i)];
        out.push_back(log_marginal_likelihood_masked(stats[static_cast<std::size_t>(i)], active, ns.sigma, ns.tau, dt));
    }
    return out;
}

/// beta * sum_i log P(Y_i | c_i, sigma_i, tau_i) + log prior.
inline double log_tempered_posterior(const ModelState& state, std::span<const NodeSuffStats> stats,
                                     const ModelLayout& layout, const Priors& priors, double beta, double dt) {
    require(beta >= 0.0 && beta <= 1.0, "log_tempered_posterior: beta must lie in [0, 1]");
    const double lp = log_prior(state, priors, layout);
    if (!std::isfinite(lp) || beta == 0.0) return lp;
    double ll = 0.0;
    for (double v : node_log_likelihoods(state, stats, layout, dt)) ll += v;
    return beta * ll + lp;
}

struct CoefficientPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Gaussian posterior of the active coefficients given sigma and tau:
/// cov = (dt^2/sigma^2 G^T G + Lambda^-1)^-1, mean = dt/sigma^2 cov G^T Y.
inline CoefficientPosterior coefficient_posterior(const NodeSuffStats& stats, std::span<const int> active,
                                                  double sigma_hat, std::span<const double> tau_active, double dt) {
    require(active.size() == tau_active.size(), "coefficient_posterior: active/tau size mismatch");
    require(sigma_hat > 0.0, "coefficient_posterior: sigma must be > 0");
    const auto k = static_cast<Eigen::Index>(active.size());
    const double s2 = sigma_hat * sigma_hat;
    Eigen::MatrixXd precision(k, k);
    Eigen::VectorXd rhs(k);
    for (Eigen::Index r = 0; r < k; ++r) {
        for (Eigen::Index c = 0; c < k; ++c)
            precision(r, c) = dt * dt / s2 * stats.gtg(active[static_cast<std::size_t>(r)], active[static_cast<std::size_t>(c)]);
        const double t = tau_active[static_cast<std::size_t>(r)];
        precision(r, r) += 1.0 / (t * t);
        rhs[r] = dt / s2 * stats.gty[active[static_cast<std::size_t>(r)]];
    }
    CoefficientPosterior out;
    if (k == 0) return out;
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw NumericalError("coefficient_posterior: singular posterior precision");
    out.mean = llt.solve(rhs);
    out.cov = llt.solve(Eigen::MatrixXd::Identity(k, k));
    return out;
}

}  // namespace ssdyn
