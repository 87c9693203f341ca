#pragma once

// Point estimates from posterior summaries and the structure / coefficient
// error metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssdyn/bayes_core.hpp"
#include "ssdyn/dictionary.hpp"
#include "ssdyn/error.hpp"
#include "ssdyn/pt_sampler.hpp"

namespace ssdyn {

/// Strict rule: a probability exactly at the cutoff maps to 0.
inline bool threshold_bit(double prob, double cutoff) { return prob > cutoff; }

/// Mode of a histogram indexed by l-1; the smallest order wins ties.
inline int histogram_mode(std::span<const double> hist) {
    require(!hist.empty(), "histogram_mode: empty histogram");
    int best = 0;
    for (int l = 1; l < static_cast<int>(hist.size()); ++l)
        if (hist[static_cast<std::size_t>(l)] > hist[static_cast<std::size_t>(best)]) best = l;
    return best + 1;
}

inline StructureState threshold(const InclusionTable& table, const ModelLayout& layout, double cutoff) {
    require(cutoff > 0.0 && cutoff < 1.0, "threshold: cutoff must lie in (0, 1)");
    StructureState s = empty_structure(layout);
    for (std::size_t i = 0; i < table.edges.size(); ++i)
        for (std::size_t e = 0; e < table.edges[i].size(); ++e) s.edges[i][e] = threshold_bit(table.edges[i][e], cutoff);
    for (std::size_t g = 0; g < table.gates.size(); ++g) s.gates[g] = threshold_bit(table.gates[g], cutoff);
    for (int cls = 0; cls < kOrderClasses; ++cls) {
        const auto& h = table.order_hist[static_cast<std::size_t>(cls)];
        s.orders[static_cast<std::size_t>(cls)] = layout.order_used[static_cast<std::size_t>(cls)] ? histogram_mode(h) : 1;
    }
    return s;
}

inline std::vector<double> posterior_mean_sigma(const PosteriorSamples& samples) {
    require(!samples.records.empty(), "posterior_mean_sigma: no samples");
    const auto n = samples.records.front().state.nodes.size();
    std::vector<double> out(n, 0.0);
    for (const auto& r : samples.records)
        for (std::size_t i = 0; i < n; ++i) out[i] += r.state.nodes[i].sigma;
    for (auto& v : out) v /= static_cast<double>(samples.records.size());
    return out;
}

/// Posterior mean of tau per column over the samples in which that column was
/// active; falls back to the mean over all samples for never-active columns.
inline std::vector<std::vector<double>> posterior_mean_tau(const PosteriorSamples& samples, const ModelLayout& layout) {
    require(!samples.records.empty(), "posterior_mean_tau: no samples");
    std::vector<std::vector<double>> out;
    for (int i = 0; i < layout.n_nodes(); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const auto& cols = layout.columns[ui];
        std::vector<double> sum_active(cols.size(), 0.0), sum_all(cols.size(), 0.0);
        std::vector<long> n_active(cols.size(), 0);
        for (const auto& r : samples.records)
            for (std::size_t c = 0; c < cols.size(); ++c) {
                const double t = r.state.nodes[ui].tau[c];
                sum_all[c] += t;
                if (column_active(r.state.structure, cols[c], i)) {
                    sum_active[c] += t;
                    ++n_active[c];
                }
            }
        std::vector<double> mean(cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c)
            mean[c] = n_active[c] > 0 ? sum_active[c] / static_cast<double>(n_active[c])
                                      : sum_all[c] / static_cast<double>(samples.records.size());
        out.push_back(std::move(mean));
    }
    return out;
}

/// Scatter active-column values into a zero vector of length gamma.
inline Eigen::VectorXd pad(std::span<const int> active, const Eigen::VectorXd& values, int gamma) {
    require(static_cast<Eigen::Index>(active.size()) == values.size(), "pad: active/value size mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(gamma);
    for (std::size_t c = 0; c < active.size(); ++c) {
        require(active[c] >= 0 && active[c] < gamma, "pad: column out of range");
        out[active[c]] = values[static_cast<Eigen::Index>(c)];
    }
    return out;
}

inline Eigen::VectorXd mask(const Eigen::VectorXd& theta, std::span<const std::uint8_t> bits) {
    require(theta.size() == static_cast<Eigen::Index>(bits.size()), "mask: length mismatch");
    Eigen::VectorXd out = theta;
    for (std::size_t c = 0; c < bits.size(); ++c)
        if (!bits[c]) out[static_cast<Eigen::Index>(c)] = 0.0;
    return out;
}

struct PointEstimate {
    StructureState structure;
    std::vector<std::vector<std::uint8_t>> columns;  // effective indicators per node
    std::vector<Eigen::VectorXd> theta_hat;          // padded to Gamma_max
    std::vector<double> sigma_hat;
    std::vector<std::vector<double>> tau_hat;
};

/// Coefficients conditional on a fixed structure, with Lambda from tau_hat.
inline std::vector<Eigen::VectorXd> estimate_coefficients(std::span<const NodeSuffStats> stats,
                                                          const ModelLayout& layout, const StructureState& structure,
                                                          std::span<const double> sigma_hat,
                                                          const std::vector<std::vector<double>>& tau_hat, double dt) {
    std::vector<Eigen::VectorXd> out;
    for (int i = 0; i < layout.n_nodes(); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const auto active = active_columns(structure, layout, i);
        std::vector<double> tau_active;
        for (int c : active) tau_active.push_back(tau_hat[ui][static_cast<std::size_t>(c)]);
        const auto post = coefficient_posterior(stats[ui], active, sigma_hat[ui], tau_active, dt);
        out.push_back(active.empty() ? Eigen::VectorXd::Zero(layout.n_columns(i))
                                     : pad(active, post.mean, layout.n_columns(i)));
    }
    return out;
}

inline PointEstimate point_estimate(const PosteriorSamples& samples, const InclusionTable& table,
                                    std::span<const NodeSuffStats> stats, const ModelLayout& layout, double cutoff,
                                    double dt) {
    PointEstimate pe;
    pe.structure = threshold(table, layout, cutoff);
    for (int i = 0; i < layout.n_nodes(); ++i) pe.columns.push_back(effective_indicators(pe.structure, layout, i));
    pe.sigma_hat = posterior_mean_sigma(samples);
    pe.tau_hat = posterior_mean_tau(samples, layout);
    pe.theta_hat = estimate_coefficients(stats, layout, pe.structure, pe.sigma_hat, pe.tau_hat, dt);
    return pe;
}

// ---------------------------------------------------------------------------
// Metrics.

/// Mean absolute bit disagreement over all nodes' indicator vectors (N * Gamma).
inline double hamming_error(const std::vector<std::vector<std::uint8_t>>& c_true,
                            const std::vector<std::vector<std::uint8_t>>& c_hat) {
    require(c_true.size() == c_hat.size() && !c_true.empty(), "hamming_error: node count mismatch");
    long total = 0, diff = 0;
    for (std::size_t i = 0; i < c_true.size(); ++i) {
        require(c_true[i].size() == c_hat[i].size(), "hamming_error: layout mismatch at node " + std::to_string(i + 1));
        for (std::size_t c = 0; c < c_true[i].size(); ++c) {
            diff += (c_true[i][c] != 0) != (c_hat[i][c] != 0) ? 1 : 0;
            ++total;
        }
    }
    require(total > 0, "hamming_error: empty indicator vectors");
    return static_cast<double>(diff) / static_cast<double>(total);
}

/// sqrt(sum_i ||theta_true_i - theta_hat_i||^2 / (N * Gamma)).
inline double rmse_theta(const std::vector<Eigen::VectorXd>& theta_true, const std::vector<Eigen::VectorXd>& theta_hat) {
    require(theta_true.size() == theta_hat.size() && !theta_true.empty(), "rmse_theta: node count mismatch");
    double sq = 0.0;
    long total = 0;
    for (std::size_t i = 0; i < theta_true.size(); ++i) {
        require(theta_true[i].size() == theta_hat[i].size(), "rmse_theta: length mismatch at node " + std::to_string(i + 1));
        sq += (theta_true[i] - theta_hat[i]).squaredNorm();
        total += theta_true[i].size();
    }
    return std::sqrt(sq / static_cast<double>(total));
}

struct MetricValues {
    double e_c = 0.0;
    double e_c_edges = 0.0;  // edge bits only, diagnostic
    double e_theta = 0.0;
};

/// Compares an estimate with ground truth at dictionary caps. The intrinsic
/// column is included in both metrics (its indicator is fixed to 1).
inline MetricValues evaluate_metrics(const NetworkGroundTruth& truth, std::span<const Dictionary> dicts,
                                     const ModelLayout& layout, const PointEstimate& pe) {
    const auto true_state = truth_structure(truth, dicts);
    MetricValues mv;
    std::vector<std::vector<std::uint8_t>> c_true;
    std::vector<Eigen::VectorXd> theta_true;
    for (int i = 0; i < layout.n_nodes(); ++i) {
        c_true.push_back(effective_indicators(true_state, layout, i));
        theta_true.push_back(mask(truth_coefficients(truth, dicts[static_cast<std::size_t>(i)]), c_true.back()));
    }
    mv.e_c = hamming_error(c_true, pe.columns);
    std::vector<std::vector<std::uint8_t>> e_true(true_state.edges), e_hat(pe.structure.edges);
    mv.e_c_edges = hamming_error(e_true, e_hat);
    mv.e_theta = rmse_theta(theta_true, pe.theta_hat);
    return mv;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    long n = 0;
    bool single = false;  // se reported as 0 because n == 1
};

/// Mean and standard error sd(n-1)/sqrt(n), skipping non-finite values.
inline MeanSe mean_se(std::span<const double> v) {
    MeanSe out;
    double sum = 0.0;
    for (double x : v)
        if (std::isfinite(x)) {
            sum += x;
            ++out.n;
        }
    if (out.n == 0) {
        out.mean = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.mean = sum / static_cast<double>(out.n);
    if (out.n == 1) {
        out.single = true;
        return out;
    }
    double ss = 0.0;
    for (double x : v)
        if (std::isfinite(x)) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(out.n - 1)) / std::sqrt(static_cast<double>(out.n));
    return out;
}

}  // namespace ssdyn
