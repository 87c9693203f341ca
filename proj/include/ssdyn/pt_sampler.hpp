#pragma once

// Parallel-tempering Metropolis-Hastings over the joint state
// ({c_i, sigma_i, tau_i}, d, l2, l3).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ssdyn/bayes_core.hpp"
#include "ssdyn/dictionary.hpp"
#include "ssdyn/error.hpp"
#include "ssdyn/parallel.hpp"
#include "ssdyn/rng.hpp"

namespace ssdyn {

struct ReplicaLadder {
    std::vector<double> betas;
    double eta = 1.3;

    int size() const { return static_cast<int>(betas.size()); }
};

/// beta_1 = 0, beta_r = eta^(r-R) for r = 2..R.
inline ReplicaLadder build_ladder(int r, double eta) {
    require(r >= 2, "ladder: need at least 2 replicas");
    require(eta > 1.0, "ladder: eta must be > 1");
    ReplicaLadder ladder;
    ladder.eta = eta;
    ladder.betas.resize(static_cast<std::size_t>(r));
    ladder.betas[0] = 0.0;
    for (int k = 2; k <= r; ++k) ladder.betas[static_cast<std::size_t>(k - 1)] = std::pow(eta, k - r);
    ladder.betas.back() = 1.0;
    return ladder;
}

struct SamplerConfig {
    long n_sweeps = 20000;
    long burn_in = 10000;
    long thinning = 10;
    long exchange_period = 1;
    std::uint64_t seed = 1;
    double sigma_step = 0.1;
    double tau_step = 0.2;
    bool adapt = true;
    long adapt_interval = 100;
    double adapt_target = 0.3;
    bool exchanges = true;
    int threads = 0;

    void validate() const {
        require(n_sweeps >= 1 && burn_in >= 0 && thinning >= 1 && exchange_period >= 1,
                "sampler: counts must be >= 1 (burn_in >= 0)");
        require(burn_in < n_sweeps, "sampler: burn_in must be < n_sweeps");
        require(sigma_step > 0.0 && tau_step > 0.0, "sampler: proposal steps must be > 0");
        require(adapt_interval >= 1, "sampler: adapt_interval must be >= 1");
    }
};

struct MoveTally {
    long proposed = 0;
    long accepted = 0;

    void add(bool ok) {
        ++proposed;
        if (ok) ++accepted;
    }
    double rate() const { return proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

struct MoveStats {
    MoveTally edge, gate, order, sigma, tau;
};

struct SampleRecord {
    long sweep = 0;
    double log_post = 0.0;
    double log_lik = 0.0;
    ModelState state;
};

struct PosteriorSamples {
    std::vector<SampleRecord> records;
    std::vector<double> betas;
    std::vector<MoveTally> swaps;          // adjacent pairs (r, r+1)
    std::vector<MoveStats> moves;          // per rung
    std::vector<double> mean_log_lik;      // per rung, post burn-in
    int threads_used = 1;
};

/// One tempered replica: model state with cached per-node log-likelihoods.
class Chain {
public:
    Chain(const ModelLayout& layout, std::span<const NodeSuffStats> stats, const Priors& priors, double dt,
          double beta, Rng rng)
        : layout_(&layout), stats_(stats), priors_(&priors), dt_(dt), beta_(beta), rng_(std::move(rng)) {
        const auto n = static_cast<std::size_t>(layout.n_nodes());
        sigma_scale_.assign(n, 1.0);
        tau_scale_.assign(n, 1.0);
        window_sigma_.assign(n, {});
        window_tau_.assign(n, {});
        node_ll_.assign(n, 0.0);
    }

    const ModelState& state() const { return state_; }
    double beta() const { return beta_; }
    double log_likelihood() const { return log_lik_; }
    double log_posterior() const { return beta_ * log_lik_ + log_prior(state_, *priors_, *layout_); }
    const MoveStats& stats() const { return moves_; }
    Rng& rng() { return rng_; }

    void set_steps(double sigma_step, double tau_step) {
        sigma_step_ = sigma_step;
        tau_step_ = tau_step;
    }

    void set_state(ModelState s) {
        state_ = std::move(s);
        refresh_all();
    }

    /// Exchanges model states (and cached likelihoods) with another chain;
    /// RNG streams and step scales stay with the rung.
    void swap_state(Chain& other) {
        std::swap(state_, other.state_);
        std::swap(node_ll_, other.node_ll_);
        std::swap(log_lik_, other.log_lik_);
    }

    /// Independent draw from the prior (used for initialization and the beta=0 rung).
    void draw_from_prior() {
        ModelState s;
        const auto& L = *layout_;
        if (priors_->pinned_structure) {
            s.structure = *priors_->pinned_structure;
        } else {
            s.structure = empty_structure(L);
            for (auto& node_edges : s.structure.edges)
                for (auto& b : node_edges) b = bernoulli(rng_, priors_->p) ? 1 : 0;
            for (auto& b : s.structure.gates) b = bernoulli(rng_, priors_->gate_p()) ? 1 : 0;
            for (int cls = 0; cls < kOrderClasses; ++cls) {
                const int lmax = priors_->order_max(cls);
                s.structure.orders[static_cast<std::size_t>(cls)] =
                    1 + static_cast<int>(std::min<double>(lmax - 1, std::floor(uniform01(rng_) * lmax)));
            }
        }
        for (int i = 0; i < L.n_nodes(); ++i) {
            NodeState ns;
            ns.sigma = draw_sigma();
            ns.tau.resize(static_cast<std::size_t>(L.n_columns(i)));
            for (auto& t : ns.tau) t = draw_tau();
            s.nodes.push_back(std::move(ns));
        }
        set_state(std::move(s));
    }

    /// One local sweep: edge flips per node, sigma and tau walks per node,
    /// then gate flips and harmonic-order moves.
    void local_sweep() {
        const auto& L = *layout_;
        const bool structure_free = !priors_->pinned_structure;
        for (int i = 0; i < L.n_nodes(); ++i) {
            if (structure_free)
                for (int e = 0; e < L.edge_count[static_cast<std::size_t>(i)]; ++e) edge_flip(i, e);
            if (!priors_->pinned_sigma) sigma_move(i);
            if (!priors_->pinned_tau) tau_moves(i);
        }
        if (structure_free) {
            for (int g = 0; g < L.gate_count; ++g) gate_flip(g);
            for (int cls = 0; cls < kOrderClasses; ++cls)
                if (L.order_used[static_cast<std::size_t>(cls)]) order_move(cls);
        }
    }

    /// Adjusts per-node walk scales toward the target acceptance rate.
    void adapt(double target) {
        for (std::size_t i = 0; i < sigma_scale_.size(); ++i) {
            tune(sigma_scale_[i], window_sigma_[i], target);
            tune(tau_scale_[i], window_tau_[i], target);
        }
    }

private:
    static void tune(double& scale, MoveTally& window, double target) {
        if (window.proposed >= 20) {
            const double factor = std::exp(3.0 * (window.rate() - target));
            scale = std::clamp(scale * factor, 1e-3, 1e3);
        }
        window = {};
    }

    double draw_sigma() {
        return priors_->pinned_sigma ? *priors_->pinned_sigma : uniform(rng_, priors_->sigma.lo, priors_->sigma.hi);
    }
    double draw_tau() {
        return priors_->pinned_tau ? *priors_->pinned_tau : uniform(rng_, priors_->tau.lo, priors_->tau.hi);
    }

    static double reflect(double v, const Range& r) {
        const double w = r.width();
        for (int guard = 0; guard < 64 && (v < r.lo || v > r.hi); ++guard) v = v < r.lo ? 2.0 * r.lo - v : 2.0 * r.hi - v;
        if (v < r.lo || v > r.hi) v = r.lo + std::fmod(std::abs(v - r.lo), w);
        return v;
    }

    double node_ll(int i) {
        active_columns(state_.structure, *layout_, i, active_);
        const auto& ns = state_.nodes[static_cast<std::size_t>(i)];
        return log_marginal_likelihood_masked(stats_[static_cast<std::size_t>(i)], active_, ns.sigma, ns.tau, dt_);
    }

    void refresh_all() {
        log_lik_ = 0.0;
        for (int i = 0; i < layout_->n_nodes(); ++i) {
            node_ll_[static_cast<std::size_t>(i)] = node_ll(i);
            log_lik_ += node_ll_[static_cast<std::size_t>(i)];
        }
    }

    bool accept(double log_ratio) {
        if (log_ratio >= 0.0) return true;
        return std::log(uniform01(rng_)) < log_ratio;
    }

    // Columns whose activity toggles under a structural change get fresh tau
    // from the prior in both directions, so the tau proposal cancels the
    // uniform tau prior and the acceptance reduces to likelihood x bit prior.
    struct TauBackup {
        int node;
        int column;
        double value;
    };

    void redraw(int i, int c) {
        auto& t = state_.nodes[static_cast<std::size_t>(i)].tau[static_cast<std::size_t>(c)];
        backup_.push_back({i, c, t});
        t = draw_tau();
    }

    void restore_tau() {
        for (auto it = backup_.rbegin(); it != backup_.rend(); ++it)
            state_.nodes[static_cast<std::size_t>(it->node)].tau[static_cast<std::size_t>(it->column)] = it->value;
    }

    double bit_prior_delta(bool new_bit, double p) const {
        return bernoulli_log_mass(new_bit, p) - bernoulli_log_mass(!new_bit, p);
    }

    void edge_flip(int i, int e) {
        auto& bit = state_.structure.edges[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)];
        const bool new_bit = !bit;
        backup_.clear();
        const auto& cols = layout_->columns[static_cast<std::size_t>(i)];
        bit = 1;  // evaluate gating with the edge on to find the toggled columns
        for (std::size_t c = 0; c < cols.size(); ++c)
            if (cols[c].edge == e && column_active(state_.structure, cols[c], i)) redraw(i, static_cast<int>(c));
        bit = new_bit ? 1 : 0;
        const double old_ll = node_ll_[static_cast<std::size_t>(i)];
        const double new_ll = backup_.empty() ? old_ll : node_ll(i);
        const bool ok = accept(beta_ * (new_ll - old_ll) + bit_prior_delta(new_bit, priors_->p));
        moves_.edge.add(ok);
        if (ok) {
            node_ll_[static_cast<std::size_t>(i)] = new_ll;
            log_lik_ += new_ll - old_ll;
        } else {
            bit = new_bit ? 0 : 1;
            restore_tau();
        }
    }

    /// Shared tail of gate and order moves: recompute every node with a toggled column.
    bool global_move_accept(double log_prior_delta) {
        const auto n = static_cast<std::size_t>(layout_->n_nodes());
        touched_.assign(n, 0);
        for (const auto& b : backup_) touched_[static_cast<std::size_t>(b.node)] = 1;
        new_ll_ = node_ll_;
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (touched_[i]) {
                new_ll_[i] = node_ll(static_cast<int>(i));
                delta += new_ll_[i] - node_ll_[i];
            }
        const bool ok = accept(beta_ * delta + log_prior_delta);
        if (ok) {
            node_ll_ = new_ll_;
            log_lik_ += delta;
        }
        return ok;
    }

    void gate_flip(int g) {
        auto& bit = state_.structure.gates[static_cast<std::size_t>(g)];
        const bool new_bit = !bit;
        backup_.clear();
        bit = 1;
        for (int i = 0; i < layout_->n_nodes(); ++i) {
            const auto& cols = layout_->columns[static_cast<std::size_t>(i)];
            for (std::size_t c = 0; c < cols.size(); ++c)
                if (cols[c].gate == g && column_active(state_.structure, cols[c], i)) redraw(i, static_cast<int>(c));
        }
        bit = new_bit ? 1 : 0;
        const bool ok = global_move_accept(bit_prior_delta(new_bit, priors_->gate_p()));
        moves_.gate.add(ok);
        if (!ok) {
            bit = new_bit ? 0 : 1;
            restore_tau();
        }
    }

    void order_move(int cls) {
        auto& l = state_.structure.orders[static_cast<std::size_t>(cls)];
        const int old_l = l;
        const int new_l = old_l + (uniform01(rng_) < 0.5 ? -1 : 1);
        if (new_l < 1 || new_l > priors_->order_max(cls)) {
            moves_.order.add(false);
            return;
        }
        backup_.clear();
        const int exposed = std::max(old_l, new_l);
        l = exposed;
        for (int i = 0; i < layout_->n_nodes(); ++i) {
            const auto& cols = layout_->columns[static_cast<std::size_t>(i)];
            for (std::size_t c = 0; c < cols.size(); ++c)
                if (cols[c].order_class == cls && cols[c].harmonic == exposed &&
                    column_active(state_.structure, cols[c], i))
                    redraw(i, static_cast<int>(c));
        }
        l = new_l;
        const bool ok = global_move_accept(0.0);
        moves_.order.add(ok);
        if (!ok) {
            l = old_l;
            restore_tau();
        }
    }

    void sigma_move(int i) {
        auto& ns = state_.nodes[static_cast<std::size_t>(i)];
        const double old_sigma = ns.sigma;
        ns.sigma = reflect(old_sigma + cfg_sigma_step() * sigma_scale_[static_cast<std::size_t>(i)] * standard_normal(rng_),
                           priors_->sigma);
        const double old_ll = node_ll_[static_cast<std::size_t>(i)];
        const double new_ll = node_ll(i);
        const bool ok = accept(beta_ * (new_ll - old_ll));
        moves_.sigma.add(ok);
        window_sigma_[static_cast<std::size_t>(i)].add(ok);
        if (ok) {
            node_ll_[static_cast<std::size_t>(i)] = new_ll;
            log_lik_ += new_ll - old_ll;
        } else {
            ns.sigma = old_sigma;
        }
    }

    void tau_moves(int i) {
        active_columns(state_.structure, *layout_, i, tau_cols_);
        auto& ns = state_.nodes[static_cast<std::size_t>(i)];
        const double step = cfg_tau_step() * tau_scale_[static_cast<std::size_t>(i)];
        for (int c : tau_cols_) {
            auto& t = ns.tau[static_cast<std::size_t>(c)];
            const double old_t = t;
            t = reflect(old_t + step * standard_normal(rng_), priors_->tau);
            const double old_ll = node_ll_[static_cast<std::size_t>(i)];
            const double new_ll = node_ll(i);
            const bool ok = accept(beta_ * (new_ll - old_ll));
            moves_.tau.add(ok);
            window_tau_[static_cast<std::size_t>(i)].add(ok);
            if (ok) {
                node_ll_[static_cast<std::size_t>(i)] = new_ll;
                log_lik_ += new_ll - old_ll;
            } else {
                t = old_t;
            }
        }
    }

    double cfg_sigma_step() const { return sigma_step_; }
    double cfg_tau_step() const { return tau_step_; }

    const ModelLayout* layout_;
    std::span<const NodeSuffStats> stats_;
    const Priors* priors_;
    double dt_;
    double beta_;
    Rng rng_;
    double sigma_step_ = 0.1;
    double tau_step_ = 0.2;

    ModelState state_;
    std::vector<double> node_ll_;
    double log_lik_ = 0.0;
    MoveStats moves_;
    std::vector<double> sigma_scale_, tau_scale_;
    std::vector<MoveTally> window_sigma_, window_tau_;

    std::vector<int> active_, tau_cols_;
    std::vector<TauBackup> backup_;
    std::vector<std::uint8_t> touched_;
    std::vector<double> new_ll_;
};

/// Adjacent-pair swaps, even pairs on even calls and odd pairs on odd calls.
/// Accepts with exp((beta_{r+1} - beta_r)(logL(x_r) - logL(x_{r+1}))).
template <class ChainT>
void exchange_sweep(std::vector<ChainT>& chains, const ReplicaLadder& ladder, Rng& rng, long call_index,
                    std::vector<MoveTally>& tallies) {
    const int r_count = static_cast<int>(chains.size());
    require(r_count == ladder.size(), "exchange_sweep: one chain per rung required");
    if (static_cast<int>(tallies.size()) != r_count - 1) tallies.assign(static_cast<std::size_t>(r_count - 1), {});
    for (int r = static_cast<int>(call_index % 2); r + 1 < r_count; r += 2) {
        const auto ur = static_cast<std::size_t>(r);
        const double log_ratio =
            (ladder.betas[ur + 1] - ladder.betas[ur]) * (chains[ur].log_likelihood() - chains[ur + 1].log_likelihood());
        const bool ok = log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio;
        tallies[ur].add(ok);
        if (ok) chains[ur].swap_state(chains[ur + 1]);
    }
}

namespace detail {

inline void check_inputs(const ModelLayout& layout, std::span<const NodeSuffStats> stats, const Priors& priors) {
    require(static_cast<int>(stats.size()) == layout.n_nodes(), "sampler: one sufficient-statistics block per node");
    for (int i = 0; i < layout.n_nodes(); ++i)
        require(stats[static_cast<std::size_t>(i)].n_columns() == layout.n_columns(i),
                "sampler: statistics width does not match layout for node " + std::to_string(i + 1));
    priors.validate();
    for (int cls = 0; cls < kOrderClasses; ++cls)
        if (layout.order_used[static_cast<std::size_t>(cls)])
            require(priors.order_max(cls) <= layout.order_max[static_cast<std::size_t>(cls)],
                    "sampler: harmonic support exceeds dictionary caps");
    if (priors.pinned_structure) {
        const auto& s = *priors.pinned_structure;
        require(static_cast<int>(s.edges.size()) == layout.n_nodes() &&
                    static_cast<int>(s.gates.size()) == layout.gate_count,
                "sampler: pinned structure does not match layout");
    }
}

}  // namespace detail

/// Full PT run. Every replica starts from a prior draw; the beta=0 rung is
/// refreshed by exact prior draws each sweep. Deterministic given cfg.seed,
/// independent of the thread count.
inline PosteriorSamples run_sampler(std::span<const NodeSuffStats> stats, const ModelLayout& layout,
                                    const Priors& priors, const ReplicaLadder& ladder, const SamplerConfig& cfg,
                                    double dt, ThreadPool* pool = nullptr) {
    cfg.validate();
    detail::check_inputs(layout, stats, priors);
    const int r_count = ladder.size();

    std::vector<Chain> chains;
    chains.reserve(static_cast<std::size_t>(r_count));
    for (int r = 0; r < r_count; ++r) {
        chains.emplace_back(layout, stats, priors, dt, ladder.betas[static_cast<std::size_t>(r)],
                            make_stream(cfg.seed, static_cast<std::uint64_t>(r)));
        chains.back().set_steps(cfg.sigma_step, cfg.tau_step);
    }
    Rng exchange_rng = make_stream(cfg.seed, 0x5eed0000ULL + static_cast<std::uint64_t>(r_count));

    PosteriorSamples out;
    out.betas = ladder.betas;
    out.swaps.assign(static_cast<std::size_t>(r_count - 1), {});
    out.mean_log_lik.assign(static_cast<std::size_t>(r_count), 0.0);
    out.records.reserve(static_cast<std::size_t>((cfg.n_sweeps - cfg.burn_in) / cfg.thinning));

    ThreadPool local_pool(pool ? 1 : cfg.threads);
    ThreadPool& workers = pool ? *pool : local_pool;
    out.threads_used = workers.size();

    auto for_each_chain = [&](const std::function<void(int)>& fn, long sweep) {
        try {
            workers.parallel_for(r_count, fn);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " (sweep " + std::to_string(sweep) + ")");
        }
    };

    for_each_chain([&](int r) { chains[static_cast<std::size_t>(r)].draw_from_prior(); }, -1);

    long exchange_calls = 0;
    long post_burn = 0;
    for (long sweep = 0; sweep < cfg.n_sweeps; ++sweep) {
        for_each_chain(
            [&](int r) {
                auto& ch = chains[static_cast<std::size_t>(r)];
                try {
                    if (ch.beta() == 0.0)
                        ch.draw_from_prior();
                    else
                        ch.local_sweep();
                } catch (const NumericalError& e) {
                    throw NumericalError(std::string(e.what()) + " in replica " + std::to_string(r + 1));
                }
            },
            sweep);
        if (cfg.adapt && sweep < cfg.burn_in && (sweep + 1) % cfg.adapt_interval == 0)
            for (auto& ch : chains) ch.adapt(cfg.adapt_target);
        if (cfg.exchanges && (sweep + 1) % cfg.exchange_period == 0)
            exchange_sweep(chains, ladder, exchange_rng, exchange_calls++, out.swaps);

        if (sweep >= cfg.burn_in) {
            ++post_burn;
            for (int r = 0; r < r_count; ++r)
                out.mean_log_lik[static_cast<std::size_t>(r)] += chains[static_cast<std::size_t>(r)].log_likelihood();
            if ((sweep - cfg.burn_in + 1) % cfg.thinning == 0) {
                const auto& top = chains.back();
                out.records.push_back({sweep, top.log_posterior(), top.log_likelihood(), top.state()});
            }
        }
    }
    for (auto& v : out.mean_log_lik) v /= static_cast<double>(std::max(post_burn, 1L));
    for (const auto& ch : chains) out.moves.push_back(ch.stats());
    return out;
}

// ---------------------------------------------------------------------------
// Posterior summaries (Bayesian model averaging over recorded states).

struct InclusionTable {
    std::vector<std::vector<double>> edges;   // per node, per edge slot
    std::vector<double> gates;
    std::vector<std::vector<double>> columns; // per node, effective column indicators
    std::array<std::vector<double>, kOrderClasses> order_hist;  // index l-1
    long n_samples = 0;
};

inline InclusionTable inclusion_probabilities(const PosteriorSamples& samples, const ModelLayout& layout) {
    require(!samples.records.empty(), "inclusion_probabilities: no samples");
    InclusionTable t;
    const int n = layout.n_nodes();
    t.n_samples = static_cast<long>(samples.records.size());
    for (int i = 0; i < n; ++i) {
        t.edges.emplace_back(static_cast<std::size_t>(layout.edge_count[static_cast<std::size_t>(i)]), 0.0);
        t.columns.emplace_back(static_cast<std::size_t>(layout.n_columns(i)), 0.0);
    }
    t.gates.assign(static_cast<std::size_t>(layout.gate_count), 0.0);
    for (int cls = 0; cls < kOrderClasses; ++cls)
        t.order_hist[static_cast<std::size_t>(cls)].assign(static_cast<std::size_t>(layout.order_max[static_cast<std::size_t>(cls)]), 0.0);

    for (const auto& rec : samples.records) {
        const auto& s = rec.state.structure;
        for (int i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            for (std::size_t e = 0; e < s.edges[ui].size(); ++e) t.edges[ui][e] += s.edges[ui][e];
            const auto& cols = layout.columns[ui];
            for (std::size_t c = 0; c < cols.size(); ++c) t.columns[ui][c] += column_active(s, cols[c], i) ? 1.0 : 0.0;
        }
        for (std::size_t g = 0; g < s.gates.size(); ++g) t.gates[g] += s.gates[g];
        for (int cls = 0; cls < kOrderClasses; ++cls) {
            auto& h = t.order_hist[static_cast<std::size_t>(cls)];
            const int l = s.orders[static_cast<std::size_t>(cls)];
            if (l >= 1 && l <= static_cast<int>(h.size())) h[static_cast<std::size_t>(l - 1)] += 1.0;
        }
    }
    const double inv = 1.0 / static_cast<double>(t.n_samples);
    auto scale = [inv](std::vector<double>& v) {
        for (auto& x : v) x *= inv;
    };
    for (auto& v : t.edges) scale(v);
    for (auto& v : t.columns) scale(v);
    scale(t.gates);
    for (auto& h : t.order_hist) scale(h);
    return t;
}

}  // namespace ssdyn
