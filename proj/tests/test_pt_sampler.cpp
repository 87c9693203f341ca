#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "ssdyn/pt_sampler.hpp"

using namespace ssdyn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// minimal rung for exchange tests: a scalar state and its log-likelihood
struct ToyRung {
    double x = 0.0;
    double ll = 0.0;

    double log_likelihood() const { return ll; }
    void swap_state(ToyRung& o) {
        std::swap(x, o.x);
        std::swap(ll, o.ll);
    }
};

SamplerConfig quick(long sweeps, long burn, long thin, std::uint64_t seed) {
    SamplerConfig c;
    c.n_sweeps = sweeps;
    c.burn_in = burn;
    c.thinning = thin;
    c.seed = seed;
    c.threads = 1;
    return c;
}

}  // namespace

TEST_CASE("ladder values") {
    const auto l = build_ladder(40, 1.3);
    REQUIRE(l.size() == 40);
    CHECK(l.betas[0] == 0.0);
    CHECK(l.betas[39] == 1.0);
    CHECK_THAT(l.betas[38], WithinAbs(0.769231, 1e-6));
    CHECK_THAT(l.betas[1], WithinRel(4.64e-5, 1e-2));
    CHECK_THAT(l.betas[1], WithinRel(std::pow(1.3, -38.0), 1e-12));
    CHECK(build_ladder(2, 7.0).betas == std::vector<double>{0.0, 1.0});
    const auto l10 = build_ladder(10, 1.5);
    for (int r = 1; r < 10; ++r) CHECK(l10.betas[static_cast<std::size_t>(r)] > l10.betas[static_cast<std::size_t>(r - 1)]);
    CHECK_THROWS_AS(build_ladder(1, 1.3), ValidationError);
    CHECK_THROWS_AS(build_ladder(5, 1.0), ValidationError);
}

TEST_CASE("prior rung accepts every edge flip at p = 0.5") {
    const auto t = fixture::tiny_instance();
    Priors pr = t.priors;
    Chain ch(t.layout, t.stats, pr, t.traj.dt, 0.0, make_stream(1, 0));
    ch.draw_from_prior();
    for (int s = 0; s < 200; ++s) ch.local_sweep();
    CHECK(ch.stats().edge.proposed == 400);
    CHECK(ch.stats().edge.accepted == 400);
    CHECK(ch.stats().gate.accepted == ch.stats().gate.proposed);
}

TEST_CASE("harmonic moves outside the support are rejected") {
    std::vector<Dictionary> dicts;
    double dt = 0.0;
    const auto stats = fixture::config1_stats(5, dicts, dt);
    const auto layout = make_layout(dicts);
    Priors pr;
    pr.l2_max = 1;
    pr.l3_max = 1;
    Chain ch(layout, stats, pr, dt, 0.0, make_stream(2, 0));
    ch.draw_from_prior();
    for (int s = 0; s < 100; ++s) ch.local_sweep();
    CHECK(ch.stats().order.proposed == 200);
    CHECK(ch.stats().order.accepted == 0);
    CHECK(ch.state().structure.orders == std::array<int, 2>{1, 1});
}

TEST_CASE("exchange examples") {
    const auto ladder = build_ladder(2, 2.0);
    std::vector<MoveTally> tallies;
    Rng rng = make_stream(3, 0);
    SECTION("identical states always swap") {
        for (long call = 0; call < 50; call += 2) {
            std::vector<ToyRung> rungs{{1.0, -5.0}, {1.0, -5.0}};
            exchange_sweep(rungs, ladder, rng, call, tallies);
        }
        CHECK(tallies[0].accepted == 25);
    }
    SECTION("better state below always moves up") {
        for (long call = 0; call < 50; call += 2) {
            std::vector<ToyRung> rungs{{2.0, -1.0}, {3.0, -9.0}};
            exchange_sweep(rungs, ladder, rng, call, tallies);
            CHECK(rungs[1].x == 2.0);
        }
        CHECK(tallies[0].accepted == 25);
    }
    SECTION("odd calls skip the first pair") {
        std::vector<ToyRung> rungs{{2.0, -1.0}, {3.0, -9.0}};
        exchange_sweep(rungs, ladder, rng, 1, tallies);
        CHECK(tallies[0].proposed == 0);
        CHECK(rungs[0].x == 2.0);
    }
}

TEST_CASE("two-rung Gaussian swap rate matches direct sampling") {
    // prior N(0,1), log L(x) = -x^2 / (2 v): the tempered target at beta is
    // N(0, 1 / (1 + beta / v)), which both rungs sample exactly.
    const double v = 0.05;
    const ReplicaLadder ladder{{0.2, 1.0}, 5.0};
    auto draw = [&](Rng& rng, double beta) { return standard_normal(rng) / std::sqrt(1.0 + beta / v); };
    auto loglik = [&](double x) { return -x * x / (2.0 * v); };

    // oracle: average acceptance probability over independent pairs
    Rng orng = make_stream(77, 0);
    double acc = 0.0;
    const long n_oracle = 2'000'000;
    for (long k = 0; k < n_oracle; ++k) {
        const double a = draw(orng, 0.2), b = draw(orng, 1.0);
        acc += std::min(1.0, std::exp((1.0 - 0.2) * (loglik(a) - loglik(b))));
    }
    const double expected = acc / static_cast<double>(n_oracle);

    Rng srng = make_stream(78, 0), xrng = make_stream(78, 1);
    std::vector<MoveTally> tallies;
    const long n = 40000;
    for (long k = 0; k < n; ++k) {
        const double a = draw(srng, 0.2), b = draw(srng, 1.0);
        std::vector<ToyRung> rungs{{a, loglik(a)}, {b, loglik(b)}};
        exchange_sweep(rungs, ladder, xrng, 2 * k, tallies);
    }
    const double rate = tallies[0].rate();
    const double se = std::sqrt(expected * (1.0 - expected) / static_cast<double>(n));
    INFO("rate " << rate << " expected " << expected);
    CHECK(std::abs(rate - expected) < 3.0 * se);
    CHECK(expected > 0.1);
    CHECK(expected < 0.9);
}

TEST_CASE("intrinsic-only slab scale matches grid quadrature") {
    // one node, one ungated column: only tau moves
    const double dt = 0.1, sigma = 0.05, omega = 0.2;
    Rng rng = make_stream(12, 0);
    const long m = 50;
    Eigen::MatrixXd g = Eigen::MatrixXd::Ones(m, 1);
    Eigen::VectorXd y(m);
    for (long k = 0; k < m; ++k) y[k] = dt * omega + sigma * standard_normal(rng);
    const std::vector<NodeSuffStats> stats{NodeSuffStats::from(g, y)};
    ModelLayout layout;
    layout.columns = {{ColumnGate{}}};
    layout.edge_count = {0};
    layout.gate_count = 0;
    Priors pr;
    pr.pinned_sigma = sigma;
    pr.tau = {0.01, 2.0};
    auto cfg = quick(52000, 2000, 25, 99);
    const auto samples = run_sampler(stats, layout, pr, build_ladder(2, 2.0), cfg, dt);
    std::vector<double> taus;
    for (const auto& r : samples.records) taus.push_back(r.state.nodes[0].tau[0]);
    const auto grid = oracle::tau_posterior_grid(stats[0].gtg(0, 0), stats[0].gty[0], stats[0].yty, m, sigma, dt, 0.01, 2.0);
    const double p = oracle::ks_pvalue(taus, [&](double v) { return grid(v); });
    INFO("KS p " << p << " samples " << taus.size());
    CHECK(p > 0.01);
}

TEST_CASE("one retained record when n_sweeps = burn_in + 1") {
    const auto t = fixture::tiny_instance();
    const auto s = run_sampler(t.stats, t.layout, t.priors, build_ladder(3, 1.5), quick(11, 10, 1, 4), t.traj.dt);
    REQUIRE(s.records.size() == 1);
    CHECK(s.records[0].sweep == 10);
    const auto s2 = run_sampler(t.stats, t.layout, t.priors, build_ladder(3, 1.5), quick(1000, 200, 8, 4), t.traj.dt);
    CHECK(s2.records.size() == 100);
}

TEST_CASE("pinned structure is never changed") {
    const auto t = fixture::tiny_instance();
    Priors pr = t.priors;
    pr.pinned_sigma.reset();
    pr.pinned_tau.reset();
    auto s = empty_structure(t.layout);
    s.edges[1][0] = 1;
    s.gates = {1, 0, 0, 1, 1, 0};
    pr.pinned_structure = s;
    const auto out = run_sampler(t.stats, t.layout, pr, build_ladder(4, 1.5), quick(600, 100, 5, 5), t.traj.dt);
    for (const auto& r : out.records) CHECK(r.state.structure == s);
}

TEST_CASE("inclusion probabilities from hand-made records") {
    const auto t = fixture::tiny_instance();
    PosteriorSamples ps;
    for (int k = 0; k < 10; ++k) {
        SampleRecord r;
        r.state.structure = empty_structure(t.layout);
        r.state.structure.edges[0][0] = 1;
        r.state.structure.edges[1][0] = k % 2;
        r.state.structure.gates[0] = 1;
        r.state.nodes.resize(2);
        ps.records.push_back(r);
    }
    const auto tab = inclusion_probabilities(ps, t.layout);
    CHECK(tab.edges[0][0] == 1.0);
    CHECK(tab.edges[1][0] == 0.5);
    CHECK(tab.gates[0] == 1.0);
    CHECK(tab.gates[1] == 0.0);
    CHECK(tab.columns[0][0] == 1.0);  // intrinsic
    CHECK(tab.columns[0][1] == 1.0);  // sin, edge and gate on
    CHECK(tab.columns[1][1] == 0.5);
    CHECK(tab.columns[0][2] == 0.0);
    CHECK(tab.order_hist[0] == std::vector<double>{1.0});
    PosteriorSamples empty;
    CHECK_THROWS_AS(inclusion_probabilities(empty, t.layout), ValidationError);
}

TEST_CASE("enumerable instance: inclusion probabilities and stationary law") {
    const auto t = fixture::tiny_instance();
    const auto exact = fixture::exact(t);
    const auto exact16 = fixture::exact_relevant(exact);
    // frozen sanity: the instance is not saturated
    const double pmax = *std::max_element(exact16.begin(), exact16.end());
    CHECK(pmax < 0.9);

    auto cfg = quick(101000, 1000, 1, 21);
    const auto out = run_sampler(t.stats, t.layout, t.priors, build_ladder(4, 2.0), cfg, t.traj.dt);
    const auto tab = inclusion_probabilities(out, t.layout);
    for (int i = 0; i < 2; ++i) CHECK_THAT(tab.edges[static_cast<std::size_t>(i)][0], WithinAbs(exact.edges[static_cast<std::size_t>(i)][0], 0.02));
    for (int g = 0; g < 6; ++g) CHECK_THAT(tab.gates[static_cast<std::size_t>(g)], WithinAbs(exact.gates[static_cast<std::size_t>(g)], 0.02));
    const double tv = fixture::total_variation(fixture::empirical_relevant(out), exact16);
    INFO("TV " << tv);
    CHECK(tv < 0.05);

    cfg.exchanges = false;
    cfg.seed = 22;
    const auto solo = run_sampler(t.stats, t.layout, t.priors, build_ladder(4, 2.0), cfg, t.traj.dt);
    const double tv_solo = fixture::total_variation(fixture::empirical_relevant(solo), exact16);
    const double tv_pair = fixture::total_variation(fixture::empirical_relevant(solo), fixture::empirical_relevant(out));
    INFO("TV without exchanges " << tv_solo << ", between runs " << tv_pair);
    CHECK(tv_solo < 0.05);
    CHECK(tv_pair < 0.05);
}

TEST_CASE("identical seeds give identical samples at any thread count") {
    std::vector<Dictionary> dicts;
    double dt = 0.0;
    const auto stats = fixture::config1_stats(8, dicts, dt);
    const auto layout = make_layout(dicts);
    Priors pr;
    auto cfg = quick(300, 100, 5, 31);
    ThreadPool one(1), four(4);
    const auto a = run_sampler(stats, layout, pr, build_ladder(12, 1.3), cfg, dt, &one);
    const auto b = run_sampler(stats, layout, pr, build_ladder(12, 1.3), cfg, dt, &four);
    cfg.threads = 3;
    const auto c = run_sampler(stats, layout, pr, build_ladder(12, 1.3), cfg, dt);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k) {
        CHECK(a.records[k].state == b.records[k].state);
        CHECK(a.records[k].log_post == b.records[k].log_post);
        CHECK(a.records[k].state == c.records[k].state);
    }
    for (std::size_t r = 0; r < a.swaps.size(); ++r) CHECK(a.swaps[r].accepted == b.swaps[r].accepted);
}

TEST_CASE("time-averaged log-likelihood increases along the ladder") {
    std::vector<Dictionary> dicts;
    double dt = 0.0;
    const auto stats = fixture::config1_stats(2, dicts, dt);
    const auto layout = make_layout(dicts);
    auto cfg = quick(3000, 1500, 10, 41);
    cfg.threads = 0;
    const auto out = run_sampler(stats, layout, Priors{}, build_ladder(40, 1.3), cfg, dt);
    const auto& v = out.mean_log_lik;
    // Monte Carlo noise is large on the near-prior rungs; require the ordering
    // wherever the gap between rungs exceeds that noise and overall growth.
    int inversions = 0;
    for (std::size_t r = 1; r < v.size(); ++r)
        if (v[r] < v[r - 1]) ++inversions;
    INFO("inversions " << inversions << " first " << v.front() << " last " << v.back());
    CHECK(v.back() > v[20]);
    CHECK(v[20] > v[1]);
    for (std::size_t r = 20; r < v.size(); ++r) CHECK(v[r] >= v[r - 1] - 1.0);
}

TEST_CASE("sampler config validation") {
    SamplerConfig c;
    c.burn_in = c.n_sweeps;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.thinning = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}
