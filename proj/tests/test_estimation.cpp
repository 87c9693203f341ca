#include <catch_amalgamated.hpp>

#include "ssdyn/experiments.hpp"

using namespace ssdyn;
using Catch::Matchers::WithinAbs;
using Bits = std::vector<std::vector<std::uint8_t>>;

TEST_CASE("threshold rule is strict") {
    CHECK(threshold_bit(0.51, 0.5));
    CHECK_FALSE(threshold_bit(0.5, 0.5));
    CHECK_FALSE(threshold_bit(0.49, 0.5));
    CHECK(histogram_mode(std::vector<double>{0.2, 0.5, 0.3}) == 2);
    CHECK(histogram_mode(std::vector<double>{0.4, 0.2, 0.4}) == 1);
    CHECK(histogram_mode(std::vector<double>{0.0, 0.5, 0.5}) == 2);
}

TEST_CASE("threshold maps a table to a structure") {
    const auto dicts = build_dictionaries(3, 3, 3);
    const auto layout = make_layout(dicts);
    InclusionTable t;
    for (int i = 0; i < 3; ++i) t.edges.push_back(std::vector<double>(5, 0.2));
    t.edges[1][0] = 0.95;
    t.edges[2][3] = 0.5;
    t.gates = {0.9, 0.51, 0.5, 0.1, 0.7, 0.0};
    t.order_hist[0] = {0.6, 0.3, 0.1};
    t.order_hist[1] = {0.1, 0.45, 0.45};
    const auto s = threshold(t, layout, 0.5);
    CHECK(s.edges[1][0] == 1);
    CHECK(s.edges[2][3] == 0);
    CHECK(s.edges[0] == std::vector<std::uint8_t>(5, 0));
    CHECK(s.gates == std::vector<std::uint8_t>{1, 1, 0, 0, 1, 0});
    CHECK(s.orders == std::array<int, 2>{1, 2});
    CHECK_THROWS_AS(threshold(t, layout, 1.0), ValidationError);
}

TEST_CASE("hamming error examples") {
    CHECK(hamming_error(Bits{{1, 0, 1, 0}}, Bits{{1, 1, 0, 0}}) == 0.5);
    CHECK(hamming_error(Bits{{1, 0, 1, 0}}, Bits{{1, 0, 1, 0}}) == 0.0);
    CHECK(hamming_error(Bits{{1, 0, 1, 0}, {0, 0}}, Bits{{0, 1, 0, 1}, {1, 1}}) == 1.0);
    CHECK_THROWS_AS(hamming_error(Bits{{1, 0}}, Bits{{1, 0, 0}}), ValidationError);
}

TEST_CASE("hamming error is a metric on bit vectors") {
    Rng rng = make_stream(6, 0);
    auto random_bits = [&] {
        Bits b(3, std::vector<std::uint8_t>(11));
        for (auto& v : b)
            for (auto& x : v) x = bernoulli(rng, 0.4);
        return b;
    };
    for (int trial = 0; trial < 300; ++trial) {
        const auto a = random_bits(), b = random_bits(), c = random_bits();
        CHECK(hamming_error(a, b) == hamming_error(b, a));
        CHECK((hamming_error(a, b) == 0.0) == (a == b));
        CHECK(hamming_error(a, c) <= hamming_error(a, b) + hamming_error(b, c) + 1e-15);
        CHECK(hamming_error(a, a) == 0.0);
    }
}

TEST_CASE("rmse examples") {
    Eigen::VectorXd truth = Eigen::VectorXd::Zero(9), est = Eigen::VectorXd::Zero(9);
    est[4] = 0.3;
    CHECK_THAT(rmse_theta({truth}, {est}), WithinAbs(0.1, 1e-15));
    CHECK(rmse_theta({truth}, {truth}) == 0.0);
    CHECK_THROWS_AS(rmse_theta({truth}, {Eigen::VectorXd::Zero(3)}), ValidationError);
}

TEST_CASE("rmse is invariant to a shared column permutation") {
    Rng rng = make_stream(6, 1);
    std::vector<Eigen::VectorXd> a, b;
    for (int i = 0; i < 3; ++i) {
        a.emplace_back(11);
        b.emplace_back(11);
        for (int c = 0; c < 11; ++c) {
            a.back()[c] = standard_normal(rng);
            b.back()[c] = standard_normal(rng);
        }
    }
    Eigen::PermutationMatrix<Eigen::Dynamic> p(11);
    p.setIdentity();
    std::swap(p.indices()[0], p.indices()[7]);
    std::swap(p.indices()[3], p.indices()[10]);
    std::vector<Eigen::VectorXd> ap, bp;
    for (int i = 0; i < 3; ++i) {
        ap.push_back(p * a[static_cast<std::size_t>(i)]);
        bp.push_back(p * b[static_cast<std::size_t>(i)]);
    }
    CHECK_THAT(rmse_theta(ap, bp), WithinAbs(rmse_theta(a, b), 1e-14));
}

TEST_CASE("pad then mask is idempotent") {
    const std::vector<int> active{0, 3, 5};
    Eigen::VectorXd v(3);
    v << 1.5, -0.2, 0.7;
    const auto padded = pad(active, v, 8);
    std::vector<std::uint8_t> bits(8, 0);
    for (int c : active) bits[static_cast<std::size_t>(c)] = 1;
    const auto once = mask(padded, bits);
    CHECK(once == padded);
    CHECK(mask(once, bits) == once);
    CHECK(padded[1] == 0.0);
    CHECK(padded[3] == -0.2);
    CHECK_THROWS_AS(pad(std::vector<int>{9}, Eigen::VectorXd::Ones(1), 8), ValidationError);
}

TEST_CASE("truth expansion for configuration 1") {
    const double k = 0.5, a = 1.0;
    CHECK_THAT(k * std::cos(a), WithinAbs(0.2702, 1e-4));
    CHECK_THAT(k * std::sin(a), WithinAbs(0.4207, 1e-4));
    const auto e = paper_configuration(1);
    const auto dicts = build_dictionaries(3, 3, 3);
    const auto th = truth_coefficients(e.truth, dicts[1]);
    CHECK_THAT(th[1], WithinAbs(k * std::cos(a), 1e-15));
    CHECK_THAT(th[2], WithinAbs(k * std::sin(a), 1e-15));
}

TEST_CASE("metrics vanish for the exact estimate") {
    const auto e = paper_configuration(1);
    const auto dicts = build_dictionaries(3, 3, 3);
    const auto layout = make_layout(dicts);
    PointEstimate pe;
    pe.structure = truth_structure(e.truth, dicts);
    for (int i = 0; i < 3; ++i) {
        pe.columns.push_back(effective_indicators(pe.structure, layout, i));
        pe.theta_hat.push_back(truth_coefficients(e.truth, dicts[static_cast<std::size_t>(i)]));
    }
    auto mv = evaluate_metrics(e.truth, dicts, layout, pe);
    CHECK(mv.e_c == 0.0);
    CHECK(mv.e_c_edges == 0.0);
    CHECK(mv.e_theta == 0.0);

    // one missing edge on node 2 costs its two columns out of 3 x 31
    pe.structure.edges[1][0] = 0;
    pe.columns[1] = effective_indicators(pe.structure, layout, 1);
    pe.theta_hat[1][1] = pe.theta_hat[1][2] = 0.0;
    mv = evaluate_metrics(e.truth, dicts, layout, pe);
    CHECK_THAT(mv.e_c, WithinAbs(2.0 / 93.0, 1e-15));
    CHECK_THAT(mv.e_c_edges, WithinAbs(1.0 / 15.0, 1e-15));
    CHECK_THAT(mv.e_theta, WithinAbs(std::sqrt(0.25 / 93.0), 1e-12));

    // the intrinsic frequency enters the coefficient error
    pe = {};
    pe.structure = truth_structure(e.truth, dicts);
    for (int i = 0; i < 3; ++i) {
        pe.columns.push_back(effective_indicators(pe.structure, layout, i));
        pe.theta_hat.push_back(truth_coefficients(e.truth, dicts[static_cast<std::size_t>(i)]));
    }
    pe.theta_hat[0][0] += 0.3;
    CHECK_THAT(evaluate_metrics(e.truth, dicts, layout, pe).e_theta, WithinAbs(0.3 / std::sqrt(93.0), 1e-12));
}

TEST_CASE("mean and standard error") {
    const auto one = mean_se(std::vector<double>{0.4});
    CHECK(one.mean == 0.4);
    CHECK(one.se == 0.0);
    CHECK(one.single);
    const auto many = mean_se(std::vector<double>{1.0, 2.0, 3.0, 4.0});
    CHECK(many.mean == 2.5);
    CHECK_THAT(many.se, WithinAbs(std::sqrt(5.0 / 3.0) / 2.0, 1e-15));
    CHECK_FALSE(many.single);
    CHECK(std::isnan(mean_se(std::vector<double>{}).mean));
}

TEST_CASE("point estimate on an unlocked two-node network") {
    // frequency gap 1.5 against K = 0.5: the phase difference keeps winding
    NetworkGroundTruth truth;
    truth.n_nodes = 2;
    truth.omega = {0.5, 2.0};
    truth.pairwise = {{1, 0, 1, 0.5, 1.0}};
    SimConfig sim;
    sim.n_steps = 400;
    sim.sigma_d = 0.1;
    sim.x0 = {0.0, 1.0};
    sim.seed = 3;
    const auto traj = simulate_network(truth, sim);
    InferenceSettings s;
    s.priors.l2_max = 1;
    s.priors.l3_max = 1;
    s.replicas = 6;
    s.eta = 1.5;
    s.sampler.n_sweeps = 3000;
    s.sampler.burn_in = 1000;
    s.sampler.thinning = 5;
    s.sampler.seed = 9;
    const auto r = infer_network(traj, s);
    const auto& pe = r.estimate;
    CHECK(pe.structure.edges[1][0] == 1);
    CHECK(pe.structure.edges[0][0] == 0);
    CHECK(pe.structure.gates[0] == 1);
    CHECK(pe.structure.gates[1] == 1);
    for (int i = 0; i < 2; ++i) {
        const auto& th = pe.theta_hat[static_cast<std::size_t>(i)];
        for (int c = 0; c < 3; ++c)
            if (!pe.columns[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]) CHECK(th[c] == 0.0);
    }
    CHECK_THAT(pe.theta_hat[1][0], WithinAbs(2.0, 0.05));
    CHECK_THAT(pe.theta_hat[1][1], WithinAbs(0.5 * std::cos(1.0), 0.05));
    CHECK_THAT(pe.theta_hat[1][2], WithinAbs(0.5 * std::sin(1.0), 0.05));
    CHECK_THAT(pe.sigma_hat[1], WithinAbs(0.1 * std::sqrt(0.1), 0.005));
    CHECK(evaluate_metrics(truth, r.dicts, r.layout, pe).e_c == 0.0);
}
