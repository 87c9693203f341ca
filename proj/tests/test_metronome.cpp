#include <catch_amalgamated.hpp>

#include <numbers>

#include "ssdyn/metronome.hpp"

using namespace ssdyn;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = std::numbers::pi;

bool has_root(const std::vector<FixedPoint>& fp, double psi, bool stable) {
    for (const auto& p : fp)
        if (std::abs(p.psi - psi) < 1e-8 && p.stable == stable) return true;
    return false;
}

MetronomeStates harmonic_samples(double dt, long n, double phase0) {
    MetronomeStates s;
    for (long m = 0; m <= n; ++m) {
        const double t = m * dt;
        s.t.push_back(t);
        for (int k = 0; k < 2; ++k) {
            s.x[k].push_back(std::cos(t + phase0));
            s.v[k].push_back(-std::sin(t + phase0));
        }
    }
    return s;
}

}  // namespace

TEST_CASE("escapement examples") {
    CHECK(escapement(1.0, 1.0, 1.0, 0.0) == 1.0);
    CHECK(escapement(1.0, -1.0, 1.0, 0.0) == 0.0);
    CHECK(escapement(0.5, 1.0, 2.0, 1.0) == 0.21875);
    CHECK(escapement(0.7, 0.0, 3.0, 1.0) == 0.0);
    CHECK(escapement(0.0, 0.7, 3.0, 1.0) == 0.0);
    CHECK(escapement(-0.5, -1.0, 2.0, 1.0) == -0.21875);
}

TEST_CASE("uncoupled limit is the harmonic oscillator") {
    MetronomeSpec s;
    s.eps = 0.0;
    s.sigma = 0.0;
    s.x0 = {1.0, 0.0};
    s.v0 = {0.0, 0.0};
    s.t_end = 100.0;
    const auto st = simulate_metronomes(s);
    double err = 0.0;
    for (long m = 0; m < st.size(); ++m) err = std::max(err, std::abs(st.x[0][static_cast<std::size_t>(m)] - std::cos(st.t[static_cast<std::size_t>(m)])));
    CHECK(err < 1e-2);  // semi-implicit Euler shadows the orbit to O(dt)

    s.x0 = {1.0, 0.5};
    const auto ps = extract_phase(simulate_metronomes(s));
    const double slope = (ps.theta[0].back() - ps.theta[0].front()) / s.t_end;
    CHECK_THAT(slope, WithinAbs(1.0, 1e-4));
}

TEST_CASE("symmetric initial conditions stay symmetric") {
    MetronomeSpec s;
    s.sigma = 0.0;
    s.x0 = {0.9, 0.9};
    s.v0 = {0.0, 0.0};
    s.t_end = 50.0;
    const auto st = simulate_metronomes(s);
    CHECK(st.x[0] == st.x[1]);
    CHECK(st.v[0] == st.v[1]);
    const auto ps = extract_phase(st);
    for (double p : ps.psi) CHECK(p == 0.0);
}

TEST_CASE("noisy runs are reproducible") {
    MetronomeSpec s;
    s.t_end = 20.0;
    s.seed = 5;
    const auto a = simulate_metronomes(s);
    const auto b = simulate_metronomes(s);
    CHECK(a.x[0] == b.x[0]);
    CHECK(a.v[1] == b.v[1]);
}

TEST_CASE("phase convention and unwrapping") {
    MetronomeStates one;
    one.t = {0.0};
    one.x = {std::vector<double>{1.0}, std::vector<double>{1.0}};
    one.v = {std::vector<double>{0.0}, std::vector<double>{0.0}};
    CHECK(extract_phase(one).theta[0][0] == 0.0);

    const double dt = 0.01;
    const auto ps = extract_phase(harmonic_samples(dt, 20000, 0.3));
    for (std::size_t m = 1; m < ps.t.size(); ++m) {
        CHECK(std::abs(ps.theta[0][m] - ps.theta[0][m - 1]) < kPi);
        CHECK_THAT(ps.theta[0][m] - ps.theta[0][0], WithinAbs(ps.t[m], 1e-6 * std::max(1.0, ps.t[m])));
    }
    for (double p : ps.psi) CHECK(p == 0.0);

    std::vector<double> raw;
    for (int m = 0; m < 300; ++m) raw.push_back(std::remainder(0.1 * m, 2 * kPi));
    auto shifted = raw;
    for (auto& v : shifted) v += 2 * kPi;
    const auto u1 = unwrap(raw), u2 = unwrap(shifted);
    for (std::size_t m = 0; m < raw.size(); ++m) {
        CHECK_THAT(u1[m], WithinAbs(0.1 * static_cast<double>(m), 1e-12));
        CHECK_THAT(u2[m] - u1[m], WithinAbs(2 * kPi, 1e-12));
    }
}

TEST_CASE("amplitude collapse is reported with its time") {
    MetronomeStates s;
    s.t = {0.0, 0.1};
    s.x = {std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 1.0}};
    s.v = {std::vector<double>{0.0, 0.0}, std::vector<double>{0.0, 0.0}};
    CHECK_THROWS_AS(extract_phase(s), NumericalError);
    try {
        extract_phase(s);
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("t=0.1") != std::string::npos);
    }
}

TEST_CASE("psi regression columns") {
    PhaseSeries ps;
    ps.dt = 0.1;
    for (int m = 0; m < 20; ++m) {
        ps.t.push_back(0.1 * m);
        ps.psi.push_back(0.0);
    }
    auto r = build_psi_regression(ps, 3);
    REQUIRE(r.g.cols() == 6);
    CHECK(r.labels == std::vector<std::string>{"sin(psi)", "cos(psi)", "sin(2psi)", "cos(2psi)", "sin(3psi)", "cos(3psi)"});
    for (Eigen::Index m = 0; m < r.g.rows(); ++m)
        for (int l = 0; l < 3; ++l) {
            CHECK(r.g(m, 2 * l) == 0.0);
            CHECK(r.g(m, 2 * l + 1) == 1.0);
        }
    CHECK(r.y.isZero());

    Rng rng = make_stream(3, 0);
    PhaseSeries a, b;
    for (int m = 0; m < 200; ++m) {
        const double p = uniform(rng, -10.0, 10.0);
        a.psi.push_back(p);
        b.psi.push_back(p + 2 * kPi);
    }
    const auto ra = build_psi_regression(a, 3), rb = build_psi_regression(b, 3);
    CHECK((ra.g - rb.g).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ra.g.cwiseAbs().maxCoeff() <= 1.0);

    const auto layout = psi_layout(3);
    CHECK(layout.n_columns(0) == 6);
    CHECK(layout.edge_count[0] == 6);
    CHECK(layout.gate_count == 0);
}

TEST_CASE("fixed points of textbook fields") {
    TrigField f1{{-1.0}, {0.0}};
    auto fp = fixed_points(f1);
    REQUIRE(fp.size() == 2);
    CHECK(has_root(fp, 0.0, true));
    CHECK(has_root(fp, kPi, false));

    TrigField f2{{0.0, -0.7}, {0.0, 0.0}};
    fp = fixed_points(f2);
    REQUIRE(fp.size() == 4);
    CHECK(has_root(fp, 0.0, true));
    CHECK(has_root(fp, kPi, true));
    CHECK(has_root(fp, kPi / 2, false));
    CHECK(has_root(fp, 3 * kPi / 2, false));

    TrigField f3{{0.0}, {1.0}};
    fp = fixed_points(f3);
    REQUIRE(fp.size() == 2);
    CHECK(has_root(fp, kPi / 2, true));
    CHECK(has_root(fp, 3 * kPi / 2, false));

    CHECK(fixed_points(TrigField{{0.0}, {0.0}}).empty());
}

TEST_CASE("fixed point count is even") {
    Rng rng = make_stream(4, 0);
    for (int trial = 0; trial < 200; ++trial) {
        TrigField f;
        for (int l = 0; l < 3; ++l) {
            f.sin_coef.push_back(standard_normal(rng));
            f.cos_coef.push_back(standard_normal(rng));
        }
        const auto fp = fixed_points(f);
        CHECK(fp.size() % 2 == 0);
        long stable = 0;
        for (const auto& p : fp) stable += p.stable;
        CHECK(2 * stable == static_cast<long>(fp.size()));
    }
}

TEST_CASE("windows and validation") {
    MetronomeSpec s;
    s.t_end = 10.0;
    s.sigma = 0.0;
    const auto ps = extract_phase(simulate_metronomes(s));
    CHECK(ps.size() == 101);
    CHECK(window(ps, 5.0).size() == 51);
    CHECK_THROWS_AS(window(ps, 20.0), ValidationError);
    s.dt_sample = 0.1005;
    CHECK_THROWS_AS(simulate_metronomes(s), ValidationError);
}
