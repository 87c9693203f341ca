#pragma once

// Two metronomes on a movable base: simulation, phase extraction and the
// phase-difference regression used for the mismatched-model study.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssdyn/dictionary.hpp"
#include "ssdyn/error.hpp"
#include "ssdyn/rng.hpp"

namespace ssdyn {

struct MetronomeSpec {
    double eps = 0.327;
    double mu = 0.55;
    double beta_damp = 1.36;
    double a = 11.284;
    double b = 4.743;
    double sigma = 0.0674;
    double dt_int = 0.001;
    double dt_sample = 0.1;
    double t_end = 1000.0;
    std::array<double, 2> x0{1.0, 0.8};
    std::array<double, 2> v0{0.0, 0.0};
    std::uint64_t seed = 0;

    long steps_per_sample() const { return std::lround(dt_sample / dt_int); }
    long n_samples() const { return std::lround(t_end / dt_sample); }

    void validate() const {
        require(eps >= 0.0, "metronome: eps must be >= 0");
        require(dt_int > 0.0 && dt_sample > 0.0 && t_end > 0.0, "metronome: dt_int, dt_sample, t_end must be > 0");
        require(sigma >= 0.0, "metronome: sigma must be >= 0");
        require(dt_sample >= dt_int, "metronome: dt_sample must be >= dt_int");
        require(std::abs(steps_per_sample() * dt_int - dt_sample) < 1e-9 * dt_sample,
                "metronome: dt_sample must be an integer multiple of dt_int");
        require(std::abs(n_samples() * dt_sample - t_end) < 1e-9 * t_end,
                "metronome: t_end must be an integer multiple of dt_sample");
    }
};

/// Escapement drive a x^3 - b x^5 while x v > 0, else 0.
inline double escapement(double x, double v, double a, double b) {
    if (x * v > 0.0) {
        const double x3 = x * x * x;
        return a * x3 - b * x3 * x * x;
    }
    return 0.0;
}

struct MetronomeStates {
    std::vector<double> t;
    std::array<std::vector<double>, 2> x;
    std::array<std::vector<double>, 2> v;

    long size() const { return static_cast<long>(t.size()); }
};

inline std::array<double, 2> metronome_acceleration(const MetronomeSpec& s, const std::array<double, 2>& x,
                                                    const std::array<double, 2>& v) {
    const double g1 = escapement(x[0], v[0], s.a, s.b);
    const double g2 = escapement(x[1], v[1], s.a, s.b);
    const double common = s.eps * s.eps * s.mu * (-s.beta_damp * (v[0] + v[1]) + g1 + g2);
    const double base = s.mu * (x[0] + x[1]);
    return {-x[0] - s.eps * (base + s.beta_damp * v[0] - g1) + common,
            -x[1] - s.eps * (base + s.beta_damp * v[1] - g2) + common};
}

/// Semi-implicit Euler-Maruyama at dt_int (velocity first, then position with
/// the new velocity), noise sigma sqrt(dt_int) on the velocities, stored every
/// dt_sample.
inline MetronomeStates simulate_metronomes(const MetronomeSpec& spec) {
    spec.validate();
    const long every = spec.steps_per_sample();
    const long n_out = spec.n_samples();
    const double h = spec.dt_int;
    const double kick = spec.sigma * std::sqrt(h);
    std::array<Rng, 2> rng{make_stream(spec.seed, 0), make_stream(spec.seed, 1)};

    MetronomeStates out;
    out.t.reserve(static_cast<std::size_t>(n_out + 1));
    for (int k = 0; k < 2; ++k) {
        out.x[k].reserve(static_cast<std::size_t>(n_out + 1));
        out.v[k].reserve(static_cast<std::size_t>(n_out + 1));
    }
    auto x = spec.x0;
    auto v = spec.v0;
    auto store = [&](long m) {
        out.t.push_back(static_cast<double>(m) * spec.dt_sample);
        for (int k = 0; k < 2; ++k) {
            out.x[k].push_back(x[k]);
            out.v[k].push_back(v[k]);
        }
    };
    store(0);
    for (long m = 1; m <= n_out; ++m) {
        for (long s = 0; s < every; ++s) {
            const auto acc = metronome_acceleration(spec, x, v);
            for (int k = 0; k < 2; ++k) {
                v[k] += h * acc[k];
                if (kick > 0.0) v[k] += kick * standard_normal(rng[static_cast<std::size_t>(k)]);
                x[k] += h * v[k];
            }
            if (!std::isfinite(x[0] + x[1] + v[0] + v[1]))
                throw IntegrationError("metronome state diverged", (m - 1) * every + s + 1);
        }
        store(m);
    }
    return out;
}

struct PhaseSeries {
    std::vector<double> t;
    std::array<std::vector<double>, 2> theta;
    std::vector<double> psi;
    double dt = 0.0;

    long size() const { return static_cast<long>(psi.size()); }
};

/// Adds multiples of 2 pi so consecutive values never jump by more than pi.
inline std::vector<double> unwrap(const std::vector<double>& raw) {
    std::vector<double> out(raw.size());
    double offset = 0.0;
    for (std::size_t m = 0; m < raw.size(); ++m) {
        if (m > 0) {
            const double jump = raw[m] - raw[m - 1];
            if (jump > std::numbers::pi) offset -= 2.0 * std::numbers::pi * std::round(jump / (2.0 * std::numbers::pi));
            else if (jump < -std::numbers::pi) offset += 2.0 * std::numbers::pi * std::round(-jump / (2.0 * std::numbers::pi));
        }
        out[m] = raw[m] + offset;
    }
    return out;
}

/// theta = arg(x - i v) = atan2(-v, x), unwrapped; psi = theta_1 - theta_2.
inline PhaseSeries extract_phase(const MetronomeStates& s, double collapse_tol = 1e-9) {
    require(s.size() >= 1, "extract_phase: empty state series");
    PhaseSeries ps;
    ps.t = s.t;
    ps.dt = s.size() >= 2 ? s.t[1] - s.t[0] : 0.0;
    for (int k = 0; k < 2; ++k) {
        std::vector<double> raw(static_cast<std::size_t>(s.size()));
        for (long m = 0; m < s.size(); ++m) {
            const auto um = static_cast<std::size_t>(m);
            const double x = s.x[k][um];
            const double v = s.v[k][um];
            if (std::abs(x) < collapse_tol && std::abs(v) < collapse_tol)
                throw NumericalError("extract_phase: amplitude collapse of oscillator " + std::to_string(k + 1) +
                                     " at t=" + std::to_string(s.t[um]));
            raw[um] = std::atan2(-v, x);
        }
        ps.theta[static_cast<std::size_t>(k)] = unwrap(raw);
    }
    ps.psi.resize(ps.theta[0].size());
    for (std::size_t m = 0; m < ps.psi.size(); ++m) ps.psi[m] = ps.theta[0][m] - ps.theta[1][m];
    return ps;
}

/// First samples with t <= t_max.
inline PhaseSeries window(const PhaseSeries& ps, double t_max) {
    require(!ps.t.empty() && t_max <= ps.t.back() + 1e-9,
            "window: [0, " + std::to_string(t_max) + "] is longer than the simulation");
    PhaseSeries w;
    w.dt = ps.dt;
    for (std::size_t m = 0; m < ps.t.size() && ps.t[m] <= t_max + 1e-9; ++m) {
        w.t.push_back(ps.t[m]);
        for (int k = 0; k < 2; ++k) w.theta[static_cast<std::size_t>(k)].push_back(ps.theta[static_cast<std::size_t>(k)][m]);
        w.psi.push_back(ps.psi[m]);
    }
    return w;
}

struct PsiRegression {
    Eigen::VectorXd y;   // psi_{m+1} - psi_m
    Eigen::MatrixXd g;   // columns sin(psi), cos(psi), sin(2 psi), ...
    int l_max = 1;
    std::vector<std::string> labels;
};

inline std::string psi_column_label(int l, Trig t) {
    return std::string(to_string(t)) + "(" + (l == 1 ? std::string() : std::to_string(l)) + "psi)";
}

inline PsiRegression build_psi_regression(const PhaseSeries& ps, int l_max) {
    require(ps.size() >= 2, "psi regression: need at least 2 samples");
    require(l_max >= 1, "psi regression: l_max must be >= 1");
    const long m_rows = ps.size() - 1;
    PsiRegression r;
    r.l_max = l_max;
    r.y.resize(m_rows);
    r.g.resize(m_rows, 2 * l_max);
    for (int l = 1; l <= l_max; ++l)
        for (Trig t : {Trig::Sin, Trig::Cos}) r.labels.push_back(psi_column_label(l, t));
    for (long m = 0; m < m_rows; ++m) {
        const double p = ps.psi[static_cast<std::size_t>(m)];
        r.y[m] = ps.psi[static_cast<std::size_t>(m + 1)] - p;
        for (int l = 1; l <= l_max; ++l) {
            r.g(m, 2 * (l - 1)) = std::sin(l * p);
            r.g(m, 2 * (l - 1) + 1) = std::cos(l * p);
        }
    }
    return r;
}

/// One edge bit per column; no gates, no harmonic classes, no intrinsic column.
inline ModelLayout psi_layout(int l_max) {
    ModelLayout layout;
    std::vector<ColumnGate> cols;
    for (int c = 0; c < 2 * l_max; ++c) cols.push_back({c, -1, -1, c / 2 + 1});
    layout.columns.push_back(std::move(cols));
    layout.edge_count.push_back(2 * l_max);
    layout.gate_count = 0;
    layout.order_max = {l_max, 1};
    layout.order_used = {false, false};
    return layout;
}

/// dpsi/dt = sum_l s_l sin(l psi) + c_l cos(l psi); coefficient index l-1.
struct TrigField {
    std::vector<double> sin_coef;
    std::vector<double> cos_coef;

    double operator()(double psi) const {
        double f = 0.0;
        for (std::size_t l = 0; l < sin_coef.size(); ++l) f += sin_coef[l] * std::sin(static_cast<double>(l + 1) * psi);
        for (std::size_t l = 0; l < cos_coef.size(); ++l) f += cos_coef[l] * std::cos(static_cast<double>(l + 1) * psi);
        return f;
    }

    bool is_zero() const {
        for (double c : sin_coef)
            if (c != 0.0) return false;
        for (double c : cos_coef)
            if (c != 0.0) return false;
        return true;
    }

    /// From a coefficient vector in build_psi_regression column order.
    static TrigField from_columns(const Eigen::VectorXd& theta) {
        TrigField f;
        for (Eigen::Index c = 0; c + 1 < theta.size(); c += 2) {
            f.sin_coef.push_back(theta[c]);
            f.cos_coef.push_back(theta[c + 1]);
        }
        return f;
    }
};

struct FixedPoint {
    double psi = 0.0;
    bool stable = false;
};

/// Zero crossings on [0, 2 pi) from a 4096-point grid refined by bisection to
/// 1e-10; positive-to-negative crossings are stable. A zero field has none.
inline std::vector<FixedPoint> fixed_points(const TrigField& field, int grid = 4096, double tol = 1e-10) {
    std::vector<FixedPoint> out;
    if (field.is_zero()) return out;
    const double two_pi = 2.0 * std::numbers::pi;
    const double h = two_pi / grid;
    for (int k = 0; k < grid; ++k) {
        const double a = k * h;
        const double b = (k + 1) * h;
        const double fa = field(a);
        const double fb = field(b);
        if (fa == 0.0) {
            const double left = field(a - 0.5 * h);
            const double right = field(a + 0.5 * h);
            if ((left > 0.0) != (right > 0.0) && left != 0.0 && right != 0.0) out.push_back({a, left > 0.0});
            continue;
        }
        if (fb == 0.0 || (fa > 0.0) == (fb > 0.0)) continue;
        double lo = a, hi = b;
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            if ((field(mid) > 0.0) == (fa > 0.0)) lo = mid;
            else hi = mid;
        }
        out.push_back({0.5 * (lo + hi), fa > 0.0});
    }
    return out;
}

}  // namespace ssdyn
