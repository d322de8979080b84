#include "srcsd/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "srcsd/time_sim.hpp"

namespace srcsd {

namespace {

constexpr double kPi = std::numbers::pi;

struct Scales {
    double current;  // Vin/Zc
    double voltage;  // Vin
    double Ts;
};

Scales make_scales(const ConverterParams& p, const DerivedParams& d) {
    return Scales{p.Vin / d.Zc, p.Vin, d.Ts};
}

// Unknown vector u = [iL/sI, vc/sV, vo/(N sV), T1/Ts, T3/Ts].
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

Vec5 pack(const ConverterParams& p, const Scales& s, const StateVector& x,
          const SubintervalTimes& t) {
    Vec5 u;
    u << x.iL / s.current, x.vc / s.voltage, x.vo / (p.N * s.voltage), t.T1 / s.Ts,
        t.T3 / s.Ts;
    return u;
}

void unpack(const ConverterParams& p, const Scales& s, const Vec5& u, StateVector& x,
            SubintervalTimes& t) {
    x.iL = u[0] * s.current;
    x.vc = u[1] * s.voltage;
    x.vo = u[2] * p.N * s.voltage;
    t.T1 = u[3] * s.Ts;
    t.T3 = u[4] * s.Ts;
    t.Ts = s.Ts;
}

// Keep the crossing times strictly inside their half periods.
void project(Vec5& u) {
    const double eps = 1e-9;
    u[3] = std::clamp(u[3], eps, 0.5 - eps);
    u[4] = std::clamp(u[4], 0.5 + eps, 1.0 - eps);
}

// Normalized residual: periodicity scaled per state, crossings by Vin/Zc.
Vec5 normalized_residual(const ConverterParams& p, const Scales& s, const Vec5& u) {
    StateVector x;
    SubintervalTimes t;
    unpack(p, s, u, x, t);
    const Residuals r = residuals(p, x, t);
    Vec5 out;
    out << r.periodicity[0] / s.current, r.periodicity[1] / s.voltage,
        r.periodicity[2] / s.voltage, r.crossing_t1 / s.current,
        r.crossing_t3 / s.current;
    return out;
}

Mat5 fd_jacobian(const ConverterParams& p, const Scales& s, const Vec5& u) {
    Mat5 J;
    for (int i = 0; i < 5; ++i) {
        const double h = 1e-7 * std::max(1.0, std::abs(u[i]));
        Vec5 up = u, um = u;
        up[i] += h;
        um[i] -= h;
        project(up);
        project(um);
        const Vec5 rp = normalized_residual(p, s, up);
        const Vec5 rm = normalized_residual(p, s, um);
        J.col(i) = (rp - rm) / (up[i] - um[i]);
    }
    return J;
}

struct NewtonResult {
    Vec5 u;
    double norm;
    int iterations;
    bool converged;
};

NewtonResult newton(const ConverterParams& p, const Scales& s, Vec5 u,
                    const SolveOptions& opts) {
    project(u);
    Vec5 r = normalized_residual(p, s, u);
    double norm = r.lpNorm<Eigen::Infinity>();
    int iter = 0;
    for (; iter < opts.max_iterations && norm >= 0.1 * opts.tolerance; ++iter) {
        const Mat5 J = fd_jacobian(p, s, u);
        const Vec5 du = J.fullPivLu().solve(-r);
        double alpha = 1.0;
        bool improved = false;
        for (int back = 0; back < 12; ++back) {
            Vec5 u_try = u + alpha * du;
            project(u_try);
            const Vec5 r_try = normalized_residual(p, s, u_try);
            const double norm_try = r_try.lpNorm<Eigen::Infinity>();
            if (norm_try < norm) {
                u = u_try;
                r = r_try;
                norm = norm_try;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!improved) break;
    }
    return NewtonResult{u, norm, iter, norm < opts.tolerance};
}

}  // namespace

double crossing_residual_t1(const ConverterParams& p, const StateVector& x,
                            const SubintervalTimes& t) {
    const DerivedParams d = derive_params(p);
    const double ang = d.omega_r * t.T1;
    return x.iL * std::cos(ang) -
           (x.vc - p.Vin - x.vo / p.N) / d.Zc * std::sin(ang);
}

double crossing_residual_t3(const ConverterParams& p, const StateVector& x,
                            const SubintervalTimes& t) {
    const DerivedParams d = derive_params(p);
    const double wr = d.omega_r;
    return x.iL * std::cos(wr * t.T3) -
           (x.vc - p.Vin - x.vo / p.N) / d.Zc * std::sin(wr * t.T3) -
           2.0 * x.vo / (p.N * d.Zc) * std::sin(wr * (t.T3 - t.T1)) -
           2.0 * p.Vin / d.Zc * std::sin(wr * (t.T3 - 0.5 * t.Ts));
}

Residuals residuals(const ConverterParams& p, const StateVector& x,
                    const SubintervalTimes& t) {
    validate(t);
    const DiscreteStateSpace map = assemble_period_map(p, t);
    const Eigen::Vector3d xv{x.iL, x.vc, x.vo};
    Residuals r;
    r.periodicity = map.A * xv + map.B * p.Vin - xv;
    r.crossing_t1 = crossing_residual_t1(p, x, t);
    r.crossing_t3 = crossing_residual_t3(p, x, t);
    return r;
}

SteadyStateGuess initial_guess(const ConverterParams& p) {
    const DerivedParams d = derive_params(p);
    const double detune = d.Qe * (d.F - 1.0 / d.F);
    const double phi = std::atan(detune);
    const double gain_fha = 1.0 / std::sqrt(1.0 + detune * detune);
    const double ipk = (4.0 * p.Vin / kPi) / (d.Rac * std::sqrt(1.0 + detune * detune));
    const double ws = 2.0 * kPi * p.fs;

    SteadyStateGuess g;
    g.state.vo = p.N * p.Vin * gain_fha;
    g.state.iL = -ipk * std::sin(phi);
    g.state.vc = -(ipk / (ws * p.Cr)) * std::cos(phi);
    const double T1 = std::clamp(phi / (2.0 * kPi) * d.Ts, 1e-6 * d.Ts, 0.49 * d.Ts);
    g.times = SubintervalTimes{T1, 0.5 * d.Ts + T1, d.Ts};
    return g;
}

OperatingPoint solve_cyclic_steady_state(const ConverterParams& p,
                                         std::optional<SteadyStateGuess> init,
                                         const SolveOptions& opts) {
    validate(p);
    const DerivedParams d = derive_params(p);
    const Scales s = make_scales(p, d);
    const SteadyStateGuess guess = init.value_or(initial_guess(p));

    NewtonResult res = newton(p, s, pack(p, s, guess.state, guess.times), opts);

    if (!res.converged && opts.march_fallback) {
        // Time marching is globally convergent for this stable converter;
        // restart Newton from the marched state. The march starts from the
        // fundamental-harmonic estimate, which is always physical.
        try {
            PeriodStep step = march(p, initial_guess(p).state, opts.fallback_periods);
            SubintervalTimes marched{step.T1, step.T3, d.Ts};
            validate(marched);
            const int prev_iters = res.iterations;
            res = newton(p, s, pack(p, s, step.state, marched), opts);
            res.iterations += prev_iters;
        } catch (const SimModeError& e) {
            throw SolveError(std::string("marching fallback left the expected "
                                         "switching pattern: ") +
                                 e.what(),
                             res.norm);
        }
    }
    if (!res.converged) {
        throw SolveError("steady state did not converge: residual " +
                             std::to_string(res.norm),
                         res.norm);
    }

    OperatingPoint op;
    unpack(p, s, res.u, op.state, op.times);
    op.residual_norm = res.norm;
    op.dc_gain = op.state.vo / p.Vin;
    op.iterations = res.iterations;
    return op;
}

std::vector<WaveformSample> sample_period_waveform(const ConverterParams& p,
                                                   const OperatingPoint& op,
                                                   int points) {
    if (points < 1) throw std::invalid_argument("need at least one sample point");
    const SubintervalTimes& t = op.times;
    const double boundaries[5] = {0.0, t.T1, 0.5 * t.Ts, t.T3, t.Ts};
    const Config cfgs[4] = {Config::k1, Config::k2, Config::k3, Config::k4};

    // State at each interval boundary, advanced in closed form.
    TankState tank_at[5];
    double vo_at[5];
    tank_at[0] = TankState{op.state.iL, op.state.vc};
    vo_at[0] = op.state.vo;
    for (int i = 0; i < 4; ++i) {
        const double dt = boundaries[i + 1] - boundaries[i];
        vo_at[i + 1] =
            propagate_output(vo_at[i], tank_at[i], p.Vin, op.state.vo, cfgs[i], dt, p);
        tank_at[i + 1] = propagate_tank(tank_at[i], p.Vin, op.state.vo, cfgs[i], dt, p);
    }

    std::vector<WaveformSample> out;
    out.reserve(points);
    for (int k = 0; k < points; ++k) {
        const double time = t.Ts * k / points;
        int i = 0;
        while (i < 3 && time >= boundaries[i + 1]) ++i;
        const double dt = time - boundaries[i];
        const TankState tank =
            propagate_tank(tank_at[i], p.Vin, op.state.vo, cfgs[i], dt, p);
        const double vo =
            propagate_output(vo_at[i], tank_at[i], p.Vin, op.state.vo, cfgs[i], dt, p);
        out.push_back(WaveformSample{time, tank.iL, tank.vc, vo});
    }
    return out;
}

}  // namespace srcsd
