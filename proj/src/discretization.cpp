#include "srcsd/discretization.hpp"

#include <cmath>
#include <stdexcept>

namespace srcsd {

double drive_voltage(Config c, double vin, double vo, double N) {
    switch (c) {
        case Config::k1: return vin + vo / N;
        case Config::k2: return vin - vo / N;
        case Config::k3: return -vin - vo / N;
        case Config::k4: return -vin + vo / N;
    }
    throw std::invalid_argument("invalid configuration");
}

int rectifier_sign(Config c) {
    switch (c) {
        case Config::k1: return -1;
        case Config::k2: return +1;
        case Config::k3: return +1;
        case Config::k4: return -1;
    }
    throw std::invalid_argument("invalid configuration");
}

TankState propagate_tank(const TankState& s, double vin, double vo, Config c,
                         double dt, const ConverterParams& p) {
    if (dt < 0.0) throw std::invalid_argument("negative dt");
    const DerivedParams d = derive_params(p);
    const double veff = drive_voltage(c, vin, vo, p.N);
    const double ang = d.omega_r * dt;
    const double cs = std::cos(ang);
    const double sn = std::sin(ang);
    // Rotation of (iL, (vc - veff)/Zc) at rate omega_r.
    TankState out;
    out.iL = s.iL * cs - (s.vc - veff) / d.Zc * sn;
    out.vc = veff + (s.vc - veff) * cs + d.Zc * s.iL * sn;
    return out;
}

double propagate_output(double vo_filt, const TankState& tank_start, double vin,
                        double vo_const, Config c, double dt,
                        const ConverterParams& p) {
    if (dt < 0.0) throw std::invalid_argument("negative dt");
    const DerivedParams d = derive_params(p);
    const double lambda = filter_lambda(p);
    const double g2c = G2_const(d.omega_r, lambda);
    const double veff = drive_voltage(c, vin, vo_const, p.N);
    // iL(t) = a cos(wr t) + b sin(wr t) over the interval.
    const double a = tank_start.iL;
    const double b = -(tank_start.vc - veff) / d.Zc;
    const double decay = std::exp(-lambda * dt);
    const double sign = static_cast<double>(rectifier_sign(c));
    const double forced = (sign / (p.N * p.Co * g2c)) *
                          (a * (g1_prime(dt, d.omega_r, lambda) - lambda * decay) +
                           b * (g1(dt, d.omega_r, lambda) + d.omega_r * decay));
    return decay * vo_filt + forced;
}

StateVector propagate_period(const StateVector& x, double vin,
                             const SubintervalTimes& t, const ConverterParams& p) {
    validate(t);
    const double half = 0.5 * t.Ts;
    const double dts[4] = {t.T1, half - t.T1, t.T3 - half, t.Ts - t.T3};
    const Config cfgs[4] = {Config::k1, Config::k2, Config::k3, Config::k4};

    TankState tank{x.iL, x.vc};
    double vo = x.vo;
    for (int i = 0; i < 4; ++i) {
        vo = propagate_output(vo, tank, vin, x.vo, cfgs[i], dts[i], p);
        tank = propagate_tank(tank, vin, x.vo, cfgs[i], dts[i], p);
    }
    return StateVector{tank.iL, tank.vc, vo};
}

DiscreteStateSpace assemble_period_map(const ConverterParams& p,
                                       const SubintervalTimes& t) {
    validate(t);
    const DerivedParams d = derive_params(p);
    const double wr = d.omega_r;
    const double Zc = d.Zc;
    const double N = p.N;
    const double lambda = filter_lambda(p);
    const double g2c = G2_const(wr, lambda);
    const double Ts = t.Ts, T1 = t.T1, T3 = t.T3;

    auto S = [&](double u) { return std::sin(wr * u); };
    auto C = [&](double u) { return std::cos(wr * u); };
    // e^{-(Ts-u)/(RoCo)}: always in (0,1] for u in [0,Ts].
    auto E = [&](double u) { return std::exp(-lambda * (Ts - u)); };
    auto G1t = [&](double u) { return g1(u, wr, lambda); };
    auto G1pt = [&](double u) { return g1_prime(u, wr, lambda); };

    DiscreteStateSpace m;
    m.T1 = T1;
    m.T3 = T3;
    m.Ts = Ts;

    const double a11 = C(Ts);
    const double a12 = -S(Ts) / Zc;
    const double a21 = Zc * S(Ts);
    const double a22 = C(Ts);
    const double a13 = (S(Ts) + 2.0 * S(Ts - T3) - 2.0 * S(Ts - T1)) / (N * Zc);
    const double a23 = (1.0 - C(Ts) - 2.0 * C(Ts - T3) + 2.0 * C(Ts - T1)) / N;
    const double b11 = (S(Ts) - 2.0 * S(0.5 * Ts)) / Zc;
    const double b21 = 2.0 * C(0.5 * Ts) - C(Ts) - 1.0;

    // K = G1 with the e^{-Ts/(RoCo)} factor folded into E(.).
    const double K = -1.0 / (N * p.Co * g2c);

    const double a31 = K * (2.0 * E(T1) * G1pt(T1) - 2.0 * E(T3) * G1pt(T3) +
                            E(Ts) * G1pt(Ts) - lambda * E(0.0));
    const double a32 = (K / Zc) * (2.0 * E(T3) * G1t(T3) - 2.0 * E(T1) * G1t(T1) -
                                   E(Ts) * G1t(Ts) - wr * E(0.0));
    const double a33 =
        std::exp(-lambda * Ts) +
        (K / (N * Zc)) *
            (2.0 * E(T1) * G1t(T1) - 2.0 * E(T3) * G1t(T3) + E(Ts) * G1t(Ts) +
             wr * E(0.0) + 4.0 * E(T3) * G1t(T3 - T1) - 2.0 * E(Ts) * G1t(Ts - T1) +
             2.0 * wr * E(T1) + 2.0 * E(Ts) * G1t(Ts - T3) + 2.0 * wr * E(T3));
    const double b31 =
        (K / Zc) * (2.0 * E(T1) * G1t(T1) - 2.0 * E(T3) * G1t(T3) + E(Ts) * G1t(Ts) +
                    wr * E(0.0) + 4.0 * E(T3) * G1t(T3 - 0.5 * Ts) -
                    2.0 * E(Ts) * G1t(0.5 * Ts) + 2.0 * wr * E(0.5 * Ts));

    m.A << a11, a12, a13,
           a21, a22, a23,
           a31, a32, a33;
    m.B << b11, b21, b31;
    return m;
}

namespace {

// First zero of iL(t) = a cos(wr t) + b sin(wr t) on [0, span]. The span is
// under half a tank cycle, so the sign changes at most once; bisection is
// safe. Returns 0 when the entry value already has the exit polarity.
double first_crossing_sinusoid(double a, double b, double omega_r, double span,
                               double Ts, bool from_negative) {
    auto f = [&](double t) {
        return a * std::cos(omega_r * t) + b * std::sin(omega_r * t);
    };
    const double sign = from_negative ? 1.0 : -1.0;
    if (sign * a >= 0.0) return 0.0;
    if (sign * f(span) < 0.0) {
        throw SimModeError("no zero crossing found in half period");
    }
    double lo = 0.0, hi = span;
    const double width_tol = 1e-13 * Ts;
    for (int i = 0; i < 200 && (hi - lo) > width_tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (sign * f(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

PeriodStep step_period_model(const StateVector& x, double vin,
                             const ConverterParams& p) {
    const DerivedParams d = derive_params(p);
    const double half = 0.5 * d.Ts;

    const double v1 = drive_voltage(Config::k1, vin, x.vo, p.N);
    const double T1 = first_crossing_sinusoid(x.iL, -(x.vc - v1) / d.Zc, d.omega_r,
                                              half, d.Ts, true);

    TankState tank{x.iL, x.vc};
    double vo = x.vo;
    vo = propagate_output(vo, tank, vin, x.vo, Config::k1, T1, p);
    tank = propagate_tank(tank, vin, x.vo, Config::k1, T1, p);
    vo = propagate_output(vo, tank, vin, x.vo, Config::k2, half - T1, p);
    tank = propagate_tank(tank, vin, x.vo, Config::k2, half - T1, p);

    const double v3 = drive_voltage(Config::k3, vin, x.vo, p.N);
    const double tau3 = first_crossing_sinusoid(tank.iL, -(tank.vc - v3) / d.Zc,
                                                d.omega_r, half, d.Ts, false);
    const double T3 = half + tau3;

    vo = propagate_output(vo, tank, vin, x.vo, Config::k3, tau3, p);
    tank = propagate_tank(tank, vin, x.vo, Config::k3, tau3, p);
    vo = propagate_output(vo, tank, vin, x.vo, Config::k4, d.Ts - T3, p);
    tank = propagate_tank(tank, vin, x.vo, Config::k4, d.Ts - T3, p);

    return PeriodStep{StateVector{tank.iL, tank.vc, vo}, T1, T3};
}

PeriodStep march_model(const ConverterParams& p, StateVector start, int periods) {
    PeriodStep step{start, 0.0, 0.0};
    for (int k = 0; k < periods; ++k) {
        step = step_period_model(step.state, p.Vin, p);
    }
    return step;
}

}  // namespace srcsd
