#include "srcsd/params.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace srcsd {

namespace {
constexpr double kPi = std::numbers::pi;

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(name) + " must be strictly positive");
    }
}
}  // namespace

double DerivedParams::fr() const { return omega_r / (2.0 * kPi); }

double filter_lambda(const ConverterParams& p) { return 1.0 / (p.Ro * p.Co); }

void validate(const ConverterParams& p) {
    require_positive(p.Lr, "Lr");
    require_positive(p.Cr, "Cr");
    require_positive(p.Co, "Co");
    require_positive(p.Ro, "Ro");
    require_positive(p.N, "N");
    require_positive(p.Vin, "Vin");
    require_positive(p.fs, "fs");
    const double fr = 1.0 / (2.0 * kPi * std::sqrt(p.Lr * p.Cr));
    if (!(p.fs > fr)) {
        throw BelowResonanceError("below-resonance unsupported: fs = " + std::to_string(p.fs) +
                                  " Hz <= fr = " + std::to_string(fr) + " Hz (F <= 1)");
    }
}

DerivedParams derive_params(const ConverterParams& p) {
    validate(p);
    DerivedParams d;
    d.omega_r = 1.0 / std::sqrt(p.Lr * p.Cr);
    d.Zc = std::sqrt(p.Lr / p.Cr);
    d.Ts = 1.0 / p.fs;
    d.F = p.fs / (d.omega_r / (2.0 * kPi));
    d.Rac = (8.0 / (kPi * kPi)) * p.Ro / (p.N * p.N);
    d.Qe = d.Zc / d.Rac;
    return d;
}

ConverterParams params_from_ratios(double F, double Qe, double fr, double N,
                                   double Ro, double Vin, double Co) {
    require_positive(Qe, "Qe");
    require_positive(fr, "fr");
    require_positive(N, "N");
    require_positive(Ro, "Ro");
    require_positive(Vin, "Vin");
    require_positive(Co, "Co");
    if (!(F > 1.0)) {
        throw BelowResonanceError("below-resonance unsupported: F = " + std::to_string(F) +
                                  " <= 1");
    }
    const double omega_r = 2.0 * kPi * fr;
    const double Rac = (8.0 / (kPi * kPi)) * Ro / (N * N);
    const double Zc = Qe * Rac;
    ConverterParams p;
    p.Lr = Zc / omega_r;
    p.Cr = 1.0 / (Zc * omega_r);
    p.Co = Co;
    p.Ro = Ro;
    p.N = N;
    p.Vin = Vin;
    p.fs = F * fr;
    validate(p);
    return p;
}

void validate(const SubintervalTimes& t) {
    if (!(t.Ts > 0.0) || !std::isfinite(t.Ts)) {
        throw std::invalid_argument("Ts must be strictly positive");
    }
    if (!(t.T1 >= 0.0 && t.T1 <= 0.5 * t.Ts && t.T3 >= 0.5 * t.Ts && t.T3 <= t.Ts)) {
        throw std::invalid_argument("times out of order: need 0 <= T1 <= Ts/2 <= T3 <= Ts");
    }
}

double g1(double t, double omega_r, double lambda) {
    return lambda * std::sin(omega_r * t) - omega_r * std::cos(omega_r * t);
}

double g1_prime(double t, double omega_r, double lambda) {
    return lambda * std::cos(omega_r * t) + omega_r * std::sin(omega_r * t);
}

double g2(double t, double omega_r, double lambda) {
    return lambda * std::sin(omega_r * t) + omega_r * std::cos(omega_r * t);
}

double g2_prime(double t, double omega_r, double lambda) {
    return lambda * std::cos(omega_r * t) - omega_r * std::sin(omega_r * t);
}

double G2_const(double omega_r, double lambda) { return lambda * lambda + omega_r * omega_r; }

double G1_const(const ConverterParams& p) {
    const DerivedParams d = derive_params(p);
    const double lambda = filter_lambda(p);
    return -(1.0 / (p.N * p.Co)) * std::exp(-lambda * d.Ts) / G2_const(d.omega_r, lambda);
}

double helper_g(GKind kind, double t, const ConverterParams& p) {
    if (!std::isfinite(t)) throw std::invalid_argument("non-finite time argument");
    const DerivedParams d = derive_params(p);
    const double lambda = filter_lambda(p);
    switch (kind) {
        case GKind::g1: return g1(t, d.omega_r, lambda);
        case GKind::g1_prime: return g1_prime(t, d.omega_r, lambda);
        case GKind::g2: return g2(t, d.omega_r, lambda);
        case GKind::g2_prime: return g2_prime(t, d.omega_r, lambda);
    }
    throw std::invalid_argument("unknown g kernel");
}

}  // namespace srcsd
