#pragma once

#include <stdexcept>

namespace srcsd {

/// Physical series resonant converter parameters. SI units throughout.
struct ConverterParams {
    double Lr;   ///< resonant inductance, H
    double Cr;   ///< resonant capacitance, F
    double Co;   ///< output filter capacitance, F (secondary side)
    double Ro;   ///< load resistance, Ohm
    double N;    ///< transformer turns ratio, secondary/primary
    double Vin;  ///< dc input voltage, V
    double fs;   ///< switching frequency, Hz
};

/// Thrown when fs does not exceed the tank resonance frequency (F <= 1).
/// Only above-resonance operation is supported.
struct BelowResonanceError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Quantities derived from ConverterParams.
struct DerivedParams {
    double omega_r;  ///< tank resonance, rad/s
    double Zc;       ///< characteristic impedance sqrt(Lr/Cr), Ohm
    double Ts;       ///< switching period, s
    double F;        ///< fs / fr, > 1
    double Rac;      ///< rectifier-reflected ac load (8/pi^2) Ro/N^2, Ohm
    double Qe;       ///< effective quality factor Zc/Rac

    double fr() const;  ///< tank resonance frequency, Hz
};

/// Output filter rate 1/(Ro*Co), 1/s.
double filter_lambda(const ConverterParams& p);

/// Validates positivity and above-resonance operation; throws on violation.
void validate(const ConverterParams& p);

/// Derived quantities. Pure; throws if params are invalid.
DerivedParams derive_params(const ConverterParams& p);

/// Inverse design mapping: Zc = Qe*Rac, Lr = Zc/omega_r, Cr = 1/(Zc*omega_r),
/// fs = F*fr. Co is not determined by (F, Qe) and must be supplied.
ConverterParams params_from_ratios(double F, double Qe, double fr, double N,
                                   double Ro, double Vin, double Co);

/// Tank + output filter state, ordered [iL, vc, vo].
struct StateVector {
    double iL;  ///< resonant inductor current, A
    double vc;  ///< resonant capacitor voltage, V
    double vo;  ///< output capacitor voltage, V
};

/// Resonant tank state alone.
struct TankState {
    double iL;
    double vc;
};

/// Tank-current zero-crossing instants within one switching period.
/// Valid ordering: 0 <= T1 <= Ts/2 <= T3 <= Ts (interior strictly, at a
/// regular operating point).
struct SubintervalTimes {
    double T1;
    double T3;
    double Ts;
};

/// Throws unless 0 <= T1 <= Ts/2 <= T3 <= Ts.
void validate(const SubintervalTimes& t);

// Output-filter convolution kernels. All take the output filter rate
// lambda = 1/(Ro*Co) and evaluate trigonometric terms at omega_r * t.
//   g1(t) = lambda sin(wr t) - wr cos(wr t)
//   g2(t) = lambda sin(wr t) + wr cos(wr t)
// Primed variants are derivatives with respect to the angle wr*t.
double g1(double t, double omega_r, double lambda);
double g1_prime(double t, double omega_r, double lambda);
double g2(double t, double omega_r, double lambda);
double g2_prime(double t, double omega_r, double lambda);

/// lambda^2 + omega_r^2
double G2_const(double omega_r, double lambda);

/// -(1/(N Co)) e^{-Ts/(Ro Co)} / G2
double G1_const(const ConverterParams& p);

enum class GKind { g1, g1_prime, g2, g2_prime };

/// Dispatching wrapper over the g kernels; throws on non-finite argument.
double helper_g(GKind kind, double t, const ConverterParams& p);

}  // namespace srcsd
