#pragma once

#include <array>
#include <complex>

#include "srcsd/steady_state.hpp"

namespace srcsd {

/// Negated sensitivity of the T1 crossing residual to T1 at the operating
/// point (equivalently, minus the slope of iL at the first crossing).
double fprime_t1(const ConverterParams& p, const OperatingPoint& op);

/// Same for the T3 crossing.
double fprime_t3(const ConverterParams& p, const OperatingPoint& op);

/// Raised when a crossing slope is numerically zero: the crossing is not
/// transversal and the timing linearization breaks down.
struct DegenerateOperatingPointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Linearized coupling between the crossing times and the rest of the model.
struct TimingSensitivities {
    /// Sensitivity of the one-period map output to (T1, T3), evaluated on the
    /// steady-state (state, input) pair. 3x2.
    Eigen::Matrix<double, 3, 2> map_dtimes;
    /// Crossing-time response to a state perturbation, 2x3.
    Eigen::Matrix<double, 2, 3> times_dstate;
    /// Crossing-time response to an input perturbation, 2x1.
    Eigen::Vector2d times_dinput;
    double fprime_t1;
    double fprime_t3;
};

TimingSensitivities build_timing_sensitivities(const ConverterParams& p,
                                               const OperatingPoint& op);

enum class ModelVariant { full, simplified };

/// Discrete small-signal model x~[k+1] = A x~[k] + B vin~[k] about the
/// cyclic steady state, states ordered [iL, vc, vo].
struct SmallSignalModel {
    Eigen::Matrix3d A;
    Eigen::Vector3d B;
    ModelVariant variant;
    OperatingPoint op;
    double spectral_radius;  ///< reported, not enforced
};

/// Exact closed-form model: period map plus timing feedback.
SmallSignalModel build_full_model(const ConverterParams& p, const OperatingPoint& op);

/// Simplified model under T3 = Ts/2 + T1, negligible output decay within a
/// period, and 1/(RoCo)^2 << omega_r^2.
SmallSignalModel build_simplified_model(const ConverterParams& p,
                                        const OperatingPoint& op);

/// Audiosusceptibility transfer function vo(z)/vin(z) from the simplified
/// model: numerator degree 1 and denominator degree 3 in powers of (z - 1).
struct RationalTF {
    std::array<double, 2> num;  ///< num[i] multiplies (z-1)^i
    std::array<double, 4> den;  ///< den[i] multiplies (z-1)^i
    double Ts;
    bool degenerate_fprime;  ///< near-zero crossing slope; eval() uses the
                             ///< pole/zero-cancelled form, which stays finite

    std::array<double, 2> num_z() const;  ///< coefficients in powers of z
    std::array<double, 4> den_z() const;
    std::complex<double> eval(std::complex<double> z) const;
};

RationalTF as_transfer_function(const ConverterParams& p, const OperatingPoint& op);

struct ResonanceInfo {
    double omega_rad;  ///< closed form, rad/s
    double f_hz;       ///< closed form, Hz
    double f_pole_hz;  ///< from the complex denominator pole angle
};

/// Audiosusceptibility resonance frequency, far below the tank resonance.
ResonanceInfo as_resonance_frequency(const ConverterParams& p,
                                     const OperatingPoint& op);

struct GainPoint {
    std::complex<double> gain;
    double ripple_gain_db;   ///< 20 log10 |gain|
    double normalized_gain;  ///< |gain| / dc gain
    double phase_deg;
};

/// Evaluate the transfer function at z = e^{j 2 pi f_in Ts}. Rejects
/// frequencies at or above the Nyquist rate of the period map.
GainPoint evaluate_gain(const RationalTF& tf, double f_in, double dc_gain);

}  // namespace srcsd
