#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "srcsd/discretization.hpp"

namespace srcsd {

/// Cyclic steady state: period-start state, crossing times, diagnostics.
struct OperatingPoint {
    StateVector state;       ///< [iL, vc, vo] at period start
    SubintervalTimes times;  ///< solved T1, T3 plus Ts
    double residual_norm;    ///< normalized inf-norm at the solution
    double dc_gain;          ///< vo / Vin
    int iterations;          ///< Newton iterations spent
};

/// Residuals of the steady-state system: periodicity of the three states
/// plus the two crossing constraints (tank current zero at T1 and T3).
struct Residuals {
    Eigen::Vector3d periodicity;  ///< one-period map output minus input state
    double crossing_t1;           ///< iL at T1 along the first configuration, A
    double crossing_t3;           ///< iL at T3 along the third configuration, A
};

/// Tank current at T1 propagated in closed form from the period-start state
/// (zero at the cyclic steady state).
double crossing_residual_t1(const ConverterParams& p, const StateVector& x,
                            const SubintervalTimes& t);

/// Tank current at T3, superposing the drive steps at T1 and Ts/2.
double crossing_residual_t3(const ConverterParams& p, const StateVector& x,
                            const SubintervalTimes& t);

Residuals residuals(const ConverterParams& p, const StateVector& x,
                    const SubintervalTimes& t);

struct SteadyStateGuess {
    StateVector state;
    SubintervalTimes times;
};

/// Fundamental-harmonic (sinusoidal approximation) starting point: output
/// from the first-harmonic gain, tank current from the fundamental phasor,
/// T1 from the current phase lag.
SteadyStateGuess initial_guess(const ConverterParams& p);

struct SolveOptions {
    int max_iterations = 100;
    double tolerance = 1e-9;     ///< on the normalized residual inf-norm
    bool march_fallback = true;  ///< time-march restart on Newton failure
    int fallback_periods = 5000;
};

struct SolveError : std::runtime_error {
    double best_residual;
    explicit SolveError(const std::string& what, double residual)
        : std::runtime_error(what), best_residual(residual) {}
};

/// Newton iteration on the five unknowns (iL, vc, vo, T1, T3) with a
/// finite-differenced Jacobian; residuals are normalized by Vin-based scales
/// so the tolerance is parameter independent. Falls back to time marching
/// when Newton stalls.
OperatingPoint solve_cyclic_steady_state(
    const ConverterParams& p,
    std::optional<SteadyStateGuess> init = std::nullopt,
    const SolveOptions& opts = SolveOptions{});

struct WaveformSample {
    double t;
    double iL;
    double vc;
    double vo;
};

/// Closed-form waveforms over one period at the operating point, sampled at
/// `points` equally spaced instants.
std::vector<WaveformSample> sample_period_waveform(const ConverterParams& p,
                                                   const OperatingPoint& op,
                                                   int points);

}  // namespace srcsd
