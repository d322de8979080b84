#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "srcsd/discretization.hpp"

namespace srcsd {

/// Sinusoidal ripple riding on the dc input, sampled once per switching
/// period: vin[k] = Vin + amplitude * sin(2 pi f_in k Ts + phase).
struct RippleSpec {
    double f_in = 0.0;       ///< Hz, must satisfy 0 < f_in < fs/2 when amplitude > 0
    double amplitude = 0.0;  ///< V peak; small-signal regime expected
    double phase = 0.0;      ///< rad
};

/// Raised by find_resonance_sim when the gain response has no interior peak.
struct NoResonanceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Advance one switching period of the switched circuit. Unlike the
/// sampled-data model map, the simulator integrates the full coupled
/// dynamics: the output voltage loads the tank continuously within the
/// period, not just through its period-start sample. Each conduction
/// interval is propagated in closed form (eigendecomposition of the
/// piecewise-LTI system); crossing times are re-solved per period by
/// bisection to 1e-13 * Ts, independent of any steady-state solver.
PeriodStep step_period(const StateVector& x, double vin, const ConverterParams& p);

/// March the switched circuit with constant input voltage.
PeriodStep march(const ConverterParams& p, StateVector start, int periods);

/// Period-start samples of a switched simulation run.
struct SimTrace {
    std::vector<double> vin, iL, vc, vo;  ///< per period-start sample
    std::vector<double> T1, T3;           ///< crossing times of each period
    int settle_periods = 0;    ///< samples [0, settle) are transient
    int measure_periods = 0;   ///< samples [settle, settle+measure) are the window
    double f_in = 0.0;         ///< injected ripple frequency actually used
    double Ts = 0.0;
    double dc_input = 0.0;
    bool amplitude_warning = false;  ///< amplitude exceeded 5% of Vin
};

/// Run settle + measure periods. Starts from `start` when given, otherwise
/// from rest (all states zero). The caller is responsible for choosing a
/// measure window spanning an integer number of ripple periods; see
/// plan_measurement.
SimTrace simulate(const ConverterParams& p, const RippleSpec& ripple,
                  int settle_periods, int measure_periods,
                  std::optional<StateVector> start = std::nullopt);

struct RippleGain {
    std::complex<double> gain;  ///< complex output/input ripple ratio
    double ripple_gain_db;      ///< 20 log10 |gain|
    double normalized_gain;     ///< |gain| / dc gain
    double dc_gain;             ///< mean(vo) / mean(vin) over the window
};

/// Single-bin discrete Fourier projection of the period-start vo and vin
/// samples over the measure window. The window must span an integer number
/// of ripple periods; rejected otherwise.
RippleGain measure_ripple_gain(const SimTrace& trace, double f_in);

/// Measurement plan with the ripple frequency quantized to m * fs / K so the
/// K-period window spans exactly m ripple cycles (leakage-free projection).
struct MeasurePlan {
    double f_used;
    int cycles;
    int measure_periods;
    int settle_periods;
};

/// settle_periods < 0 selects the default max(20 ripple periods,
/// 50 Ro Co / Ts), clearing both filter and ripple transients.
MeasurePlan plan_measurement(const ConverterParams& p, double f_request,
                             int min_cycles = 8, int min_measure_periods = 1000,
                             int settle_periods = -1);

struct GainMeasurement {
    double f_in;  ///< quantized frequency actually measured
    RippleGain gain;
};

/// Plan, simulate and measure at (approximately) the requested frequency.
/// amplitude < 0 selects 1% of Vin.
GainMeasurement measure_gain_at(const ConverterParams& p, double f_request,
                                double amplitude = -1.0,
                                std::optional<StateVector> start = std::nullopt,
                                int settle_periods = -1, int measure_periods = -1);

struct SimPeak {
    double f_peak;
    double normalized_gain;
    double ripple_gain_db;
    double prominence_db;  ///< peak above the low-frequency plateau
};

/// Largest measured gain over [f_lo, f_hi]: coarse scan, golden-section
/// refinement of any interior maximum, endpoints included. Always defined.
SimPeak scan_peak_gain(const ConverterParams& p, double f_lo, double f_hi,
                       double amplitude = -1.0,
                       std::optional<StateVector> start = std::nullopt);

/// Locate the resonant peak in [f_lo, f_hi], refined to 0.5% frequency
/// resolution. Throws NoResonanceError when the response is monotone over
/// the range or the interior maximum stands less than min_prominence_db
/// above the low-frequency plateau (an overdamped response has no
/// meaningful peak frequency).
SimPeak find_resonance_sim(const ConverterParams& p, double f_lo, double f_hi,
                           double amplitude = -1.0,
                           std::optional<StateVector> start = std::nullopt,
                           double min_prominence_db = 3.0);

/// Small-signal model extracted from the switched simulator itself: fixed
/// point of the one-period map and its central-difference Jacobian. This is
/// the exact-discretization linearization of the full coupled dynamics
/// (including the intra-period output-filter loading that the sampled-data
/// model neglects), so its frequency response matches small-amplitude
/// simulated measurements.
struct LinearizedMap {
    Eigen::Matrix3d A;
    Eigen::Vector3d B;
    StateVector fixed_point;
    double dc_gain;
    double spectral_radius;
    double Ts;
};

LinearizedMap linearize_switched_map(const ConverterParams& p,
                                     std::optional<StateVector> start = std::nullopt);

/// Output-row transfer value of the linearized map at z = e^{j 2 pi f Ts}.
std::complex<double> linearized_gain(const LinearizedMap& m, double f_in);

}  // namespace srcsd
