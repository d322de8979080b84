#pragma once

#include <string>
#include <vector>

#include "srcsd/small_signal.hpp"
#include "srcsd/time_sim.hpp"

namespace srcsd {

/// How a gain value is produced: `model` evaluates the audiosusceptibility
/// transfer function; `sim` measures the switched simulator with injected
/// ripple; `linearized` evaluates the frequency response of the simulator's
/// own linearized one-period map (see linearize_switched_map).
enum class Method { model, sim, linearized };

const char* method_name(Method m);

/// Quantities held fixed while sweeping (F, Qe). Defaults are the nominal
/// 10 kW design the sweeps are built around.
struct BaseDesign {
    double fr = 100e3;
    double N = 16.0;
    double Ro = 10e3;
    double Vin = 700.0;
    double Co = 100e-9;
};

/// Converter realizing (F, Qe) on the base design.
ConverterParams design_point(const BaseDesign& base, double F, double Qe);

/// Ripple-frequency search band for a design: [100 Hz, min(10 kHz, fs/4)].
std::pair<double, double> ripple_band(const ConverterParams& p);

struct SweepGrid {
    std::vector<double> F;     ///< values in (1, 2]
    std::vector<double> Qe;    ///< values > 0
    std::vector<double> f_in;  ///< Hz, below fs/2 for every F
    BaseDesign base;
};

void validate(const SweepGrid& grid);

struct FrequencyResponsePoint {
    double f_in;
    std::complex<double> gain;
    double normalized_gain;
    double gain_db;
};

/// Gain curve of one design, tagged with how it was produced.
struct FrequencyResponse {
    double F = 0.0;
    double Qe = 0.0;
    Method method = Method::model;
    bool solved = false;
    std::string error;  ///< non-empty when the design point failed
    double dc_gain = 0.0;
    std::vector<FrequencyResponsePoint> points;
};

/// Evaluate gains at each grid frequency for every (F, Qe) design.
/// Per-point solver failures are recorded and the sweep continues.
/// threads == 0 selects hardware concurrency.
std::vector<FrequencyResponse> frequency_sweep(const SweepGrid& grid, Method method,
                                               int threads = 0);

/// Largest normalized gain over the ripple band (golden-section plus
/// endpoint checks for the analytic methods; measured peak scan for the
/// simulator). Model gains are normalized by the model's own dc response;
/// simulator gains by the measured dc gain.
double peak_normalized_gain(const ConverterParams& p, const OperatingPoint& op,
                            Method method, double f_lo, double f_hi);

struct ResonanceComparison {
    double f_model_hz;
    double f_sim_hz;
    double error_pct;  ///< signed, (sim - model) / sim * 100
};

/// Compare the closed-form resonance frequency against the simulated peak.
/// min_prominence_db is forwarded to find_resonance_sim.
ResonanceComparison resonance_error(const ConverterParams& p,
                                    double min_prominence_db = 3.0);

/// Unity-gain boundary in the (Qe, F) plane: above the curve the peak
/// normalized gain stays below one for any ripple frequency.
struct RegionCurve {
    std::vector<double> Qe;
    std::vector<double> F_boundary;
    Method method = Method::model;
};

/// For each Qe, bisect on F until the peak normalized gain crosses unity,
/// to an F resolution of 1e-3. Requires the peak gain to be monotone in F
/// over [F_lo, F_hi] (checked) and the endpoints to bracket unity gain.
/// Supported methods: linearized and sim. The audiosusceptibility transfer
/// function itself has an F-independent peak (its undamped complex pole
/// pair sits outside the unit circle), so it admits no unity-gain boundary
/// and Method::model is rejected here.
RegionCurve design_region_boundary(const std::vector<double>& qe_grid, double F_lo,
                                   double F_hi, Method method,
                                   const BaseDesign& base, int threads = 0);

}  // namespace srcsd
