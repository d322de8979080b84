#pragma once

#include <Eigen/Dense>

#include "srcsd/params.hpp"

namespace srcsd {

/// Conduction topology within one switching period. Boundaries are
/// [0,T1], [T1,Ts/2], [Ts/2,T3], [T3,Ts]; the end state of one interval is
/// the start state of the next.
enum class Config { k1 = 1, k2 = 2, k3 = 3, k4 = 4 };

/// Effective constant voltage driving the LC tank in a configuration.
/// The bridge applies +vin over the first half period and -vin over the
/// second; the rectifier reflects vo/N with the polarity of iL.
double drive_voltage(Config c, double vin, double vo, double N);

/// Sign with which iL/N feeds the output capacitor (rectifier polarity):
/// -1 for configs 1 and 4 (iL < 0), +1 for configs 2 and 3 (iL > 0).
int rectifier_sign(Config c);

/// Exact LC rotation over dt about the configuration's drive voltage.
/// vin and vo are held at their period-start values. Rejects dt < 0.
TankState propagate_tank(const TankState& s, double vin, double vo, Config c,
                         double dt, const ConverterParams& p);

/// Exact response of the RoCo output filter to the rectified tank current
/// over dt. tank_start is the tank state at the start of the interval (it
/// fixes the iL(t) waveform); vo_filt is the filter state being advanced;
/// vo_const is the period-start output voltage seen by the tank drive.
double propagate_output(double vo_filt, const TankState& tank_start, double vin,
                        double vo_const, Config c, double dt,
                        const ConverterParams& p);

/// Full nonlinear one-period propagation at fixed crossing times: all three
/// states through the four configurations. The tank sees (vin, x.vo) held
/// constant; the filter integrates the resulting iL(t).
StateVector propagate_period(const StateVector& x, double vin,
                             const SubintervalTimes& t, const ConverterParams& p);

/// One-period discrete state-space map x[k+1] = A x[k] + B vin[k],
/// states ordered [iL, vc, vo].
struct DiscreteStateSpace {
    Eigen::Matrix3d A;
    Eigen::Vector3d B;
    double T1 = 0.0;
    double T3 = 0.0;
    double Ts = 0.0;
};

/// Closed-form assembly of the one-period map from the subinterval
/// solutions. Exponential factors are grouped as e^{-(Ts-t)/(RoCo)} so every
/// factor lies in (0,1] regardless of Ro*Co versus Ts.
DiscreteStateSpace assemble_period_map(const ConverterParams& p,
                                       const SubintervalTimes& t);

/// Raised when the tank current fails to cross zero within a half period,
/// i.e. the trajectory leaves the four-configuration switching pattern.
struct SimModeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PeriodStep {
    StateVector state;  ///< state at the end of the period
    double T1;          ///< first crossing (from negative), in [0, Ts/2]
    double T3;          ///< second crossing (from positive), in [Ts/2, Ts]
};

/// Advance the sampled-data model map one period: crossing times re-solved
/// by bisection (to 1e-13 Ts) on the frozen-vo tank waveform, then the
/// two-step propagation above. This is the nonlinear map whose fixed point
/// the steady-state solver finds and whose Jacobian the small-signal model
/// is.
PeriodStep step_period_model(const StateVector& x, double vin,
                             const ConverterParams& p);

/// Iterate the model map with constant input.
PeriodStep march_model(const ConverterParams& p, StateVector start, int periods);

}  // namespace srcsd
