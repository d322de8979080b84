#include "srcsd/time_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace srcsd {

namespace {

constexpr double kPi = std::numbers::pi;

// Closed-form solution machinery for the coupled three-state dynamics of one
// conduction interval:
//   diL/dt = (-vc - s*vo/N + b*vin)/Lr
//   dvc/dt = iL/Cr
//   dvo/dt = -vo/(Ro Co) + s*iL/(N Co)
// The homogeneous matrix depends only on the rectifier sign s; both variants
// are eigendecomposed once per design and reused every period.
struct IntervalKernel {
    Eigen::Matrix3cd V;
    Eigen::Matrix3cd Vinv;
    Eigen::Vector3cd lam;
    Eigen::Vector3d w;  // A^{-1} e1 / Lr, for the particular solution
};

struct CircuitKernel {
    IntervalKernel k[2];  // index 0: s = -1, index 1: s = +1
    double Ts;
    double half;

    const IntervalKernel& of(int s) const { return k[s > 0 ? 1 : 0]; }
};

CircuitKernel build_kernel(const ConverterParams& p) {
    CircuitKernel ck;
    ck.Ts = 1.0 / p.fs;
    ck.half = 0.5 * ck.Ts;
    for (int si = 0; si < 2; ++si) {
        const double s = si == 0 ? -1.0 : 1.0;
        Eigen::Matrix3d A;
        A << 0.0, -1.0 / p.Lr, -s / (p.N * p.Lr),
             1.0 / p.Cr, 0.0, 0.0,
             s / (p.N * p.Co), 0.0, -1.0 / (p.Ro * p.Co);
        ck.k[si].w = A.partialPivLu().solve(Eigen::Vector3d(1.0 / p.Lr, 0.0, 0.0));
        const Eigen::EigenSolver<Eigen::Matrix3d> es(A);
        ck.k[si].V = es.eigenvectors();
        ck.k[si].lam = es.eigenvalues();
        ck.k[si].Vinv = ck.k[si].V.inverse();
    }
    return ck;
}

// State of one interval's propagation, set up once per interval so the
// crossing search only pays three complex exponentials per evaluation.
struct IntervalFlow {
    const IntervalKernel* kern;
    Eigen::Vector3d xp;       // particular (dc) solution
    Eigen::Vector3cd y;       // Vinv * (x0 - xp)
    Eigen::Vector3cd c_row0;  // V.row(0) .* y, for fast iL(t)

    IntervalFlow(const CircuitKernel& ck, int s, int bsign, double vin,
                 const Eigen::Vector3d& x0) {
        kern = &ck.of(s);
        xp = -static_cast<double>(bsign) * vin * kern->w;
        y = kern->Vinv * (x0 - xp).cast<std::complex<double>>();
        c_row0 = kern->V.row(0).transpose().cwiseProduct(y);
    }
    double iL(double t) const {
        std::complex<double> acc{0.0, 0.0};
        for (int i = 0; i < 3; ++i) acc += c_row0(i) * std::exp(kern->lam(i) * t);
        return xp(0) + acc.real();
    }
    Eigen::Vector3d at(double t) const {
        Eigen::Vector3cd e;
        for (int i = 0; i < 3; ++i) e(i) = y(i) * std::exp(kern->lam(i) * t);
        return xp + (kern->V * e).real();
    }
};

// First zero of iL along the flow on [0, span]; the span is under half a
// tank cycle, so there is at most one sign change. Returns 0 when the entry
// value already has the exit polarity (degenerate interval during settling).
double first_crossing(const IntervalFlow& flow, double span, double Ts,
                      bool from_negative) {
    const double sign = from_negative ? 1.0 : -1.0;
    if (sign * flow.iL(0.0) >= 0.0) return 0.0;
    if (sign * flow.iL(span) < 0.0) {
        throw SimModeError("no zero crossing found in half period");
    }
    double lo = 0.0, hi = span;
    const double width_tol = 1e-13 * Ts;
    for (int i = 0; i < 200 && (hi - lo) > width_tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (sign * flow.iL(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

PeriodStep step_with_kernel(const CircuitKernel& ck, const StateVector& x,
                            double vin) {
    Eigen::Vector3d v(x.iL, x.vc, x.vo);

    IntervalFlow f1(ck, -1, +1, vin, v);
    const double T1 = first_crossing(f1, ck.half, ck.Ts, true);
    v = f1.at(T1);

    IntervalFlow f2(ck, +1, +1, vin, v);
    v = f2.at(ck.half - T1);

    IntervalFlow f3(ck, +1, -1, vin, v);
    const double tau3 = first_crossing(f3, ck.half, ck.Ts, false);
    v = f3.at(tau3);
    const double T3 = ck.half + tau3;

    IntervalFlow f4(ck, -1, -1, vin, v);
    v = f4.at(ck.Ts - T3);

    return PeriodStep{StateVector{v(0), v(1), v(2)}, T1, T3};
}

}  // namespace

PeriodStep step_period(const StateVector& x, double vin, const ConverterParams& p) {
    const CircuitKernel ck = build_kernel(p);
    return step_with_kernel(ck, x, vin);
}

PeriodStep march(const ConverterParams& p, StateVector start, int periods) {
    const CircuitKernel ck = build_kernel(p);
    PeriodStep step{start, 0.0, 0.0};
    for (int k = 0; k < periods; ++k) {
        step = step_with_kernel(ck, step.state, p.Vin);
    }
    return step;
}

SimTrace simulate(const ConverterParams& p, const RippleSpec& ripple,
                  int settle_periods, int measure_periods,
                  std::optional<StateVector> start) {
    validate(p);
    if (ripple.amplitude < 0.0) throw std::invalid_argument("ripple amplitude must be >= 0");
    if (ripple.amplitude > 0.0 &&
        !(ripple.f_in > 0.0 && ripple.f_in < 0.5 * p.fs)) {
        throw std::invalid_argument("ripple frequency must lie in (0, fs/2)");
    }
    if (settle_periods < 0 || measure_periods < 0) {
        throw std::invalid_argument("negative period counts");
    }

    const CircuitKernel ck = build_kernel(p);
    const double Ts = ck.Ts;
    const int total = settle_periods + measure_periods;

    SimTrace trace;
    trace.settle_periods = settle_periods;
    trace.measure_periods = measure_periods;
    trace.f_in = ripple.f_in;
    trace.Ts = Ts;
    trace.dc_input = p.Vin;
    trace.amplitude_warning = ripple.amplitude > 0.05 * p.Vin;
    trace.vin.reserve(total);
    trace.iL.reserve(total);
    trace.vc.reserve(total);
    trace.vo.reserve(total);
    trace.T1.reserve(total);
    trace.T3.reserve(total);

    StateVector x = start.value_or(StateVector{0.0, 0.0, 0.0});
    for (int k = 0; k < total; ++k) {
        const double vin_k =
            p.Vin + ripple.amplitude * std::sin(2.0 * kPi * ripple.f_in * k * Ts + ripple.phase);
        trace.vin.push_back(vin_k);
        trace.iL.push_back(x.iL);
        trace.vc.push_back(x.vc);
        trace.vo.push_back(x.vo);
        const PeriodStep step = step_with_kernel(ck, x, vin_k);
        trace.T1.push_back(step.T1);
        trace.T3.push_back(step.T3);
        x = step.state;
    }
    return trace;
}

RippleGain measure_ripple_gain(const SimTrace& trace, double f_in) {
    const int S = trace.settle_periods;
    const int K = trace.measure_periods;
    if (K <= 0 || static_cast<int>(trace.vo.size()) < S + K) {
        throw std::invalid_argument("trace does not cover the measure window");
    }
    const double cycles_exact = f_in * trace.Ts * K;
    const long long m = std::llround(cycles_exact);
    if (m < 1 || std::abs(cycles_exact - static_cast<double>(m)) > 1e-6) {
        throw std::invalid_argument(
            "measure window does not span an integer number of ripple periods");
    }

    std::complex<double> bin_vo{0.0, 0.0}, bin_vin{0.0, 0.0};
    double mean_vo = 0.0, mean_vin = 0.0;
    for (int k = 0; k < K; ++k) {
        // Exact bin phase via integer arithmetic: no trig-argument drift.
        const long long r = (m * k) % K;
        const double theta = 2.0 * kPi * static_cast<double>(r) / K;
        const std::complex<double> w{std::cos(theta), -std::sin(theta)};
        bin_vo += trace.vo[S + k] * w;
        bin_vin += trace.vin[S + k] * w;
        mean_vo += trace.vo[S + k];
        mean_vin += trace.vin[S + k];
    }
    bin_vo *= 2.0 / K;
    bin_vin *= 2.0 / K;
    mean_vo /= K;
    mean_vin /= K;

    RippleGain out;
    out.gain = bin_vo / bin_vin;
    out.ripple_gain_db = 20.0 * std::log10(std::abs(out.gain));
    out.dc_gain = mean_vo / mean_vin;
    out.normalized_gain = std::abs(out.gain) / std::abs(out.dc_gain);
    return out;
}

MeasurePlan plan_measurement(const ConverterParams& p, double f_request,
                             int min_cycles, int min_measure_periods,
                             int settle_periods) {
    validate(p);
    if (!(f_request > 0.0 && f_request < 0.5 * p.fs)) {
        throw std::invalid_argument("ripple frequency must lie in (0, fs/2)");
    }
    MeasurePlan plan;
    const double periods_per_cycle = p.fs / f_request;
    plan.cycles = std::max(min_cycles,
                           static_cast<int>(std::ceil(min_measure_periods / periods_per_cycle)));
    plan.measure_periods =
        std::max(2 * plan.cycles + 1,
                 static_cast<int>(std::llround(plan.cycles * periods_per_cycle)));
    plan.f_used = plan.cycles * p.fs / plan.measure_periods;
    if (settle_periods >= 0) {
        plan.settle_periods = settle_periods;
    } else {
        const double ripple_settle = 20.0 * p.fs / plan.f_used;
        const double filter_settle = 50.0 * p.Ro * p.Co * p.fs;
        plan.settle_periods = static_cast<int>(std::ceil(std::max(ripple_settle, filter_settle)));
    }
    return plan;
}

GainMeasurement measure_gain_at(const ConverterParams& p, double f_request,
                                double amplitude, std::optional<StateVector> start,
                                int settle_periods, int measure_periods) {
    // A caller-provided window length is rounded up to integer ripple cycles.
    const MeasurePlan plan = plan_measurement(
        p, f_request, 8, measure_periods > 0 ? measure_periods : 1000, settle_periods);
    RippleSpec ripple;
    ripple.f_in = plan.f_used;
    // 0.1% of Vin keeps sharp resonances in the linear regime (the output
    // swing at the peak can reach hundreds of times the input ripple).
    ripple.amplitude = amplitude < 0.0 ? 1e-3 * p.Vin : amplitude;
    const SimTrace trace =
        simulate(p, ripple, plan.settle_periods, plan.measure_periods, start);
    return GainMeasurement{plan.f_used, measure_ripple_gain(trace, plan.f_used)};
}

namespace {

struct PeakScanResult {
    GainMeasurement best;
    bool interior;     // best lies strictly inside the scan range
    double plateau;    // low-frequency normalized-gain plateau
};

PeakScanResult scan_and_refine(const ConverterParams& p, double f_lo, double f_hi,
                               double amplitude,
                               const std::optional<StateVector>& start) {
    validate(p);
    if (!(f_lo > 0.0 && f_lo < f_hi && f_hi < 0.5 * p.fs)) {
        throw std::invalid_argument("need 0 < f_lo < f_hi < fs/2");
    }

    auto gain_at = [&](double f) { return measure_gain_at(p, f, amplitude, start); };

    // Coarse log-spaced scan to bracket the maximum.
    constexpr int kScan = 13;
    std::vector<GainMeasurement> scan;
    scan.reserve(kScan);
    for (int i = 0; i < kScan; ++i) {
        const double f = f_lo * std::pow(f_hi / f_lo, static_cast<double>(i) / (kScan - 1));
        scan.push_back(gain_at(f));
    }
    int best = 0;
    for (int i = 1; i < kScan; ++i) {
        if (scan[i].gain.normalized_gain > scan[best].gain.normalized_gain) best = i;
    }

    PeakScanResult out;
    out.plateau = p.N / std::abs(scan[0].gain.dc_gain);
    out.interior = best != 0 && best != kScan - 1;
    out.best = scan[best];
    if (!out.interior) return out;

    double a = scan[best - 1].f_in;
    double b = scan[best + 1].f_in;
    GainMeasurement best_pt = scan[best];

    // Golden-section refinement to 0.5% frequency resolution.
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    GainMeasurement g1m = gain_at(x1);
    GainMeasurement g2m = gain_at(x2);
    auto keep_best = [&](const GainMeasurement& g) {
        if (g.gain.normalized_gain > best_pt.gain.normalized_gain) best_pt = g;
    };
    keep_best(g1m);
    keep_best(g2m);
    while ((b - a) > 0.005 * 0.5 * (a + b)) {
        if (g1m.gain.normalized_gain > g2m.gain.normalized_gain) {
            b = x2;
            x2 = x1;
            g2m = g1m;
            x1 = b - gr * (b - a);
            g1m = gain_at(x1);
            keep_best(g1m);
        } else {
            a = x1;
            x1 = x2;
            g1m = g2m;
            x2 = a + gr * (b - a);
            g2m = gain_at(x2);
            keep_best(g2m);
        }
    }
    out.best = best_pt;
    return out;
}

SimPeak to_peak(const PeakScanResult& r) {
    return SimPeak{r.best.f_in, r.best.gain.normalized_gain, r.best.gain.ripple_gain_db,
                   20.0 * std::log10(r.best.gain.normalized_gain / r.plateau)};
}

}  // namespace

SimPeak scan_peak_gain(const ConverterParams& p, double f_lo, double f_hi,
                       double amplitude, std::optional<StateVector> start) {
    return to_peak(scan_and_refine(p, f_lo, f_hi, amplitude, start));
}

SimPeak find_resonance_sim(const ConverterParams& p, double f_lo, double f_hi,
                           double amplitude, std::optional<StateVector> start,
                           double min_prominence_db) {
    const PeakScanResult r = scan_and_refine(p, f_lo, f_hi, amplitude, start);
    if (!r.interior) {
        throw NoResonanceError("no resonance in range: response is monotone");
    }
    const SimPeak peak = to_peak(r);
    if (peak.prominence_db < min_prominence_db) {
        throw NoResonanceError(
            "no resonance in range: response is flat (interior maximum only " +
            std::to_string(peak.prominence_db) + " dB above the low-frequency plateau)");
    }
    return peak;
}

LinearizedMap linearize_switched_map(const ConverterParams& p,
                                     std::optional<StateVector> start) {
    validate(p);
    const DerivedParams d = derive_params(p);
    const CircuitKernel ck = build_kernel(p);
    const double scales[3] = {p.Vin / d.Zc, p.Vin, p.N * p.Vin};

    // March to the simulator's own fixed point.
    Eigen::Vector3d x;
    {
        StateVector s = start.value_or(StateVector{0.0, 0.0, 0.0});
        x << s.iL, s.vc, s.vo;
    }
    Eigen::Vector3d prev = x;
    int k = 0;
    for (; k < 200000; ++k) {
        const StateVector s =
            step_with_kernel(ck, StateVector{x(0), x(1), x(2)}, p.Vin).state;
        prev = x;
        x << s.iL, s.vc, s.vo;
        const double delta = std::max({std::abs(x(0) - prev(0)) / scales[0],
                                       std::abs(x(1) - prev(1)) / scales[1],
                                       std::abs(x(2) - prev(2)) / scales[2]});
        // The per-period delta floors at a few 1e-13 (rounding jitter through
        // the crossing bisection); accept stagnation well below measurement
        // relevance.
        if (k > 64 && delta < 1e-12) break;
        if (k > 50000 && delta < 1e-10) break;
    }
    if (k >= 200000) {
        throw std::runtime_error("switched map did not settle to a fixed point");
    }

    auto step3 = [&](const Eigen::Vector3d& v, double vin) {
        const StateVector s = step_with_kernel(ck, StateVector{v(0), v(1), v(2)}, vin).state;
        return Eigen::Vector3d(s.iL, s.vc, s.vo);
    };

    LinearizedMap m;
    for (int j = 0; j < 3; ++j) {
        const double h = 1e-6 * scales[j];
        Eigen::Vector3d xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        m.A.col(j) = (step3(xp, p.Vin) - step3(xm, p.Vin)) / (2.0 * h);
    }
    {
        const double h = 1e-6 * p.Vin;
        m.B = (step3(x, p.Vin + h) - step3(x, p.Vin - h)) / (2.0 * h);
    }
    m.fixed_point = StateVector{x(0), x(1), x(2)};
    m.dc_gain = x(2) / p.Vin;
    m.spectral_radius = m.A.eigenvalues().cwiseAbs().maxCoeff();
    m.Ts = ck.Ts;
    return m;
}

std::complex<double> linearized_gain(const LinearizedMap& m, double f_in) {
    if (!(f_in > 0.0 && f_in < 0.5 / m.Ts)) {
        throw std::invalid_argument("ripple frequency must lie in (0, fs/2)");
    }
    const double theta = 2.0 * kPi * f_in * m.Ts;
    const std::complex<double> z{std::cos(theta), std::sin(theta)};
    Eigen::Matrix3cd M =
        z * Eigen::Matrix3cd::Identity() - m.A.cast<std::complex<double>>();
    const Eigen::Vector3cd y = M.lu().solve(m.B.cast<std::complex<double>>());
    return y(2);
}

}  // namespace srcsd
