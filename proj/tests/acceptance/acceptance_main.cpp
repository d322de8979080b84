// Acceptance suite: verifies the reproduction targets end to end and prints
// one PASS/FAIL line per criterion. Exit code is the number of failures.

#include <cmath>
#include <cstdarg>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>
#include <vector>

#include "../oracles.hpp"
#include "../test_helpers.hpp"
#include "srcsd/analysis.hpp"
#include "srcsd/config.hpp"

using namespace srcsd;
using srcsd::testing::experimental_design;
using srcsd::testing::rel_err;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return std::string(buf);
}

struct GridPointResult {
    double F, Qe;
    double f_model = 0.0;
    double f_sim = 0.0;
    double err_pct = 0.0;
    double peak_gain = 0.0;       // scan max of the normalized gain
    double prominence_db = 0.0;   // relative to the low-frequency plateau
    bool resonance_valid = false; // prominent enough to measure the frequency
};

// A gain maximum only measures the resonance frequency when the peak is
// sharp: for a second-order resonance the maximum shifts from the pole
// frequency by 1 - sqrt(1 - 2 zeta^2), which stays inside the 4% band being
// tested only for zeta <= 0.2, i.e. peaking of at least ~8 dB. Below that
// the maximum is damping-dominated and carries no resonance-frequency
// information either way.
constexpr double kResonanceValidityDb = 8.0;

}  // namespace

static void criterion_1_and_2() {
    const ConverterParams p = experimental_design();
    const OperatingPoint op = solve_cyclic_steady_state(p);
    const ResonanceInfo info = as_resonance_frequency(p, op);

    const SimPeak sim = find_resonance_sim(p, 500.0, 4000.0, -1.0, op.state);

    const bool f_model_ok = rel_err(info.f_hz, 1570.0) <= 0.01;
    const bool f_sim_ok = rel_err(sim.f_peak, 1575.0) <= 0.03;
    report(1, f_model_ok && f_sim_ok,
           fmt("resonance frequencies: closed form %.1f Hz (target 1570 +- 1%%), "
               "simulated %.1f Hz (target 1575 +- 3%%)",
               info.f_hz, sim.f_peak));

    const RationalTF tf = as_transfer_function(p, op);
    double model_peak_db = -1e9;
    for (double f = 100.0; f <= 4000.0; f *= 1.002) {
        model_peak_db =
            std::max(model_peak_db, evaluate_gain(tf, f, op.dc_gain).ripple_gain_db);
    }
    const double gap = model_peak_db - sim.ripple_gain_db;
    const bool model_ok = std::abs(model_peak_db - 44.0) <= 1.5;
    const bool sim_ok = std::abs(sim.ripple_gain_db - 41.0) <= 2.0;
    const bool gap_ok = gap >= 1.0 && gap <= 5.0;
    report(2, model_ok && sim_ok && gap_ok,
           fmt("resonance gains: model %.2f dB (target 44 +- 1.5), simulated %.2f dB "
               "(target 41 +- 2), gap %.2f dB (target 1..5)",
               model_peak_db, sim.ripple_gain_db, gap));
}

static void criterion_3() {
    const ConverterParams p = design_point(BaseDesign{}, 1.01, 0.5);
    const OperatingPoint op = solve_cyclic_steady_state(p);
    const auto [f_lo, f_hi] = ripple_band(p);
    const SimPeak peak = find_resonance_sim(p, f_lo, f_hi, -1.0, op.state);
    const bool gain_ok = rel_err(peak.normalized_gain, 23.0) <= 0.15;
    const bool freq_ok = rel_err(peak.f_peak, 3950.0) <= 0.05;
    report(3, gain_ok && freq_ok,
           fmt("nominal design peak: normalized gain %.2f at %.1f Hz "
               "(targets 23 +- 15%%, 3950 +- 5%%)",
               peak.normalized_gain, peak.f_peak));
}

static std::vector<GridPointResult> sweep_grid_results() {
    const std::vector<double> Fs = {1.01, 1.03, 1.05, 1.1};
    const std::vector<double> Qes = {0.5, 1.0, 2.0, 3.0, 5.0, 10.0};
    std::vector<GridPointResult> out;
    for (double F : Fs) {
        for (double Qe : Qes) {
            GridPointResult r;
            r.F = F;
            r.Qe = Qe;
            const ConverterParams p = design_point(BaseDesign{}, F, Qe);
            const OperatingPoint op = solve_cyclic_steady_state(p);
            const auto [f_lo, f_hi] = ripple_band(p);
            r.f_model = as_resonance_frequency(p, op).f_hz;
            const SimPeak scan = scan_peak_gain(p, f_lo, f_hi, -1.0, op.state);
            r.peak_gain = scan.normalized_gain;
            r.prominence_db = scan.prominence_db;
            try {
                const SimPeak res = find_resonance_sim(p, f_lo, f_hi, -1.0, op.state,
                                                       kResonanceValidityDb);
                r.f_sim = res.f_peak;
                r.err_pct = (res.f_peak - r.f_model) / res.f_peak * 100.0;
                r.resonance_valid = true;
            } catch (const NoResonanceError&) {
                r.resonance_valid = false;
            }
            out.push_back(r);
        }
    }
    return out;
}

static void criterion_4_and_5(const std::vector<GridPointResult>& grid) {
    bool all_in_band = true;
    int valid = 0;
    std::string worst;
    double worst_err = 0.0;
    for (const auto& r : grid) {
        if (!r.resonance_valid) {
            std::printf("        (F=%.2f Qe=%4.1f: no resonant peak, prominence %.1f dB"
                        " < %.0f dB validity threshold)\n",
                        r.F, r.Qe, r.prominence_db, kResonanceValidityDb);
            continue;
        }
        ++valid;
        std::printf("        F=%.2f Qe=%4.1f: model %7.1f Hz sim %7.1f Hz err %+5.2f%%"
                    " (prominence %.1f dB)\n",
                    r.F, r.Qe, r.f_model, r.f_sim, r.err_pct, r.prominence_db);
        if (std::abs(r.err_pct) > std::abs(worst_err)) {
            worst_err = r.err_pct;
            worst = fmt("F=%.2f Qe=%.1f", r.F, r.Qe);
        }
        if (std::abs(r.err_pct) > 4.0) all_in_band = false;
    }
    report(4, all_in_band && valid >= 10,
           fmt("resonance-frequency error within +-4%% at all %d points with a "
               "measurable peak (worst %+0.2f%% at %s)",
               valid, worst_err, worst.c_str()));

    const std::vector<double> Fs = {1.01, 1.03, 1.05, 1.1};
    const std::vector<double> Qes = {0.5, 1.0, 2.0, 3.0, 5.0, 10.0};
    auto peak_at = [&](int fi, int qi) { return grid[fi * Qes.size() + qi].peak_gain; };
    bool mono = true;
    std::string violation;
    for (std::size_t qi = 0; qi < Qes.size(); ++qi) {
        for (std::size_t fi = 0; fi + 1 < Fs.size(); ++fi) {
            if (peak_at(fi + 1, qi) > peak_at(fi, qi) * 1.005) {
                mono = false;
                violation = fmt("F %.2f->%.2f at Qe=%.1f", Fs[fi], Fs[fi + 1], Qes[qi]);
            }
        }
    }
    for (std::size_t fi = 0; fi < Fs.size(); ++fi) {
        for (std::size_t qi = 0; qi + 1 < Qes.size(); ++qi) {
            if (peak_at(fi, qi + 1) > peak_at(fi, qi) * 1.005) {
                mono = false;
                violation = fmt("Qe %.1f->%.1f at F=%.2f", Qes[qi], Qes[qi + 1], Fs[fi]);
            }
        }
    }
    report(5, mono,
           mono ? "peak normalized gain non-increasing in F and in Qe across the grid"
                : "monotonicity violated: " + violation);
}

static void criterion_6() {
    const std::vector<double> qe_grid = {0.5, 1.0, 2.0, 3.0, 5.0, 10.0};
    const RegionCurve lin =
        design_region_boundary(qe_grid, 1.01, 2.0, Method::linearized, BaseDesign{});
    const RegionCurve sim =
        design_region_boundary(qe_grid, 1.01, 2.0, Method::sim, BaseDesign{});
    bool agree = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < qe_grid.size(); ++i) {
        const double dF = std::abs(sim.F_boundary[i] - lin.F_boundary[i]);
        std::printf("        Qe=%4.1f: boundary F model %.4f  sim %.4f  |dF| %.4f\n",
                    qe_grid[i], lin.F_boundary[i], sim.F_boundary[i], dF);
        worst = std::max(worst, dF);
        if (dF > 0.02) agree = false;
    }

    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> margin(0.01, 0.15);
    std::uniform_int_distribution<std::size_t> pick(0, qe_grid.size() - 1);
    bool above_ok = true;
    for (int i = 0; i < 5; ++i) {
        const std::size_t qi = pick(rng);
        const double F = std::min(2.0, lin.F_boundary[qi] + margin(rng));
        const ConverterParams p = design_point(BaseDesign{}, F, qe_grid[qi]);
        const OperatingPoint op = solve_cyclic_steady_state(p);
        const auto [f_lo, f_hi] = ripple_band(p);
        const double peak = peak_normalized_gain(p, op, Method::sim, f_lo, f_hi);
        std::printf("        spot check above the curve: F=%.3f Qe=%.1f -> max "
                    "normalized gain %.4f\n",
                    F, qe_grid[qi], peak);
        if (!(peak < 1.0)) above_ok = false;
    }
    report(6, agree && above_ok,
           fmt("unity-gain boundary: model and simulation agree (worst |dF| = %.4f, "
               "limit 0.02); sampled points above the curve stay below unity gain",
               worst));
}

static void criterion_7() {
    // (a) closed-form map versus matrix-exponential composition
    oracle::ParamSampler sampler(1234);
    double worst_map = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const ConverterParams p = sampler.params();
        const SubintervalTimes t = sampler.times(p);
        const DiscreteStateSpace closed = assemble_period_map(p, t);
        Eigen::Matrix3d A;
        Eigen::Vector3d B;
        oracle::period_map_matrix_exp(p, t, A, B);
        const DerivedParams d = derive_params(p);
        const Eigen::Vector3d s(p.Vin / d.Zc, p.Vin, p.N * p.Vin);
        const Eigen::Matrix3d D = s.asDiagonal();
        const Eigen::Matrix3d Dinv = s.cwiseInverse().asDiagonal();
        worst_map = std::max(worst_map,
                             oracle::max_rel_diff(Eigen::Matrix3d(Dinv * closed.A * D),
                                                  Eigen::Matrix3d(Dinv * A * D)));
        worst_map =
            std::max(worst_map, oracle::max_rel_diff(Eigen::Vector3d(Dinv * closed.B),
                                                     Eigen::Vector3d(Dinv * B)));
    }
    report(7, worst_map <= 1e-8,
           fmt("(a) one-period map vs matrix-exponential oracle on 100 random "
               "instances: worst relative difference %.2e (limit 1e-8)",
               worst_map));

    // (b) small-signal model versus the finite-difference Jacobian
    double worst_jac = 0.0;
    for (double F : {1.01, 1.05, 1.1, 1.3, 1.5}) {
        for (double Qe : {0.5, 2.0, 5.0, 10.0}) {
            const ConverterParams p = design_point(BaseDesign{}, F, Qe);
            const DerivedParams d = derive_params(p);
            const OperatingPoint op = solve_cyclic_steady_state(p);
            const SmallSignalModel full = build_full_model(p, op);
            const Eigen::Vector3d s(p.Vin / d.Zc, p.Vin, p.N * p.Vin);
            const Eigen::Matrix3d D = s.asDiagonal();
            const Eigen::Matrix3d Dinv = s.cwiseInverse().asDiagonal();
            auto step3 = [&](const StateVector& x, double vin) {
                const StateVector q = step_period_model(x, vin, p).state;
                return Eigen::Vector3d(q.iL, q.vc, q.vo);
            };
            Eigen::Matrix3d Afd;
            Eigen::Vector3d Bfd;
            for (int j = 0; j < 3; ++j) {
                const double h = 1e-6 * s(j);
                StateVector xp = op.state, xm = op.state;
                (&xp.iL)[j] += h;
                (&xm.iL)[j] -= h;
                Afd.col(j) = (step3(xp, p.Vin) - step3(xm, p.Vin)) / (2.0 * h);
            }
            const double h = 1e-6 * p.Vin;
            Bfd = (step3(op.state, p.Vin + h) - step3(op.state, p.Vin - h)) / (2.0 * h);
            worst_jac = std::max(worst_jac,
                                 oracle::max_rel_diff(Eigen::Matrix3d(Dinv * full.A * D),
                                                      Eigen::Matrix3d(Dinv * Afd * D)));
            worst_jac = std::max(
                worst_jac, oracle::max_rel_diff(Eigen::Vector3d(Dinv * full.B * p.Vin),
                                                Eigen::Vector3d(Dinv * Bfd * p.Vin)));
        }
    }
    report(7, worst_jac <= 1e-3,
           fmt("(b) small-signal matrices vs finite-difference Jacobian on 20 grid "
               "points: worst relative difference %.2e (limit 1e-3)",
               worst_jac));

    // (c) rational transfer function versus its state-space realization
    const ConverterParams p = experimental_design();
    const DerivedParams d = derive_params(p);
    const OperatingPoint op = solve_cyclic_steady_state(p);
    const RationalTF tf = as_transfer_function(p, op);
    const double a = 4.0 * op.state.vo / (p.N * d.Zc * fprime_t1(p, op));
    Eigen::Matrix3d A;
    A << 1.0 + a, 0.0, 0.0,
         0.0, 1.0, 4.0 / p.N,
         0.0, -4.0 / (p.N * d.Zc * p.Co * d.omega_r), 1.0;
    const Eigen::Vector3d B(0.0, -4.0, 0.0);
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    double worst_tf = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double theta = angle(rng);
        const std::complex<double> z{std::cos(theta), std::sin(theta)};
        Eigen::Matrix3cd M =
            z * Eigen::Matrix3cd::Identity() - A.cast<std::complex<double>>();
        const Eigen::Vector3cd y = M.lu().solve(B.cast<std::complex<double>>());
        worst_tf = std::max(worst_tf, std::abs(tf.eval(z) - y(2)) / std::abs(y(2)));
    }
    report(7, worst_tf <= 1e-9,
           fmt("(c) rational transfer function vs state-space route at 50 unit-circle "
               "points: worst relative difference %.2e (limit 1e-9)",
               worst_tf));

    // (d) dc value equals the turns ratio
    const double h1_err = rel_err(std::abs(tf.eval({1.0, 0.0})), p.N);
    report(7, h1_err <= 1e-9,
           fmt("(d) H(1) equals the turns ratio: relative error %.2e (limit 1e-9)",
               h1_err));
}

static void criterion_8() {
    bool residuals_ok = true;
    bool march_ok = true;
    double worst_resid = 0.0, worst_march = 0.0;
    for (double F : {1.01, 1.02, 1.05, 1.08, 1.1}) {
        for (double Qe : {3.0, 5.0}) {
            const ConverterParams p = design_point(BaseDesign{}, F, Qe);
            const DerivedParams d = derive_params(p);
            const OperatingPoint op = solve_cyclic_steady_state(p);
            worst_resid = std::max(worst_resid, op.residual_norm);
            if (op.residual_norm >= 1e-9) residuals_ok = false;

            const PeriodStep m = march_model(p, initial_guess(p).state, 2000);
            const double diff = std::max(
                {std::abs(m.state.iL - op.state.iL) / (p.Vin / d.Zc),
                 std::abs(m.state.vc - op.state.vc) / p.Vin,
                 std::abs(m.state.vo - op.state.vo) / (p.N * p.Vin)});
            worst_march = std::max(worst_march, diff);
            if (diff > 1e-4) march_ok = false;
        }
    }
    const ConverterParams exp_design = experimental_design();
    const OperatingPoint exp_op = solve_cyclic_steady_state(exp_design);
    const bool dc_ok = rel_err(exp_op.dc_gain, 15.9) <= 0.10;
    report(8, residuals_ok && march_ok && dc_ok,
           fmt("steady-state contract: worst residual %.1e (limit 1e-9); worst "
               "2000-period marching gap %.1e (limit 1e-4) on 10 grid points; "
               "experimental dc gain %.2f (target 15.9 +- 10%%)",
               worst_resid, worst_march, exp_op.dc_gain));
}

int main() {
    std::printf("acceptance suite: series resonant converter audiosusceptibility\n");
    criterion_1_and_2();
    criterion_3();
    const auto grid = sweep_grid_results();
    criterion_4_and_5(grid);
    criterion_6();
    criterion_7();
    criterion_8();
    std::printf("%s: %d criterion check(s) failed\n",
                g_failures == 0 ? "SUCCESS" : "FAILURE", g_failures);
    return g_failures;
}
