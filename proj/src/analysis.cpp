#include "srcsd/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace srcsd {

namespace {

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

double model_peak(const ConverterParams& p, const OperatingPoint& op, double f_lo,
                  double f_hi) {
    const RationalTF tf = as_transfer_function(p, op);
    auto gain = [&](double f) { return evaluate_gain(tf, f, op.dc_gain).normalized_gain; };

    // The response has a single resonance; golden section plus endpoints.
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = f_lo, b = f_hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double g1v = gain(x1), g2v = gain(x2);
    while ((b - a) > 1e-4 * (f_hi - f_lo)) {
        if (g1v > g2v) {
            b = x2;
            x2 = x1;
            g2v = g1v;
            x1 = b - gr * (b - a);
            g1v = gain(x1);
        } else {
            a = x1;
            x1 = x2;
            g1v = g2v;
            x2 = a + gr * (b - a);
            g2v = gain(x2);
        }
    }
    return std::max({gain(0.5 * (a + b)), gain(f_lo), gain(f_hi)});
}

double sim_peak(const ConverterParams& p, const OperatingPoint& op, double f_lo,
                double f_hi) {
    return scan_peak_gain(p, f_lo, f_hi, -1.0, op.state).normalized_gain;
}

double linearized_peak(const ConverterParams& p, const OperatingPoint& op,
                       double f_lo, double f_hi) {
    const LinearizedMap m = linearize_switched_map(p, op.state);
    // Normalized by the map's own dc response H(1), which equals the dc gain
    // (the converter's dc characteristic is exactly linear in Vin).
    auto gain = [&](double f) { return std::abs(linearized_gain(m, f)) / m.dc_gain; };
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = f_lo, b = f_hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double g1v = gain(x1), g2v = gain(x2);
    while ((b - a) > 1e-4 * (f_hi - f_lo)) {
        if (g1v > g2v) {
            b = x2;
            x2 = x1;
            g2v = g1v;
            x1 = b - gr * (b - a);
            g1v = gain(x1);
        } else {
            a = x1;
            x1 = x2;
            g1v = g2v;
            x2 = a + gr * (b - a);
            g2v = gain(x2);
        }
    }
    return std::max({gain(0.5 * (a + b)), gain(f_lo), gain(f_hi)});
}

}  // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::model: return "model";
        case Method::sim: return "sim";
        case Method::linearized: return "linearized";
    }
    return "?";
}

ConverterParams design_point(const BaseDesign& base, double F, double Qe) {
    return params_from_ratios(F, Qe, base.fr, base.N, base.Ro, base.Vin, base.Co);
}

std::pair<double, double> ripple_band(const ConverterParams& p) {
    return {100.0, std::min(10e3, 0.25 * p.fs)};
}

void validate(const SweepGrid& grid) {
    if (grid.F.empty() || grid.Qe.empty()) {
        throw std::invalid_argument("sweep grid needs at least one F and one Qe value");
    }
    for (double F : grid.F) {
        if (!(F > 1.0 && F <= 2.0)) {
            throw std::invalid_argument("sweep F values must lie in (1, 2]");
        }
    }
    for (double q : grid.Qe) {
        if (!(q > 0.0)) throw std::invalid_argument("sweep Qe values must be positive");
    }
    const double fs_min = *std::min_element(grid.F.begin(), grid.F.end()) * grid.base.fr;
    for (double f : grid.f_in) {
        if (!(f > 0.0 && f < 0.5 * fs_min)) {
            throw std::invalid_argument("f_in values must lie in (0, fs/2) for every F");
        }
    }
}

std::vector<FrequencyResponse> frequency_sweep(const SweepGrid& grid, Method method,
                                               int threads) {
    validate(grid);
    const int nF = static_cast<int>(grid.F.size());
    const int nQ = static_cast<int>(grid.Qe.size());
    std::vector<FrequencyResponse> out(static_cast<std::size_t>(nF) * nQ);

    parallel_for(nF * nQ, threads, [&](int idx) {
        const double F = grid.F[idx / nQ];
        const double Qe = grid.Qe[idx % nQ];
        FrequencyResponse& resp = out[idx];
        resp.F = F;
        resp.Qe = Qe;
        resp.method = method;
        try {
            const ConverterParams p = design_point(grid.base, F, Qe);
            const OperatingPoint op = solve_cyclic_steady_state(p);
            resp.dc_gain = op.dc_gain;
            RationalTF tf{};
            LinearizedMap lin{};
            if (method == Method::model) tf = as_transfer_function(p, op);
            if (method == Method::linearized) lin = linearize_switched_map(p, op.state);
            resp.points.reserve(grid.f_in.size());
            for (double f : grid.f_in) {
                FrequencyResponsePoint pt;
                if (method == Method::model) {
                    const GainPoint g = evaluate_gain(tf, f, op.dc_gain);
                    pt = {f, g.gain, g.normalized_gain, g.ripple_gain_db};
                } else if (method == Method::linearized) {
                    const std::complex<double> g = linearized_gain(lin, f);
                    pt = {f, g, std::abs(g) / lin.dc_gain,
                          20.0 * std::log10(std::abs(g))};
                } else {
                    const GainMeasurement g = measure_gain_at(p, f, -1.0, op.state);
                    pt = {g.f_in, g.gain.gain, g.gain.normalized_gain,
                          g.gain.ripple_gain_db};
                }
                resp.points.push_back(pt);
            }
            resp.solved = true;
        } catch (const std::exception& e) {
            resp.solved = false;
            resp.error = e.what();
        }
    });
    return out;
}

double peak_normalized_gain(const ConverterParams& p, const OperatingPoint& op,
                            Method method, double f_lo, double f_hi) {
    if (!(f_lo > 0.0 && f_lo < f_hi && f_hi < 0.5 * p.fs)) {
        throw std::invalid_argument("need 0 < f_lo < f_hi < fs/2");
    }
    switch (method) {
        case Method::model: return model_peak(p, op, f_lo, f_hi);
        case Method::sim: return sim_peak(p, op, f_lo, f_hi);
        case Method::linearized: return linearized_peak(p, op, f_lo, f_hi);
    }
    throw std::invalid_argument("unknown method");
}

ResonanceComparison resonance_error(const ConverterParams& p,
                                    double min_prominence_db) {
    const OperatingPoint op = solve_cyclic_steady_state(p);
    const auto [f_lo, f_hi] = ripple_band(p);
    const double f_model = as_resonance_frequency(p, op).f_hz;
    const double f_sim =
        find_resonance_sim(p, f_lo, f_hi, -1.0, op.state, min_prominence_db).f_peak;
    return ResonanceComparison{f_model, f_sim, (f_sim - f_model) / f_sim * 100.0};
}

RegionCurve design_region_boundary(const std::vector<double>& qe_grid, double F_lo,
                                   double F_hi, Method method,
                                   const BaseDesign& base, int threads) {
    if (!(F_lo > 1.0 && F_lo < F_hi && F_hi <= 2.0)) {
        throw std::invalid_argument("F bounds must satisfy 1 < F_lo < F_hi <= 2");
    }
    if (method == Method::model) {
        throw std::invalid_argument(
            "the transfer-function peak does not vary with F; use the "
            "linearized or sim method for the design region");
    }
    RegionCurve curve;
    curve.method = method;
    curve.Qe = qe_grid;
    curve.F_boundary.assign(qe_grid.size(), 0.0);

    parallel_for(static_cast<int>(qe_grid.size()), threads, [&](int i) {
        const double Qe = qe_grid[i];
        auto peak_at = [&](double F) {
            const ConverterParams p = design_point(base, F, Qe);
            const OperatingPoint op = solve_cyclic_steady_state(p);
            const auto [f_lo, f_hi] = ripple_band(p);
            return peak_normalized_gain(p, op, method, f_lo, f_hi);
        };

        const double p_lo = peak_at(F_lo);
        const double p_hi = peak_at(F_hi);
        if (!(p_lo >= 1.0 && p_hi <= 1.0)) {
            throw std::runtime_error("boundary outside bounds at Qe = " +
                                     std::to_string(Qe));
        }
        // Bisection assumes the peak gain decreases with F; spot-check it.
        const double p_mid = peak_at(0.5 * (F_lo + F_hi));
        if (p_mid > p_lo * 1.02 || p_hi > p_mid * 1.02) {
            throw std::runtime_error("peak gain not monotone in F at Qe = " +
                                     std::to_string(Qe));
        }

        double lo = F_lo, hi = F_hi;
        double g_mid = p_mid;
        double mid = 0.5 * (lo + hi);
        while ((hi - lo) > 1e-3) {
            if (g_mid >= 1.0) {
                lo = mid;
            } else {
                hi = mid;
            }
            mid = 0.5 * (lo + hi);
            g_mid = peak_at(mid);
        }
        curve.F_boundary[i] = mid;
    });
    return curve;
}

}  // namespace srcsd
