#include "srcsd/small_signal.hpp"

#include <cmath>
#include <numbers>

namespace srcsd {

namespace {

constexpr double kPi = std::numbers::pi;

double spectral_radius_of(const Eigen::Matrix3d& A) {
    return A.eigenvalues().cwiseAbs().maxCoeff();
}

// Crossing slopes in normalized form for degeneracy checks.
double normalized_slope(double fp, const ConverterParams& p, const DerivedParams& d) {
    return fp / (d.omega_r * p.Vin / d.Zc);
}

}  // namespace

double fprime_t1(const ConverterParams& p, const OperatingPoint& op) {
    const DerivedParams d = derive_params(p);
    const double ang = d.omega_r * op.times.T1;
    return d.omega_r * (op.state.iL * std::sin(ang) +
                        (op.state.vc - p.Vin - op.state.vo / p.N) / d.Zc * std::cos(ang));
}

double fprime_t3(const ConverterParams& p, const OperatingPoint& op) {
    const DerivedParams d = derive_params(p);
    const double wr = d.omega_r;
    const double T1 = op.times.T1, T3 = op.times.T3, Ts = op.times.Ts;
    return wr * (op.state.iL * std::sin(wr * T3) +
                 (op.state.vc - p.Vin - op.state.vo / p.N) / d.Zc * std::cos(wr * T3) +
                 2.0 * op.state.vo / (p.N * d.Zc) * std::cos(wr * (T3 - T1)) +
                 2.0 * p.Vin / d.Zc * std::cos(wr * (T3 - 0.5 * Ts)));
}

TimingSensitivities build_timing_sensitivities(const ConverterParams& p,
                                               const OperatingPoint& op) {
    const DerivedParams d = derive_params(p);
    const double wr = d.omega_r;
    const double Zc = d.Zc;
    const double N = p.N;
    const double lambda = filter_lambda(p);
    const double g2c = G2_const(wr, lambda);
    const double Ts = op.times.Ts, T1 = op.times.T1, T3 = op.times.T3;
    const double IL = op.state.iL, Vc = op.state.vc, Vo = op.state.vo, Vin = p.Vin;

    TimingSensitivities ts;
    ts.fprime_t1 = fprime_t1(p, op);
    ts.fprime_t3 = fprime_t3(p, op);
    if (std::abs(normalized_slope(ts.fprime_t1, p, d)) < 1e-9 ||
        std::abs(normalized_slope(ts.fprime_t3, p, d)) < 1e-9) {
        throw DegenerateOperatingPointError(
            "crossing slope is numerically zero at the operating point");
    }

    auto S = [&](double u) { return std::sin(wr * u); };
    auto C = [&](double u) { return std::cos(wr * u); };
    auto E = [&](double u) { return std::exp(-lambda * (Ts - u)); };
    const double K = -1.0 / (N * p.Co * g2c);

    const double td11 = 2.0 * wr * Vo * C(Ts - T1) / (N * Zc);
    const double td12 = -2.0 * wr * Vo * C(Ts - T3) / (N * Zc);
    const double td21 = 2.0 * wr * Vo * S(Ts - T1) / N;
    const double td22 = -2.0 * wr * Vo * S(Ts - T3) / N;

    const double td31 =
        -2.0 * IL * C(T1) / (N * p.Co) * E(T1) +
        2.0 * Vc * S(T1) / (N * Zc * p.Co) * E(T1) +
        (K * Vo / (N * Zc)) *
            (2.0 * g2c * E(T1) * S(T1) - 4.0 * wr * E(T3) * g1_prime(T3 - T1, wr, lambda) +
             2.0 * wr * E(Ts) * g1_prime(Ts - T1, wr, lambda) + 2.0 * wr * lambda * E(T1)) -
        2.0 * Vin * S(T1) / (N * Zc * p.Co) * E(T1);

    const double td32 =
        2.0 * IL * C(T3) / (N * p.Co) * E(T3) -
        2.0 * Vc * S(T3) / (N * Zc * p.Co) * E(T3) +
        (K * Vo / (N * Zc)) *
            (E(T3) * (-2.0 * g2c * S(T3) + 2.0 * wr * lambda +
                      4.0 * g2c * S(T3 - T1)) -
             2.0 * wr * E(Ts) * g1_prime(Ts - T3, wr, lambda)) +
        (K * Vin / Zc) * E(T3) *
            (-2.0 * g2c * S(T3) + 4.0 * lambda * g2(T3 - 0.5 * Ts, wr, lambda) -
             4.0 * wr * g2_prime(T3 - 0.5 * Ts, wr, lambda));

    ts.map_dtimes << td11, td12,
                     td21, td22,
                     td31, td32;

    const double fp1 = ts.fprime_t1;
    const double fp3 = ts.fprime_t3;
    const double chain = 2.0 * Vo * wr * C(T3 - T1) / (N * Zc * fp1 * fp3);

    const double tx11 = C(T1) / fp1;
    const double tx12 = -S(T1) / (Zc * fp1);
    const double tx13 = S(T1) / (N * Zc * fp1);
    const double tx21 = C(T3) / fp3 + chain * C(T1);
    const double tx22 = -S(T3) / (Zc * fp3) - chain * S(T1) / Zc;
    const double tx23 = (S(T3) - 2.0 * S(T3 - T1)) / (N * Zc * fp3) + chain * S(T1) / (N * Zc);

    ts.times_dstate << tx11, tx12, tx13,
                       tx21, tx22, tx23;

    const double tu11 = S(T1) / (Zc * fp1);
    const double tu21 = (S(T3) - 2.0 * S(T3 - 0.5 * Ts)) / (Zc * fp3) + chain * S(T1) / Zc;
    ts.times_dinput << tu11, tu21;

    return ts;
}

SmallSignalModel build_full_model(const ConverterParams& p, const OperatingPoint& op) {
    const DiscreteStateSpace map = assemble_period_map(p, op.times);
    const TimingSensitivities ts = build_timing_sensitivities(p, op);

    SmallSignalModel m;
    m.A = map.A + ts.map_dtimes * ts.times_dstate;
    m.B = map.B + ts.map_dtimes * ts.times_dinput;
    m.variant = ModelVariant::full;
    m.op = op;
    m.spectral_radius = spectral_radius_of(m.A);
    return m;
}

SmallSignalModel build_simplified_model(const ConverterParams& p,
                                        const OperatingPoint& op) {
    const DerivedParams d = derive_params(p);
    const double wr = d.omega_r;
    const double Zc = d.Zc;
    const double N = p.N;
    const double Ts = op.times.Ts;
    const double Vo = op.state.vo;
    const double fp1 = fprime_t1(p, op);

    SmallSignalModel m;
    m.A << 1.0 + 4.0 * wr * Vo / (N * Zc * fp1), -std::sin(wr * Ts) / Zc, 0.0,
           Zc * std::sin(wr * Ts), 1.0, 4.0 / N,
           0.0, -4.0 / (N * Zc * p.Co * wr), 1.0;
    m.B << 0.0, -4.0, 0.0;
    m.variant = ModelVariant::simplified;
    m.op = op;
    m.spectral_radius = spectral_radius_of(m.A);
    return m;
}

std::array<double, 2> RationalTF::num_z() const {
    return {num[0] - num[1], num[1]};
}

std::array<double, 4> RationalTF::den_z() const {
    return {den[0] - den[1] + den[2] - den[3],
            den[1] - 2.0 * den[2] + 3.0 * den[3],
            den[2] - 3.0 * den[3],
            den[3]};
}

std::complex<double> RationalTF::eval(std::complex<double> z) const {
    const std::complex<double> w = z - 1.0;
    if (degenerate_fprime) {
        // Cancelled form: the numerator zero and the real denominator pole
        // coincide, so the ratio stays finite as the crossing slope vanishes.
        return num[1] / (w * w + den[1]);
    }
    const std::complex<double> n = num[0] + num[1] * w;
    const std::complex<double> dd = den[0] + w * (den[1] + w * (den[2] + w * den[3]));
    return n / dd;
}

RationalTF as_transfer_function(const ConverterParams& p, const OperatingPoint& op) {
    const DerivedParams d = derive_params(p);
    const double wr = d.omega_r;
    const double Zc = d.Zc;
    const double N = p.N;
    const double Vo = op.state.vo;
    const double fp1 = fprime_t1(p, op);

    RationalTF tf;
    tf.Ts = op.times.Ts;
    tf.degenerate_fprime = std::abs(normalized_slope(fp1, p, d)) < 1e-9;

    const double lead = 16.0 / (N * Zc * p.Co * wr);
    const double a = 4.0 * Vo / (N * Zc * fp1);
    const double b = 16.0 / (N * N * Zc * p.Co * wr);
    tf.num = {-lead * a, lead};
    tf.den = {-a * b, b, -a, 1.0};
    return tf;
}

ResonanceInfo as_resonance_frequency(const ConverterParams& p,
                                     const OperatingPoint& op) {
    const DerivedParams d = derive_params(p);
    const double Ts = op.times.Ts;

    ResonanceInfo info;
    info.omega_rad =
        std::atan(std::sqrt(16.0 / (p.N * p.N * p.Co * d.omega_r * d.Zc))) / Ts;
    info.f_hz = info.omega_rad / (2.0 * kPi);

    // Cross-check route: angle of the complex pole pair of the denominator,
    // extracted from the companion matrix of the cubic in (z - 1).
    const RationalTF tf = as_transfer_function(p, op);
    Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
    companion(1, 0) = 1.0;
    companion(2, 1) = 1.0;
    companion(0, 2) = -tf.den[0] / tf.den[3];
    companion(1, 2) = -tf.den[1] / tf.den[3];
    companion(2, 2) = -tf.den[2] / tf.den[3];
    const Eigen::Vector3cd roots = companion.eigenvalues();
    double best_im = 0.0;
    std::complex<double> pole{1.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        const std::complex<double> z = 1.0 + roots[i];
        if (std::abs(z.imag()) > best_im) {
            best_im = std::abs(z.imag());
            pole = z;
        }
    }
    info.f_pole_hz = std::atan2(std::abs(pole.imag()), pole.real()) / (2.0 * kPi * Ts);
    return info;
}

GainPoint evaluate_gain(const RationalTF& tf, double f_in, double dc_gain) {
    const double nyquist = 0.5 / tf.Ts;
    if (!(f_in > 0.0 && f_in < nyquist)) {
        throw std::invalid_argument("ripple frequency must lie in (0, fs/2)");
    }
    const double theta = 2.0 * kPi * f_in * tf.Ts;
    const std::complex<double> z{std::cos(theta), std::sin(theta)};
    GainPoint g;
    g.gain = tf.eval(z);
    g.ripple_gain_db = 20.0 * std::log10(std::abs(g.gain));
    g.normalized_gain = std::abs(g.gain) / std::abs(dc_gain);
    g.phase_deg = std::arg(g.gain) * 180.0 / kPi;
    return g;
}

}  // namespace srcsd
