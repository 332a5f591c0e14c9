#pragma once

#include "qhl/model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace qhl::qspe {

using qhl::cplx;

inline std::vector<double> omega_grid(int d) {
    std::vector<double> w(2 * d - 1);
    for (int j = 0; j < 2 * d - 1; ++j) w[j] = j * std::numbers::pi / (2 * d - 1);
    return w;
}

// ---------------------------------------------------------------------------
// Reconstruction series h(omega_j) = pX - 1/2 + i (pY - 1/2) on the grid
// omega_j = j pi / (2d-1), j = 0..2d-2.
// ---------------------------------------------------------------------------
struct ReconstructionSeries {
    int d = 0;
    std::vector<cplx> h;   // length 2d-1

    ReconstructionSeries() = default;
    ReconstructionSeries(int d_, std::vector<cplx> h_) : d(d_), h(std::move(h_)) {
        if (static_cast<int>(h.size()) != 2 * d - 1)
            throw std::invalid_argument("ReconstructionSeries: need 2d-1 samples");
    }

    static ReconstructionSeries from_probabilities(const std::vector<double>& pX,
                                                   const std::vector<double>& pY) {
        if (pX.size() != pY.size() || pX.size() % 2 == 0)
            throw std::invalid_argument("ReconstructionSeries: need matching odd-length pX/pY");
        const int d = (static_cast<int>(pX.size()) + 1) / 2;
        std::vector<cplx> h(pX.size());
        for (size_t j = 0; j < pX.size(); ++j) h[j] = cplx(pX[j] - 0.5, pY[j] - 0.5);
        return ReconstructionSeries(d, std::move(h));
    }
};

// Fourier coefficients c_k, k in {-d+1, ..., d-1}, stored k = 0..d-1 then
// k = -d+1..-1 (negative k folded onto 2d-1+k).
struct FourierCoeffs {
    int d = 0;
    std::vector<cplx> c;   // length 2d-1 in the folded layout

    const cplx& at(int k) const {
        if (k < -(d - 1) || k > d - 1) throw std::out_of_range("FourierCoeffs: k out of range");
        return c[k >= 0 ? k : 2 * d - 1 + k];
    }
    cplx& at(int k) { return const_cast<cplx&>(std::as_const(*this).at(k)); }
};

// c_k = (1/(2d-1)) sum_j e^{-2 pi i j k/(2d-1)} h_j
inline FourierCoeffs fourier(const ReconstructionSeries& s) {
    const int n = 2 * s.d - 1;
    FourierCoeffs out;
    out.d = s.d;
    out.c.assign(n, cplx(0.0, 0.0));
    for (int k = 0; k < n; ++k) {
        cplx acc(0.0, 0.0);
        for (int j = 0; j < n; ++j) {
            const double ang = -2.0 * std::numbers::pi * j * k / n;
            acc += s.h[j] * std::exp(cplx(0.0, ang));
        }
        out.c[k] = acc / static_cast<double>(n);
    }
    return out;
}

// h_j = sum_k c_k e^{2 i k omega_j}
inline ReconstructionSeries inverse_fourier(const FourierCoeffs& f) {
    const int n = 2 * f.d - 1;
    std::vector<cplx> h(n, cplx(0.0, 0.0));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            const double ang = 2.0 * std::numbers::pi * j * k / n;
            h[j] += f.c[k] * std::exp(cplx(0.0, ang));
        }
    return ReconstructionSeries(f.d, std::move(h));
}

// ---------------------------------------------------------------------------
// Phase differences Delta_k = phase(c_k conj(c_{k+1})), k = k_min..d-2.
// ---------------------------------------------------------------------------
inline std::vector<double> phase_differences(const FourierCoeffs& f, int k_min = 0) {
    if (f.d < 2) throw std::invalid_argument("phase_differences: need d >= 2");
    std::vector<double> delta;
    for (int k = k_min; k + 1 <= f.d - 1; ++k) {
        const cplx a = f.at(k), b = f.at(k + 1);
        if (std::abs(a) == 0.0 || std::abs(b) == 0.0)
            throw std::runtime_error("phase_differences: zero coefficient, phase undefined");
        delta.push_back(std::arg(a * std::conj(b)));
    }
    return delta;
}

// Inverse-Laplacian weighted mean of a difference vector: the BLUE of the
// common step given the tridiagonal covariance structure; solved against the
// fixed Laplacian, never an explicit inverse.
inline double laplacian_weighted_mean(const std::vector<double>& delta) {
    const int m = static_cast<int>(delta.size());
    if (m == 0) throw std::invalid_argument("laplacian_weighted_mean: empty");
    Eigen::MatrixXd D = 2.0 * Eigen::MatrixXd::Identity(m, m);
    for (int i = 0; i + 1 < m; ++i) { D(i, i + 1) = -1.0; D(i + 1, i) = -1.0; }
    Eigen::LLT<Eigen::MatrixXd> llt(D);
    Eigen::VectorXd dv(m), one = Eigen::VectorXd::Ones(m);
    for (int i = 0; i < m; ++i) dv(i) = delta[i];
    const double num = one.dot(llt.solve(dv));
    const double den = one.dot(llt.solve(one));
    return num / den;
}

inline double estimate_theta(const FourierCoeffs& f, int k_min = 0) {
    double s = 0.0;
    int cnt = 0;
    for (int k = k_min; k <= f.d - 1; ++k) { s += std::abs(f.at(k)); ++cnt; }
    return s / cnt;
}

// zeta_hat = (1/2) * Laplacian-weighted mean of Delta. Emits a wrap warning
// through `near_wrap` when any |Delta_k| approaches pi (T chosen too large).
inline double estimate_zeta(const FourierCoeffs& f, int k_min = 0, bool* near_wrap = nullptr) {
    const auto delta = phase_differences(f, k_min);
    if (near_wrap) {
        *near_wrap = false;
        for (double dk : delta)
            if (std::abs(dk) > 0.9 * std::numbers::pi) *near_wrap = true;
    }
    return 0.5 * laplacian_weighted_mean(delta);
}

// chi_hat for a nonzero drive phase: c_0 ~ i theta e^{-i chi} e^{-i zeta}.
inline double estimate_chi(const FourierCoeffs& f, double zeta_hat) {
    return std::numbers::pi / 2 - zeta_hat - std::arg(f.at(0));
}

// ---------------------------------------------------------------------------
// Depolarization-rescaled estimators (Sec. III.A.a):
//   alpha_hat = 1 - 2 sqrt(2) (|c_0| - mean_{k>=1} |c_k|)
//   theta_hat = mean_{k>=1} |c_k| / alpha_hat
// ---------------------------------------------------------------------------
struct RescaledEstimate {
    double alpha_hat = 0.0;
    double theta_hat = 0.0;
};

inline RescaledEstimate rescaled_estimators(const FourierCoeffs& f) {
    if (f.d < 3) throw std::invalid_argument("rescaled_estimators: need d >= 3");
    double mean_rest = 0.0;
    for (int k = 1; k <= f.d - 1; ++k) mean_rest += std::abs(f.at(k));
    mean_rest /= (f.d - 1);
    const double alpha_hat = 1.0 - 2.0 * std::numbers::sqrt2 * (std::abs(f.at(0)) - mean_rest);
    if (alpha_hat <= 0.0)
        throw std::runtime_error("rescaled_estimators: unusable fidelity (alpha_hat <= 0)");
    return {alpha_hat, mean_rest / alpha_hat};
}

// ---------------------------------------------------------------------------
// DC-offset handling. SPAM errors shift the reconstruction series by a
// constant, which lands entirely in c_0:
//   depolarization:    -(1 - alpha)(1 + i)/4
//   prep over-rotation: sin(2 alpha_p)(-1 + i)/2
// The prep offset is a known function of alpha_p and is subtracted directly.
// The depolarization offset has unknown magnitude t = (1-alpha)/4 along the
// known direction -(1+i); `match_depol_dc` recovers t by requiring the
// corrected |c_0| to match the mean of the clean magnitudes, picking the
// quadratic root whose phase agrees with the extrapolation from c_1.
// ---------------------------------------------------------------------------
inline cplx prep_dc_offset(double prep_alpha) {
    return std::sin(2.0 * prep_alpha) * cplx(-0.5, 0.5);
}

struct DepolDcResult {
    cplx c0_corrected;
    double t = 0.0;              // recovered offset magnitude (1-alpha)/4
    double alpha_dc = 1.0;       // 1 - 4t
};

inline DepolDcResult match_depol_dc(const FourierCoeffs& f) {
    if (f.d < 3) throw std::invalid_argument("match_depol_dc: need d >= 3");
    double m = 0.0;
    for (int k = 1; k <= f.d - 1; ++k) m += std::abs(f.at(k));
    m /= (f.d - 1);
    const cplx z = f.at(0);
    // |z + t(1+i)|^2 = m^2  ->  2 t^2 + 2 Re(conj(z)(1+i)) t + |z|^2 - m^2 = 0
    const double bq = 2.0 * std::real(std::conj(z) * cplx(1.0, 1.0));
    const double aq = 2.0, cq = std::norm(z) - m * m;
    const double disc = bq * bq - 4.0 * aq * cq;
    DepolDcResult out;
    if (disc < 0.0) {
        // no intersection (noise pushed |c_0| inside); take the closest point
        out.t = -bq / (2.0 * aq);
        out.c0_corrected = z + out.t * cplx(1.0, 1.0);
    } else {
        const double r1 = (-bq + std::sqrt(disc)) / (2.0 * aq);
        const double r2 = (-bq - std::sqrt(disc)) / (2.0 * aq);
        const auto delta = phase_differences(f, 1);
        double mean_delta = 0.0;
        for (double x : delta) mean_delta += x;
        mean_delta /= delta.size();
        const double phase0 = std::arg(f.at(1)) + mean_delta;
        double best = 1e300;
        for (double t : {r1, r2}) {
            const cplx cand = z + t * cplx(1.0, 1.0);
            const double dph = std::abs(std::arg(cand * std::exp(cplx(0.0, -phase0))));
            if (dph < best) { best = dph; out.t = t; out.c0_corrected = cand; }
        }
    }
    out.alpha_dc = 1.0 - 4.0 * out.t;
    return out;
}

// ---------------------------------------------------------------------------
// Coherent-prep scaled estimator (Theorem III.1). The known DC offset is
// removed from c_0 before averaging; the unscaled/scaled estimates and the
// closed-form discrepancy bound sqrt(2)(d+1)^2 tan(2a) sin^2(theta) are
// exposed together so the bound can be certified numerically.
// ---------------------------------------------------------------------------
struct PrepScaledEstimate {
    double theta_unscaled = 0.0;   // DC-corrected, no 1/cos(2a) scale
    double theta_scaled = 0.0;     // theta_unscaled / cos(2a)
};

inline PrepScaledEstimate scaled_prep_estimator(const FourierCoeffs& f, double prep_alpha) {
    const double c2a = std::cos(2.0 * prep_alpha);
    if (c2a <= 0.0) throw std::invalid_argument("scaled_prep_estimator: need |2 alpha| < pi/2");
    double s = std::abs(f.at(0) - prep_dc_offset(prep_alpha));
    for (int k = 1; k <= f.d - 1; ++k) s += std::abs(f.at(k));
    PrepScaledEstimate out;
    out.theta_unscaled = s / f.d;
    out.theta_scaled = out.theta_unscaled / c2a;
    return out;
}

inline double prep_discrepancy_bound(int d, double prep_alpha, double theta) {
    const double st = std::sin(theta);
    return std::numbers::sqrt2 * (d + 1.0) * (d + 1.0) * std::tan(2.0 * prep_alpha) * st * st;
}

// ---------------------------------------------------------------------------
// Mapping between the QSPE angles and the block integrals (Eq. (9)/(21)):
//   tan(zeta)    = (B/w) tan(w),   w = sqrt(A^2 + B^2)
//   sin^2(theta) = (A/w)^2 sin^2(w)
// ---------------------------------------------------------------------------
enum class InvertMethod { small_angle, newton };

inline std::pair<double, double> forward_map(double A, double B) {
    const double w = std::hypot(A, B);
    if (w < 1e-12) return {A, B};
    const double theta = std::asin(std::clamp(A / w * std::abs(std::sin(w)), -1.0, 1.0));
    const double zeta = std::atan(B / w * std::tan(w));
    return {theta, zeta};
}

inline std::pair<double, double> invert_mapping(double theta, double zeta,
                                                InvertMethod method = InvertMethod::newton) {
    if (theta < 0.0) throw std::invalid_argument("invert_mapping: theta must be >= 0");
    if (method == InvertMethod::small_angle) return {theta, zeta};
    double A = theta, B = zeta;
    const double st = std::sin(theta), tz = std::tan(zeta);
    auto residual = [&](double a, double b, double& f1, double& f2) {
        const double w = std::hypot(a, b);
        if (w < 1e-9) { f1 = a - st; f2 = b - tz; return; }
        f1 = a * std::sin(w) / w - st;
        f2 = b * std::tan(w) / w - tz;
    };
    double f1, f2;
    residual(A, B, f1, f2);
    int it = 0;
    while (std::abs(f1) + std::abs(f2) > 1e-13) {
        if (++it > 50)
            throw std::runtime_error("invert_mapping: Newton did not converge in 50 iterations");
        const double w = std::hypot(A, B);
        double dA1, dB1, dA2, dB2;
        if (w < 1e-9) {
            dA1 = 1.0; dB1 = 0.0; dA2 = 0.0; dB2 = 1.0;
        } else {
            const double sw = std::sin(w), cw = std::cos(w), tw = std::tan(w);
            const double g = (cw - sw / w) / w;            // d(sin w / w)/dw
            const double gt = (1.0 / (cw * cw) - tw / w) / w;
            dA1 = sw / w + A * g * (A / w);
            dB1 = A * g * (B / w);
            dA2 = B * gt * (A / w);
            dB2 = tw / w + B * gt * (B / w);
        }
        const double det = dA1 * dB2 - dB1 * dA2;
        if (std::abs(det) < 1e-300)
            throw std::runtime_error("invert_mapping: singular Jacobian");
        A += (-f1 * dB2 + f2 * dB1) / det;
        B += (-f2 * dA1 + f1 * dA2) / det;
        residual(A, B, f1, f2);
    }
    if (A < 0.0 || (zeta != 0.0 && B * zeta < 0.0))
        throw std::runtime_error("invert_mapping: left the A > 0, sign(B) = sign(zeta) branch");
    return {A, B};
}

// ---------------------------------------------------------------------------
// Closed-form variance predictions (Eq. var_analog / var_parallel) and the
// matching Cramer-Rao values (SM S6). The two coincide by construction; the
// identity is part of the acceptance suite.
// ---------------------------------------------------------------------------
enum class VarianceMode { analog, hybrid };

struct VariancePair {
    double var_theta = 0.0;
    double var_zeta = 0.0;
};

inline bool regime_ok(int d, double theta) { return d * theta <= 0.2; }

inline VariancePair analytic_variance(uint64_t N, int d, double theta, VarianceMode mode, int n = 2) {
    if (theta == 0.0) throw std::invalid_argument("analytic_variance: zeta variance undefined at theta = 0");
    const double Nd = static_cast<double>(N);
    const double d2 = static_cast<double>(d) * d;
    const double d4 = d2 * d2;
    if (mode == VarianceMode::analog)
        return {1.0 / (8.0 * Nd * d2), 3.0 / (8.0 * Nd * d4 * theta * theta)};
    return {n / (4.0 * Nd * d2), 3.0 * n / (4.0 * Nd * d4 * theta * theta)};
}

inline VariancePair cr_bound(uint64_t N, int d, double theta, VarianceMode mode, int n = 2) {
    return analytic_variance(N, d, theta, mode, n);
}

} // namespace qhl::qspe
