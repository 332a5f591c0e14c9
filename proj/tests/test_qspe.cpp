#include "qhl/qspe.hpp"
#include "qhl/rng.hpp"
#include "qhl/sim.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qhl;
using namespace qhl::qspe;

namespace {

// Exact QSPE probabilities for the standard gate with angles (theta, zeta,
// chi): d cycles of (gate, Z(omega)) on the prepared two-level state. Serves
// as the independent oracle for the estimator tests.
struct GateProbs {
    std::vector<double> pX, pY;
};

GateProbs gate_probabilities(double theta, double zeta, int d, double chi = 0.0,
                             double prep_alpha = 0.0) {
    Eigen::Matrix2cd U;
    U << std::cos(theta) * std::exp(cplx(0, -zeta)),
        cplx(0, -1) * std::sin(theta) * std::exp(cplx(0, chi)),
        cplx(0, -1) * std::sin(theta) * std::exp(cplx(0, -chi)),
        std::cos(theta) * std::exp(cplx(0, zeta));
    GateProbs out;
    const auto omegas = omega_grid(d);
    const double ap = std::numbers::pi / 4 + prep_alpha;
    const double ai = std::numbers::pi / 4 - prep_alpha;
    const Eigen::Vector2cd plus(std::cos(ap), std::sin(ap));
    const Eigen::Vector2cd istate(std::cos(ai), cplx(0, 1) * std::sin(ai));
    for (double w : omegas) {
        Eigen::Matrix2cd Z = Eigen::Matrix2cd::Zero();
        Z(0, 0) = std::exp(cplx(0, w));
        Z(1, 1) = std::exp(cplx(0, -w));
        Eigen::Matrix2cd M = Eigen::Matrix2cd::Identity();
        for (int cyc = 0; cyc < d; ++cyc) M = Z * U * M;
        out.pX.push_back(std::norm((M * plus)(0)));
        out.pY.push_back(std::norm((M * istate)(0)));
    }
    return out;
}

FourierCoeffs gate_coeffs(double theta, double zeta, int d, double chi = 0.0,
                          double prep_alpha = 0.0) {
    auto probs = gate_probabilities(theta, zeta, d, chi, prep_alpha);
    return fourier(ReconstructionSeries::from_probabilities(probs.pX, probs.pY));
}

} // namespace

TEST_CASE("fourier basics") {
    const int d = 6;
    // constant series -> only c_0
    std::vector<cplx> h(2 * d - 1, cplx(0.3, -0.1));
    auto f = fourier(ReconstructionSeries(d, h));
    CHECK(std::abs(f.at(0) - cplx(0.3, -0.1)) < 1e-14);
    for (int k = 1; k <= d - 1; ++k) {
        CHECK(std::abs(f.at(k)) < 1e-14);
        CHECK(std::abs(f.at(-k)) < 1e-14);
    }

    // single tone e^{2 i omega_j} -> c_1 = 1
    const auto omegas = omega_grid(d);
    for (int j = 0; j < 2 * d - 1; ++j) h[j] = std::exp(cplx(0, 2 * omegas[j]));
    f = fourier(ReconstructionSeries(d, h));
    CHECK(std::abs(f.at(1) - cplx(1, 0)) < 1e-13);
    CHECK(std::abs(f.at(0)) < 1e-13);

    CHECK_THROWS_AS(ReconstructionSeries(4, std::vector<cplx>(5)), std::invalid_argument);
}

TEST_CASE("fourier round trip on random series") {
    RngStream rng(5);
    for (int d : {2, 5, 12}) {
        std::vector<cplx> h(2 * d - 1);
        for (auto& x : h) x = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
        auto back = inverse_fourier(fourier(ReconstructionSeries(d, h)));
        for (int j = 0; j < 2 * d - 1; ++j) CHECK(std::abs(back.h[j] - h[j]) < 1e-12);
    }
}

TEST_CASE("gate-derived coefficients are one-sided with c_k ~ i theta e^{-i(2k+1)zeta}") {
    const int d = 10;
    const double theta = 0.01, zeta = 0.04;
    auto f = gate_coeffs(theta, zeta, d);
    const double budget = std::pow(d * theta, 3);
    for (int k = 0; k <= d - 1; ++k) {
        const cplx pred = cplx(0, theta) * std::exp(cplx(0, -(2 * k + 1) * zeta));
        CHECK(std::abs(f.at(k) - pred) < budget);
    }
    // one-sidedness at d*theta = 0.05: negative side under 5% of positive side
    auto f2 = gate_coeffs(0.005, 0.02, 10);
    double pos = 0.0, neg = 0.0;
    for (int k = 0; k <= 9; ++k) pos += std::abs(f2.at(k));
    for (int k = 1; k <= 9; ++k) neg += std::abs(f2.at(-k));
    CHECK(neg <= 0.05 * pos);
}

TEST_CASE("estimators on the exact fixed point") {
    const int d = 10;
    FourierCoeffs f;
    f.d = d;
    f.c.assign(2 * d - 1, cplx(0, 0));
    for (int k = 0; k <= d - 1; ++k)
        f.at(k) = cplx(0, 0.05) * std::exp(cplx(0, -(2 * k + 1) * 0.02));
    CHECK(estimate_theta(f) == Catch::Approx(0.05).margin(1e-12));
    CHECK(estimate_zeta(f) == Catch::Approx(0.02).margin(1e-12));

    // zeta = 0 -> all Delta vanish
    for (int k = 0; k <= d - 1; ++k) f.at(k) = cplx(0, 0.05);
    CHECK(estimate_zeta(f) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("phase_differences") {
    FourierCoeffs f;
    f.d = 4;
    f.c.assign(7, cplx(1, 0));
    auto delta = phase_differences(f);
    REQUIRE(delta.size() == 3);
    for (double x : delta) CHECK(x == 0.0);

    for (int k = 0; k <= 3; ++k) f.at(k) = std::exp(cplx(0, -(2 * k + 1) * 0.3));
    delta = phase_differences(f);
    for (double x : delta) CHECK(x == Catch::Approx(0.6).margin(1e-13));

    f.at(1) = 0.0;
    CHECK_THROWS_AS(phase_differences(f), std::runtime_error);
}

TEST_CASE("end-to-end noiseless estimator error is third order in d theta") {
    const int d = 10;
    const double theta = 0.01, zeta = 0.04;
    auto f = gate_coeffs(theta, zeta, d);
    const double budget = std::pow(d * theta, 3);
    CHECK(std::abs(estimate_theta(f) - theta) <= budget);
    CHECK(std::abs(estimate_zeta(f) - zeta) <= budget);
}

TEST_CASE("chi recovery for a phased drive") {
    auto f = gate_coeffs(0.01, 0.03, 8, 0.3);
    const double zeta_hat = estimate_zeta(f);
    CHECK(estimate_chi(f, zeta_hat) == Catch::Approx(0.3).margin(1e-3));
}

TEST_CASE("rescaled estimators under the exact depolarizing channel") {
    const int d = 10;
    const double theta = 0.01, zeta = 0.04;

    // noiseless: alpha_hat ~ 1
    auto f0 = gate_coeffs(theta, zeta, d);
    auto r0 = rescaled_estimators(f0);
    CHECK(r0.alpha_hat == Catch::Approx(1.0).margin(5e-3));

    // exact channel p' = alpha p + (1-alpha)/4 at alpha = 0.5
    const double alpha = 0.5;
    auto probs = gate_probabilities(theta, zeta, d);
    for (auto& p : probs.pX) p = alpha * p + (1 - alpha) / 4;
    for (auto& p : probs.pY) p = alpha * p + (1 - alpha) / 4;
    auto f = fourier(ReconstructionSeries::from_probabilities(probs.pX, probs.pY));
    auto r = rescaled_estimators(f);
    CHECK(std::abs(r.theta_hat - theta) < std::pow(d * theta, 3));

    // the DC match recovers alpha and a usable c_0
    auto dc = match_depol_dc(f);
    CHECK(dc.alpha_dc == Catch::Approx(alpha).margin(1e-3));
    FourierCoeffs fc = f;
    fc.at(0) = dc.c0_corrected;
    CHECK(estimate_zeta(fc) == Catch::Approx(zeta).margin(1e-3));

    // unusable fidelity
    FourierCoeffs bad;
    bad.d = 3;
    bad.c.assign(5, cplx(0, 0));
    bad.at(0) = cplx(0.5, 0.5);
    bad.at(1) = cplx(0, 1e-4);
    bad.at(2) = cplx(0, 1e-4);
    CHECK_THROWS_AS(rescaled_estimators(bad), std::runtime_error);
}

TEST_CASE("scaled prep estimator and Theorem III.1 bound") {
    const int d = 10;
    const double theta = 0.01, zeta = 0.005;

    // alpha = 0 reduces to the plain estimator
    auto f = gate_coeffs(theta, zeta, d);
    auto est0 = scaled_prep_estimator(f, 0.0);
    CHECK(est0.theta_scaled == Catch::Approx(estimate_theta(f)).margin(1e-15));

    // bound value example: sqrt(2) * 121 * tan(0.02) * sin^2(0.01)
    const double bound = prep_discrepancy_bound(10, 0.01, 0.01);
    CHECK(bound == Catch::Approx(std::numbers::sqrt2 * 121.0 * std::tan(0.02) *
                                 std::sin(0.01) * std::sin(0.01)));

    // measured discrepancy within the bound on a small grid
    for (int dg : {3, 7, 12})
        for (double al : {0.005, 0.02})
            for (double th : {0.005, 0.02}) {
                auto fn = gate_coeffs(th, th / 2, dg);
                auto fo = gate_coeffs(th, th / 2, dg, 0.0, al);
                const double ideal = estimate_theta(fn);
                auto est = scaled_prep_estimator(fo, al);
                CHECK(std::abs(est.theta_scaled - ideal) <= prep_discrepancy_bound(dg, al, th));
                CHECK(std::abs(est.theta_unscaled - ideal) >=
                      std::abs(est.theta_scaled - ideal));
            }
}

TEST_CASE("invert_mapping") {
    auto [A0, B0] = invert_mapping(0.0, 0.0, InvertMethod::newton);
    CHECK(A0 == 0.0);
    CHECK(B0 == 0.0);

    // round trip through the forward map
    for (double A : {0.01, 0.2, 0.7})
        for (double B : {-0.4, 0.04, 0.9}) {
            auto [th, ze] = forward_map(A, B);
            auto [Ar, Br] = invert_mapping(th, ze, InvertMethod::newton);
            CHECK(Ar == Catch::Approx(A).margin(1e-10));
            CHECK(Br == Catch::Approx(B).margin(1e-10));
        }

    // small-angle vs newton differ at third order
    for (double A : {0.02, 0.1})
        for (double B : {0.05, 0.12}) {
            auto [th, ze] = forward_map(A, B);
            auto [As, Bs] = invert_mapping(th, ze, InvertMethod::small_angle);
            auto [An, Bn] = invert_mapping(th, ze, InvertMethod::newton);
            const double w3 = std::pow(A * A + B * B, 1.5);
            CHECK(std::abs(As - An) <= w3);
            CHECK(std::abs(Bs - Bn) <= w3);
        }

    CHECK_THROWS_AS(invert_mapping(-0.1, 0.0), std::invalid_argument);
}

TEST_CASE("analytic variance and CR bound") {
    auto v = analytic_variance(100000, 10, 0.01, VarianceMode::analog);
    CHECK(v.var_zeta == Catch::Approx(3.75e-6));
    CHECK(v.var_theta == Catch::Approx(1.25e-8));

    // hybrid theta variance is 2n times the analog one
    for (int n : {4, 10}) {
        auto a = analytic_variance(5000, 8, 0.02, VarianceMode::analog, n);
        auto h = analytic_variance(5000, 8, 0.02, VarianceMode::hybrid, n);
        CHECK(h.var_theta == Catch::Approx(2.0 * n * a.var_theta));
        CHECK(h.var_zeta == Catch::Approx(2.0 * n * a.var_zeta));
    }

    // CR saturation: identical closed forms
    for (auto mode : {VarianceMode::analog, VarianceMode::hybrid}) {
        auto av = analytic_variance(31415, 7, 0.013, mode, 6);
        auto cr = cr_bound(31415, 7, 0.013, mode, 6);
        CHECK(av.var_theta == cr.var_theta);
        CHECK(av.var_zeta == cr.var_zeta);
    }

    CHECK_THROWS_AS(analytic_variance(1000, 5, 0.0, VarianceMode::analog),
                    std::invalid_argument);
    CHECK(regime_ok(10, 0.01));
    CHECK_FALSE(regime_ok(10, 0.05));
}

TEST_CASE("wrap warning when 2 zeta approaches pi") {
    FourierCoeffs f;
    f.d = 4;
    f.c.assign(7, cplx(0, 0));
    for (int k = 0; k <= 3; ++k)
        f.at(k) = cplx(0, 0.05) * std::exp(cplx(0, -(2 * k + 1) * 1.5));
    bool wrap = false;
    (void)estimate_zeta(f, 0, &wrap);
    CHECK(wrap);
}
