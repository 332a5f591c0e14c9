#include "qhl/noise.hpp"
#include "qhl/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qhl;

TEST_CASE("depolarize basics and affinity") {
    CHECK(depolarize(0.37, 1.0) == Catch::Approx(0.37));
    CHECK(depolarize(0.5, 0.8) == Catch::Approx(0.45));
    CHECK(depolarize(0.0, 0.0) == Catch::Approx(0.25));
    CHECK_THROWS_AS(depolarize(1.5, 0.5), std::invalid_argument);

    // affine in p
    const double l = 0.3, p1 = 0.2, p2 = 0.9, a = 0.7;
    CHECK(depolarize(l * p1 + (1 - l) * p2, a) ==
          Catch::Approx(l * depolarize(p1, a) + (1 - l) * depolarize(p2, a)));
}

TEST_CASE("depolarize_distribution matches the probability-level model") {
    // two qubits, one pair: exact two-qubit depolarizing channel
    std::vector<SubspacePair> pairs = {SubspacePair(2, 0, 0u)};
    std::map<uint32_t, double> dist = {{0u, 0.7}, {2u, 0.3}};
    auto noisy = depolarize_distribution(dist, 0.8, pairs, 2);
    CHECK(noisy.at(0u) == Catch::Approx(depolarize(0.7, 0.8)));
    CHECK(noisy.at(2u) == Catch::Approx(depolarize(0.3, 0.8)));
    CHECK(noisy.at(1u) == Catch::Approx(0.05));
    CHECK(noisy.at(3u) == Catch::Approx(0.05));

    // hybrid: the rescaled per-pair probability transforms as alpha p + (1-alpha)/4
    auto sel = select_subspaces(4, 0, 3);
    std::map<uint32_t, double> d4;
    double v = 0.05;
    for (const auto& p : sel) {
        d4[p.v_m] = v;
        d4[p.v_n] = 1.0 / 3 - v;
        v += 0.04;
    }
    const int r = 3;
    auto noisy4 = depolarize_distribution(d4, 0.6, sel, 4);
    double total = 0.0;
    for (const auto& [s, p] : noisy4) total += p;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
    for (const auto& p : sel) {
        const double before = r * d4[p.v_m];
        const double after = r * noisy4[p.v_m];
        CHECK(after == Catch::Approx(depolarize(before, 0.6)));
    }
}

TEST_CASE("coherent_prep amplitudes") {
    auto ideal = coherent_prep(StateKind::plus, 0.0);
    CHECK(std::abs(ideal[0] - cplx(1 / std::sqrt(2.0), 0)) < 1e-15);
    CHECK(std::abs(ideal[1] - cplx(1 / std::sqrt(2.0), 0)) < 1e-15);

    auto rot = coherent_prep(StateKind::plus, 0.01);
    CHECK(std::real(rot[0]) == Catch::Approx(std::cos(std::numbers::pi / 4 + 0.01)));
    CHECK(std::real(rot[1]) == Catch::Approx(std::sin(std::numbers::pi / 4 + 0.01)));

    // full over-rotation turns the plus prep into the flipped state
    auto full = coherent_prep(StateKind::plus, std::numbers::pi / 4);
    CHECK(std::abs(full[0]) < 1e-15);
    CHECK(std::abs(full[1] - cplx(1, 0)) < 1e-15);

    // the i-state pulse over-rotates on its signed angle
    auto irot = coherent_prep(StateKind::i, 0.01);
    CHECK(std::real(irot[0]) == Catch::Approx(std::cos(std::numbers::pi / 4 - 0.01)));
    CHECK(std::imag(irot[1]) == Catch::Approx(std::sin(std::numbers::pi / 4 - 0.01)));
}

TEST_CASE("confusion matrix, readout application, mitigation") {
    auto R1 = confusion_matrix(1, 0.01, 0.08);
    Eigen::VectorXd p(2);
    p << 1.0, 0.0;
    auto q = apply_readout(p, R1);
    CHECK(q(0) == Catch::Approx(0.99));
    CHECK(q(1) == Catch::Approx(0.01));

    auto R0 = confusion_matrix(2, 0.0, 0.0);
    CHECK((R0 - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-15);

    CHECK_THROWS_AS(confusion_matrix(1, 0.4, 0.6), std::invalid_argument);

    RngStream rng(31);
    for (int n : {1, 2, 3, 4}) {
        auto R = confusion_matrix(n, 0.01, 0.08);
        // rows are stochastic
        for (int i = 0; i < R.rows(); ++i) CHECK(R.row(i).sum() == Catch::Approx(1.0));
        Eigen::VectorXd pr(1 << n);
        double total = 0.0;
        for (int i = 0; i < pr.size(); ++i) total += (pr(i) = rng.uniform());
        pr /= total;
        auto qr = apply_readout(pr, R);
        CHECK(qr.sum() == Catch::Approx(1.0).margin(1e-12));
        auto back = mitigate(qr, R);
        CHECK((back - pr).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("tensor readout model agrees with the explicit matrix") {
    RngStream rng(37);
    for (int n : {2, 3, 10}) {
        ReadoutModel model(n, {0.01, 0.08});
        auto R = n <= 6 ? confusion_matrix(n, 0.01, 0.08) : Eigen::MatrixXd();
        std::vector<double> p(1 << n);
        double total = 0.0;
        for (auto& x : p) total += (x = rng.uniform());
        for (auto& x : p) x /= total;
        auto q = model.apply(p);
        auto back = model.mitigate(q);
        double worst = 0.0;
        for (size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(back[i] - p[i]));
        CHECK(worst < 1e-12);
        if (n <= 6) {
            Eigen::VectorXd pv(1 << n);
            for (int i = 0; i < pv.size(); ++i) pv(i) = p[i];
            auto qv = apply_readout(pv, R);
            for (int i = 0; i < pv.size(); ++i) CHECK(q[i] == Catch::Approx(qv(i)).margin(1e-13));
        }
    }
}

TEST_CASE("mitigation clipping keeps frequencies on the simplex") {
    ReadoutModel model(2, {0.05, 0.2});
    // a frequency vector that inverts to a negative entry
    std::vector<double> q = {0.0, 0.0, 0.05, 0.95};
    int clipped = 0;
    auto p = mitigate_frequencies(q, model, &clipped);
    double total = 0.0;
    for (double x : p) {
        CHECK(x >= 0.0);
        total += x;
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
    CHECK(clipped > 0);
}

TEST_CASE("drift") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
    c(0, 1) = c(1, 0) = 40.0;
    HamiltonianSpec spec(2, {0.01, 0.01}, c);
    auto same = drift(spec, 0, 0.0);
    CHECK(same.a[0] == Catch::Approx(0.01));
    auto up = drift(spec, 0, 0.1);
    CHECK(up.a[0] == Catch::Approx(0.011));
    CHECK(up.c(0, 1) == Catch::Approx(40.0));
    auto dead = drift(spec, 0, -1.0);
    CHECK(dead.a[0] == 0.0);   // degenerate; the learner rejects this spec
    CHECK_THROWS_AS(drift(spec, 0, std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
}
