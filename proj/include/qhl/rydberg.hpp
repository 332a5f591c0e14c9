#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace qhl::rydberg {

// Van der Waals coefficient, um^6 rad/us. Units are fixed project-wide as
// (um, us, rad).
inline constexpr double kC6 = 5420503.0;

struct RydbergCase {
    double R = 0.0;   // atom distance (um)
    double V = 0.0;   // coupling C6/R^6 (rad/us)
    double T = 0.0;   // evolution time (us)
    double b = 0.0;   // effective integral V*T (rad)
};

// Benchmark cases (distance, coupling, time, integral). Shipped alongside as
// data/rydberg_benchmarks.json; the loader cross-checks against this table.
inline const std::vector<RydbergCase>& benchmark_cases() {
    static const std::vector<RydbergCase> cases = {
        {7.16, 40.0, 1e-3, 0.04},
        {7.52, 30.0, 1e-3, 0.03},
        {8.04, 20.0, 1e-3, 0.02},
    };
    return cases;
}

inline double coupling_from_distance(double R) {
    if (R <= 0.0) throw std::invalid_argument("coupling_from_distance: R must be positive");
    return kC6 / std::pow(R, 6);
}

// R_hat = (C6 / (b_hat / T))^{1/6}
inline double distance_from_coupling(double b_hat, double T) {
    if (b_hat <= 0.0) throw std::invalid_argument("distance_from_coupling: b_hat must be positive");
    if (T <= 0.0) throw std::invalid_argument("distance_from_coupling: T must be positive");
    return std::pow(kC6 / (b_hat / T), 1.0 / 6.0);
}

// Var(R) = Var(b) * (R / (6 b))^2  (linearized sixth-power sensitivity)
inline double variance_convert(double var_b, double b, double R) {
    if (b <= 0.0 || R <= 0.0) throw std::invalid_argument("variance_convert: b, R must be positive");
    const double g = R / (6.0 * b);
    return var_b * g * g;
}

} // namespace qhl::rydberg
