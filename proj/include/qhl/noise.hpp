#pragma once

#include "qhl/model.hpp"
#include "qhl/sim.hpp"

#include <Eigen/Dense>
#include <Eigen/LU>
#include <cmath>
#include <functional>
#include <map>
#include <optional>

namespace qhl {

struct ReadoutParams {
    double p_loss = 0.0;   // P(read 1 | state 0)
    double p_anti = 0.0;   // P(read 0 | state 1)
};

struct NoiseConfig {
    std::optional<double> depol_alpha;     // evolution fidelity in [0,1]
    std::optional<double> prep_alpha;      // prep over-rotation angle (rad)
    std::optional<ReadoutParams> readout;
    std::optional<double> drift_gamma;     // relative X-drive shift
    // Optional drift schedule: circuit index -> gamma. Overrides drift_gamma
    // per circuit when set (the paper models a fixed shift; the schedule
    // hook covers the "time-dependent" reading).
    std::function<double(int)> drift_schedule;

    void validate() const {
        if (depol_alpha && (*depol_alpha < 0.0 || *depol_alpha > 1.0))
            throw std::invalid_argument("NoiseConfig: depol_alpha must be in [0,1]");
        if (readout) {
            if (readout->p_loss < 0 || readout->p_loss > 1 || readout->p_anti < 0 || readout->p_anti > 1)
                throw std::invalid_argument("NoiseConfig: readout probabilities must be in [0,1]");
        }
        if (drift_gamma && !std::isfinite(*drift_gamma))
            throw std::invalid_argument("NoiseConfig: drift_gamma must be finite");
    }

    bool any() const {
        return depol_alpha || prep_alpha || readout || drift_gamma || drift_schedule;
    }
};

// ---------------------------------------------------------------------------
// Depolarization, modeled at the probability level (Sec. III.A.a):
//   p' = alpha p + (1 - alpha)/4.
// ---------------------------------------------------------------------------
inline double depolarize(double p, double alpha) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("depolarize: p out of [0,1]");
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("depolarize: alpha out of [0,1]");
    return alpha * p + (1.0 - alpha) / 4.0;
}

// Distribution-level counterpart. Each active logical basis state receives
// the (1-alpha)/(4 rescale) share that makes its rescaled transition
// probability transform exactly as alpha p + (1-alpha)/4; the remaining
// (1-alpha)/2 leaks uniformly into the other bitstrings. For n = 2 with one
// pair this is the standard two-qubit depolarizing channel.
inline std::map<uint32_t, double> depolarize_distribution(const std::map<uint32_t, double>& dist,
                                                          double alpha,
                                                          const std::vector<SubspacePair>& pairs,
                                                          int n) {
    const double r = static_cast<double>(pairs.size());
    const double share = (1.0 - alpha) / (4.0 * r);
    std::map<uint32_t, double> out;
    for (const auto& [s, p] : dist) out[s] = alpha * p;
    std::map<uint32_t, bool> active;
    for (const auto& pr : pairs) {
        out[pr.v_m] += share;
        out[pr.v_n] += share;
        active[pr.v_m] = active[pr.v_n] = true;
    }
    const double dim = static_cast<double>(1u << n);
    const double rest = (1.0 - alpha) / 2.0;
    const double nother = dim - 2.0 * r;
    if (nother > 0) {
        const double each = rest / nother;
        for (uint32_t s = 0; s < (1u << n); ++s)
            if (!active.count(s)) out[s] += each;
    } else {
        // no room outside the active pairs (n=1-like edge); renormalize
        for (auto& [s, p] : out) p /= (alpha + (1.0 - alpha) / 2.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Coherent state-preparation error: the two prep amplitudes with the pulse
// angle over-rotated by alpha (drive-qubit rotation). kind selects the
// plus (Y pulse) or i (X pulse) preparation.
// ---------------------------------------------------------------------------
inline std::array<cplx, 2> coherent_prep(StateKind kind, double alpha) {
    const double ang = std::numbers::pi / 4 + (kind == StateKind::plus ? alpha : -alpha);
    if (kind == StateKind::plus) return {cplx(std::cos(ang), 0.0), cplx(std::sin(ang), 0.0)};
    return {cplx(std::cos(ang), 0.0), cplx(0.0, std::sin(ang))};
}

// ---------------------------------------------------------------------------
// Readout confusion matrix R[i][j] = P(read j-pattern | prepared i) built as
// the n-fold tensor product of [[1-p_loss, p_loss], [p_anti, 1-p_anti]].
// ---------------------------------------------------------------------------
inline Eigen::MatrixXd confusion_matrix(int n, double p_loss, double p_anti) {
    if (p_loss + p_anti == 1.0)
        throw std::invalid_argument("confusion_matrix: p_loss + p_anti = 1 is singular");
    const int dim = 1 << n;
    Eigen::MatrixXd R(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            double v = 1.0;
            for (int q = 0; q < n; ++q) {
                const int bi = bit_of(i, q, n), bj = bit_of(j, q, n);
                if (bi == 0) v *= (bj == 0 ? 1.0 - p_loss : p_loss);
                else v *= (bj == 0 ? p_anti : 1.0 - p_anti);
            }
            R(i, j) = v;
        }
    return R;
}

// q = R^T p : distribution seen by the detector.
inline Eigen::VectorXd apply_readout(const Eigen::VectorXd& p, const Eigen::MatrixXd& R) {
    return R.transpose() * p;
}

// p = (R^T)^{-1} q : exact mitigation at the distribution level.
inline Eigen::VectorXd mitigate(const Eigen::VectorXd& q, const Eigen::MatrixXd& R) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(R.transpose());
    const double det = std::abs(lu.determinant());
    if (det < 1e-300) throw std::runtime_error("mitigate: confusion matrix is singular");
    return lu.solve(q);
}

// Fast tensor-structured application for the simulation pipeline; equivalent
// to the explicit-matrix operations (tested against them) but O(n 2^n).
class ReadoutModel {
public:
    ReadoutModel(int n, ReadoutParams params) : n_(n), params_(params) {
        const double pl = params.p_loss, pa = params.p_anti;
        if (pl + pa == 1.0)
            throw std::invalid_argument("ReadoutModel: p_loss + p_anti = 1 is singular");
        // single-qubit R^T and its inverse
        rt_ = {1.0 - pl, pa, pl, 1.0 - pa};                 // column-major 2x2: q = R^T p
        const double idet = 1.0 / (1.0 - pl - pa);
        rti_ = {(1.0 - pa) * idet, -pa * idet, -pl * idet, (1.0 - pl) * idet};
    }

    std::vector<double> apply(const std::vector<double>& p) const { return sweep(p, rt_); }
    std::vector<double> mitigate(const std::vector<double>& q) const { return sweep(q, rti_); }

    std::map<uint32_t, double> apply(const std::map<uint32_t, double>& dist) const {
        std::vector<double> p(1u << n_, 0.0);
        for (const auto& [s, v] : dist) p[s] = v;
        const auto q = apply(p);
        std::map<uint32_t, double> out;
        for (uint32_t s = 0; s < q.size(); ++s)
            if (q[s] != 0.0) out[s] = q[s];
        return out;
    }

    int n() const { return n_; }
    ReadoutParams params() const { return params_; }

private:
    // Apply the 2x2 map m (column-major: out0 = m0*in0 + m1*in1, ...) along
    // every qubit axis of the length-2^n vector.
    std::vector<double> sweep(const std::vector<double>& in, const std::array<double, 4>& m) const {
        std::vector<double> v = in;
        for (int q = 0; q < n_; ++q) {
            const uint32_t stride = unit_bit(q, n_);
            for (uint32_t s = 0; s < v.size(); ++s) {
                if (s & stride) continue;
                const double a = v[s], b = v[s | stride];
                v[s] = m[0] * a + m[1] * b;
                v[s | stride] = m[2] * a + m[3] * b;
            }
        }
        return v;
    }

    int n_;
    ReadoutParams params_;
    std::array<double, 4> rt_, rti_;
};

// Mitigate an empirical frequency vector; clips negative entries to zero and
// renormalizes (finite-N inversion can leave the simplex). Returns the number
// of clipped entries via `clipped`.
inline std::vector<double> mitigate_frequencies(const std::vector<double>& q,
                                                const ReadoutModel& model, int* clipped = nullptr) {
    auto p = model.mitigate(q);
    int nclip = 0;
    double total = 0.0;
    for (double& x : p) {
        if (x < 0.0) { x = 0.0; ++nclip; }
        total += x;
    }
    if (total > 0.0)
        for (double& x : p) x /= total;
    if (clipped) *clipped = nclip;
    return p;
}

// ---------------------------------------------------------------------------
// Coherent drift on the drive amplitude: a_drive -> (1 + gamma) a_drive.
// ---------------------------------------------------------------------------
inline HamiltonianSpec drift(const HamiltonianSpec& spec, int drive, double gamma) {
    if (!std::isfinite(gamma)) throw std::invalid_argument("drift: gamma must be finite");
    HamiltonianSpec out = spec;
    out.a[drive] *= (1.0 + gamma);
    return out;
}

} // namespace qhl
