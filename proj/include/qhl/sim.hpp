#pragma once

#include "qhl/model.hpp"
#include "qhl/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>

namespace qhl {

enum class Mode { hybrid, analog };
enum class StateKind { plus, i };
enum class LogicalZImpl { ideal, emulated };

struct ExperimentConfig {
    int d = 10;                // cycle count (>= 2)
    uint64_t N = 100000;       // shots per circuit
    double T = 1e-3;           // per-cycle evolution time (us)
    Mode mode = Mode::analog;
    uint64_t seed = 0;

    void validate() const {
        if (d < 2) throw std::invalid_argument("ExperimentConfig: d must be >= 2");
        if (N < 1) throw std::invalid_argument("ExperimentConfig: N must be >= 1");
        if (T <= 0) throw std::invalid_argument("ExperimentConfig: T must be > 0");
    }
};

// ---------------------------------------------------------------------------
// Block propagator, Eq.-(20) form: for the integrated block [[C+B,A],[A,C-B]]
// the unit-determinant part is returned and the common phase e^{-iC} is kept
// separately (it cancels in transition probabilities but is retained so the
// global statevector is exact).
// ---------------------------------------------------------------------------
inline Eigen::Matrix2cd block_propagator(const BlockIntegrals& blk, double phi = 0.0) {
    const double A = blk.A, B = blk.B;
    const double w = std::hypot(A, B);
    double sinc;                       // sin(w)/w with the w -> 0 limit
    if (w < 1e-8) sinc = 1.0 - w * w / 6.0;
    else sinc = std::sin(w) / w;
    const cplx off = cplx(0.0, -1.0) * sinc * A;
    const cplx eip = std::exp(cplx(0.0, phi));
    Eigen::Matrix2cd U;
    U << cplx(std::cos(w), -sinc * B), off * eip,
         off * std::conj(eip),         cplx(std::cos(w), sinc * B);
    return U;
}

inline cplx block_common_phase(const BlockIntegrals& blk) {
    return std::exp(cplx(0.0, -blk.C));
}

// ---------------------------------------------------------------------------
// SubspaceState: amplitudes confined to the union of the active pairs.
// ---------------------------------------------------------------------------
struct SubspaceState {
    std::vector<SubspacePair> pairs;
    std::vector<std::array<cplx, 2>> amps;   // (logical zero, logical one) per pair

    double norm2() const {
        double s = 0.0;
        for (const auto& a : amps) s += std::norm(a[0]) + std::norm(a[1]);
        return s;
    }

    std::map<uint32_t, cplx> global_amplitudes() const {
        std::map<uint32_t, cplx> g;
        for (size_t k = 0; k < pairs.size(); ++k) {
            g[pairs[k].v_m] += amps[k][0];
            g[pairs[k].v_n] += amps[k][1];
        }
        return g;
    }
};

// Prepare |+_L> or |i_L> over the active pairs. `prep_alpha` models the
// coherent over-rotation error: each prep pulse rotates by an extra +alpha
// on its signed angle, so the plus state (Y pulse, +pi/4) becomes
// (cos(pi/4+a), sin(pi/4+a)) while the i state (X pulse, -pi/4) becomes
// (cos(pi/4-a), i sin(pi/4-a)).
inline SubspaceState prepare_state(const std::vector<SubspacePair>& pairs, StateKind kind,
                                   Mode mode, double prep_alpha = 0.0) {
    if (pairs.empty()) throw std::invalid_argument("prepare_state: no pairs");
    if (mode == Mode::analog && pairs.size() != 1)
        throw std::invalid_argument("prepare_state: analog mode takes exactly one pair");
    std::map<uint32_t, int> seen;
    for (const auto& p : pairs) {
        if (++seen[p.v_m] > 1 || ++seen[p.v_n] > 1)
            throw std::invalid_argument("prepare_state: duplicate bitstrings across pairs");
    }
    const double k = static_cast<double>(pairs.size());
    const double ang = std::numbers::pi / 4 + (kind == StateKind::plus ? prep_alpha : -prep_alpha);
    const cplx one_amp = (kind == StateKind::plus) ? cplx(std::sin(ang), 0.0)
                                                   : cplx(0.0, std::sin(ang));
    SubspaceState st;
    st.pairs = pairs;
    st.amps.assign(pairs.size(), {std::cos(ang) / std::sqrt(k), one_amp / std::sqrt(k)});
    return st;
}

// Logical Z rotation. Convention: the logical-zero amplitude acquires
// e^{+i omega}, the logical-one e^{-i omega}. (The inference pipeline's
// Fourier conventions force this sign; see the README convention note.)
// The emulated analog variant realizes the same relative phase with the
// always-on coupling Hamiltonian b Z_drive + sum c_pq Z_p Z_q evolved for
// unit time, with b solved from the couplings; its residual common phase is
// retained per pair.
inline void apply_logical_z(SubspaceState& state, double omega,
                            LogicalZImpl impl = LogicalZImpl::ideal,
                            const HamiltonianSpec* spec = nullptr) {
    if (impl == LogicalZImpl::ideal) {
        const cplx pz = std::exp(cplx(0.0, omega));
        for (auto& a : state.amps) {
            a[0] *= pz;
            a[1] *= std::conj(pz);
        }
        return;
    }
    if (!spec) throw std::invalid_argument("apply_logical_z: emulated variant needs the spec");
    if (state.pairs.size() != 1)
        throw std::invalid_argument("apply_logical_z: emulated variant is analog-only (one pair)");
    const auto& pair = state.pairs.front();
    // Diagonal ZZ rates on the two basis states (rad/us at unit time).
    double lam_plus = 0.0, lam_minus = 0.0;
    for (int p = 0; p < spec->n; ++p)
        for (int q = p + 1; q < spec->n; ++q) {
            const double t = pair.lambda_pq(p, q) * spec->coupling(p, q);
            lam_plus += t;
            lam_minus += (pair.touches_drive(p, q) ? -t : t);
        }
    // phases: v_m -> e^{-i(b + lam_plus)}, v_n -> e^{-i(-b + lam_minus)};
    // demand the v_m amplitude lead by e^{+2i omega}:  b = -omega - (lam_plus - lam_minus)/2.
    const double b = -omega - (lam_plus - lam_minus) / 2.0;
    state.amps[0][0] *= std::exp(cplx(0.0, -(b + lam_plus)));
    state.amps[0][1] *= std::exp(cplx(0.0, -(-b + lam_minus)));
}

// ---------------------------------------------------------------------------
// One QSPE circuit: d cycles of (block propagators, logical Z(omega)) on the
// prepared state; returns the exact Born distribution over bitstrings.
// ---------------------------------------------------------------------------
struct CircuitOptions {
    double prep_alpha = 0.0;
    LogicalZImpl z_impl = LogicalZImpl::ideal;
};

inline std::map<uint32_t, double> run_circuit(const HamiltonianSpec& spec,
                                              const std::vector<SubspacePair>& pairs,
                                              const ExperimentConfig& config, double omega,
                                              StateKind kind, CircuitOptions opts = {}) {
    config.validate();
    SubspaceState st = prepare_state(pairs, kind, config.mode, opts.prep_alpha);
    std::vector<Eigen::Matrix2cd> props(pairs.size());
    std::vector<cplx> phases(pairs.size());
    for (size_t k = 0; k < pairs.size(); ++k) {
        const BlockIntegrals blk = project_block(spec, pairs[k], config.T);
        props[k] = block_propagator(blk, spec.phi);
        phases[k] = block_common_phase(blk);
    }
    for (int cycle = 0; cycle < config.d; ++cycle) {
        for (size_t k = 0; k < pairs.size(); ++k) {
            const Eigen::Vector2cd v = phases[k] * (props[k] * Eigen::Vector2cd(st.amps[k][0], st.amps[k][1]));
            st.amps[k] = {v(0), v(1)};
        }
        apply_logical_z(st, omega, opts.z_impl, &spec);
    }
    std::map<uint32_t, double> dist;
    for (size_t k = 0; k < pairs.size(); ++k) {
        dist[pairs[k].v_m] += std::norm(st.amps[k][0]);
        dist[pairs[k].v_n] += std::norm(st.amps[k][1]);
    }
    return dist;
}

// ---------------------------------------------------------------------------
// Measurement records.
// ---------------------------------------------------------------------------
struct ShotRecord {
    std::map<uint32_t, uint64_t> counts;
    uint64_t total = 0;

    double frequency(uint32_t state) const {
        auto it = counts.find(state);
        return it == counts.end() ? 0.0 : static_cast<double>(it->second) / total;
    }
};

inline ShotRecord sample(const std::map<uint32_t, double>& dist, uint64_t N, RngStream& rng) {
    std::vector<uint32_t> states;
    std::vector<double> probs;
    states.reserve(dist.size());
    probs.reserve(dist.size());
    for (const auto& [s, p] : dist) {
        states.push_back(s);
        probs.push_back(std::max(0.0, p));
    }
    const auto counts = rng.multinomial(N, probs);
    ShotRecord rec;
    rec.total = N;
    for (size_t i = 0; i < states.size(); ++i)
        if (counts[i] > 0) rec.counts[states[i]] = counts[i];
    return rec;
}

// Per-pair rescaled transition probability: p_hat = rescale * count(v_m)/N.
inline std::vector<double> transition_probabilities(const ShotRecord& rec,
                                                    const std::vector<SubspacePair>& pairs,
                                                    int rescale) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(rescale * rec.frequency(p.v_m));
    return out;
}

} // namespace qhl
