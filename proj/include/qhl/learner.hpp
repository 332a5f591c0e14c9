#pragma once

#include "qhl/model.hpp"
#include "qhl/noise.hpp"
#include "qhl/qspe.hpp"
#include "qhl/rng.hpp"
#include "qhl/sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <thread>
#include <vector>

namespace qhl {

// ---------------------------------------------------------------------------
// Measurement: observed frequencies (or exact Born probabilities when the
// N -> infinity flag is set) over the sampled bitstrings.
// ---------------------------------------------------------------------------
struct Measurement {
    std::vector<uint32_t> states;
    std::vector<double> freq;
    uint64_t N = 0;
    bool exact = false;

    static Measurement from_record(const ShotRecord& rec) {
        Measurement m;
        m.N = rec.total;
        for (const auto& [s, c] : rec.counts) {
            m.states.push_back(s);
            m.freq.push_back(static_cast<double>(c) / rec.total);
        }
        return m;
    }

    static Measurement from_exact(const std::map<uint32_t, double>& dist, uint64_t N) {
        Measurement m;
        m.N = N;
        m.exact = true;
        for (const auto& [s, p] : dist) {
            m.states.push_back(s);
            m.freq.push_back(p);
        }
        return m;
    }

    Measurement resampled(RngStream& rng) const {
        if (exact) return *this;
        Measurement out = *this;
        const auto counts = rng.multinomial(N, freq);
        for (size_t i = 0; i < freq.size(); ++i)
            out.freq[i] = static_cast<double>(counts[i]) / N;
        return out;
    }
};

// One batch = the set of subspaces driven together in a circuit family:
// all active pairs in hybrid mode, a single pair in analog mode.
struct RoundBatch {
    std::vector<SubspacePair> pairs;
    // meas[kind][j]: kind 0 = plus (p_X), 1 = i (p_Y); j indexes omega_j.
    std::array<std::vector<Measurement>, 2> meas;
};

struct RoundData {
    int drive = 0;
    std::vector<SubspacePair> pairs;   // all active pairs this round
    std::vector<RoundBatch> batches;
};

struct RunData {
    int n = 0;
    ExperimentConfig config;
    NoiseConfig noise;
    std::vector<RoundData> rounds;
};

// ---------------------------------------------------------------------------
// Round planning: round for drive i uses the n-1-i subspaces whose coefficient
// rows stay linearly independent over the still-unknown couplings (j > i):
// the all-zero logical state plus the single-one states at k >= i+2.
// ---------------------------------------------------------------------------
struct RoundPlan {
    int drive = 0;
    std::vector<SubspacePair> pairs;
    Mode mode = Mode::analog;
};

inline std::vector<RoundPlan> plan_rounds(int n, Mode mode) {
    std::vector<RoundPlan> plans;
    for (int i = 0; i + 1 < n; ++i)
        plans.push_back({i, select_subspaces(n, i, n - 1 - i), mode});
    return plans;
}

// ---------------------------------------------------------------------------
// Quantum stage: run all circuits of one round and record measurements.
// `exact` skips sampling and records the Born probabilities directly.
// ---------------------------------------------------------------------------
inline RoundData run_round(const HamiltonianSpec& spec, const RoundPlan& plan,
                           const ExperimentConfig& config, const NoiseConfig& noise,
                           int round_index, bool exact = false) {
    config.validate();
    noise.validate();
    RoundData rd;
    rd.drive = plan.drive;
    rd.pairs = plan.pairs;

    std::vector<std::vector<SubspacePair>> batch_pairs;
    if (config.mode == Mode::hybrid) batch_pairs.push_back(plan.pairs);
    else
        for (const auto& p : plan.pairs) batch_pairs.push_back({p});

    const auto omegas = qspe::omega_grid(config.d);
    std::optional<ReadoutModel> readout;
    if (noise.readout) readout.emplace(spec.n, *noise.readout);

    int circuit_index = 0;
    for (size_t b = 0; b < batch_pairs.size(); ++b) {
        RoundBatch batch;
        batch.pairs = batch_pairs[b];
        for (int kind_i = 0; kind_i < 2; ++kind_i) {
            const StateKind kind = kind_i == 0 ? StateKind::plus : StateKind::i;
            batch.meas[kind_i].reserve(omegas.size());
            for (size_t j = 0; j < omegas.size(); ++j, ++circuit_index) {
                double gamma = noise.drift_gamma.value_or(0.0);
                if (noise.drift_schedule) gamma = noise.drift_schedule(circuit_index);
                const HamiltonianSpec truth =
                    (gamma != 0.0) ? drift(spec, plan.drive, gamma) : spec;

                CircuitOptions opts;
                opts.prep_alpha = noise.prep_alpha.value_or(0.0);
                auto dist = run_circuit(truth, batch.pairs, config, omegas[j], kind, opts);
                if (noise.depol_alpha)
                    dist = depolarize_distribution(dist, *noise.depol_alpha, batch.pairs, spec.n);
                if (readout) dist = readout->apply(dist);

                if (exact) {
                    batch.meas[kind_i].push_back(Measurement::from_exact(dist, config.N));
                } else {
                    RngStream rng = RngStream::keyed(
                        config.seed, {0x51u, static_cast<uint64_t>(round_index),
                                      static_cast<uint64_t>(b), static_cast<uint64_t>(kind_i),
                                      static_cast<uint64_t>(j)});
                    batch.meas[kind_i].push_back(
                        Measurement::from_record(sample(dist, config.N, rng)));
                }
            }
        }
        rd.batches.push_back(std::move(batch));
    }
    return rd;
}

// ---------------------------------------------------------------------------
// Classical stage.
// ---------------------------------------------------------------------------
struct SubspaceInference {
    double theta_hat = 0.0;
    double zeta_hat = 0.0;
    double A_hat = 0.0;
    double B_hat = 0.0;
    std::optional<double> alpha_hat;   // depolarization fidelity (rescaled estimator)
    std::optional<double> alpha_dc;    // fidelity from the DC-offset match
};

struct Diagnostics {
    int wrap_warnings = 0;
    int mitigation_clips = 0;
    std::vector<double> alpha_hats;
};

struct ClassicalResult {
    Eigen::MatrixXd c_hat;                         // symmetric coupling estimates
    std::vector<double> a_hat;                     // per round drive
    std::vector<std::vector<SubspaceInference>> subspaces;   // [round][k]
    Eigen::MatrixXd var_pred_c;                    // predicted Var(c_hat)
    std::vector<double> var_pred_a;
    Diagnostics diag;
};

namespace detail {

// p_hat(v_m) per pair from one measurement, with optional readout mitigation
// (full-vector tensor inversion, clipped to the simplex).
inline std::vector<double> pair_probabilities(const Measurement& m,
                                              const std::vector<SubspacePair>& pairs, int n,
                                              const std::optional<ReadoutModel>& readout,
                                              int rescale, Diagnostics* diag) {
    std::vector<double> out;
    out.reserve(pairs.size());
    if (!readout) {
        for (const auto& p : pairs) {
            double f = 0.0;
            for (size_t i = 0; i < m.states.size(); ++i)
                if (m.states[i] == p.v_m) { f = m.freq[i]; break; }
            out.push_back(rescale * f);
        }
        return out;
    }
    std::vector<double> q(1u << n, 0.0);
    for (size_t i = 0; i < m.states.size(); ++i) q[m.states[i]] = m.freq[i];
    int clipped = 0;
    const auto p = mitigate_frequencies(q, *readout, &clipped);
    if (diag) diag->mitigation_clips += clipped;
    for (const auto& pr : pairs) out.push_back(rescale * p[pr.v_m]);
    return out;
}

struct MitigationPlan {
    bool depol = false;                     // rescaled estimators + DC match
    std::optional<double> prep_alpha;       // known over-rotation
};

inline SubspaceInference infer_subspace(const std::vector<double>& pX,
                                        const std::vector<double>& pY, int d,
                                        const MitigationPlan& plan, Diagnostics* diag) {
    auto series = qspe::ReconstructionSeries::from_probabilities(pX, pY);
    auto f = qspe::fourier(series);

    SubspaceInference inf;
    bool depol_active = plan.depol;
    if (d >= 3) {
        // fidelity scan; switches the estimators when decoherence is evident
        double mean_rest = 0.0;
        for (int k = 1; k <= d - 1; ++k) mean_rest += std::abs(f.at(k));
        mean_rest /= (d - 1);
        const double alpha_scan =
            1.0 - 2.0 * std::numbers::sqrt2 * (std::abs(f.at(0)) - mean_rest);
        if (alpha_scan < 0.98) depol_active = true;
    }
    if (depol_active && d < 3)
        throw std::invalid_argument("infer_subspace: depolarization mitigation needs d >= 3");

    std::optional<double> alpha_paper;
    if (depol_active) {
        alpha_paper = qspe::rescaled_estimators(f).alpha_hat;
        inf.alpha_hat = alpha_paper;
    }
    if (plan.prep_alpha) {
        const double scale = alpha_paper.value_or(1.0);
        f.at(0) -= scale * qspe::prep_dc_offset(*plan.prep_alpha);
    }
    if (depol_active) {
        const auto dc = qspe::match_depol_dc(f);
        f.at(0) = dc.c0_corrected;
        inf.alpha_dc = dc.alpha_dc;
    }

    if (depol_active) {
        double mean_rest = 0.0;
        for (int k = 1; k <= d - 1; ++k) mean_rest += std::abs(f.at(k));
        mean_rest /= (d - 1);
        inf.theta_hat = mean_rest / *alpha_paper;
    } else {
        inf.theta_hat = qspe::estimate_theta(f);
    }
    if (plan.prep_alpha) inf.theta_hat /= std::cos(2.0 * *plan.prep_alpha);

    bool wrap = false;
    inf.zeta_hat = qspe::estimate_zeta(f, 0, &wrap);
    if (wrap && diag) ++diag->wrap_warnings;

    auto [A, B] = qspe::invert_mapping(inf.theta_hat, inf.zeta_hat, qspe::InvertMethod::newton);
    inf.A_hat = A;
    inf.B_hat = B;
    return inf;
}

} // namespace detail

// Classical pipeline over recorded (or resampled) rounds: per-subspace QSPE
// inference, then per-round linear recovery with earlier estimates moved to
// the right-hand side. `resample_seed` != nullopt replays the chain on
// multinomially resampled counts (bootstrap replica).
inline ClassicalResult classical_pipeline(const RunData& run,
                                          std::optional<std::pair<uint64_t, uint64_t>>
                                              resample_seed_replica = std::nullopt) {
    const int n = run.n;
    const int d = run.config.d;
    ClassicalResult res;
    res.c_hat = Eigen::MatrixXd::Zero(n, n);
    res.var_pred_c = Eigen::MatrixXd::Zero(n, n);

    std::optional<ReadoutModel> readout;
    if (run.noise.readout) readout.emplace(n, *run.noise.readout);
    detail::MitigationPlan plan;
    plan.depol = run.noise.depol_alpha.has_value();
    plan.prep_alpha = run.noise.prep_alpha;

    const qspe::VarianceMode vmode =
        run.config.mode == Mode::hybrid ? qspe::VarianceMode::hybrid : qspe::VarianceMode::analog;

    for (size_t ri = 0; ri < run.rounds.size(); ++ri) {
        const auto& round = run.rounds[ri];
        const int drive = round.drive;
        const int rescale = run.config.mode == Mode::hybrid
                                ? static_cast<int>(round.pairs.size())
                                : 1;

        std::vector<SubspaceInference> infs;
        std::vector<const SubspacePair*> inf_pairs;
        for (size_t b = 0; b < round.batches.size(); ++b) {
            const auto& batch = round.batches[b];
            const int npts = 2 * d - 1;
            std::vector<std::vector<double>> pX(batch.pairs.size(), std::vector<double>(npts));
            std::vector<std::vector<double>> pY = pX;
            for (int kind_i = 0; kind_i < 2; ++kind_i) {
                for (int j = 0; j < npts; ++j) {
                    Measurement meas = batch.meas[kind_i][j];
                    if (resample_seed_replica) {
                        RngStream rng = RngStream::keyed(
                            resample_seed_replica->first,
                            {0xB007u, resample_seed_replica->second, ri, b,
                             static_cast<uint64_t>(kind_i), static_cast<uint64_t>(j)});
                        meas = meas.resampled(rng);
                    }
                    const auto probs = detail::pair_probabilities(meas, batch.pairs, n, readout,
                                                                  rescale, &res.diag);
                    for (size_t k = 0; k < batch.pairs.size(); ++k)
                        (kind_i == 0 ? pX : pY)[k][j] = probs[k];
                }
            }
            for (size_t k = 0; k < batch.pairs.size(); ++k) {
                infs.push_back(detail::infer_subspace(pX[k], pY[k], d, plan, &res.diag));
                inf_pairs.push_back(&batch.pairs[k]);
                if (infs.back().alpha_hat) res.diag.alpha_hats.push_back(*infs.back().alpha_hat);
            }
        }
        res.subspaces.push_back(infs);

        // Linear recovery: B_hat_k - (known couplings) = sum_{j>drive} lambda_kj c_dj T
        std::vector<int> unknown_cols;
        for (int j = drive + 1; j < n; ++j) unknown_cols.push_back(j);
        const int r = static_cast<int>(unknown_cols.size());
        if (static_cast<int>(infs.size()) != r)
            throw std::runtime_error("classical_pipeline: round size mismatch");

        Eigen::MatrixXd Lambda(r, r);
        Eigen::VectorXd rhs(r), var_m(r);
        for (int k = 0; k < r; ++k) {
            const auto& pair = *inf_pairs[k];
            double b = infs[k].B_hat;
            double var_known = 0.0;
            for (int j = 0; j < drive; ++j) {
                b -= pair.lambda_pq(drive, j) * res.c_hat(drive, j) * run.config.T;
                var_known += res.var_pred_c(drive, j) * run.config.T * run.config.T;
            }
            rhs(k) = b;
            for (int c = 0; c < r; ++c)
                Lambda(k, c) = pair.lambda_pq(drive, unknown_cols[c]) * run.config.T;
            const double theta_k = std::max(infs[k].theta_hat, 1e-12);
            var_m(k) = qspe::analytic_variance(run.config.N, d, theta_k, vmode, n).var_zeta +
                       var_known;
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Lambda);
        const Eigen::VectorXd sol = lu.solve(rhs);
        const double resid = (Lambda * sol - rhs).norm();
        if (resid > 1e-10 * std::max(1.0, rhs.norm()))
            throw std::runtime_error("classical_pipeline: singular per-round system");
        const Eigen::MatrixXd Linv = lu.inverse();
        for (int c = 0; c < r; ++c) {
            const int j = unknown_cols[c];
            res.c_hat(drive, j) = res.c_hat(j, drive) = sol(c);
            double v = 0.0;
            for (int k = 0; k < r; ++k) v += Linv(c, k) * Linv(c, k) * var_m(k);
            res.var_pred_c(drive, j) = res.var_pred_c(j, drive) = v;
        }

        // a_i from the same round: inverse-variance weighted mean over subspaces
        // (equal variances here, so this is the plain mean).
        double wsum = 0.0, asum = 0.0;
        for (const auto& inf : infs) {
            const double theta_k = std::max(inf.theta_hat, 1e-12);
            const double w =
                1.0 / qspe::analytic_variance(run.config.N, d, theta_k, vmode, n).var_theta;
            wsum += w;
            asum += w * inf.A_hat / run.config.T;
        }
        res.a_hat.push_back(asum / wsum);
        res.var_pred_a.push_back(1.0 / wsum / (run.config.T * run.config.T));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Covariance propagation through the linear recovery (Sec. II.D):
// Sigma_c = Lambda^{-1} Sigma_m Lambda^{-T}; returns the diagonal.
// ---------------------------------------------------------------------------
inline Eigen::VectorXd propagate_covariance(const Eigen::MatrixXd& Lambda,
                                            const Eigen::VectorXd& var_m) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Lambda);
    if (std::abs(lu.determinant()) < 1e-300)
        throw std::invalid_argument("propagate_covariance: singular Lambda");
    const Eigen::MatrixXd Linv = lu.inverse();
    Eigen::VectorXd out(Lambda.rows());
    for (int i = 0; i < Lambda.rows(); ++i) {
        double v = 0.0;
        for (int j = 0; j < Lambda.cols(); ++j) v += Linv(i, j) * Linv(i, j) * var_m(j);
        out(i) = v;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bootstrap: resample every record multinomially at the observed frequencies
// and replay the classical pipeline only.
// ---------------------------------------------------------------------------
struct BootstrapResult {
    Eigen::MatrixXd var_c;          // per-coupling bootstrap variance
    std::vector<double> var_a;      // per-round drive amplitude
};

namespace detail {

inline void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

} // namespace detail

inline BootstrapResult bootstrap_variance(const RunData& run, int n_boot, uint64_t seed,
                                          int threads = 1) {
    if (n_boot < 100) throw std::invalid_argument("bootstrap_variance: need n_boot >= 100");
    const int n = run.n;
    std::vector<Eigen::MatrixXd> cs(n_boot);
    std::vector<std::vector<double>> as(n_boot);
    detail::parallel_for(n_boot, threads, [&](int r) {
        const auto res = classical_pipeline(run, std::make_pair(seed, static_cast<uint64_t>(r)));
        cs[r] = res.c_hat;
        as[r] = res.a_hat;
    });
    BootstrapResult out;
    out.var_c = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
    for (const auto& m : cs) mean += m;
    mean /= n_boot;
    for (const auto& m : cs) {
        const Eigen::MatrixXd dlt = m - mean;
        out.var_c += dlt.cwiseProduct(dlt);
    }
    out.var_c /= (n_boot - 1);
    const size_t nr = as.front().size();
    out.var_a.assign(nr, 0.0);
    for (size_t j = 0; j < nr; ++j) {
        double mu = 0.0;
        for (const auto& v : as) mu += v[j];
        mu /= n_boot;
        double var = 0.0;
        for (const auto& v : as) var += (v[j] - mu) * (v[j] - mu);
        out.var_a[j] = var / (n_boot - 1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Resource accounting (SM S7 model).
// ---------------------------------------------------------------------------
struct ResourceAccounting {
    int rounds = 0;                  // independent experiment rounds / batches
    uint64_t circuits = 0;           // rounds * 2(2d-1)
    uint64_t shots = 0;              // circuits * N
    double total_evolution_time = 0; // rounds * 2(2d-1) * d * N * T_cycle (us)
    double single_omega_time = 0;    // t_prep + d (T_cycle + t_z) (us)
    double round_time = 0;           // 2(2d-1) * single_omega_time (us)
};

inline ResourceAccounting resource_accounting(int n, int d, uint64_t N, Mode mode,
                                              double T_cycle, double t_prep = 0.03,
                                              double t_z = 0.049) {
    ResourceAccounting r;
    r.rounds = mode == Mode::hybrid ? n - 1 : n * (n - 1) / 2;
    const uint64_t per_round = 2ull * (2 * d - 1);
    r.circuits = r.rounds * per_round;
    r.shots = r.circuits * N;
    r.total_evolution_time = static_cast<double>(r.rounds) * per_round * d * N * T_cycle;
    r.single_omega_time = t_prep + d * (T_cycle + t_z);
    r.round_time = per_round * r.single_omega_time;
    return r;
}

// ---------------------------------------------------------------------------
// Top-level learning runs.
// ---------------------------------------------------------------------------
struct LearnReport {
    int n = 0;
    Mode mode = Mode::analog;
    Eigen::MatrixXd c_hat;
    std::vector<double> a_hat;
    Eigen::MatrixXd var_pred_c;
    Eigen::MatrixXd var_boot_c;
    std::vector<double> var_pred_a;
    std::vector<double> var_boot_a;
    ResourceAccounting resources;
    Diagnostics diag;
    std::vector<std::vector<SubspaceInference>> subspaces;
};

inline RunData collect_run_data(const HamiltonianSpec& spec, const ExperimentConfig& config,
                                const NoiseConfig& noise, bool exact = false) {
    for (int i = 0; i + 1 < spec.n; ++i)
        if (spec.a[i] <= 0.0)
            throw std::invalid_argument("learner: every drive amplitude a_i must be positive");
    RunData run;
    run.n = spec.n;
    run.config = config;
    run.noise = noise;
    const auto plans = plan_rounds(spec.n, config.mode);
    for (size_t i = 0; i < plans.size(); ++i)
        run.rounds.push_back(
            run_round(spec, plans[i], config, noise, static_cast<int>(i), exact));
    return run;
}

inline LearnReport learn_all(const HamiltonianSpec& spec, const ExperimentConfig& config,
                             const NoiseConfig& noise = {}, int n_boot = 0, int threads = 1,
                             bool exact = false) {
    const RunData run = collect_run_data(spec, config, noise, exact);
    const auto res = classical_pipeline(run);
    LearnReport rep;
    rep.n = spec.n;
    rep.mode = config.mode;
    rep.c_hat = res.c_hat;
    rep.a_hat = res.a_hat;
    rep.var_pred_c = res.var_pred_c;
    rep.var_pred_a = res.var_pred_a;
    rep.diag = res.diag;
    rep.subspaces = res.subspaces;
    rep.resources = resource_accounting(spec.n, config.d, config.N, config.mode, config.T);
    if (n_boot > 0) {
        const auto boot = bootstrap_variance(run, n_boot, config.seed ^ 0xB00Bu, threads);
        rep.var_boot_c = boot.var_c;
        rep.var_boot_a = boot.var_a;
    } else {
        rep.var_boot_c = Eigen::MatrixXd::Zero(spec.n, spec.n);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Targeted single-coupling mode: infer one c_ij from two chosen invariant
// subspaces whose coefficient rows differ only in the (i,j) column (the
// all-zero logical state and the single-one state at j), so that
// c_ij = (B_1 - B_2) / (2T). For n = 2 the single subspace suffices.
// ---------------------------------------------------------------------------
struct TargetedRun {
    int drive = 0, j = 0;
    RunData data;                      // one round, analog batches
};

inline TargetedRun collect_targeted_run(const HamiltonianSpec& spec, int i, int j,
                                        const ExperimentConfig& config,
                                        const NoiseConfig& noise, bool exact = false) {
    if (i < 0 || j < 0 || i >= spec.n || j >= spec.n || i == j)
        throw std::invalid_argument("collect_targeted_run: bad coupling indices");
    if (i > j) std::swap(i, j);
    if (spec.a[i] <= 0.0)
        throw std::invalid_argument("collect_targeted_run: drive amplitude must be positive");
    RoundPlan plan;
    plan.drive = i;
    plan.mode = Mode::analog;
    plan.pairs.emplace_back(spec.n, i, 0u);
    if (spec.n > 2) plan.pairs.emplace_back(spec.n, i, unit_bit(j, spec.n));
    ExperimentConfig cfg = config;
    cfg.mode = Mode::analog;
    TargetedRun tr;
    tr.drive = i;
    tr.j = j;
    tr.data.n = spec.n;
    tr.data.config = cfg;
    tr.data.noise = noise;
    tr.data.rounds.push_back(run_round(spec, plan, cfg, noise, 0, exact));
    return tr;
}

struct TargetedEstimate {
    double c_hat = 0.0;
    double theta_hat = 0.0;            // first subspace
    double var_pred = 0.0;             // from the analytic zeta variances
    double var_boot = 0.0;             // filled by targeted_bootstrap
    std::vector<SubspaceInference> subspaces;
    Diagnostics diag;
};

inline TargetedEstimate targeted_estimate(const TargetedRun& tr,
                                          std::optional<std::pair<uint64_t, uint64_t>>
                                              resample = std::nullopt) {
    const auto& run = tr.data;
    const int d = run.config.d;
    std::optional<ReadoutModel> readout;
    if (run.noise.readout) readout.emplace(run.n, *run.noise.readout);
    detail::MitigationPlan plan;
    plan.depol = run.noise.depol_alpha.has_value();
    plan.prep_alpha = run.noise.prep_alpha;

    TargetedEstimate est;
    const auto& round = run.rounds.front();
    for (size_t b = 0; b < round.batches.size(); ++b) {
        const auto& batch = round.batches[b];
        const int npts = 2 * d - 1;
        std::vector<double> pX(npts), pY(npts);
        for (int kind_i = 0; kind_i < 2; ++kind_i)
            for (int j = 0; j < npts; ++j) {
                Measurement meas = batch.meas[kind_i][j];
                if (resample) {
                    RngStream rng = RngStream::keyed(resample->first,
                                                     {0xB007u, resample->second, 0ull, b,
                                                      static_cast<uint64_t>(kind_i),
                                                      static_cast<uint64_t>(j)});
                    meas = meas.resampled(rng);
                }
                const auto probs =
                    detail::pair_probabilities(meas, batch.pairs, run.n, readout, 1, &est.diag);
                (kind_i == 0 ? pX : pY)[j] = probs[0];
            }
        est.subspaces.push_back(detail::infer_subspace(pX, pY, d, plan, &est.diag));
    }
    const double T = run.config.T;
    double var_pred = 0.0;
    for (const auto& inf : est.subspaces)
        var_pred += qspe::analytic_variance(run.config.N, d, std::max(inf.theta_hat, 1e-12),
                                            qspe::VarianceMode::analog, run.n)
                        .var_zeta;
    if (est.subspaces.size() == 1) {
        est.c_hat = est.subspaces[0].B_hat / T;
        est.var_pred = var_pred / (T * T);
    } else {
        est.c_hat = (est.subspaces[0].B_hat - est.subspaces[1].B_hat) / (2.0 * T);
        est.var_pred = var_pred / (4.0 * T * T);
    }
    est.theta_hat = est.subspaces[0].theta_hat;
    return est;
}

inline double targeted_bootstrap(const TargetedRun& tr, int n_boot, uint64_t seed,
                                 int threads = 1) {
    if (n_boot < 100) throw std::invalid_argument("targeted_bootstrap: need n_boot >= 100");
    std::vector<double> cs(n_boot);
    detail::parallel_for(n_boot, threads, [&](int r) {
        cs[r] = targeted_estimate(tr, std::make_pair(seed, static_cast<uint64_t>(r))).c_hat;
    });
    double mu = 0.0;
    for (double c : cs) mu += c;
    mu /= n_boot;
    double var = 0.0;
    for (double c : cs) var += (c - mu) * (c - mu);
    return var / (n_boot - 1);
}

struct PairEstimate {
    double a_hat = 0.0;
    double c12_hat = 0.0;
    double var_pred_c12 = 0.0;
    double var_boot_c12 = 0.0;
};

inline PairEstimate learn_pair(const HamiltonianSpec& spec, const ExperimentConfig& config,
                               const NoiseConfig& noise = {}, int n_boot = 0, int threads = 1,
                               bool exact = false) {
    if (spec.n != 2) throw std::invalid_argument("learn_pair: needs a two-qubit spec");
    const auto rep = learn_all(spec, config, noise, n_boot, threads, exact);
    return {rep.a_hat[0], rep.c_hat(0, 1), rep.var_pred_c(0, 1), rep.var_boot_c(0, 1)};
}

inline LearnReport learn_all_hybrid(const HamiltonianSpec& spec, ExperimentConfig config,
                                    const NoiseConfig& noise = {}, int n_boot = 0,
                                    int threads = 1, bool exact = false) {
    config.mode = Mode::hybrid;
    return learn_all(spec, config, noise, n_boot, threads, exact);
}

inline LearnReport learn_all_analog(const HamiltonianSpec& spec, ExperimentConfig config,
                                    const NoiseConfig& noise = {}, int n_boot = 0,
                                    int threads = 1, bool exact = false) {
    config.mode = Mode::analog;
    return learn_all(spec, config, noise, n_boot, threads, exact);
}

} // namespace qhl
