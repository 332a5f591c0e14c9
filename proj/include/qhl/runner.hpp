#pragma once

#include "qhl/config.hpp"
#include "qhl/learner.hpp"
#include "qhl/oracle.hpp"
#include "qhl/rydberg.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace qhl::runner {

namespace fs = std::filesystem;

inline uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Outputs are written to a temp file and renamed so partial runs never leave
// ambiguous artifacts behind.
inline void write_atomic(const fs::path& path, const std::string& contents) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
    }
    fs::rename(tmp, path);
}

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<int>& x, const std::vector<double>& y) {
    const size_t m = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < m; ++i) {
        const double lx = std::log(static_cast<double>(x[i]));
        const double ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Records CSV (round, batch, kind, omega index, bitstring, count) for offline
// reanalysis / replay.
// ---------------------------------------------------------------------------
inline std::string records_to_csv(const RunData& run) {
    std::ostringstream out;
    out << "round,batch,kind,omega_index,bitstring,count\n";
    for (size_t ri = 0; ri < run.rounds.size(); ++ri) {
        const auto& round = run.rounds[ri];
        for (size_t b = 0; b < round.batches.size(); ++b)
            for (int kind = 0; kind < 2; ++kind) {
                const auto& series = round.batches[b].meas[kind];
                for (size_t j = 0; j < series.size(); ++j) {
                    const auto& m = series[j];
                    for (size_t s = 0; s < m.states.size(); ++s) {
                        const auto count = static_cast<uint64_t>(std::llround(m.freq[s] * m.N));
                        out << ri << ',' << b << ',' << (kind == 0 ? "plus" : "i") << ',' << j
                            << ',' << bitstring(m.states[s], run.n) << ',' << count << '\n';
                    }
                }
            }
    }
    return out.str();
}

inline void load_records_csv(const std::string& path, RunData& run) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read records file " + path);
    std::string line;
    std::getline(in, line);   // header
    std::vector<std::vector<std::array<std::map<uint32_t, uint64_t>, 2>>> acc;
    auto batch_count = [&](size_t ri) {
        return run.rounds.at(ri).batches.size();
    };
    acc.resize(run.rounds.size());
    for (size_t ri = 0; ri < run.rounds.size(); ++ri)
        acc[ri].resize(batch_count(ri) * (2 * run.config.d - 1));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        std::getline(ls, tok, ','); const size_t ri = std::stoul(tok);
        std::getline(ls, tok, ','); const size_t b = std::stoul(tok);
        std::getline(ls, tok, ','); const int kind = (tok == "plus") ? 0 : 1;
        std::getline(ls, tok, ','); const size_t j = std::stoul(tok);
        std::getline(ls, tok, ','); const uint32_t state = parse_bitstring(tok);
        std::getline(ls, tok, ','); const uint64_t count = std::stoull(tok);
        acc.at(ri).at(b * (2 * run.config.d - 1) + j)[kind][state] += count;
    }
    for (size_t ri = 0; ri < run.rounds.size(); ++ri)
        for (size_t b = 0; b < run.rounds[ri].batches.size(); ++b)
            for (int kind = 0; kind < 2; ++kind)
                for (int j = 0; j < 2 * run.config.d - 1; ++j) {
                    ShotRecord rec;
                    for (const auto& [s, c] : acc[ri][b * (2 * run.config.d - 1) + j][kind]) {
                        rec.counts[s] = c;
                        rec.total += c;
                    }
                    if (rec.total == 0)
                        throw std::runtime_error("records file is missing circuits");
                    run.rounds[ri].batches[b].meas[kind][j] = Measurement::from_record(rec);
                }
}

// ---------------------------------------------------------------------------
// JSON fragments.
// ---------------------------------------------------------------------------
inline json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

inline json resources_to_json(const ResourceAccounting& r) {
    return {{"rounds", r.rounds},
            {"circuits", r.circuits},
            {"shots", r.shots},
            {"total_evolution_time_us", r.total_evolution_time},
            {"single_omega_time_us", r.single_omega_time},
            {"round_time_us", r.round_time}};
}

inline json report_from_learn(const LearnReport& rep) {
    json sub = json::array();
    for (const auto& round : rep.subspaces) {
        json rj = json::array();
        for (const auto& s : round) {
            json e = {{"theta_hat", s.theta_hat},
                      {"zeta_hat", s.zeta_hat},
                      {"A_hat", s.A_hat},
                      {"B_hat", s.B_hat}};
            if (s.alpha_hat) e["alpha_hat"] = *s.alpha_hat;
            if (s.alpha_dc) e["alpha_dc"] = *s.alpha_dc;
            rj.push_back(e);
        }
        sub.push_back(rj);
    }
    return {{"n", rep.n},
            {"mode", rep.mode == Mode::hybrid ? "hybrid" : "analog"},
            {"c_hat", matrix_to_json(rep.c_hat)},
            {"a_hat", rep.a_hat},
            {"var_pred_c", matrix_to_json(rep.var_pred_c)},
            {"var_boot_c", matrix_to_json(rep.var_boot_c)},
            {"var_pred_a", rep.var_pred_a},
            {"var_boot_a", rep.var_boot_a},
            {"resources", resources_to_json(rep.resources)},
            {"diagnostics",
             {{"wrap_warnings", rep.diag.wrap_warnings},
              {"mitigation_clips", rep.diag.mitigation_clips},
              {"alpha_hats", rep.diag.alpha_hats}}},
            {"subspaces", sub}};
}

struct RunPaths {
    fs::path dir;
    fs::path report() const { return dir / "report.json"; }
    fs::path manifest() const { return dir / "manifest.json"; }
    fs::path records() const { return dir / "records.csv"; }
    fs::path sweep_csv(const std::string& tag) const { return dir / ("sweep_" + tag + ".csv"); }
};

inline void write_manifest(const RunPaths& paths, const RunConfig& cfg) {
    json m = {{"schema_version", cfg.schema_version},
              {"tool", "qhlearn"},
              {"scenario", to_string(cfg.scenario)},
              {"seed", cfg.seed},
              {"config", cfg.raw},
              {"config_hash", hex64(fnv1a64(cfg.raw.dump()))}};
    write_atomic(paths.manifest(), m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Sweep over cycle counts for one targeted coupling; emits the CSV rows
// (d, var_boot, var_pred, cr_bound, slope_fit) with the final fitted slope
// repeated per row.
// ---------------------------------------------------------------------------
struct SweepResult {
    std::vector<int> d;
    std::vector<double> var_boot, var_pred, cr, c_hat;
    double slope = 0.0;
};

inline SweepResult run_sweep(const HamiltonianSpec& spec, int ti, int tj,
                             const std::vector<int>& d_list, const ExperimentConfig& base,
                             const NoiseConfig& noise, int n_boot, int threads,
                             uint64_t seed) {
    SweepResult res;
    for (int d : d_list) {
        ExperimentConfig cfg = base;
        cfg.d = d;
        cfg.seed = splitmix64(seed ^ (0xD000 + static_cast<uint64_t>(d)));
        const auto run = collect_targeted_run(spec, ti, tj, cfg, noise);
        auto est = targeted_estimate(run);
        est.var_boot = targeted_bootstrap(run, n_boot, cfg.seed ^ 0xB00Bu, threads);
        res.d.push_back(d);
        res.c_hat.push_back(est.c_hat);
        res.var_boot.push_back(est.var_boot);
        res.var_pred.push_back(est.var_pred);
        res.cr.push_back(est.var_pred);   // CR saturation: identical closed forms
    }
    res.slope = loglog_slope(res.d, res.var_boot);
    return res;
}

inline std::string sweep_to_csv(const SweepResult& s) {
    std::ostringstream out;
    out << "d,var_boot,var_pred,cr_bound,slope_fit\n";
    for (size_t i = 0; i < s.d.size(); ++i)
        out << s.d[i] << ',' << fmt17(s.var_boot[i]) << ',' << fmt17(s.var_pred[i]) << ','
            << fmt17(s.cr[i]) << ',' << fmt17(s.slope) << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Scenario execution. Returns 0 on success, 1 on scenario failure.
// ---------------------------------------------------------------------------
inline int run_scenario(const RunConfig& cfg, std::ostream& log = std::cerr) {
    RunPaths paths{fs::path(cfg.output.empty() ? "." : cfg.output)};
    fs::create_directories(paths.dir);
    json report;
    report["scenario"] = to_string(cfg.scenario);
    report["seed"] = cfg.seed;

    switch (cfg.scenario) {
        case Scenario::learn_pair:
        case Scenario::learn_all: {
            HamiltonianSpec spec = materialize_spec(cfg);
            if (cfg.scenario == Scenario::learn_pair && spec.n != 2)
                throw std::invalid_argument("learn-pair requires n = 2");
            RunData run = collect_run_data(spec, cfg.experiment, cfg.noise);
            if (cfg.records) load_records_csv(*cfg.records, run);
            const auto res = classical_pipeline(run);
            LearnReport rep;
            rep.n = spec.n;
            rep.mode = cfg.experiment.mode;
            rep.c_hat = res.c_hat;
            rep.a_hat = res.a_hat;
            rep.var_pred_c = res.var_pred_c;
            rep.var_pred_a = res.var_pred_a;
            rep.diag = res.diag;
            rep.subspaces = res.subspaces;
            rep.var_boot_c = Eigen::MatrixXd::Zero(spec.n, spec.n);
            rep.resources = resource_accounting(spec.n, cfg.experiment.d, cfg.experiment.N,
                                                cfg.experiment.mode, cfg.experiment.T);
            if (cfg.bootstrap > 0) {
                const auto boot =
                    bootstrap_variance(run, cfg.bootstrap, cfg.seed ^ 0xB00Bu, cfg.threads);
                rep.var_boot_c = boot.var_c;
                rep.var_boot_a = boot.var_a;
            }
            report["learn"] = report_from_learn(rep);
            report["spec"] = {{"n", spec.n}, {"a", spec.a}, {"c", matrix_to_json(spec.c)}};
            write_atomic(paths.records(), records_to_csv(run));
            break;
        }
        case Scenario::sweep_d: {
            HamiltonianSpec spec = materialize_spec(cfg);
            const auto [ti, tj] = cfg.target.value_or(std::make_pair(0, 1));
            const auto sweep = run_sweep(spec, ti, tj, cfg.d_list, cfg.experiment, cfg.noise,
                                         std::max(cfg.bootstrap, 100), cfg.threads, cfg.seed);
            write_atomic(paths.sweep_csv("d"), sweep_to_csv(sweep));
            report["sweep"] = {{"target", {ti, tj}},
                               {"slope_fit", sweep.slope},
                               {"d", sweep.d},
                               {"c_hat", sweep.c_hat},
                               {"var_boot", sweep.var_boot},
                               {"var_pred", sweep.var_pred}};
            log << "sweep-d slope: " << sweep.slope << "\n";
            break;
        }
        case Scenario::robustness: {
            HamiltonianSpec spec = materialize_spec(cfg);
            const auto [ti, tj] = cfg.target.value_or(std::make_pair(0, 1));
            struct Case { std::string tag; NoiseConfig noise; };
            NoiseConfig joint = cfg.noise;
            std::vector<Case> cases = {{"none", NoiseConfig{}}};
            if (cfg.noise.readout) cases.push_back({"readout", [&] { NoiseConfig nz; nz.readout = cfg.noise.readout; return nz; }()});
            if (cfg.noise.depol_alpha) cases.push_back({"depol", [&] { NoiseConfig nz; nz.depol_alpha = cfg.noise.depol_alpha; return nz; }()});
            if (cfg.noise.prep_alpha) cases.push_back({"prep", [&] { NoiseConfig nz; nz.prep_alpha = cfg.noise.prep_alpha; return nz; }()});
            if (cfg.noise.drift_gamma) cases.push_back({"drift", [&] { NoiseConfig nz; nz.drift_gamma = cfg.noise.drift_gamma; return nz; }()});
            if (cfg.noise.any()) cases.push_back({"joint", joint});
            json all = json::array();
            for (const auto& c : cases) {
                const auto sweep = run_sweep(spec, ti, tj, cfg.d_list, cfg.experiment, c.noise,
                                             std::max(cfg.bootstrap, 100), cfg.threads,
                                             cfg.seed ^ fnv1a64(c.tag));
                write_atomic(paths.sweep_csv(c.tag), sweep_to_csv(sweep));
                all.push_back({{"noise", c.tag}, {"slope_fit", sweep.slope}});
                log << "robustness[" << c.tag << "] slope: " << sweep.slope << "\n";
            }
            report["robustness"] = all;
            break;
        }
        case Scenario::rydberg: {
            // Three-atom benchmark: couplings from the Table S1 distances.
            const auto& cases = rydberg::benchmark_cases();
            const int n = 3;
            Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
            c(0, 1) = c(1, 0) = cases[0].V;
            c(0, 2) = c(2, 0) = cases[1].V;
            c(1, 2) = c(2, 1) = cases[2].V;
            const double a_drive = cfg.spec ? cfg.spec->a[0] : 30.0;
            HamiltonianSpec spec(n, std::vector<double>(n, a_drive), c);
            ExperimentConfig ec = cfg.experiment;
            ec.T = cases[0].T;
            ec.mode = Mode::analog;
            const auto rep = learn_all(spec, ec, cfg.noise, std::max(cfg.bootstrap, 100),
                                       cfg.threads);
            json rows = json::array();
            for (int p = 0; p < n; ++p)
                for (int q = p + 1; q < n; ++q) {
                    const double b_hat = rep.c_hat(p, q) * ec.T;
                    const double R_hat = rydberg::distance_from_coupling(b_hat, ec.T);
                    const double var_b = rep.var_boot_c(p, q) * ec.T * ec.T;
                    const double var_R = rydberg::variance_convert(var_b, b_hat, R_hat);
                    rows.push_back({{"pair", {p, q}},
                                    {"c_hat", rep.c_hat(p, q)},
                                    {"b_hat", b_hat},
                                    {"R_hat", R_hat},
                                    {"var_R", var_R},
                                    {"rel_sigma_R", std::sqrt(var_R) / R_hat}});
                    log << "R_hat(" << p << "," << q << ") = " << R_hat << " um\n";
                }
            report["rydberg"] = {{"cases", rows}, {"learn", report_from_learn(rep)}};
            break;
        }
        case Scenario::decompose_check: {
            RngStream rng = RngStream::keyed(cfg.seed, {0xDECu});
            double worst_offblock = 0.0, worst_dist = 0.0;
            for (int t = 0; t < cfg.check_count; ++t) {
                const int n = cfg.check_sizes[t % cfg.check_sizes.size()];
                Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
                for (int p = 0; p < n; ++p)
                    for (int q = p + 1; q < n; ++q) c(p, q) = c(q, p) = rng.uniform(10.0, 50.0);
                std::vector<double> a(n);
                for (auto& x : a) x = rng.uniform(5.0, 15.0);
                HamiltonianSpec spec(n, a, c);
                const int drive = static_cast<int>(rng.engine()() % n);
                const double T = 1e-3;
                const auto pairs = enumerate_subspaces(spec, drive);
                const auto H = oracle::dense_hamiltonian(spec, drive);
                const auto U = oracle::dense_propagator(H, T);
                worst_offblock = std::max(worst_offblock, oracle::verify_block_structure(U, pairs));
                // one random circuit, block vs dense
                ExperimentConfig ec;
                ec.d = 2 + static_cast<int>(rng.engine()() % 5);
                ec.N = 1;
                ec.T = T;
                ec.mode = Mode::analog;
                const double omega = rng.uniform(0.0, std::numbers::pi);
                const auto kind = (rng.engine()() & 1) ? StateKind::plus : StateKind::i;
                const SubspacePair pair = pairs[rng.engine()() % pairs.size()];
                const auto dist = run_circuit(spec, {pair}, ec, omega, kind);
                // dense pipeline
                Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(1 << n);
                const auto amp = coherent_prep(kind, 0.0);
                psi(pair.v_m) = amp[0];
                psi(pair.v_n) = amp[1];
                Eigen::VectorXcd zph(1 << n);
                for (int s = 0; s < (1 << n); ++s)
                    zph(s) = std::exp(cplx(0.0, bit_of(s, drive, n) ? -omega : omega));
                for (int cyc = 0; cyc < ec.d; ++cyc) psi = zph.asDiagonal() * (U * psi);
                for (const auto& [s, p] : dist)
                    worst_dist = std::max(worst_dist, std::abs(p - std::norm(psi(s))));
            }
            report["decompose_check"] = {{"count", cfg.check_count},
                                         {"max_off_block", worst_offblock},
                                         {"max_distribution_deviation", worst_dist}};
            log << "decompose-check: max off-block " << worst_offblock
                << ", max distribution deviation " << worst_dist << "\n";
            if (worst_offblock > 1e-10 || worst_dist > 1e-10) {
                write_atomic(paths.report(), report.dump(2) + "\n");
                write_manifest(paths, cfg);
                return 1;
            }
            break;
        }
    }
    write_atomic(paths.report(), report.dump(2) + "\n");
    write_manifest(paths, cfg);
    return 0;
}

} // namespace qhl::runner
