#pragma once

#include "qhl/model.hpp"
#include "qhl/noise.hpp"
#include "qhl/sim.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace qhl {

using json = nlohmann::json;

enum class Scenario { learn_pair, learn_all, robustness, rydberg, sweep_d, decompose_check };

inline Scenario scenario_from_string(const std::string& s) {
    if (s == "learn-pair") return Scenario::learn_pair;
    if (s == "learn-all") return Scenario::learn_all;
    if (s == "robustness") return Scenario::robustness;
    if (s == "rydberg") return Scenario::rydberg;
    if (s == "sweep-d") return Scenario::sweep_d;
    if (s == "decompose-check") return Scenario::decompose_check;
    throw std::invalid_argument("unknown scenario: " + s);
}

inline std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::learn_pair: return "learn-pair";
        case Scenario::learn_all: return "learn-all";
        case Scenario::robustness: return "robustness";
        case Scenario::rydberg: return "rydberg";
        case Scenario::sweep_d: return "sweep-d";
        case Scenario::decompose_check: return "decompose-check";
    }
    return "?";
}

struct SpecGenerator {
    int n = 2;
    double a = 10.0;              // rad/us, every drive
    double coupling_min = 10.0;   // rad/us
    double coupling_max = 50.0;
    uint64_t seed = 0;            // defaults to the run seed
};

struct Diagnostic {
    enum class Level { error, warning };
    Level level;
    std::string path;
    std::string message;
};

struct RunConfig {
    int schema_version = 1;
    Scenario scenario = Scenario::learn_pair;
    uint64_t seed = 0;
    std::string output;                     // directory
    int threads = 1;
    std::optional<HamiltonianSpec> spec;
    std::optional<SpecGenerator> generator;
    ExperimentConfig experiment;
    std::vector<int> d_list;                // sweep-d / robustness
    NoiseConfig noise;
    int bootstrap = 0;
    std::optional<std::pair<int, int>> target;   // coupling targeted by sweeps
    std::optional<std::string> records;          // injected records for replay
    // decompose-check knobs
    int check_count = 100;
    std::vector<int> check_sizes = {2, 3, 4, 5, 6};

    json raw;                                // the parsed config document
};

namespace detail_cfg {

inline HamiltonianSpec parse_spec(const json& j) {
    const int n = j.at("n").get<int>();
    std::vector<double> a = j.at("a").get<std::vector<double>>();
    const auto cj = j.at("c");
    Eigen::MatrixXd c(n, n);
    for (int r = 0; r < n; ++r)
        for (int q = 0; q < n; ++q) c(r, q) = cj.at(r).at(q).get<double>();
    return HamiltonianSpec(n, std::move(a), std::move(c), j.value("phi", 0.0));
}

} // namespace detail_cfg

// Materialize the spec: explicit wins over the generator.
inline HamiltonianSpec materialize_spec(const RunConfig& cfg) {
    if (cfg.spec) return *cfg.spec;
    if (!cfg.generator) throw std::invalid_argument("config: no spec and no generator");
    const auto& g = *cfg.generator;
    RngStream rng = RngStream::keyed(g.seed ? g.seed : cfg.seed, {0x5bec});
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(g.n, g.n);
    for (int p = 0; p < g.n; ++p)
        for (int q = p + 1; q < g.n; ++q)
            c(p, q) = c(q, p) = rng.uniform(g.coupling_min, g.coupling_max);
    return HamiltonianSpec(g.n, std::vector<double>(g.n, g.a), std::move(c));
}

inline RunConfig parse_config(const json& j) {
    RunConfig cfg;
    cfg.raw = j;
    cfg.schema_version = j.value("schema_version", 1);
    cfg.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    if (!j.contains("seed")) throw std::invalid_argument("config: seed is mandatory");
    cfg.seed = j.at("seed").get<uint64_t>();
    cfg.output = j.value("output", "");
    cfg.threads = j.value("threads", 1);
    if (j.contains("spec")) cfg.spec = detail_cfg::parse_spec(j.at("spec"));
    if (j.contains("spec_generator")) {
        const auto& g = j.at("spec_generator");
        SpecGenerator gen;
        gen.n = g.at("n").get<int>();
        gen.a = g.value("a", 10.0);
        gen.coupling_min = g.value("coupling_min", 10.0);
        gen.coupling_max = g.value("coupling_max", 50.0);
        gen.seed = g.value("seed", 0ull);
        cfg.generator = gen;
    }
    if (j.contains("experiment")) {
        const auto& e = j.at("experiment");
        cfg.experiment.d = e.value("d", 10);
        cfg.experiment.N = e.value("N", 100000ull);
        cfg.experiment.T = e.value("T", 1e-3);
        const std::string mode = e.value("mode", "analog");
        if (mode == "hybrid") cfg.experiment.mode = Mode::hybrid;
        else if (mode == "analog") cfg.experiment.mode = Mode::analog;
        else throw std::invalid_argument("config: experiment.mode must be hybrid or analog");
        if (e.contains("d_list")) cfg.d_list = e.at("d_list").get<std::vector<int>>();
    }
    cfg.experiment.seed = cfg.seed;
    if (j.contains("noise")) {
        const auto& nz = j.at("noise");
        if (nz.contains("depol_alpha")) cfg.noise.depol_alpha = nz.at("depol_alpha").get<double>();
        if (nz.contains("prep_alpha")) cfg.noise.prep_alpha = nz.at("prep_alpha").get<double>();
        if (nz.contains("readout"))
            cfg.noise.readout = ReadoutParams{nz.at("readout").at("p_loss").get<double>(),
                                              nz.at("readout").at("p_anti").get<double>()};
        if (nz.contains("drift_gamma")) cfg.noise.drift_gamma = nz.at("drift_gamma").get<double>();
    }
    cfg.bootstrap = j.value("bootstrap", 0);
    if (j.contains("target"))
        cfg.target = std::make_pair(j.at("target").at("i").get<int>(),
                                    j.at("target").at("j").get<int>());
    if (j.contains("records")) cfg.records = j.at("records").get<std::string>();
    if (j.contains("check")) {
        cfg.check_count = j.at("check").value("count", 100);
        if (j.at("check").contains("sizes"))
            cfg.check_sizes = j.at("check").at("sizes").get<std::vector<int>>();
    }
    return cfg;
}

// Schema check without execution. Errors make the config unusable; warnings
// flag regime problems (d*theta and phase-wrap heuristics).
inline std::vector<Diagnostic> validate_config(const json& j) {
    std::vector<Diagnostic> out;
    auto err = [&](const std::string& path, const std::string& msg) {
        out.push_back({Diagnostic::Level::error, path, msg});
    };
    auto warn = [&](const std::string& path, const std::string& msg) {
        out.push_back({Diagnostic::Level::warning, path, msg});
    };
    if (!j.contains("scenario")) err("/scenario", "missing scenario");
    else {
        try { scenario_from_string(j.at("scenario").get<std::string>()); }
        catch (const std::exception& e) { err("/scenario", e.what()); }
    }
    if (!j.contains("seed")) err("/seed", "missing mandatory seed");
    RunConfig cfg;
    try {
        if (out.empty()) cfg = parse_config(j);
    } catch (const std::exception& e) {
        err("", e.what());
        return out;
    }
    if (!out.empty()) return out;
    try { cfg.experiment.validate(); }
    catch (const std::exception& e) { err("/experiment", e.what()); }
    try { cfg.noise.validate(); }
    catch (const std::exception& e) { err("/noise", e.what()); }

    if (cfg.scenario != Scenario::decompose_check && cfg.scenario != Scenario::rydberg) {
        if (!cfg.spec && !cfg.generator) err("/spec", "need spec or spec_generator");
    }
    try {
        if (cfg.spec || cfg.generator) {
            const HamiltonianSpec spec = materialize_spec(cfg);
            const int dmax = cfg.d_list.empty()
                                 ? cfg.experiment.d
                                 : *std::max_element(cfg.d_list.begin(), cfg.d_list.end());
            const double theta = *std::max_element(spec.a.begin(), spec.a.end()) *
                                 cfg.experiment.T;
            if (theta * dmax > 0.2)
                warn("/experiment", "d*theta = " + std::to_string(theta * dmax) +
                                        " exceeds 0.2; the small-angle regime is strained");
            double bmax = 0.0;
            for (int p = 0; p < spec.n; ++p) {
                double row = 0.0;
                for (int q = 0; q < spec.n; ++q) row += std::abs(spec.c(p, q));
                bmax = std::max(bmax, row * cfg.experiment.T);
            }
            if (2.0 * bmax > 0.45 * std::numbers::pi)
                warn("/experiment", "|2 zeta| can approach pi/2; reduce T");
        }
    } catch (const std::exception& e) {
        err("/spec", e.what());
    }
    if (cfg.scenario == Scenario::learn_pair) {
        if (cfg.spec && cfg.spec->n != 2) err("/spec/n", "learn-pair needs n = 2");
        if (cfg.generator && cfg.generator->n != 2) err("/spec_generator/n", "learn-pair needs n = 2");
    }
    if ((cfg.scenario == Scenario::sweep_d || cfg.scenario == Scenario::robustness) &&
        cfg.d_list.empty())
        err("/experiment/d_list", "sweep scenarios need experiment.d_list");
    return out;
}

} // namespace qhl
