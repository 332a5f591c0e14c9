#include "qhl/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

int load_json(const std::string& path, qhl::json& out, std::string& err) {
    std::ifstream in(path);
    if (!in) {
        err = "cannot open config file: " + path;
        return 2;
    }
    try {
        out = qhl::json::parse(in);
    } catch (const qhl::json::parse_error& e) {
        err = std::string("config parse error: ") + e.what();
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qhlearn - block-structured QSPE Hamiltonian learning toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_override;
    int threads_override = 0;
    uint64_t seed_override = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "JSON config file")->required();
        cmd->add_option("--output", output_override, "output directory (overrides config)");
        cmd->add_option("--threads", threads_override, "worker thread count (overrides config)");
        cmd->add_option("--seed", seed_override, "RNG seed (overrides config)")
            ->each([&](const std::string&) { seed_set = true; });
    };

    CLI::App* run_cmd = app.add_subcommand("run", "execute a scenario from a config file");
    add_common(run_cmd);
    CLI::App* validate_cmd =
        app.add_subcommand("validate", "schema-check a config file without executing");
    add_common(validate_cmd);

    CLI11_PARSE(app, argc, argv);

    qhl::json doc;
    std::string err;
    if (int rc = load_json(config_path, doc, err); rc != 0) {
        std::cerr << err << "\n";
        return rc;
    }
    if (seed_set) doc["seed"] = seed_override;
    if (!output_override.empty()) doc["output"] = output_override;
    if (threads_override > 0) doc["threads"] = threads_override;

    const auto diags = qhl::validate_config(doc);
    bool has_error = false;
    for (const auto& d : diags) {
        const bool is_err = d.level == qhl::Diagnostic::Level::error;
        has_error |= is_err;
        std::cerr << (is_err ? "error" : "warning") << " " << (d.path.empty() ? "/" : d.path)
                  << ": " << d.message << "\n";
    }
    if (validate_cmd->parsed()) return has_error ? 2 : 0;
    if (has_error) return 2;

    qhl::RunConfig cfg;
    try {
        cfg = qhl::parse_config(doc);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    if (cfg.output.empty()) {
        if (const char* env = std::getenv("QHL_OUTPUT_DIR")) cfg.output = env;
        else cfg.output = ".";
        cfg.raw["output"] = cfg.output;
    }

    try {
        return qhl::runner::run_scenario(cfg);
    } catch (const std::exception& e) {
        std::cerr << "scenario failed: " << e.what() << "\n";
        return 1;
    }
}
