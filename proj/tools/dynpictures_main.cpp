// Command-line harness: validates experiment configs and runs them into
// reproducible output directories (resolved config echo, CSV series, JSON
// summary). Exit codes: 0 success, 2 validation failure, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dynpictures/experiments.hpp"

namespace {

dynp::Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw dynp::validation_error("cannot open config file: " + path);
    try {
        return dynp::Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw dynp::validation_error(std::string("config parse error: ") + e.what());
    }
}

// --override key.path=value with JSON-typed values (bare strings pass through)
void apply_override(dynp::Json& j, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw dynp::validation_error("override must look like key.path=value: " + spec);
    const std::string path = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);
    dynp::Json* node = &j;
    std::size_t start = 0;
    std::vector<std::string> keys;
    while (true) {
        const auto dot = path.find('.', start);
        keys.push_back(path.substr(start, dot == std::string::npos ? dot : dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        if (!node->is_object())
            throw dynp::validation_error("override path crosses a non-object: " + path);
        node = &(*node)[keys[i]];
    }
    dynp::Json parsed;
    try {
        parsed = dynp::Json::parse(value);
    } catch (const nlohmann::json::parse_error&) {
        parsed = value;  // plain string
    }
    (*node)[keys.back()] = parsed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"phase-space dynamical pictures workbench"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "experiment config JSON")->required();
    run->add_option("--out", out_dir, "override the output directory");
    run->add_option("--override", overrides, "key.path=value config overrides");

    auto* validate = app.add_subcommand("validate", "validate a config without running it");
    validate->add_option("config", config_path, "experiment config JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        dynp::Json j = load_json_file(config_path);
        for (const auto& o : overrides) apply_override(j, o);
        if (!out_dir.empty()) j["output"] = out_dir;

        if (validate->parsed()) {
            dynp::validate_config(j);
            std::cout << "ok: " << config_path << "\n";
            return 0;
        }
        const auto cfg = dynp::parse_config(j);
        dynp::validate_config(j);
        const auto result = dynp::run_experiment(cfg);
        // DYNPICTURES_LOG=quiet keeps stdout to the summary itself
        const char* log_level = std::getenv("DYNPICTURES_LOG");
        const bool quiet = log_level && std::string(log_level) == "quiet";
        if (!quiet)
            for (const auto& f : result.files) std::cout << "wrote " << f << "\n";
        std::cout << result.summary.dump(2) << "\n";
        return 0;
    } catch (const dynp::validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const dynp::error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
