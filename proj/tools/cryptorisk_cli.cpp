#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cryptorisk/errors.hpp"
#include "cryptorisk/scenario.hpp"

namespace {

void report_error(const cryptorisk::Error& e) {
    nlohmann::ordered_json err;
    err["error"] = {{"module", e.module().empty() ? "engine" : e.module()},
                    {"kind", std::string(cryptorisk::to_string(e.kind()))},
                    {"message", e.what()}};
    std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crypto portfolio risk simulation engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;

    auto* run = app.add_subcommand("run", "Execute a scenario and write its report");
    run->add_option("config", config_path, "Scenario YAML file")->required();
    run->add_option("--seed", seed, "Override the Monte Carlo seed");
    run->add_option("--out", out_dir, "Override the output directory");

    auto* validate = app.add_subcommand("validate", "Parse and validate a scenario only");
    validate->add_option("config", config_path, "Scenario YAML file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        cryptorisk::ScenarioConfig config = cryptorisk::load_scenario_config(config_path);
        if (*validate) {
            std::cout << "ok: " << config_path << "\n";
            return 0;
        }
        cryptorisk::ScenarioOverrides overrides;
        overrides.seed = seed;
        if (out_dir) overrides.out_dir = std::filesystem::path(*out_dir);
        cryptorisk::apply_overrides(config, overrides);

        std::vector<std::string> warnings;
        const auto written = cryptorisk::run_and_write(config, warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        for (const auto& f : written) std::cout << f.kind << ": " << f.path.string() << "\n";
        return 0;
    } catch (const cryptorisk::Error& e) {
        report_error(e);
        return cryptorisk::exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        report_error(cryptorisk::Error(cryptorisk::ErrorKind::Data, e.what(), "output"));
        return 2;
    }
}
