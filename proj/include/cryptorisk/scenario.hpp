#pragma once

// Batch scenario runner: YAML config in, JSON report and plot-ready CSVs out.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cryptorisk/contagion.hpp"
#include "cryptorisk/timeseries.hpp"

namespace cryptorisk {

inline constexpr const char* kEngineName = "cryptorisk";
inline constexpr const char* kEngineVersion = "0.1.0";

struct DataSource {
    std::string label;
    std::filesystem::path path;
};

struct StressSection {
    std::vector<double> deltas;  // one entry for a single scenario
    int horizon = 30;
};

struct HedgeSection {
    std::vector<double> stablecoin_weights;
    double stablecoin_return = 0.0;
    std::string stablecoin_label = "STABLE";
};

struct ContagionSection {
    // Correlation uses the latest estimation-window correlation matrix.
    NetworkKind kind = NetworkKind::Correlation;
    std::filesystem::path adjacency_file;
    std::string asset;
    double magnitude = -0.2;
    double threshold = 0.0;
};

struct MonteCarloSection {
    int num_paths = 2000;
    int horizon = 30;
    double dt = 1.0;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    bool correlated = true;
    bool raw_price_mode = false;
    std::vector<double> quantiles{0.025, 0.05, 0.5, 0.95, 0.975};
    int histogram_bins = 50;
    int sample_paths = 100;
    unsigned threads = 0;
};

struct OutputSection {
    std::filesystem::path dir = ".";
    std::string report = "report.json";
    std::optional<std::string> stress_csv;
    std::optional<std::string> hedge_csv;
    std::optional<std::string> contagion_csv;
    std::optional<std::string> paths_csv;
    std::optional<std::string> histogram_csv;
    std::optional<std::string> terminal_csv;
};

struct ScenarioConfig {
    std::filesystem::path base_dir;  // relative paths resolve against this
    std::vector<DataSource> data;
    DateRange date_range;
    std::map<std::string, double> weights;
    bool equal_weight = false;
    double initial_value = 1.0;
    EstimationSpec estimation;
    std::optional<StressSection> stress;
    std::optional<HedgeSection> hedge;
    std::optional<ContagionSection> contagion;
    std::optional<MonteCarloSection> montecarlo;
    OutputSection outputs;

    std::filesystem::path resolve(const std::filesystem::path& p) const;
    // Normalized echo of every setting, stored in the report body.
    nlohmann::ordered_json to_json() const;
};

/// Parses and validates a scenario file. Throws Error{Validation} on any
/// structural or range problem, including referenced files that do not exist.
ScenarioConfig load_scenario_config(const std::filesystem::path& file);
ScenarioConfig parse_scenario_config(const std::string& yaml_text,
                                     const std::filesystem::path& base_dir);

struct ScenarioOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out_dir;
};

void apply_overrides(ScenarioConfig& config, const ScenarioOverrides& overrides);

struct ScenarioReport {
    nlohmann::ordered_json body;  // deterministic for fixed inputs, config and seed
    nlohmann::ordered_json run;   // timings and timestamp
    // Plot-ready tables, kept so emission does not rerun modules.
    std::vector<std::vector<double>> sample_paths;  // (T+1) rows x K paths
    std::vector<double> terminal_values;

    std::string body_digest() const;
    nlohmann::ordered_json document() const;
};

/// Ingestion, moments, then every enabled module in order. Nothing is written.
ScenarioReport run_scenario(const ScenarioConfig& config);

struct EmittedFile {
    std::string kind;
    std::filesystem::path path;
};

struct RenderedFile {
    std::string kind;
    std::filesystem::path path;
    std::string contents;
};

// CSV contents for every requested plot file, without touching the disk.
std::vector<RenderedFile> render_plot_data(const ScenarioReport& report,
                                           const ScenarioConfig& config,
                                           std::vector<std::string>& warnings);

/// Writes the requested plot CSVs. A missing report section skips that file
/// with a warning line in `warnings`.
std::vector<EmittedFile> emit_plot_data(const ScenarioReport& report, const ScenarioConfig& config,
                                        std::vector<std::string>& warnings);

/// Runs, then writes report and CSVs via temporary files renamed into place
/// only after every module has succeeded.
std::vector<EmittedFile> run_and_write(const ScenarioConfig& config,
                                       std::vector<std::string>& warnings);

// Atomic text write: temp file in the same directory, then rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace cryptorisk
