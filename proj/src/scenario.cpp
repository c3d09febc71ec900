#include "cryptorisk/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "cryptorisk/errors.hpp"
#include "cryptorisk/hedging.hpp"
#include "cryptorisk/montecarlo.hpp"
#include "cryptorisk/portfolio.hpp"
#include "cryptorisk/stress.hpp"

namespace cryptorisk {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void invalid(const std::string& message) {
    throw Error(ErrorKind::Validation, message, "config");
}

void check_keys(const YAML::Node& node, const std::string& section,
                std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) invalid("'" + section + "' must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            invalid("unknown key '" + key + "' in '" + section + "'");
    }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& where) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        invalid("'" + where + "' has the wrong type");
    }
}

template <typename T>
T get_or(const YAML::Node& parent, const char* key, T fallback, const std::string& section) {
    const YAML::Node node = parent[key];
    if (!node) return fallback;
    return scalar<T>(node, section + "." + key);
}

std::vector<double> number_list(const YAML::Node& node, const std::string& where) {
    if (!node.IsSequence()) invalid("'" + where + "' must be a list of numbers");
    std::vector<double> out;
    for (const auto& item : node) out.push_back(scalar<double>(item, where));
    if (out.empty()) invalid("'" + where + "' must not be empty");
    return out;
}

Date date_value(const YAML::Node& node, const std::string& where) {
    const auto text = scalar<std::string>(node, where);
    const auto d = parse_iso_date(text);
    if (!d) invalid("'" + where + "' must be an ISO-8601 date, got '" + text + "'");
    return *d;
}

void check_file(const ScenarioConfig& config, const std::filesystem::path& p,
                const std::string& what) {
    if (!std::filesystem::is_regular_file(config.resolve(p)))
        invalid(what + " file does not exist: " + config.resolve(p).string());
}

std::string fmt_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

ordered_json vector_json(const Eigen::VectorXd& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

ordered_json optional_json(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

const char* method_name(EstimationMethod m) {
    return m == EstimationMethod::Flat ? "flat" : "ewma";
}

// Runs `fn` and tags any engine error with the module name.
template <typename Fn>
auto in_module(const char* module, ordered_json& timings, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto record = [&] {
        const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
        timings[module] = ms.count();
    };
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record();
        } else {
            auto result = fn();
            record();
            return result;
        }
    } catch (const Error& e) {
        throw Error(e.kind(), e.what(), e.module().empty() ? module : e.module());
    }
}

}  // namespace

std::filesystem::path ScenarioConfig::resolve(const std::filesystem::path& p) const {
    return (p.is_absolute() ? p : base_dir / p).lexically_normal();
}

ScenarioConfig parse_scenario_config(const std::string& yaml_text,
                                     const std::filesystem::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        invalid(std::string("malformed YAML: ") + e.what());
    }
    if (!root || !root.IsMap()) invalid("scenario file must be a YAML mapping");
    check_keys(root, "scenario",
               {"data", "date_range", "weights", "equal_weight", "initial_value", "estimation",
                "stress", "hedge", "contagion", "montecarlo", "outputs"});

    ScenarioConfig c;
    c.base_dir = base_dir;

    const YAML::Node data = root["data"];
    if (!data || !data.IsSequence() || data.size() == 0)
        invalid("'data' must be a non-empty list of {label, path}");
    std::set<std::string> seen;
    for (const auto& item : data) {
        check_keys(item, "data[]", {"label", "path"});
        if (!item["label"] || !item["path"]) invalid("every data entry needs label and path");
        DataSource src{scalar<std::string>(item["label"], "data.label"),
                       scalar<std::string>(item["path"], "data.path")};
        if (src.label.empty()) invalid("data labels must be non-empty");
        if (!seen.insert(src.label).second) invalid("duplicate data label '" + src.label + "'");
        check_file(c, src.path, "data");
        c.data.push_back(std::move(src));
    }

    if (const YAML::Node range = root["date_range"]) {
        check_keys(range, "date_range", {"start", "end"});
        if (range["start"]) c.date_range.start = date_value(range["start"], "date_range.start");
        if (range["end"]) c.date_range.end = date_value(range["end"], "date_range.end");
        if (c.date_range.start && c.date_range.end && *c.date_range.start > *c.date_range.end)
            invalid("date_range.start is after date_range.end");
    }

    c.equal_weight = get_or<bool>(root, "equal_weight", false, "scenario");
    if (const YAML::Node weights = root["weights"]) {
        if (c.equal_weight) invalid("give either 'weights' or 'equal_weight', not both");
        if (!weights.IsMap()) invalid("'weights' must map asset labels to fractions");
        for (const auto& kv : weights) {
            const auto label = kv.first.as<std::string>();
            if (!seen.count(label)) invalid("weight given for unknown asset '" + label + "'");
            c.weights[label] = scalar<double>(kv.second, "weights." + label);
        }
    } else if (!c.equal_weight) {
        invalid("portfolio weights are required ('weights' or 'equal_weight: true')");
    }
    if (!c.equal_weight) {
        double sum = 0.0;
        for (const auto& [label, w] : c.weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) invalid("weight for " + label + " must be >= 0");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) invalid("weights must sum to 1");
    }
    c.initial_value = get_or<double>(root, "initial_value", 1.0, "scenario");
    if (!(c.initial_value > 0.0) || !std::isfinite(c.initial_value))
        invalid("initial_value must be positive");

    if (const YAML::Node est = root["estimation"]) {
        check_keys(est, "estimation", {"window", "method", "lambda"});
        c.estimation.window = get_or<long>(est, "window", 90, "estimation");
        const auto method = get_or<std::string>(est, "method", "flat", "estimation");
        if (method == "flat")
            c.estimation.method = EstimationMethod::Flat;
        else if (method == "ewma")
            c.estimation.method = EstimationMethod::Ewma;
        else
            invalid("estimation.method must be 'flat' or 'ewma'");
        c.estimation.lambda = get_or<double>(est, "lambda", 0.94, "estimation");
    }
    if (c.estimation.window < 2) invalid("estimation.window must be >= 2");
    if (!(c.estimation.lambda > 0.0 && c.estimation.lambda < 1.0))
        invalid("estimation.lambda must lie in (0, 1)");

    if (const YAML::Node s = root["stress"]) {
        check_keys(s, "stress", {"delta", "deltas", "horizon"});
        StressSection st;
        if (s["delta"] && s["deltas"]) invalid("give either stress.delta or stress.deltas");
        if (s["delta"])
            st.deltas = {scalar<double>(s["delta"], "stress.delta")};
        else if (s["deltas"])
            st.deltas = number_list(s["deltas"], "stress.deltas");
        else
            invalid("stress needs 'delta' or 'deltas'");
        st.horizon = get_or<int>(s, "horizon", 30, "stress");
        for (double d : st.deltas)
            if (!(d >= 0.0 && d <= 1.0)) invalid("stress deltas must lie in [0, 1]");
        if (st.horizon < 1) invalid("stress.horizon must be >= 1");
        c.stress = std::move(st);
    }

    if (const YAML::Node h = root["hedge"]) {
        check_keys(h, "hedge", {"w_s", "grid", "r_s", "label"});
        HedgeSection hs;
        if (h["w_s"] && h["grid"]) invalid("give either hedge.w_s or hedge.grid");
        if (h["w_s"])
            hs.stablecoin_weights = {scalar<double>(h["w_s"], "hedge.w_s")};
        else if (h["grid"])
            hs.stablecoin_weights = number_list(h["grid"], "hedge.grid");
        else
            invalid("hedge needs 'w_s' or 'grid'");
        hs.stablecoin_return = get_or<double>(h, "r_s", 0.0, "hedge");
        hs.stablecoin_label = get_or<std::string>(h, "label", "STABLE", "hedge");
        for (double w : hs.stablecoin_weights)
            if (!(w >= 0.0 && w <= 1.0)) invalid("hedge weights must lie in [0, 1]");
        if (!std::isfinite(hs.stablecoin_return)) invalid("hedge.r_s must be finite");
        c.hedge = std::move(hs);
    }

    if (const YAML::Node k = root["contagion"]) {
        check_keys(k, "contagion", {"kind", "adjacency_file", "asset", "magnitude", "theta"});
        ContagionSection cs;
        const auto kind = get_or<std::string>(k, "kind", "correlation", "contagion");
        if (kind == "correlation") {
            cs.kind = NetworkKind::Correlation;
            if (k["adjacency_file"]) invalid("contagion.adjacency_file requires kind: adjacency");
        } else if (kind == "adjacency") {
            cs.kind = NetworkKind::Adjacency;
            if (!k["adjacency_file"]) invalid("contagion kind adjacency needs adjacency_file");
            cs.adjacency_file = scalar<std::string>(k["adjacency_file"], "contagion.adjacency_file");
            check_file(c, cs.adjacency_file, "adjacency");
        } else {
            invalid("contagion.kind must be 'correlation' or 'adjacency'");
        }
        if (!k["asset"]) invalid("contagion.asset is required");
        cs.asset = scalar<std::string>(k["asset"], "contagion.asset");
        if (!seen.count(cs.asset)) invalid("contagion.asset '" + cs.asset + "' is not a data label");
        cs.magnitude = get_or<double>(k, "magnitude", -0.2, "contagion");
        cs.threshold = get_or<double>(k, "theta", 0.0, "contagion");
        if (!(cs.magnitude >= -1.0 && cs.magnitude < 0.0))
            invalid("contagion.magnitude must lie in [-1, 0)");
        if (!(cs.threshold >= 0.0) || !std::isfinite(cs.threshold))
            invalid("contagion.theta must be >= 0");
        c.contagion = std::move(cs);
    }

    if (const YAML::Node m = root["montecarlo"]) {
        check_keys(m, "montecarlo",
                   {"paths", "horizon", "dt", "seed", "alpha", "correlated", "raw_price_mode",
                    "quantiles", "histogram_bins", "sample_paths", "threads"});
        MonteCarloSection mc;
        mc.num_paths = get_or<int>(m, "paths", 2000, "montecarlo");
        mc.horizon = get_or<int>(m, "horizon", 30, "montecarlo");
        mc.dt = get_or<double>(m, "dt", 1.0, "montecarlo");
        mc.seed = get_or<std::uint64_t>(m, "seed", 0, "montecarlo");
        mc.alpha = get_or<double>(m, "alpha", 0.05, "montecarlo");
        mc.correlated = get_or<bool>(m, "correlated", true, "montecarlo");
        mc.raw_price_mode = get_or<bool>(m, "raw_price_mode", false, "montecarlo");
        if (m["quantiles"]) mc.quantiles = number_list(m["quantiles"], "montecarlo.quantiles");
        mc.histogram_bins = get_or<int>(m, "histogram_bins", 50, "montecarlo");
        mc.sample_paths = get_or<int>(m, "sample_paths", 100, "montecarlo");
        mc.threads = get_or<unsigned>(m, "threads", 0, "montecarlo");
        if (mc.num_paths < 1) invalid("montecarlo.paths must be >= 1");
        if (mc.horizon < 1) invalid("montecarlo.horizon must be >= 1");
        if (!(mc.dt > 0.0)) invalid("montecarlo.dt must be > 0");
        if (!(mc.alpha > 0.0 && mc.alpha < 1.0)) invalid("montecarlo.alpha must lie in (0, 1)");
        if (static_cast<double>(mc.num_paths) < std::ceil(1.0 / mc.alpha - 1e-9))
            invalid("montecarlo.paths must be at least ceil(1/alpha)");
        for (double q : mc.quantiles)
            if (!(q > 0.0 && q <= 1.0)) invalid("montecarlo.quantiles must lie in (0, 1]");
        if (mc.histogram_bins < 1) invalid("montecarlo.histogram_bins must be >= 1");
        if (mc.sample_paths < 0) invalid("montecarlo.sample_paths must be >= 0");
        c.montecarlo = std::move(mc);
    }

    if (!c.stress && !c.hedge && !c.contagion && !c.montecarlo)
        invalid("no modules enabled: add at least one of stress, hedge, contagion, montecarlo");

    if (const YAML::Node o = root["outputs"]) {
        check_keys(o, "outputs",
                   {"dir", "report", "stress_csv", "hedge_csv", "contagion_csv", "paths_csv",
                    "histogram_csv", "terminal_csv"});
        c.outputs.dir = get_or<std::string>(o, "dir", ".", "outputs");
        c.outputs.report = get_or<std::string>(o, "report", "report.json", "outputs");
        auto opt = [&](const char* key, std::optional<std::string>& field) {
            if (o[key]) field = scalar<std::string>(o[key], std::string("outputs.") + key);
        };
        opt("stress_csv", c.outputs.stress_csv);
        opt("hedge_csv", c.outputs.hedge_csv);
        opt("contagion_csv", c.outputs.contagion_csv);
        opt("paths_csv", c.outputs.paths_csv);
        opt("histogram_csv", c.outputs.histogram_csv);
        opt("terminal_csv", c.outputs.terminal_csv);
    }
    return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) invalid("cannot open scenario file " + file.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario_config(buffer.str(), file.parent_path());
}

void apply_overrides(ScenarioConfig& config, const ScenarioOverrides& overrides) {
    if (overrides.seed && config.montecarlo) config.montecarlo->seed = *overrides.seed;
    if (overrides.out_dir) config.outputs.dir = *overrides.out_dir;
}

ordered_json ScenarioConfig::to_json() const {
    ordered_json j;
    j["data"] = ordered_json::array();
    for (const auto& d : data)
        j["data"].push_back({{"label", d.label}, {"path", d.path.generic_string()}});
    j["date_range"] = {
        {"start", date_range.start ? ordered_json(format_iso_date(*date_range.start)) : ordered_json(nullptr)},
        {"end", date_range.end ? ordered_json(format_iso_date(*date_range.end)) : ordered_json(nullptr)}};
    if (equal_weight) {
        j["equal_weight"] = true;
    } else {
        ordered_json w = ordered_json::object();
        for (const auto& d : data) {
            const auto it = weights.find(d.label);
            w[d.label] = it == weights.end() ? 0.0 : it->second;
        }
        j["weights"] = std::move(w);
    }
    j["initial_value"] = initial_value;
    j["estimation"] = {{"window", estimation.window},
                       {"method", method_name(estimation.method)},
                       {"lambda", estimation.lambda}};
    if (stress) j["stress"] = {{"deltas", stress->deltas}, {"horizon", stress->horizon}};
    if (hedge)
        j["hedge"] = {{"grid", hedge->stablecoin_weights},
                      {"r_s", hedge->stablecoin_return},
                      {"label", hedge->stablecoin_label}};
    if (contagion) {
        ordered_json k;
        k["kind"] = contagion->kind == NetworkKind::Correlation ? "correlation" : "adjacency";
        if (contagion->kind == NetworkKind::Adjacency)
            k["adjacency_file"] = contagion->adjacency_file.generic_string();
        k["asset"] = contagion->asset;
        k["magnitude"] = contagion->magnitude;
        k["theta"] = contagion->threshold;
        j["contagion"] = std::move(k);
    }
    if (montecarlo) {
        const auto& m = *montecarlo;
        j["montecarlo"] = {{"paths", m.num_paths},
                           {"horizon", m.horizon},
                           {"dt", m.dt},
                           {"seed", m.seed},
                           {"alpha", m.alpha},
                           {"correlated", m.correlated},
                           {"raw_price_mode", m.raw_price_mode},
                           {"quantiles", m.quantiles},
                           {"histogram_bins", m.histogram_bins},
                           {"sample_paths", m.sample_paths}};
    }
    return j;
}

std::string ScenarioReport::body_digest() const {
    // FNV-1a, 64-bit.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : body.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ordered_json ScenarioReport::document() const {
    ordered_json doc;
    doc["body"] = body;
    doc["body_digest"] = body_digest();
    doc["run"] = run;
    return doc;
}

ScenarioReport run_scenario(const ScenarioConfig& config) {
    ScenarioReport report;
    ordered_json timings = ordered_json::object();
    ordered_json& body = report.body;
    body["engine"] = {{"name", kEngineName}, {"version", kEngineVersion}};
    if (config.montecarlo) body["seed"] = config.montecarlo->seed;
    body["config"] = config.to_json();

    const PriceSeries prices = in_module("timeseries", timings, [&] {
        std::vector<RawPriceSeries> raw;
        for (const auto& src : config.data)
            raw.push_back(load_prices(config.resolve(src.path), src.label, config.date_range));
        return align_and_fill(raw);
    });
    const ReturnMatrix returns = in_module("timeseries", timings, [&] { return log_returns(prices); });
    const MomentEstimates moments =
        in_module("timeseries", timings, [&] { return estimate_moments(returns, config.estimation); });
    const auto stats = in_module("timeseries", timings, [&] { return descriptive_stats(returns); });

    body["data"] = {{"assets", prices.labels},
                    {"first_date", format_iso_date(prices.dates.front())},
                    {"last_date", format_iso_date(prices.dates.back())},
                    {"price_rows", prices.rows()},
                    {"return_rows", returns.rows()}};
    body["moments"] = {{"method", method_name(moments.method)},
                       {"window", moments.window},
                       {"lambda", moments.lambda},
                       {"labels", moments.labels},
                       {"mean", vector_json(moments.mean)},
                       {"volatility", vector_json(moments.volatility)},
                       {"covariance", matrix_json(moments.covariance)},
                       {"correlation", matrix_json(moments.correlation)},
                       {"zero_variance_assets", moments.zero_variance_assets},
                       {"repaired", moments.repaired}};
    ordered_json stats_json = ordered_json::array();
    for (const auto& s : stats)
        stats_json.push_back({{"label", s.label},
                              {"mean", s.mean},
                              {"std", s.stddev},
                              {"skewness", optional_json(s.skewness)},
                              {"kurtosis", optional_json(s.kurtosis)}});
    body["descriptive_stats"] = std::move(stats_json);

    const PortfolioSpec spec = in_module("portfolio", timings, [&] {
        if (config.equal_weight) return PortfolioSpec::equal_weight(prices.labels, config.initial_value);
        Eigen::VectorXd w(static_cast<Eigen::Index>(prices.labels.size()));
        for (std::size_t i = 0; i < prices.labels.size(); ++i) {
            const auto it = config.weights.find(prices.labels[i]);
            w(static_cast<Eigen::Index>(i)) = it == config.weights.end() ? 0.0 : it->second;
        }
        return PortfolioSpec::create(prices.labels, w, config.initial_value);
    });
    const PortfolioMetrics base =
        in_module("portfolio", timings, [&] { return portfolio_metrics(spec, moments); });
    body["portfolio"] = {{"labels", spec.labels},
                         {"weights", vector_json(spec.weights)},
                         {"initial_value", spec.initial_value},
                         {"mu_p", base.expected_return},
                         {"sigma_p", base.volatility}};

    if (config.stress) {
        body["stress"] = in_module("stress", timings, [&] {
            const auto results = stress_sweep(spec, moments, config.stress->deltas, config.stress->horizon);
            ordered_json s;
            s["horizon"] = config.stress->horizon;
            s["results"] = ordered_json::array();
            for (const auto& r : results)
                s["results"].push_back({{"delta", r.delta},
                                        {"mu_shock", r.mu_shock},
                                        {"sigma_shock", r.sigma_shock},
                                        {"terminal_value", r.terminal_value},
                                        {"terminal_multiple", r.terminal_multiple}});
            if (returns.rows() >= 20)
                s["calibrated_delta_advisory"] =
                    calibrate_delta(returns, {}, std::span<const double>(spec.weights.data(),
                                                                          static_cast<std::size_t>(spec.weights.size())));
            return s;
        });
    }

    if (config.hedge) {
        body["hedge"] = in_module("hedging", timings, [&] {
            HedgeSpec h;
            h.stablecoin_return = config.hedge->stablecoin_return;
            h.stablecoin_label = config.hedge->stablecoin_label;
            const auto results = hedge_sweep(spec, moments, config.hedge->stablecoin_weights, h);
            ordered_json out;
            out["mu_p"] = base.expected_return;
            out["sigma_p"] = base.volatility;
            out["r_s"] = h.stablecoin_return;
            out["results"] = ordered_json::array();
            for (const auto& r : results)
                out["results"].push_back({{"w_s", r.stablecoin_weight},
                                          {"mu_h", r.mu_hedged},
                                          {"sigma_h", r.sigma_hedged},
                                          {"labels", r.labels},
                                          {"effective_weights", vector_json(r.effective_weights)}});
            return out;
        });
    }

    if (config.contagion) {
        body["contagion"] = in_module("contagion", timings, [&] {
            const auto& cs = *config.contagion;
            PropagationNetwork network;
            ordered_json out;
            if (cs.kind == NetworkKind::Correlation) {
                const auto latest = estimate_moments(
                    returns, {config.estimation.window, EstimationMethod::Flat, 0.0});
                network = correlation_network(latest, cs.threshold);
                out["kind"] = "correlation";
                out["snapshot_date"] = format_iso_date(returns.dates.back());
            } else {
                network = load_adjacency(config.resolve(cs.adjacency_file), cs.threshold);
                require_same_labels(network.labels, spec.labels, "adjacency matrix");
                out["kind"] = "adjacency";
            }
            const auto result = single_asset_crash(network, cs.asset, cs.magnitude);
            const auto value = shocked_portfolio_value(spec, result);
            out["asset"] = cs.asset;
            out["magnitude"] = cs.magnitude;
            out["theta"] = cs.threshold;
            out["matrix"] = matrix_json(network.matrix);
            out["impacts"] = ordered_json::array();
            for (std::size_t i = 0; i < result.labels.size(); ++i)
                out["impacts"].push_back(
                    {{"asset", result.labels[i]},
                     {"raw", result.raw(static_cast<Eigen::Index>(i))},
                     {"delta", result.delta(static_cast<Eigen::Index>(i))},
                     {"thresholded", static_cast<bool>(result.thresholded[i])}});
            out["portfolio_change"] = value.change;
            out["value_after"] = value.value_after;
            return out;
        });
    }

    if (config.montecarlo) {
        body["montecarlo"] = in_module("montecarlo", timings, [&] {
            const auto& mc = *config.montecarlo;
            SimulationConfig sim;
            sim.labels = prices.labels;
            sim.num_paths = mc.num_paths;
            sim.horizon = mc.horizon;
            sim.dt = mc.dt;
            sim.drift = moments.mean;
            sim.volatility = moments.volatility;
            sim.initial_prices = prices.prices.row(prices.rows() - 1).transpose();
            if (mc.correlated) sim.covariance = moments.covariance;
            sim.seed = mc.seed;
            sim.alpha = mc.alpha;
            sim.threads = mc.threads;
            const PathEnsemble ensemble = simulate_paths(sim);
            const ValuePaths values = portfolio_paths(
                ensemble, spec, mc.raw_price_mode ? ValuationMode::RawPrice : ValuationMode::Relative);
            const Eigen::VectorXd terminal = values.terminal();
            const double v0 = values.values(0, 0);
            const RiskReport risk = risk_metrics(
                std::span<const double>(terminal.data(), static_cast<std::size_t>(terminal.size())),
                v0, mc.alpha, mc.quantiles, mc.histogram_bins);

            report.terminal_values.assign(terminal.data(), terminal.data() + terminal.size());
            const int k = std::min(mc.sample_paths, values.num_paths);
            report.sample_paths.assign(static_cast<std::size_t>(values.horizon + 1),
                                       std::vector<double>(static_cast<std::size_t>(k)));
            for (int t = 0; t <= values.horizon; ++t)
                for (int m = 0; m < k; ++m)
                    report.sample_paths[static_cast<std::size_t>(t)][static_cast<std::size_t>(m)] =
                        values.values(m, t);

            ordered_json out;
            out["paths"] = mc.num_paths;
            out["horizon"] = mc.horizon;
            out["seed"] = mc.seed;
            out["correlated"] = mc.correlated;
            out["valuation"] = mc.raw_price_mode ? "raw_price" : "relative";
            out["initial_prices"] = vector_json(sim.initial_prices);
            out["initial_value"] = v0;
            out["alpha"] = risk.alpha;
            out["expected_terminal"] = risk.expected_terminal;
            out["var_alpha"] = risk.var_alpha;
            out["es_alpha"] = risk.es_alpha;
            out["loss_probability"] = risk.loss_probability;
            out["median_terminal"] = risk.median_terminal;
            out["terminal_quantiles"] = ordered_json::array();
            for (const auto& q : risk.terminal_quantiles)
                out["terminal_quantiles"].push_back({{"level", q.level}, {"value", q.value}});
            out["histogram"] = {{"edges", risk.histogram.edges}, {"counts", risk.histogram.counts}};
            return out;
        });
    }

    const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
    const auto day = std::chrono::floor<std::chrono::days>(now);
    const std::chrono::hh_mm_ss tod{now - day};
    char stamp[32];
    std::snprintf(stamp, sizeof stamp, "%sT%02d:%02d:%02dZ", format_iso_date(day).c_str(),
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
    report.run = {{"generated_at", stamp}, {"timings_ms", timings}};
    return report;
}

std::vector<RenderedFile> render_plot_data(const ScenarioReport& report,
                                           const ScenarioConfig& config,
                                           std::vector<std::string>& warnings) {
    std::vector<RenderedFile> out;
    const auto& body = report.body;
    const auto& o = config.outputs;
    auto target = [&](const std::string& name) { return config.resolve(o.dir) / name; };
    auto missing = [&](const char* kind, const char* section) {
        warnings.push_back(std::string("skipping ") + kind + " CSV: report has no " + section +
                           " section");
    };

    if (o.stress_csv) {
        if (!body.contains("stress")) {
            missing("stress", "stress");
        } else {
            std::string csv = "label,value\n";
            const auto& results = body["stress"]["results"];
            const bool single = results.size() == 1;
            for (const auto& r : results) {
                const std::string prefix =
                    single ? "" : "delta=" + fmt_number(r["delta"].get<double>()) + " ";
                csv += prefix + "return_pct," + fmt_number(100.0 * r["mu_shock"].get<double>()) + "\n";
                csv += prefix + "volatility_pct," +
                       fmt_number(100.0 * r["sigma_shock"].get<double>()) + "\n";
                csv += prefix + "terminal_multiple," +
                       fmt_number(r["terminal_multiple"].get<double>()) + "\n";
            }
            out.push_back({"stress", target(*o.stress_csv), std::move(csv)});
        }
    }
    if (o.hedge_csv) {
        if (!body.contains("hedge")) {
            missing("hedge", "hedge");
        } else {
            std::string csv = "case,return\n";
            csv += "unhedged," + fmt_number(100.0 * body["hedge"]["mu_p"].get<double>()) + "\n";
            for (const auto& r : body["hedge"]["results"])
                csv += "hedged_" + fmt_number(100.0 * r["w_s"].get<double>()) + "pct," +
                       fmt_number(100.0 * r["mu_h"].get<double>()) + "\n";
            out.push_back({"hedge", target(*o.hedge_csv), std::move(csv)});
        }
    }
    if (o.contagion_csv) {
        if (!body.contains("contagion")) {
            missing("contagion", "contagion");
        } else {
            std::string csv = "asset,impact\n";
            for (const auto& r : body["contagion"]["impacts"])
                csv += r["asset"].get<std::string>() + "," +
                       fmt_number(100.0 * r["delta"].get<double>()) + "\n";
            out.push_back({"contagion", target(*o.contagion_csv), std::move(csv)});
        }
    }
    const bool have_mc = body.contains("montecarlo");
    if (o.paths_csv) {
        if (!have_mc) {
            missing("paths", "montecarlo");
        } else {
            std::string csv = "day";
            const std::size_t k = report.sample_paths.empty() ? 0 : report.sample_paths.front().size();
            for (std::size_t m = 0; m < k; ++m) csv += ",path_" + std::to_string(m + 1);
            csv += "\n";
            for (std::size_t t = 0; t < report.sample_paths.size(); ++t) {
                csv += std::to_string(t);
                for (double v : report.sample_paths[t]) csv += "," + fmt_number(v);
                csv += "\n";
            }
            out.push_back({"paths", target(*o.paths_csv), std::move(csv)});
        }
    }
    if (o.histogram_csv) {
        if (!have_mc) {
            missing("histogram", "montecarlo");
        } else {
            std::string csv = "bin_left,bin_right,count\n";
            const auto& h = body["montecarlo"]["histogram"];
            const auto& edges = h["edges"];
            const auto& counts = h["counts"];
            for (std::size_t b = 0; b < counts.size(); ++b)
                csv += fmt_number(edges[b].get<double>()) + "," +
                       fmt_number(edges[b + 1].get<double>()) + "," +
                       std::to_string(counts[b].get<std::size_t>()) + "\n";
            out.push_back({"histogram", target(*o.histogram_csv), std::move(csv)});
        }
    }
    if (o.terminal_csv) {
        if (!have_mc) {
            missing("terminal", "montecarlo");
        } else {
            std::string csv = "path,terminal_value\n";
            for (std::size_t m = 0; m < report.terminal_values.size(); ++m)
                csv += std::to_string(m + 1) + "," + fmt_number(report.terminal_values[m]) + "\n";
            out.push_back({"terminal", target(*o.terminal_csv), std::move(csv)});
        }
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Data, "cannot write " + tmp.string(), "output");
        out << contents;
        if (!out.flush())
            throw Error(ErrorKind::Data, "failed writing " + tmp.string(), "output");
    }
    std::filesystem::rename(tmp, path);
}

std::vector<EmittedFile> emit_plot_data(const ScenarioReport& report, const ScenarioConfig& config,
                                        std::vector<std::string>& warnings) {
    std::vector<EmittedFile> written;
    for (auto& f : render_plot_data(report, config, warnings)) {
        write_file_atomic(f.path, f.contents);
        written.push_back({f.kind, f.path});
    }
    return written;
}

std::vector<EmittedFile> run_and_write(const ScenarioConfig& config,
                                       std::vector<std::string>& warnings) {
    const ScenarioReport report = run_scenario(config);
    std::vector<RenderedFile> files = render_plot_data(report, config, warnings);
    files.insert(files.begin(), {"report", config.resolve(config.outputs.dir) / config.outputs.report,
                                 report.document().dump(2) + "\n"});

    // Stage every file before renaming any of them into place.
    std::vector<std::filesystem::path> staged;
    try {
        for (const auto& f : files) {
            if (f.path.has_parent_path()) std::filesystem::create_directories(f.path.parent_path());
            std::filesystem::path tmp = f.path;
            tmp += ".tmp";
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error(ErrorKind::Data, "cannot write " + tmp.string(), "output");
            staged.push_back(tmp);
            out << f.contents;
            if (!out.flush()) throw Error(ErrorKind::Data, "failed writing " + tmp.string(), "output");
        }
    } catch (...) {
        std::error_code ec;
        for (const auto& tmp : staged) std::filesystem::remove(tmp, ec);
        throw;
    }
    std::vector<EmittedFile> written;
    for (std::size_t i = 0; i < files.size(); ++i) {
        std::filesystem::rename(staged[i], files[i].path);
        written.push_back({files[i].kind, files[i].path});
    }
    return written;
}

}  // namespace cryptorisk
