#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cryptorisk/contagion.hpp"
#include "cryptorisk/errors.hpp"
#include "cryptorisk/hedging.hpp"
#include "cryptorisk/montecarlo.hpp"
#include "cryptorisk/scenario.hpp"
#include "cryptorisk/stress.hpp"
#include "cryptorisk/timeseries.hpp"

namespace py = pybind11;
using namespace cryptorisk;

namespace {

py::dict load_prices_py(const std::vector<std::pair<std::string, std::string>>& sources,
                        std::optional<std::string> start, std::optional<std::string> end) {
    auto date = [](const std::string& text) {
        const auto d = parse_iso_date(text);
        if (!d) throw Error(ErrorKind::Validation, "not an ISO date: " + text);
        return *d;
    };
    DateRange range;
    if (start) range.start = date(*start);
    if (end) range.end = date(*end);
    std::vector<RawPriceSeries> raw;
    for (const auto& [label, path] : sources) raw.push_back(load_prices(path, label, range));
    const PriceSeries aligned = align_and_fill(raw);
    std::vector<std::string> dates;
    for (const auto& d : aligned.dates) dates.push_back(format_iso_date(d));
    py::dict out;
    out["labels"] = aligned.labels;
    out["dates"] = dates;
    out["prices"] = aligned.prices;
    return out;
}

MomentEstimates estimate_moments_py(const Eigen::MatrixXd& prices, std::vector<std::string> labels,
                                    int window, const std::string& method, double lambda) {
    PriceSeries series;
    series.labels = std::move(labels);
    series.prices = prices;
    const Date origin = *parse_iso_date("2000-01-01");
    for (Eigen::Index t = 0; t < prices.rows(); ++t)
        series.dates.push_back(origin + std::chrono::days(t));
    EstimationSpec spec;
    spec.window = window;
    spec.lambda = lambda;
    if (method == "flat")
        spec.method = EstimationMethod::Flat;
    else if (method == "ewma")
        spec.method = EstimationMethod::Ewma;
    else
        throw Error(ErrorKind::Validation, "method must be 'flat' or 'ewma'");
    return estimate_moments(log_returns(series), spec);
}

py::dict propagate_py(const std::vector<std::string>& labels, const Eigen::MatrixXd& correlation,
                      const Eigen::VectorXd& epsilon, double threshold) {
    const auto net = correlation_network(labels, correlation, threshold);
    const auto r = propagate(net, {labels, epsilon});
    py::dict out;
    out["raw"] = r.raw;
    out["delta"] = r.delta;
    out["thresholded"] = r.thresholded;
    return out;
}

Eigen::MatrixXd simulate_py(std::vector<std::string> labels, const Eigen::VectorXd& drift,
                            const Eigen::VectorXd& volatility, const Eigen::VectorXd& initial_prices,
                            std::optional<Eigen::MatrixXd> covariance, int num_paths, int horizon,
                            double dt, std::uint64_t seed, unsigned threads, std::size_t asset) {
    SimulationConfig c;
    c.labels = std::move(labels);
    c.drift = drift;
    c.volatility = volatility;
    c.initial_prices = initial_prices;
    c.covariance = std::move(covariance);
    c.num_paths = num_paths;
    c.horizon = horizon;
    c.dt = dt;
    c.seed = seed;
    c.threads = threads;
    if (asset >= c.labels.size()) throw Error(ErrorKind::Validation, "asset index out of range");
    const auto e = simulate_paths(c);
    Eigen::MatrixXd out(num_paths, horizon + 1);
    for (int m = 0; m < num_paths; ++m)
        for (int t = 0; t <= horizon; ++t) out(m, t) = e.price(m, t, static_cast<Eigen::Index>(asset));
    return out;
}

std::string run_scenario_py(const std::string& path, std::optional<std::uint64_t> seed,
                            std::optional<std::string> out_dir, bool write) {
    ScenarioConfig config = load_scenario_config(path);
    ScenarioOverrides overrides;
    overrides.seed = seed;
    if (out_dir) overrides.out_dir = std::filesystem::path(*out_dir);
    apply_overrides(config, overrides);
    py::gil_scoped_release release;
    if (!write) return run_scenario(config).document().dump();
    std::vector<std::string> warnings;
    run_and_write(config, warnings);
    std::ifstream in(config.resolve(config.outputs.dir) / config.outputs.report);
    std::stringstream text;
    text << in.rdbuf();
    return text.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of the cryptorisk engine";
    m.attr("__version__") = kEngineVersion;

    static py::exception<Error> error_type(m, "CryptoriskError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
            exc.attr("kind") = std::string(to_string(e.kind()));
            exc.attr("module") = e.module();
            exc.attr("exit_code") = exit_code_for(e.kind());
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        }
    });

    py::class_<MomentEstimates>(m, "MomentEstimates")
        .def_readonly("labels", &MomentEstimates::labels)
        .def_readonly("mean", &MomentEstimates::mean)
        .def_readonly("covariance", &MomentEstimates::covariance)
        .def_readonly("correlation", &MomentEstimates::correlation)
        .def_readonly("volatility", &MomentEstimates::volatility)
        .def_readonly("zero_variance_assets", &MomentEstimates::zero_variance_assets)
        .def_readonly("repaired", &MomentEstimates::repaired);

    py::class_<PortfolioSpec>(m, "PortfolioSpec")
        .def(py::init(&PortfolioSpec::create), py::arg("labels"), py::arg("weights"),
             py::arg("initial_value") = 1.0)
        .def_static("equal_weight", &PortfolioSpec::equal_weight, py::arg("labels"),
                    py::arg("initial_value") = 1.0)
        .def_readonly("labels", &PortfolioSpec::labels)
        .def_readonly("weights", &PortfolioSpec::weights)
        .def_readonly("initial_value", &PortfolioSpec::initial_value);

    m.def("load_prices", &load_prices_py, py::arg("sources"), py::arg("start") = py::none(),
          py::arg("end") = py::none(),
          "Loads and aligns (label, path) CSV sources; returns labels, dates and a price matrix.");
    m.def("estimate_moments", &estimate_moments_py, py::arg("prices"), py::arg("labels"),
          py::arg("window") = 90, py::arg("method") = "flat", py::arg("lam") = 0.94);
    m.def("make_moments", &make_moments, py::arg("labels"), py::arg("mean"), py::arg("covariance"));
    m.def("cholesky", &cholesky, py::arg("covariance"));

    m.def(
        "portfolio_metrics",
        [](const PortfolioSpec& spec, const MomentEstimates& moments) {
            const auto r = portfolio_metrics(spec, moments);
            return py::make_tuple(r.expected_return, r.volatility);
        },
        py::arg("spec"), py::arg("moments"), "Returns (expected_return, volatility) per day.");

    m.def(
        "stress_test",
        [](const PortfolioSpec& spec, const MomentEstimates& moments, double delta, int horizon) {
            const auto r = stress_test(spec, moments, {delta, horizon});
            py::dict out;
            out["mu_shock"] = r.mu_shock;
            out["sigma_shock"] = r.sigma_shock;
            out["terminal_value"] = r.terminal_value;
            out["terminal_multiple"] = r.terminal_multiple;
            return out;
        },
        py::arg("spec"), py::arg("moments"), py::arg("delta"), py::arg("horizon") = 30);

    m.def(
        "apply_hedge",
        [](const PortfolioSpec& spec, const MomentEstimates& moments, double w_s, double r_s) {
            HedgeSpec h;
            h.stablecoin_weight = w_s;
            h.stablecoin_return = r_s;
            const auto r = apply_hedge(spec, moments, h);
            return py::make_tuple(r.mu_hedged, r.sigma_hedged);
        },
        py::arg("spec"), py::arg("moments"), py::arg("w_s"), py::arg("r_s") = 0.0);

    m.def("correlation_network_propagate", &propagate_py, py::arg("labels"), py::arg("correlation"),
          py::arg("epsilon"), py::arg("threshold") = 0.0);

    m.def("simulate_paths", &simulate_py, py::arg("labels"), py::arg("drift"), py::arg("volatility"),
          py::arg("initial_prices"), py::arg("covariance") = py::none(), py::arg("num_paths") = 2000,
          py::arg("horizon") = 30, py::arg("dt") = 1.0, py::arg("seed") = 0, py::arg("threads") = 0,
          py::arg("asset") = 0, py::call_guard<py::gil_scoped_release>(),
          "Price paths of one asset as a num_paths x (horizon + 1) array.");

    m.def(
        "risk_metrics",
        [](const std::vector<double>& terminal, double initial_value, double alpha) {
            const auto r = risk_metrics(terminal, initial_value, alpha);
            py::dict out;
            out["expected_terminal"] = r.expected_terminal;
            out["var"] = r.var_alpha;
            out["es"] = r.es_alpha;
            out["loss_probability"] = r.loss_probability;
            out["median_terminal"] = r.median_terminal;
            return out;
        },
        py::arg("terminal"), py::arg("initial_value"), py::arg("alpha") = 0.05);

    m.def(
        "analytic_oracle",
        [](double drift, double volatility, double s0, int horizon, double alpha) {
            const auto o = analytic_oracle(drift, volatility, s0, horizon, alpha);
            py::dict out;
            out["mean"] = o.mean;
            out["quantile"] = o.quantile;
            out["loss_probability"] = o.loss_probability;
            return out;
        },
        py::arg("drift"), py::arg("volatility"), py::arg("initial_price"), py::arg("horizon"),
        py::arg("alpha") = 0.05);

    m.def("run_scenario", &run_scenario_py, py::arg("config"), py::arg("seed") = py::none(),
          py::arg("out_dir") = py::none(), py::arg("write") = false);
}
