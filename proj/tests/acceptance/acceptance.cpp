// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "cryptorisk/contagion.hpp"
#include "cryptorisk/hedging.hpp"
#include "cryptorisk/montecarlo.hpp"
#include "cryptorisk/stress.hpp"
#include "cryptorisk/timeseries.hpp"
#include "oracles.hpp"

using namespace cryptorisk;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kStressMuTol = 1e-6;
constexpr double kStressSigmaTol = 1e-4;
constexpr double kStressMultipleTol = 1e-3;
constexpr double kIdentityTol = 1e-12;
constexpr double kHedgeTol = 1e-12;
constexpr double kContagionTol = 1e-12;
constexpr double kMeanSe = 3.0;
constexpr double kQuantileBracketSd = 3.0;
constexpr double kLossProbTol = 0.011;
constexpr double kOracleCrossCheckTol = 0.002;
constexpr double kMcRuntimeSeconds = 10.0;
constexpr double kCorrelationTol = 0.02;
constexpr double kDegenerateTol = 1e-9;
constexpr double kStatsSe = 3.0;
constexpr double kKurtosisTol = 0.1;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

PortfolioSpec single_spec(double v0 = 1.0) {
    return PortfolioSpec::create({"P"}, Eigen::VectorXd::Ones(1), v0);
}

MomentEstimates single_moments(double mu, double sigma) {
    return make_moments({"P"}, Eigen::VectorXd::Constant(1, mu),
                        Eigen::MatrixXd::Constant(1, 1, sigma * sigma));
}

PortfolioSpec btc_eth_spec() {
    return PortfolioSpec::create({"BTC", "ETH"}, Eigen::Vector2d{0.5, 0.5}, 10000.0);
}

MomentEstimates btc_eth_moments() {
    const double c = 0.85 * 0.045 * 0.052;
    return make_moments({"BTC", "ETH"}, Eigen::Vector2d{0.0012, 0.0015},
                        Eigen::Matrix2d{{0.045 * 0.045, c}, {c, 0.052 * 0.052}});
}

Outcome stress_example() {
    const auto r = stress_test(single_spec(), single_moments(0.00135, 0.055077), {0.3, 30});
    const bool ok = std::abs(r.mu_shock - 0.000945) <= kStressMuTol &&
                    std::abs(r.sigma_shock - 0.0628) <= kStressSigmaTol &&
                    std::abs(r.terminal_multiple - 1.0288) <= kStressMultipleTol;
    return {ok, fmt("mu_shock=%.9f sigma_shock=%.6f V30/V0=%.6f", r.mu_shock, r.sigma_shock,
                    r.terminal_multiple)};
}

Outcome stress_identities() {
    const auto spec = btc_eth_spec();
    const auto m = btc_eth_moments();
    const auto base = portfolio_metrics(spec, m);
    std::vector<double> grid;
    for (int k = 0; k <= 100; ++k) grid.push_back(k / 100.0);
    const auto sweep = stress_sweep(spec, m, grid, 30);
    double worst_mu = 0.0, worst_sigma = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double d = grid[k];
        if (d < 1.0)
            worst_mu = std::max(worst_mu,
                                std::abs(sweep[k].mu_shock / ((1.0 - d) * base.expected_return) - 1.0));
        else
            worst_mu = std::max(worst_mu, std::abs(sweep[k].mu_shock));
        worst_sigma = std::max(
            worst_sigma, std::abs(sweep[k].sigma_shock * sweep[k].sigma_shock /
                                      ((1.0 + d) * base.volatility * base.volatility) -
                                  1.0));
    }
    const bool exact0 = sweep[0].mu_shock == base.expected_return &&
                        sweep[0].sigma_shock == base.volatility;
    return {worst_mu <= kIdentityTol && worst_sigma <= kIdentityTol && exact0,
            fmt("max|ratio-1| mu=%.2e sigma2=%.2e delta0_exact=%s", worst_mu, worst_sigma,
                exact0 ? "yes" : "no")};
}

Outcome hedge_exactness() {
    const auto spec = btc_eth_spec();
    const auto m = btc_eth_moments();
    const auto base = portfolio_metrics(spec, m);
    const auto augmented = augment_with_stablecoin(m, "STABLE", 0.0, 0.0);
    double worst = 0.0, worst_aug = 0.0;
    for (int k = 0; k <= 10; ++k) {
        const double ws = k / 10.0;
        const auto h = apply_hedge(spec, m, {ws});
        worst = std::max({worst, std::abs(h.mu_hedged - (1.0 - ws) * base.expected_return),
                          std::abs(h.sigma_hedged - (1.0 - ws) * base.volatility)});
        const auto aug = portfolio_metrics(
            PortfolioSpec::create(augmented.labels, h.effective_weights, spec.initial_value), augmented);
        worst_aug = std::max({worst_aug, std::abs(aug.expected_return - h.mu_hedged),
                              std::abs(aug.volatility - h.sigma_hedged)});
    }
    return {worst <= kHedgeTol && worst_aug <= kHedgeTol,
            fmt("max closed-form err=%.2e augmented err=%.2e", worst, worst_aug)};
}

Outcome contagion_checks() {
    const std::vector<std::string> names{"A", "B", "C", "D"};
    const auto ident = correlation_network(names, Eigen::Matrix4d::Identity());
    const Eigen::Vector4d e0{-0.3, 0.1, 0.0, -0.05};
    const bool fixpoint = propagate(ident, {names, e0}).delta == e0;

    std::mt19937_64 gen(2024);
    std::normal_distribution<double> z(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::MatrixXd a(4, 6);
        for (Eigen::Index i = 0; i < 4; ++i)
            for (Eigen::Index j = 0; j < 6; ++j) a(i, j) = z(gen);
        Eigen::MatrixXd c = a * a.transpose();
        const Eigen::VectorXd d = c.diagonal().cwiseSqrt().cwiseInverse();
        c = d.asDiagonal() * c * d.asDiagonal();
        for (Eigen::Index i = 0; i < 4; ++i) {
            c(i, i) = 1.0;
            for (Eigen::Index j = 0; j < i; ++j) c(i, j) = c(j, i);
        }
        const auto net = correlation_network(names, c);
        Eigen::Vector4d e1, e2;
        for (int i = 0; i < 4; ++i) {
            e1(i) = 0.1 * z(gen);
            e2(i) = 0.1 * z(gen);
        }
        const double ca = z(gen), cb = z(gen);
        const Eigen::VectorXd lhs = propagate(net, {names, ca * e1 + cb * e2}).delta;
        const Eigen::VectorXd rhs =
            ca * propagate(net, {names, e1}).delta + cb * propagate(net, {names, e2}).delta;
        worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }

    const std::vector<std::string> assets{"BTC", "ETH", "USDT"};
    const Eigen::Matrix3d rho{{1.0, 0.85, 0.02}, {0.85, 1.0, 0.01}, {0.02, 0.01, 1.0}};
    const auto crash = single_asset_crash(correlation_network(assets, rho), "BTC", -0.20);
    const auto gated = single_asset_crash(correlation_network(assets, rho, 0.01), "BTC", -0.20);
    const bool eth_exact = crash.delta(1) == -0.17;
    const bool gate = std::abs(gated.raw(2) + 0.004) <= kContagionTol && gated.delta(2) == 0.0;
    return {fixpoint && worst <= kContagionTol && eth_exact && gate,
            fmt("fixpoint=%s linearity err=%.2e dETH=%.17g gated USDT=%g (raw %.6g)",
                fixpoint ? "yes" : "no", worst, crash.delta(1), gated.delta(2), gated.raw(2))};
}

Outcome mc_vs_closed_form() {
    constexpr double mu = 0.0012, sigma = 0.045;
    constexpr int horizon = 30, paths = 20000;
    constexpr double alpha = 0.05;
    SimulationConfig c;
    c.labels = {"P"};
    c.num_paths = paths;
    c.horizon = horizon;
    c.drift = Eigen::VectorXd::Constant(1, mu);
    c.volatility = Eigen::VectorXd::Constant(1, sigma);
    c.initial_prices = Eigen::VectorXd::Ones(1);
    c.seed = 20240605;
    c.alpha = alpha;
    c.threads = 1;

    const auto t0 = std::chrono::steady_clock::now();
    const auto ensemble = simulate_paths(c);
    const auto values = portfolio_paths(ensemble, single_spec());
    std::vector<double> terminal(paths);
    for (int m = 0; m < paths; ++m) terminal[static_cast<std::size_t>(m)] = values.values(m, horizon);
    const auto risk = risk_metrics(terminal, 1.0, alpha);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto oracle = analytic_oracle(mu, sigma, 1.0, horizon, alpha);

    double ss = 0.0;
    for (double v : terminal) ss += (v - risk.expected_terminal) * (v - risk.expected_terminal);
    const double se = std::sqrt(ss / (paths - 1.0) / paths);
    const bool mean_ok = std::abs(risk.expected_terminal - std::exp(0.036)) <= kMeanSe * se;

    // Order statistics bracketing the α-quantile at ±3 binomial SDs.
    std::vector<double> sorted = terminal;
    std::sort(sorted.begin(), sorted.end());
    const double centre = alpha * paths;
    const double spread = kQuantileBracketSd * std::sqrt(paths * alpha * (1.0 - alpha));
    const auto lo_k = static_cast<std::size_t>(std::max(1.0, std::floor(centre - spread)));
    const auto hi_k = static_cast<std::size_t>(std::min<double>(paths, std::ceil(centre + spread)));
    const double lo = sorted[lo_k - 1], hi = sorted[hi_k - 1];
    const bool quantile_ok = lo <= oracle.quantile && oracle.quantile <= hi;

    const bool loss_ok = std::abs(risk.loss_probability - oracle.loss_probability) <= kLossProbTol;

    // Independent check of the closed form: direct lognormal draws, no path stepping.
    std::mt19937_64 gen(777);
    std::normal_distribution<double> z(0.0, 1.0);
    const double drift_t = (mu - 0.5 * sigma * sigma) * horizon;
    const double vol_t = sigma * std::sqrt(static_cast<double>(horizon));
    constexpr int big = 1000000;
    int losses = 0;
    for (int k = 0; k < big; ++k) losses += std::exp(drift_t + vol_t * z(gen)) < 1.0;
    const double big_loss = static_cast<double>(losses) / big;
    const boost::math::normal standard;
    const double phi = boost::math::cdf(standard, -0.0228);
    const bool cross_ok = std::abs(big_loss - oracle.loss_probability) <= kOracleCrossCheckTol &&
                          std::abs(phi - oracle.loss_probability) <= 1e-3;
    const bool time_ok = seconds < kMcRuntimeSeconds;

    return {mean_ok && quantile_ok && loss_ok && cross_ok && time_ok,
            fmt("mean=%.5f (e^0.036=%.5f, 3SE=%.5f) q05 oracle=%.5f in [%.5f,%.5f] "
                "P(loss)=%.4f vs %.4f (1e6 draws %.4f) %.2fs",
                risk.expected_terminal, std::exp(0.036), kMeanSe * se, oracle.quantile, lo, hi,
                risk.loss_probability, oracle.loss_probability, big_loss, seconds)};
}

Outcome correlation_fidelity() {
    SimulationConfig c;
    c.labels = {"BTC", "ETH"};
    c.num_paths = 10000;
    c.horizon = 30;
    c.drift = Eigen::Vector2d{0.0012, 0.0015};
    c.volatility = Eigen::Vector2d{0.045, 0.052};
    c.initial_prices = Eigen::Vector2d{30000.0, 2000.0};
    const double cv = 0.85 * 0.045 * 0.052;
    c.covariance = Eigen::Matrix2d{{0.045 * 0.045, cv}, {cv, 0.052 * 0.052}};
    c.seed = 85;
    const auto e = simulate_paths(c);
    std::vector<double> x, y;
    x.reserve(300000);
    y.reserve(300000);
    for (int m = 0; m < c.num_paths; ++m)
        for (int t = 0; t < c.horizon; ++t) {
            x.push_back(std::log(e.price(m, t + 1, 0) / e.price(m, t, 0)));
            y.push_back(std::log(e.price(m, t + 1, 1) / e.price(m, t, 1)));
        }
    const double r = oracle::correlation(x, y);
    return {std::abs(r - 0.85) <= kCorrelationTol,
            fmt("pooled rho=%.5f over %zu increments", r, x.size())};
}

Outcome degenerate_gbm() {
    SimulationConfig c;
    c.labels = {"X"};
    c.num_paths = 1000;
    c.horizon = 30;
    c.drift = Eigen::VectorXd::Constant(1, 0.001);
    c.volatility = Eigen::VectorXd::Zero(1);
    c.initial_prices = Eigen::VectorXd::Constant(1, 100.0);
    c.seed = 1;
    const auto e = simulate_paths(c);
    const double target = 100.0 * std::exp(0.03);
    double worst = 0.0;
    for (int m = 0; m < c.num_paths; ++m) worst = std::max(worst, std::abs(e.price(m, 30, 0) - target));
    return {worst <= kDegenerateTol, fmt("target=%.10f max err=%.2e", target, worst)};
}

Outcome descriptive_stats_check() {
    constexpr int n = 100000;
    constexpr double mu = 0.0012, sigma = 0.045;
    std::mt19937_64 gen(8);
    std::normal_distribution<double> z(mu, sigma);
    PriceSeries prices;
    prices.labels = {"SYN"};
    prices.dates.reserve(n + 1);
    prices.prices.resize(n + 1, 1);
    const Date start = *parse_iso_date("2000-01-01");
    double p = 100.0;
    for (int t = 0; t <= n; ++t) {
        prices.dates.push_back(start + std::chrono::days(t));
        if (t > 0) p *= std::exp(z(gen));
        prices.prices(t, 0) = p;
    }
    const auto stats = descriptive_stats(log_returns(prices)).front();
    const bool mean_ok = std::abs(stats.mean - mu) <= kStatsSe * sigma / std::sqrt(double(n));
    const bool sd_ok = std::abs(stats.stddev - sigma) <= kStatsSe * sigma / std::sqrt(2.0 * n);

    std::normal_distribution<double> unit(0.0, 1.0);
    oracle::Rows rows(static_cast<std::size_t>(n), std::vector<double>(1));
    for (auto& r : rows) r[0] = unit(gen);
    ReturnMatrix rm;
    rm.labels = {"N"};
    rm.returns.resize(n, 1);
    for (int t = 0; t < n; ++t) {
        rm.dates.push_back(start + std::chrono::days(t + 1));
        rm.returns(t, 0) = rows[static_cast<std::size_t>(t)][0];
    }
    const auto normal_stats = descriptive_stats(rm).front();
    const double kurt = normal_stats.kurtosis.value_or(0.0);
    const bool kurt_ok = std::abs(kurt - 3.0) <= kKurtosisTol;
    return {mean_ok && sd_ok && kurt_ok,
            fmt("mean=%.6f sd=%.6f normal kurtosis=%.4f", stats.mean, stats.stddev, kurt)};
}

int run_command(const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string report_body(const fs::path& report) {
    std::ifstream in(report);
    std::stringstream ss;
    ss << in.rdbuf();
    return nlohmann::ordered_json::parse(ss.str()).at("body").dump();
}

Outcome end_to_end() {
    const fs::path scenario = fs::path(CRYPTORISK_FIXTURE_DIR) / ".." / ".." / "scenarios" / "full.yaml";
    const fs::path tmp = fs::temp_directory_path() / ("cryptorisk_accept_" + std::to_string(::getpid()));
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    const std::string cli = std::string("\"") + CRYPTORISK_CLI_PATH + "\"";

    const int a = run_command(cli + " run " + scenario.string() + " --seed 42 --out " + (tmp / "a").string());
    const int b = run_command(cli + " run " + scenario.string() + " --seed 42 --out " + (tmp / "b").string());
    bool identical = false;
    if (a == 0 && b == 0) identical = report_body(tmp / "a" / "report.json") == report_body(tmp / "b" / "report.json");

    std::ofstream(tmp / "malformed.yaml") << "data:\n  - {label: BTC\nweights: [\n";
    const int v = run_command(cli + " validate " + (tmp / "malformed.yaml").string());
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp)) ++entries;
    const bool nothing_written = entries == 3;  // a, b, malformed.yaml
    fs::remove_all(tmp);
    return {a == 0 && b == 0 && identical && v == 1 && nothing_written,
            fmt("run exits %d/%d, bodies identical=%s, validate(malformed) exit=%d, extra files=%s", a,
                b, identical ? "yes" : "no", v, nothing_written ? "none" : "present")};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> criteria{
        {1, "stress worked example", stress_example},
        {2, "stress identities", stress_identities},
        {3, "hedging exactness", hedge_exactness},
        {4, "contagion", contagion_checks},
        {5, "monte carlo vs closed form", mc_vs_closed_form},
        {6, "correlation fidelity", correlation_fidelity},
        {7, "degenerate gbm", degenerate_gbm},
        {8, "descriptive statistics", descriptive_stats_check},
        {10, "end-to-end determinism", end_to_end},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        if (c.id == 8)
            std::printf("[NOTE]  9 headline interval and loss probability: not reproducible from "
                        "published inputs; covered by 5, 6 and 7\n");
    }
    std::printf("%d failure(s)\n", failures);
    return failures == 0 ? 0 : 1;
}
