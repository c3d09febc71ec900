#include "cryptorisk/stress.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cryptorisk/errors.hpp"

namespace cryptorisk {

namespace {

StressResult from_metrics(const PortfolioMetrics& base, double initial_value,
                          const ShockScenario& scenario) {
    StressResult r;
    r.delta = scenario.delta;
    r.horizon = scenario.horizon;
    r.mu_shock = (1.0 - scenario.delta) * base.expected_return;
    r.sigma_shock = std::sqrt(1.0 + scenario.delta) * base.volatility;
    r.terminal_multiple = std::pow(1.0 + r.mu_shock, scenario.horizon);
    r.terminal_value = initial_value * r.terminal_multiple;
    return r;
}

// Linear-interpolation quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

void ShockScenario::validate() const {
    if (!(delta >= 0.0 && delta <= 1.0))
        throw Error(ErrorKind::Scenario, "shock factor delta must lie in [0, 1], got " +
                                             std::to_string(delta));
    if (horizon < 1) throw Error(ErrorKind::Scenario, "stress horizon must be >= 1 day");
}

MomentEstimates shock_moments(const MomentEstimates& moments, double delta) {
    ShockScenario{delta, 1}.validate();
    MomentEstimates shocked = moments;
    shocked.mean = (1.0 - delta) * moments.mean;
    shocked.covariance = (1.0 + delta) * moments.covariance;
    shocked.volatility = std::sqrt(1.0 + delta) * moments.volatility;
    return shocked;
}

StressResult stress_test(const PortfolioSpec& spec, const MomentEstimates& moments,
                         const ShockScenario& scenario) {
    scenario.validate();
    return from_metrics(portfolio_metrics(spec, moments), spec.initial_value, scenario);
}

std::vector<StressResult> stress_sweep(const PortfolioSpec& spec, const MomentEstimates& moments,
                                       std::span<const double> deltas, int horizon) {
    if (deltas.empty()) throw Error(ErrorKind::Scenario, "stress sweep grid is empty");
    for (double d : deltas) ShockScenario{d, horizon}.validate();
    const PortfolioMetrics base = portfolio_metrics(spec, moments);
    std::vector<StressResult> out;
    out.reserve(deltas.size());
    for (double d : deltas) out.push_back(from_metrics(base, spec.initial_value, {d, horizon}));
    return out;
}

double calibrate_delta(const ReturnMatrix& returns, const DeltaCalibration& calibration,
                       std::span<const double> weights) {
    const Eigen::Index rows = returns.rows();
    if (rows < 20)
        throw Error(ErrorKind::Calibration, "delta calibration needs at least 20 observations");
    if (calibration.window < 2 || calibration.window > rows)
        throw Error(ErrorKind::Calibration, "realized-volatility window out of range");
    if (!(calibration.percentile > 0.0 && calibration.percentile < 1.0))
        throw Error(ErrorKind::Calibration, "tail percentile must lie in (0, 1)");

    Eigen::VectorXd w;
    if (weights.empty()) {
        w = Eigen::VectorXd::Constant(returns.assets(), 1.0 / static_cast<double>(returns.assets()));
    } else {
        if (static_cast<Eigen::Index>(weights.size()) != returns.assets())
            throw Error(ErrorKind::Calibration, "calibration weights do not match asset count");
        w = Eigen::Map<const Eigen::VectorXd>(weights.data(), returns.assets());
    }
    const Eigen::VectorXd series = returns.returns * w;

    const Eigen::Index win = calibration.window;
    std::vector<double> vols;
    vols.reserve(static_cast<std::size_t>(rows - win + 1));
    for (Eigen::Index end = win; end <= rows; ++end) {
        const auto seg = series.segment(end - win, win);
        const double mean = seg.mean();
        const double var = (seg.array() - mean).square().sum() / static_cast<double>(win - 1);
        vols.push_back(std::sqrt(var));
    }
    std::sort(vols.begin(), vols.end());
    const double median = quantile_sorted(vols, 0.5);
    const double tail = quantile_sorted(vols, 1.0 - calibration.percentile);
    if (!(median > 0.0)) return tail > 0.0 ? 1.0 : 0.0;
    return std::clamp(tail / median - 1.0, 0.0, 1.0);
}

}  // namespace cryptorisk
