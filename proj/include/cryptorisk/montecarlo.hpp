#pragma once

// Correlated geometric Brownian motion paths and terminal-value risk metrics.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cryptorisk/portfolio.hpp"

namespace cryptorisk {

struct SimulationConfig {
    std::vector<std::string> labels;
    int num_paths = 2000;
    int horizon = 30;
    double dt = 1.0;
    Eigen::VectorXd drift;           // μ_i per day
    Eigen::VectorXd volatility;      // σ_i per day (independent mode)
    Eigen::VectorXd initial_prices;  // S_{i,0}
    // Per-day covariance for correlated mode. When set, σ_i² is read from its
    // diagonal and `volatility` must agree with it.
    std::optional<Eigen::MatrixXd> covariance;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    // 0 picks std::thread::hardware_concurrency(). Output does not depend on it.
    unsigned threads = 0;

    void validate() const;
};

class PathEnsemble {
public:
    PathEnsemble(std::vector<std::string> labels, int num_paths, int horizon);

    const std::vector<std::string>& labels() const { return labels_; }
    int num_paths() const { return num_paths_; }
    int horizon() const { return horizon_; }
    Eigen::Index assets() const { return static_cast<Eigen::Index>(labels_.size()); }

    double& price(int path, int step, Eigen::Index asset) { return data_[index(path, step, asset)]; }
    double price(int path, int step, Eigen::Index asset) const {
        return data_[index(path, step, asset)];
    }

private:
    std::size_t index(int path, int step, Eigen::Index asset) const {
        return (static_cast<std::size_t>(path) * static_cast<std::size_t>(horizon_ + 1) +
                static_cast<std::size_t>(step)) *
                   labels_.size() +
               static_cast<std::size_t>(asset);
    }

    std::vector<std::string> labels_;
    int num_paths_;
    int horizon_;
    std::vector<double> data_;
};

// One log-normal step: S exp((μ - σ²/2) dt + σ √dt z).
double gbm_step(double price, double drift, double volatility, double dt, double z) noexcept;

/// Simulates M paths of T steps. Each path draws from its own generator seeded
/// by (seed, path index), so results are identical for any thread count.
/// Correlated mode uses log-increments (μ_i - Σ_ii/2) dt + L X with L L ᵀ = Σ dt.
PathEnsemble simulate_paths(const SimulationConfig& config);

enum class ValuationMode {
    Relative,  // V_t = V_0 Σ w_i S_{i,t} / S_{i,0}
    RawPrice,  // V_t = Σ w_i S_{i,t}
};

struct ValuePaths {
    int num_paths = 0;
    int horizon = 0;
    Eigen::MatrixXd values;  // num_paths x (horizon + 1)

    Eigen::VectorXd terminal() const { return values.col(horizon); }
};

ValuePaths portfolio_paths(const PathEnsemble& ensemble, const PortfolioSpec& spec,
                           ValuationMode mode = ValuationMode::Relative);

struct Histogram {
    std::vector<double> edges;  // bins + 1 entries
    std::vector<std::size_t> counts;
};

// Equal-width bins over [min, max]; the last bin is closed.
Histogram make_histogram(std::span<const double> sample, int bins = 50);

struct QuantilePoint {
    double level = 0.0;
    double value = 0.0;
};

struct RiskReport {
    double initial_value = 0.0;
    double alpha = 0.0;
    std::size_t sample_size = 0;
    double expected_terminal = 0.0;
    double var_alpha = 0.0;
    double es_alpha = 0.0;
    double loss_probability = 0.0;
    double median_terminal = 0.0;
    std::vector<QuantilePoint> terminal_quantiles;
    Histogram histogram;
};

// k-th smallest value with k = ceil(level * n), k >= 1.
double lower_order_statistic(std::span<const double> sorted, double level);

/// Lower-tail metrics over terminal values: VaR is the ⌈αM⌉-th smallest value,
/// ES the mean of the ⌈αM⌉ smallest, loss probability #{V_T < V_0} / M.
RiskReport risk_metrics(std::span<const double> terminal, double initial_value, double alpha,
                        std::span<const double> quantile_levels = {}, int histogram_bins = 50);

struct AnalyticOracle {
    double mean = 0.0;
    double quantile = 0.0;
    double loss_probability = 0.0;
};

// Closed-form lognormal terminal distribution for one asset.
AnalyticOracle analytic_oracle(double drift, double volatility, double initial_price, int horizon,
                               double alpha);

}  // namespace cryptorisk
