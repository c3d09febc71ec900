#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cryptorisk/timeseries.hpp"

namespace cryptorisk {

struct PortfolioSpec {
    std::vector<std::string> labels;
    Eigen::VectorXd weights;
    double initial_value = 1.0;

    // Validates: weights nonnegative, summing to 1 within 1e-9, V_0 > 0.
    static PortfolioSpec create(std::vector<std::string> labels, Eigen::VectorXd weights,
                                double initial_value);
    static PortfolioSpec equal_weight(std::vector<std::string> labels, double initial_value);
};

struct PortfolioMetrics {
    double expected_return = 0.0;  // μ_p, per day
    double volatility = 0.0;       // σ_p, per day
};

// Throws Error{Alignment} if the label orders differ.
void require_same_labels(const std::vector<std::string>& a, const std::vector<std::string>& b,
                         const char* context);

/// μ_p = wᵀr and σ_p = √(wᵀΣw). A quadratic form in [-1e-12, 0) is treated as
/// rounding noise and clamped to zero; anything more negative is a numerical
/// error.
PortfolioMetrics portfolio_metrics(const PortfolioSpec& spec, const MomentEstimates& moments);

/// Lower-triangular L with L Lᵀ = Σ. Semidefinite inputs are retried with a
/// diagonal jitter of 1e-12 * trace.
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& covariance);

}  // namespace cryptorisk
