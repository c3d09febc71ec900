#pragma once

#include <span>
#include <vector>

#include "cryptorisk/portfolio.hpp"

namespace cryptorisk {

struct ShockScenario {
    double delta = 0.0;  // in [0, 1]
    int horizon = 30;    // trading days, >= 1

    void validate() const;
};

struct StressResult {
    double delta = 0.0;
    int horizon = 0;
    double mu_shock = 0.0;
    double sigma_shock = 0.0;
    double terminal_value = 0.0;
    double terminal_multiple = 0.0;
};

// r_shock = (1-δ) r, Σ_shock = (1+δ) Σ.
MomentEstimates shock_moments(const MomentEstimates& moments, double delta);

/// μ_shock = (1-δ) μ_p, σ_shock = √(1+δ) σ_p, V_T = V_0 (1 + μ_shock)^T.
StressResult stress_test(const PortfolioSpec& spec, const MomentEstimates& moments,
                         const ShockScenario& scenario);

std::vector<StressResult> stress_sweep(const PortfolioSpec& spec, const MomentEstimates& moments,
                                       std::span<const double> deltas, int horizon);

struct DeltaCalibration {
    int window = 20;            // rolling realized-volatility window
    double percentile = 0.05;   // upper-tail fraction
};

/// Suggested shock factor: (upper-tail quantile of rolling realized volatility
/// / its median) - 1, clamped into [0, 1]. The return series is the weighted
/// cross-section (equal weights when `weights` is empty).
double calibrate_delta(const ReturnMatrix& returns, const DeltaCalibration& calibration = {},
                       std::span<const double> weights = {});

}  // namespace cryptorisk
