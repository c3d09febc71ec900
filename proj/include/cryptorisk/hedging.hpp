#pragma once

#include <span>
#include <string>
#include <vector>

#include "cryptorisk/portfolio.hpp"

namespace cryptorisk {

struct HedgeSpec {
    double stablecoin_weight = 0.0;  // w_s in [0, 1]
    double stablecoin_return = 0.0;  // r_s per day
    bool treat_uncorrelated = true;
    std::string stablecoin_label = "STABLE";

    void validate() const;
};

struct HedgeResult {
    double stablecoin_weight = 0.0;
    double mu_hedged = 0.0;
    double sigma_hedged = 0.0;
    std::vector<std::string> labels;   // crypto labels followed by the stablecoin label
    Eigen::VectorXd effective_weights; // ((1 - w_s) w, w_s)
};

/// μ_h = (1 - w_s) μ_p + w_s r_s and σ_h = (1 - w_s) σ_p, with the stablecoin
/// treated as zero-variance and uncorrelated. Correlated stablecoins go through
/// augment_with_stablecoin + portfolio_metrics instead.
HedgeResult apply_hedge(const PortfolioSpec& spec, const MomentEstimates& moments,
                        const HedgeSpec& hedge);

std::vector<HedgeResult> hedge_sweep(const PortfolioSpec& spec, const MomentEstimates& moments,
                                     std::span<const double> stablecoin_weights,
                                     const HedgeSpec& base = {});

// (n+1)-asset estimates with the stablecoin appended last. `covariances` holds
// its covariance with each crypto asset (empty means zeros).
MomentEstimates augment_with_stablecoin(const MomentEstimates& moments, const std::string& label,
                                        double mean, double variance,
                                        std::span<const double> covariances = {});

}  // namespace cryptorisk
