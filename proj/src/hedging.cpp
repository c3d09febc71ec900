#include "cryptorisk/hedging.hpp"

#include <cmath>

#include "cryptorisk/errors.hpp"

namespace cryptorisk {

void HedgeSpec::validate() const {
    if (!(stablecoin_weight >= 0.0 && stablecoin_weight <= 1.0))
        throw Error(ErrorKind::Scenario, "stablecoin weight must lie in [0, 1], got " +
                                             std::to_string(stablecoin_weight));
    if (!std::isfinite(stablecoin_return))
        throw Error(ErrorKind::Scenario, "stablecoin return must be finite");
    if (!treat_uncorrelated)
        throw Error(ErrorKind::Scenario,
                    "correlated stablecoin hedges must use augmented moments with "
                    "portfolio_metrics");
}

HedgeResult apply_hedge(const PortfolioSpec& spec, const MomentEstimates& moments,
                        const HedgeSpec& hedge) {
    hedge.validate();
    const PortfolioMetrics base = portfolio_metrics(spec, moments);
    const double ws = hedge.stablecoin_weight;
    HedgeResult out;
    out.stablecoin_weight = ws;
    out.mu_hedged = (1.0 - ws) * base.expected_return + ws * hedge.stablecoin_return;
    out.sigma_hedged = (1.0 - ws) * base.volatility;
    out.labels = spec.labels;
    out.labels.push_back(hedge.stablecoin_label);
    out.effective_weights.resize(spec.weights.size() + 1);
    out.effective_weights.head(spec.weights.size()) = (1.0 - ws) * spec.weights;
    out.effective_weights(spec.weights.size()) = ws;
    return out;
}

std::vector<HedgeResult> hedge_sweep(const PortfolioSpec& spec, const MomentEstimates& moments,
                                     std::span<const double> stablecoin_weights,
                                     const HedgeSpec& base) {
    if (stablecoin_weights.empty()) throw Error(ErrorKind::Scenario, "hedge sweep grid is empty");
    std::vector<HedgeResult> out;
    out.reserve(stablecoin_weights.size());
    for (double ws : stablecoin_weights) {
        HedgeSpec h = base;
        h.stablecoin_weight = ws;
        h.validate();
    }
    for (double ws : stablecoin_weights) {
        HedgeSpec h = base;
        h.stablecoin_weight = ws;
        out.push_back(apply_hedge(spec, moments, h));
    }
    return out;
}

MomentEstimates augment_with_stablecoin(const MomentEstimates& moments, const std::string& label,
                                        double mean, double variance,
                                        std::span<const double> covariances) {
    const Eigen::Index n = moments.assets();
    if (!covariances.empty() && static_cast<Eigen::Index>(covariances.size()) != n)
        throw Error(ErrorKind::Alignment, "stablecoin covariance count does not match assets");
    if (!(variance >= 0.0)) throw Error(ErrorKind::Validation, "stablecoin variance must be >= 0");
    std::vector<std::string> labels = moments.labels;
    labels.push_back(label);
    Eigen::VectorXd r(n + 1);
    r.head(n) = moments.mean;
    r(n) = mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n + 1, n + 1);
    cov.topLeftCorner(n, n) = moments.covariance;
    cov(n, n) = variance;
    for (Eigen::Index i = 0; i < n && !covariances.empty(); ++i) {
        cov(i, n) = covariances[static_cast<std::size_t>(i)];
        cov(n, i) = covariances[static_cast<std::size_t>(i)];
    }
    MomentEstimates out = make_moments(std::move(labels), std::move(r), std::move(cov));
    out.window = moments.window;
    out.method = moments.method;
    out.lambda = moments.lambda;
    return out;
}

}  // namespace cryptorisk
