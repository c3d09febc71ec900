#include "cryptorisk/portfolio.hpp"

#include <cmath>
#include <optional>

#include "cryptorisk/errors.hpp"

namespace cryptorisk {

namespace {

std::optional<Eigen::MatrixXd> try_cholesky(const Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double pivot = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
        if (!(pivot > 0.0)) return std::nullopt;
        const double d = std::sqrt(pivot);
        l(j, j) = d;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / d;
        }
    }
    return l;
}

}  // namespace

PortfolioSpec PortfolioSpec::create(std::vector<std::string> labels, Eigen::VectorXd weights,
                                    double initial_value) {
    if (static_cast<Eigen::Index>(labels.size()) != weights.size())
        throw Error(ErrorKind::Validation, "weight count does not match asset count");
    if (weights.size() == 0) throw Error(ErrorKind::Validation, "portfolio has no assets");
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        if (!std::isfinite(weights(i)) || weights(i) < 0.0)
            throw Error(ErrorKind::Validation,
                        "weight for " + labels[static_cast<std::size_t>(i)] +
                            " must be finite and nonnegative");
    }
    if (std::abs(weights.sum() - 1.0) > 1e-9)
        throw Error(ErrorKind::Validation, "weights must sum to 1");
    if (!(initial_value > 0.0) || !std::isfinite(initial_value))
        throw Error(ErrorKind::Validation, "initial value must be positive");
    return PortfolioSpec{std::move(labels), std::move(weights), initial_value};
}

PortfolioSpec PortfolioSpec::equal_weight(std::vector<std::string> labels, double initial_value) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (n == 0) throw Error(ErrorKind::Validation, "portfolio has no assets");
    return create(std::move(labels), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)),
                  initial_value);
}

void require_same_labels(const std::vector<std::string>& a, const std::vector<std::string>& b,
                         const char* context) {
    if (a != b)
        throw Error(ErrorKind::Alignment,
                    std::string(context) + ": asset labels differ in set or order");
}

PortfolioMetrics portfolio_metrics(const PortfolioSpec& spec, const MomentEstimates& moments) {
    require_same_labels(spec.labels, moments.labels, "portfolio_metrics");
    PortfolioMetrics out;
    out.expected_return = spec.weights.dot(moments.mean);
    double variance = spec.weights.dot(moments.covariance * spec.weights);
    if (variance < 0.0) {
        if (variance < -1e-12)
            throw Error(ErrorKind::Numerical, "portfolio variance is negative: covariance not PSD");
        variance = 0.0;
    }
    out.volatility = std::sqrt(variance);
    return out;
}

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& covariance) {
    if (covariance.rows() != covariance.cols())
        throw Error(ErrorKind::Factorization, "covariance must be square");
    if (covariance.rows() == 0) return covariance;
    if (!covariance.allFinite())
        throw Error(ErrorKind::Factorization, "covariance has non-finite entries");
    if (covariance.isZero(0.0)) return covariance;
    if (auto l = try_cholesky(covariance)) return *l;
    const double trace = covariance.trace();
    Eigen::MatrixXd jittered = covariance;
    jittered.diagonal().array() += 1e-12 * std::abs(trace);
    if (auto l = try_cholesky(jittered)) return *l;
    throw Error(ErrorKind::Factorization, "covariance is indefinite; Cholesky failed after jitter");
}

}  // namespace cryptorisk
