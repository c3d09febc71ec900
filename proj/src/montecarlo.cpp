#include "cryptorisk/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "cryptorisk/errors.hpp"

namespace cryptorisk {

namespace {

std::mt19937_64 path_generator(std::uint64_t seed, int path) {
    const auto p = static_cast<std::uint64_t>(path);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32)};
    return std::mt19937_64(seq);
}

std::size_t ceil_count(double level, std::size_t n) {
    // Guard against 0.05 * 100 landing a hair above 5.
    const double raw = level * static_cast<double>(n);
    auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
    return std::clamp<std::size_t>(k, 1, n);
}

}  // namespace

void SimulationConfig::validate() const {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (n == 0) throw Error(ErrorKind::Validation, "simulation has no assets");
    if (num_paths < 1) throw Error(ErrorKind::Validation, "num_paths must be >= 1");
    if (horizon < 1) throw Error(ErrorKind::Validation, "horizon must be >= 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::Validation, "dt must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::Validation, "alpha must lie in (0, 1)");
    if (drift.size() != n || volatility.size() != n || initial_prices.size() != n)
        throw Error(ErrorKind::Validation, "per-asset simulation inputs do not match asset count");
    if (!drift.allFinite()) throw Error(ErrorKind::Validation, "drift must be finite");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(volatility(i) >= 0.0) || !std::isfinite(volatility(i)))
            throw Error(ErrorKind::Validation, "volatility must be finite and >= 0");
        if (!(initial_prices(i) > 0.0) || !std::isfinite(initial_prices(i)))
            throw Error(ErrorKind::Validation, "initial prices must be positive");
    }
    if (covariance) {
        if (covariance->rows() != n || covariance->cols() != n)
            throw Error(ErrorKind::Validation, "covariance dimension does not match asset count");
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = std::sqrt(std::max((*covariance)(i, i), 0.0));
            if (std::abs(s - volatility(i)) > 1e-9 * std::max(1.0, s))
                throw Error(ErrorKind::Validation,
                            "volatility of " + labels[static_cast<std::size_t>(i)] +
                                " disagrees with the covariance diagonal");
        }
    }
}

PathEnsemble::PathEnsemble(std::vector<std::string> labels, int num_paths, int horizon)
    : labels_(std::move(labels)),
      num_paths_(num_paths),
      horizon_(horizon),
      data_(static_cast<std::size_t>(num_paths) * static_cast<std::size_t>(horizon + 1) *
            labels_.size()) {}

double gbm_step(double price, double drift, double volatility, double dt, double z) noexcept {
    return price * std::exp((drift - 0.5 * volatility * volatility) * dt +
                            volatility * std::sqrt(dt) * z);
}

PathEnsemble simulate_paths(const SimulationConfig& config) {
    config.validate();
    const Eigen::Index n = static_cast<Eigen::Index>(config.labels.size());
    const int steps = config.horizon;
    const double dt = config.dt;

    Eigen::MatrixXd factor;
    Eigen::VectorXd log_drift(n);
    if (config.covariance) {
        factor = cholesky(*config.covariance * dt);
        for (Eigen::Index i = 0; i < n; ++i)
            log_drift(i) = (config.drift(i) - 0.5 * (*config.covariance)(i, i)) * dt;
    }

    PathEnsemble ensemble(config.labels, config.num_paths, steps);

    auto run_path = [&](int m) {
        auto gen = path_generator(config.seed, m);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd x(n);
        Eigen::VectorXd increment(n);
        for (Eigen::Index i = 0; i < n; ++i) ensemble.price(m, 0, i) = config.initial_prices(i);
        for (int t = 0; t < steps; ++t) {
            for (Eigen::Index i = 0; i < n; ++i) x(i) = normal(gen);
            if (config.covariance) {
                increment.noalias() = factor.triangularView<Eigen::Lower>() * x;
                for (Eigen::Index i = 0; i < n; ++i)
                    ensemble.price(m, t + 1, i) =
                        ensemble.price(m, t, i) * std::exp(log_drift(i) + increment(i));
            } else {
                for (Eigen::Index i = 0; i < n; ++i)
                    ensemble.price(m, t + 1, i) =
                        gbm_step(ensemble.price(m, t, i), config.drift(i), config.volatility(i),
                                 dt, x(i));
            }
            for (Eigen::Index i = 0; i < n; ++i) {
                const double p = ensemble.price(m, t + 1, i);
                if (!std::isfinite(p) || !(p > 0.0))
                    throw Error(ErrorKind::Numerical,
                                "non-finite or non-positive price on path " + std::to_string(m) +
                                    " step " + std::to_string(t + 1) + " asset " +
                                    config.labels[static_cast<std::size_t>(i)]);
            }
        }
    };

    unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                           : config.threads;
    threads = std::min<unsigned>(threads, static_cast<unsigned>(config.num_paths));
    if (threads <= 1) {
        for (int m = 0; m < config.num_paths; ++m) run_path(m);
        return ensemble;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) {
            workers.emplace_back([&, w] {
                try {
                    for (int m = static_cast<int>(w); m < config.num_paths;
                         m += static_cast<int>(threads))
                        run_path(m);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
    return ensemble;
}

ValuePaths portfolio_paths(const PathEnsemble& ensemble, const PortfolioSpec& spec,
                           ValuationMode mode) {
    require_same_labels(spec.labels, ensemble.labels(), "portfolio_paths");
    ValuePaths out;
    out.num_paths = ensemble.num_paths();
    out.horizon = ensemble.horizon();
    out.values.resize(out.num_paths, out.horizon + 1);
    const Eigen::Index n = ensemble.assets();
    for (int m = 0; m < out.num_paths; ++m) {
        for (int t = 0; t <= out.horizon; ++t) {
            double v = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double s = ensemble.price(m, t, i);
                v += mode == ValuationMode::Relative ? spec.weights(i) * s / ensemble.price(m, 0, i)
                                                     : spec.weights(i) * s;
            }
            out.values(m, t) = mode == ValuationMode::Relative ? spec.initial_value * v : v;
        }
    }
    return out;
}

Histogram make_histogram(std::span<const double> sample, int bins) {
    if (bins < 1) throw Error(ErrorKind::Validation, "histogram needs at least one bin");
    if (sample.empty()) throw Error(ErrorKind::InsufficientData, "histogram of an empty sample");
    const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    Histogram h;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    const double width = (hi - lo) / bins;
    for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + width * b;
    h.edges.back() = hi;
    for (double v : sample) {
        std::size_t b = 0;
        if (width > 0.0) {
            b = static_cast<std::size_t>(std::floor((v - lo) / width));
            b = std::min(b, static_cast<std::size_t>(bins - 1));
        }
        ++h.counts[b];
    }
    return h;
}

double lower_order_statistic(std::span<const double> sorted, double level) {
    return sorted[ceil_count(level, sorted.size()) - 1];
}

RiskReport risk_metrics(std::span<const double> terminal, double initial_value, double alpha,
                        std::span<const double> quantile_levels, int histogram_bins) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::Validation, "alpha must lie in (0, 1)");
    const std::size_t m = terminal.size();
    const auto required = static_cast<std::size_t>(std::ceil(1.0 / alpha - 1e-9));
    if (m < required)
        throw Error(ErrorKind::Estimation, "terminal sample of " + std::to_string(m) +
                                               " is smaller than ceil(1/alpha) = " +
                                               std::to_string(required));
    std::vector<double> sorted(terminal.begin(), terminal.end());
    std::sort(sorted.begin(), sorted.end());

    RiskReport r;
    r.initial_value = initial_value;
    r.alpha = alpha;
    r.sample_size = m;
    double sum = 0.0;
    for (double v : terminal) sum += v;
    r.expected_terminal = sum / static_cast<double>(m);

    const std::size_t k = ceil_count(alpha, m);
    r.var_alpha = sorted[k - 1];
    double tail = 0.0;
    for (std::size_t i = 0; i < k; ++i) tail += sorted[i];
    r.es_alpha = tail / static_cast<double>(k);

    const auto losses = static_cast<std::size_t>(
        std::count_if(terminal.begin(), terminal.end(), [&](double v) { return v < initial_value; }));
    r.loss_probability = static_cast<double>(losses) / static_cast<double>(m);
    r.median_terminal = lower_order_statistic(sorted, 0.5);
    for (double q : quantile_levels) {
        if (!(q > 0.0 && q <= 1.0))
            throw Error(ErrorKind::Validation, "quantile levels must lie in (0, 1]");
        r.terminal_quantiles.push_back({q, lower_order_statistic(sorted, q)});
    }
    r.histogram = make_histogram(sorted, histogram_bins);
    return r;
}

AnalyticOracle analytic_oracle(double drift, double volatility, double initial_price, int horizon,
                               double alpha) {
    if (!(volatility >= 0.0)) throw Error(ErrorKind::Validation, "volatility must be >= 0");
    if (horizon < 1) throw Error(ErrorKind::Validation, "horizon must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::Validation, "alpha must lie in (0, 1)");
    const double t = static_cast<double>(horizon);
    const double log_drift = (drift - 0.5 * volatility * volatility) * t;
    AnalyticOracle out;
    out.mean = initial_price * std::exp(drift * t);
    if (volatility == 0.0) {
        out.quantile = initial_price * std::exp(log_drift);
        out.loss_probability = log_drift < 0.0 ? 1.0 : 0.0;
        return out;
    }
    const boost::math::normal_distribution<double> standard;
    const double scale = volatility * std::sqrt(t);
    out.quantile = initial_price * std::exp(log_drift + scale * boost::math::quantile(standard, alpha));
    out.loss_probability = boost::math::cdf(standard, -log_drift / scale);
    return out;
}

}  // namespace cryptorisk
