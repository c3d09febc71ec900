#pragma once

// Price ingestion, calendar alignment, log-returns and moment estimation.

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cryptorisk {

using Date = std::chrono::sys_days;

std::optional<Date> parse_iso_date(std::string_view text);
std::string format_iso_date(Date date);

struct DateRange {
    std::optional<Date> start;
    std::optional<Date> end;

    bool contains(Date d) const {
        return (!start || d >= *start) && (!end || d <= *end);
    }
};

struct PricePoint {
    Date date;
    double close = 0.0;
};

// One asset's parsed rows, ascending by date, every close > 0.
struct RawPriceSeries {
    std::string label;
    std::vector<PricePoint> rows;
};

/// Parses a daily close CSV. The date column is `Date` (case-insensitive) or the
/// only column whose every value is an ISO-8601 date; the close column is
/// `Close` or the first numeric column. Rows are sorted ascending and filtered
/// to `range`.
///
/// Throws Error{Schema} for missing/ambiguous columns, Error{Data} for a bad
/// row (the message names the line), Error{Range} when nothing survives the
/// date filter.
RawPriceSeries load_prices(const std::filesystem::path& file, std::string label,
                           const DateRange& range = {});

/// Same as load_prices but from in-memory CSV text; `source` names the input
/// in error messages.
RawPriceSeries parse_prices(std::string_view csv_text, std::string label,
                            const DateRange& range = {}, std::string_view source = "<memory>");

struct PriceSeries {
    std::vector<std::string> labels;
    std::vector<Date> dates;
    Eigen::MatrixXd prices;  // dates.size() x labels.size()

    Eigen::Index rows() const { return prices.rows(); }
    Eigen::Index assets() const { return prices.cols(); }
};

/// Daily calendar from the latest first observation to the latest last
/// observation; each asset carries its most recent prior close into gaps.
PriceSeries align_and_fill(const std::vector<RawPriceSeries>& series);

// Re-running alignment on an already aligned series.
PriceSeries align_and_fill(const PriceSeries& aligned);

struct ReturnMatrix {
    std::vector<std::string> labels;
    std::vector<Date> dates;  // date of the later price in each pair
    Eigen::MatrixXd returns;

    Eigen::Index rows() const { return returns.rows(); }
    Eigen::Index assets() const { return returns.cols(); }
};

ReturnMatrix log_returns(const PriceSeries& prices);

enum class EstimationMethod { Flat, Ewma };

struct EstimationSpec {
    Eigen::Index window = 90;
    EstimationMethod method = EstimationMethod::Flat;
    double lambda = 0.94;
};

struct MomentEstimates {
    std::vector<std::string> labels;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    Eigen::MatrixXd correlation;
    Eigen::VectorXd volatility;
    Eigen::Index window = 0;
    EstimationMethod method = EstimationMethod::Flat;
    double lambda = 0.0;
    // Assets whose variance is zero; their correlation rows are 0 off-diagonal.
    std::vector<std::string> zero_variance_assets;
    bool repaired = false;

    Eigen::Index assets() const { return mean.size(); }
};

/// Builds estimates from an explicit mean vector and covariance (correlation and
/// volatility derived). Used for scenario inputs that do not come from data.
MomentEstimates make_moments(std::vector<std::string> labels, Eigen::VectorXd mean,
                             Eigen::MatrixXd covariance);

/// Trailing-window estimates. Flat: equal weights, divisor w-1. EWMA: mean
/// m_t = λ m_{t-1} + (1-λ) r_t seeded at the first row, the same recursion on
/// r rᵀ, covariance = second moment minus m mᵀ.
MomentEstimates estimate_moments(const ReturnMatrix& returns, const EstimationSpec& spec);

struct CorrelationSnapshot {
    Date date;
    Eigen::MatrixXd correlation;
};

std::vector<CorrelationSnapshot> rolling_correlations(const ReturnMatrix& returns,
                                                      Eigen::Index window);

struct AssetStats {
    std::string label;
    double mean = 0.0;
    double stddev = 0.0;
    std::optional<double> skewness;  // empty when variance is zero
    std::optional<double> kurtosis;  // raw (normal ~ 3)
};

std::vector<AssetStats> descriptive_stats(const ReturnMatrix& returns);

// Eigenvalue clip at zero when min eigenvalue < -1e-10 * trace. Returns true if
// the matrix was modified.
bool repair_psd(Eigen::MatrixXd& matrix);

}  // namespace cryptorisk
