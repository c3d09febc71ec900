#include "cryptorisk/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cryptorisk/errors.hpp"

namespace cryptorisk {

namespace {

constexpr double kZeroVariance = 1e-20;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' ||
                          s.front() == '\n'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                          s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.emplace_back(trim(current));
    return fields;
}

std::optional<double> parse_number(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

void require_window(Eigen::Index window, Eigen::Index rows) {
    if (window < 2)
        throw Error(ErrorKind::Estimation,
                    "estimation window must be at least 2, got " + std::to_string(window));
    if (window > rows)
        throw Error(ErrorKind::Estimation, "estimation window " + std::to_string(window) +
                                               " exceeds available rows " +
                                               std::to_string(rows));
}

// Fills correlation and volatility from a covariance; zero-variance assets get
// unit diagonal and zero off-diagonal entries.
void derive_correlation(MomentEstimates& m) {
    const Eigen::Index n = m.covariance.rows();
    m.volatility = m.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    m.correlation = Eigen::MatrixXd::Identity(n, n);
    m.zero_variance_assets.clear();
    std::vector<bool> degenerate(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        degenerate[static_cast<std::size_t>(i)] = m.covariance(i, i) <= kZeroVariance;
        if (degenerate[static_cast<std::size_t>(i)])
            m.zero_variance_assets.push_back(m.labels[static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double rho = 0.0;
            if (!degenerate[static_cast<std::size_t>(i)] &&
                !degenerate[static_cast<std::size_t>(j)]) {
                rho = m.covariance(i, j) / std::sqrt(m.covariance(i, i) * m.covariance(j, j));
                rho = std::clamp(rho, -1.0, 1.0);
            }
            m.correlation(i, j) = rho;
            m.correlation(j, i) = rho;
        }
    }
    if (repair_psd(m.correlation)) {
        const Eigen::VectorXd diag = m.correlation.diagonal();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                const double d = std::sqrt(diag(i) * diag(j));
                m.correlation(i, j) =
                    (i == j || d <= 0.0) ? static_cast<double>(i == j)
                                         : std::clamp(m.correlation(i, j) / d, -1.0, 1.0);
            }
        }
        m.repaired = true;
    }
}

MomentEstimates finish_moments(std::vector<std::string> labels, Eigen::VectorXd mean,
                               Eigen::MatrixXd covariance) {
    MomentEstimates m;
    m.labels = std::move(labels);
    m.mean = std::move(mean);
    m.covariance = 0.5 * (covariance + covariance.transpose());
    m.repaired = repair_psd(m.covariance);
    derive_correlation(m);
    return m;
}

}  // namespace

std::optional<Date> parse_iso_date(std::string_view text) {
    text = trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0;
    unsigned mo = 0;
    unsigned d = 0;
    auto parse_part = [&](std::size_t pos, std::size_t len, auto& out) {
        const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
        return ec == std::errc{} && ptr == text.data() + pos + len;
    };
    if (!parse_part(0, 4, y) || !parse_part(5, 2, mo) || !parse_part(8, 2, d)) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo},
                                          std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

std::string format_iso_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

RawPriceSeries parse_prices(std::string_view csv_text, std::string label, const DateRange& range,
                            std::string_view source) {
    const std::string where(source);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
    std::vector<std::string> header;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= csv_text.size()) {
        const std::size_t nl = csv_text.find('\n', pos);
        const std::string_view line =
            csv_text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = (nl == std::string_view::npos) ? csv_text.size() + 1 : nl + 1;
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (header.empty()) {
            header = std::move(fields);
            continue;
        }
        rows.push_back(std::move(fields));
        line_numbers.push_back(line_no);
    }
    if (header.empty()) throw Error(ErrorKind::Schema, where + ": missing header row");

    const std::size_t ncols = header.size();
    std::optional<std::size_t> date_col;
    for (std::size_t c = 0; c < ncols; ++c) {
        if (iequals(header[c], "date")) {
            date_col = c;
            break;
        }
    }
    if (!date_col) {
        std::vector<std::size_t> candidates;
        for (std::size_t c = 0; c < ncols && !rows.empty(); ++c) {
            const bool all_dates = std::all_of(rows.begin(), rows.end(), [&](const auto& r) {
                return c < r.size() && parse_iso_date(r[c]).has_value();
            });
            if (all_dates) candidates.push_back(c);
        }
        if (candidates.size() != 1)
            throw Error(ErrorKind::Schema,
                        where + (candidates.empty() ? ": no date column found"
                                                    : ": ambiguous date columns"));
        date_col = candidates.front();
    }

    std::optional<std::size_t> close_col;
    for (std::size_t c = 0; c < ncols; ++c) {
        if (c != *date_col && iequals(header[c], "close")) {
            close_col = c;
            break;
        }
    }
    if (!close_col) {
        for (std::size_t c = 0; c < ncols && !rows.empty(); ++c) {
            if (c == *date_col) continue;
            const bool numeric = std::all_of(rows.begin(), rows.end(), [&](const auto& r) {
                return c < r.size() && parse_number(r[c]).has_value();
            });
            if (numeric) {
                close_col = c;
                break;
            }
        }
        if (!close_col) throw Error(ErrorKind::Schema, where + ": no numeric close column found");
    }

    RawPriceSeries out;
    out.label = std::move(label);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& fields = rows[r];
        const std::string at = where + " line " + std::to_string(line_numbers[r]);
        if (fields.size() <= std::max(*date_col, *close_col))
            throw Error(ErrorKind::Data, at + ": too few fields");
        const auto date = parse_iso_date(fields[*date_col]);
        if (!date) throw Error(ErrorKind::Data, at + ": invalid date '" + fields[*date_col] + "'");
        const auto close = parse_number(fields[*close_col]);
        if (!close || !std::isfinite(*close))
            throw Error(ErrorKind::Data, at + ": invalid close '" + fields[*close_col] + "'");
        if (*close <= 0.0)
            throw Error(ErrorKind::Data, at + ": non-positive close " + fields[*close_col]);
        if (!range.contains(*date)) continue;
        out.rows.push_back({*date, *close});
    }
    std::sort(out.rows.begin(), out.rows.end(),
              [](const PricePoint& a, const PricePoint& b) { return a.date < b.date; });
    const auto dup = std::adjacent_find(out.rows.begin(), out.rows.end(),
                                        [](const auto& a, const auto& b) { return a.date == b.date; });
    if (dup != out.rows.end())
        throw Error(ErrorKind::Data, where + ": duplicate date " + format_iso_date(dup->date));
    if (out.rows.empty())
        throw Error(ErrorKind::Range, where + ": no rows inside the requested date range");
    return out;
}

RawPriceSeries load_prices(const std::filesystem::path& file, std::string label,
                           const DateRange& range) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorKind::Data, "cannot open price file " + file.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_prices(buffer.str(), std::move(label), range, file.string());
}

PriceSeries align_and_fill(const std::vector<RawPriceSeries>& series) {
    if (series.empty()) throw Error(ErrorKind::Alignment, "no price series to align");
    Date first = Date::min();
    Date last = Date::min();
    for (const auto& s : series) {
        if (s.rows.empty())
            throw Error(ErrorKind::Alignment, "price series '" + s.label + "' is empty");
        first = std::max(first, s.rows.front().date);
        last = std::max(last, s.rows.back().date);
    }
    if (first > last) throw Error(ErrorKind::Alignment, "price series spans do not overlap");

    PriceSeries out;
    const auto days = static_cast<Eigen::Index>((last - first).count() + 1);
    out.dates.reserve(static_cast<std::size_t>(days));
    for (Date d = first; d <= last; d += std::chrono::days{1}) out.dates.push_back(d);
    out.prices.resize(days, static_cast<Eigen::Index>(series.size()));

    for (std::size_t a = 0; a < series.size(); ++a) {
        const auto& rows = series[a].rows;
        out.labels.push_back(series[a].label);
        // Last observation at or before the axis start.
        auto it = std::upper_bound(rows.begin(), rows.end(), first,
                                   [](Date d, const PricePoint& p) { return d < p.date; });
        double carried = std::prev(it)->close;
        for (Eigen::Index t = 0; t < days; ++t) {
            const Date d = out.dates[static_cast<std::size_t>(t)];
            while (it != rows.end() && it->date <= d) {
                carried = it->close;
                ++it;
            }
            out.prices(t, static_cast<Eigen::Index>(a)) = carried;
        }
    }
    return out;
}

PriceSeries align_and_fill(const PriceSeries& aligned) {
    std::vector<RawPriceSeries> raw(aligned.labels.size());
    for (std::size_t a = 0; a < raw.size(); ++a) {
        raw[a].label = aligned.labels[a];
        for (std::size_t t = 0; t < aligned.dates.size(); ++t)
            raw[a].rows.push_back({aligned.dates[t], aligned.prices(static_cast<Eigen::Index>(t),
                                                                    static_cast<Eigen::Index>(a))});
    }
    return align_and_fill(raw);
}

ReturnMatrix log_returns(const PriceSeries& prices) {
    if (prices.rows() < 2)
        throw Error(ErrorKind::InsufficientData, "log-returns need at least 2 price rows");
    ReturnMatrix out;
    out.labels = prices.labels;
    out.dates.assign(prices.dates.begin() + 1, prices.dates.end());
    const Eigen::Index t = prices.rows() - 1;
    out.returns = (prices.prices.bottomRows(t).array() / prices.prices.topRows(t).array()).log();
    return out;
}

MomentEstimates make_moments(std::vector<std::string> labels, Eigen::VectorXd mean,
                             Eigen::MatrixXd covariance) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (mean.size() != n || covariance.rows() != n || covariance.cols() != n)
        throw Error(ErrorKind::Alignment, "moment dimensions do not match label count");
    return finish_moments(std::move(labels), std::move(mean), std::move(covariance));
}

MomentEstimates estimate_moments(const ReturnMatrix& returns, const EstimationSpec& spec) {
    require_window(spec.window, returns.rows());
    const Eigen::Index n = returns.assets();
    const Eigen::MatrixXd sample = returns.returns.bottomRows(spec.window);

    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    if (spec.method == EstimationMethod::Flat) {
        mean = sample.colwise().mean().transpose();
        const Eigen::MatrixXd centered = sample.rowwise() - mean.transpose();
        cov = (centered.transpose() * centered) / static_cast<double>(spec.window - 1);
    } else {
        if (!(spec.lambda > 0.0 && spec.lambda < 1.0))
            throw Error(ErrorKind::Estimation, "EWMA decay must lie in (0, 1)");
        const double lam = spec.lambda;
        mean = sample.row(0).transpose();
        Eigen::MatrixXd second = mean * mean.transpose();
        for (Eigen::Index t = 1; t < spec.window; ++t) {
            const Eigen::VectorXd r = sample.row(t).transpose();
            mean = lam * mean + (1.0 - lam) * r;
            second = lam * second + (1.0 - lam) * (r * r.transpose());
        }
        cov = second - mean * mean.transpose();
        // Cancellation noise on the diagonal of a constant column.
        for (Eigen::Index i = 0; i < n; ++i) cov(i, i) = std::max(cov(i, i), 0.0);
    }

    MomentEstimates m = finish_moments(returns.labels, std::move(mean), std::move(cov));
    m.window = spec.window;
    m.method = spec.method;
    m.lambda = spec.method == EstimationMethod::Ewma ? spec.lambda : 0.0;
    return m;
}

std::vector<CorrelationSnapshot> rolling_correlations(const ReturnMatrix& returns,
                                                      Eigen::Index window) {
    require_window(window, returns.rows());
    std::vector<CorrelationSnapshot> out;
    out.reserve(static_cast<std::size_t>(returns.rows() - window + 1));
    for (Eigen::Index end = window; end <= returns.rows(); ++end) {
        ReturnMatrix slice;
        slice.labels = returns.labels;
        slice.returns = returns.returns.middleRows(end - window, window);
        const auto m = estimate_moments(slice, {window, EstimationMethod::Flat, 0.0});
        out.push_back({returns.dates[static_cast<std::size_t>(end - 1)], m.correlation});
    }
    return out;
}

std::vector<AssetStats> descriptive_stats(const ReturnMatrix& returns) {
    const Eigen::Index rows = returns.rows();
    if (rows < 4)
        throw Error(ErrorKind::InsufficientData, "descriptive statistics need at least 4 rows");
    std::vector<AssetStats> out;
    for (Eigen::Index i = 0; i < returns.assets(); ++i) {
        const auto col = returns.returns.col(i);
        AssetStats s;
        s.label = returns.labels[static_cast<std::size_t>(i)];
        s.mean = col.mean();
        const Eigen::ArrayXd dev = col.array() - s.mean;
        const double n = static_cast<double>(rows);
        const double m2 = dev.square().sum() / n;
        const double m3 = dev.cube().sum() / n;
        const double m4 = dev.square().square().sum() / n;
        s.stddev = std::sqrt(dev.square().sum() / (n - 1.0));
        if (m2 > kZeroVariance) {
            s.skewness = m3 / std::pow(m2, 1.5);
            s.kurtosis = m4 / (m2 * m2);
        }
        out.push_back(std::move(s));
    }
    return out;
}

bool repair_psd(Eigen::MatrixXd& matrix) {
    if (matrix.rows() == 0) return false;
    const double trace = matrix.trace();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorKind::Numerical, "eigen-decomposition failed during PSD repair");
    const double min_eig = solver.eigenvalues().minCoeff();
    if (!(min_eig < -1e-10 * std::abs(trace))) return false;
    const Eigen::VectorXd clipped = solver.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd& v = solver.eigenvectors();
    Eigen::MatrixXd rebuilt = v * clipped.asDiagonal() * v.transpose();
    matrix = 0.5 * (rebuilt + rebuilt.transpose());
    return true;
}

}  // namespace cryptorisk
