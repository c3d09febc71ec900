#pragma once

#include <string>
#include <vector>

#include "cryptorisk/timeseries.hpp"
#include "oracles.hpp"

namespace testing_support {

inline cryptorisk::Date day(int offset) {
    return *cryptorisk::parse_iso_date("2020-01-01") + std::chrono::days{offset};
}

inline std::vector<std::string> labels(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("A" + std::to_string(i));
    return out;
}

inline cryptorisk::ReturnMatrix returns_from(const oracle::Rows& rows,
                                             std::vector<std::string> names = {}) {
    cryptorisk::ReturnMatrix r;
    const std::size_t n = rows.front().size();
    r.labels = names.empty() ? labels(n) : std::move(names);
    r.returns.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        r.dates.push_back(day(static_cast<int>(t) + 1));
        for (std::size_t i = 0; i < n; ++i)
            r.returns(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = rows[t][i];
    }
    return r;
}

inline oracle::Rows to_rows(const Eigen::MatrixXd& m) {
    oracle::Rows out(static_cast<std::size_t>(m.rows()),
                     std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    return out;
}

}  // namespace testing_support
