#include "cryptorisk/contagion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cryptorisk/errors.hpp"

namespace cryptorisk {

namespace {

std::vector<std::string> split_row(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view cell = line.substr(start, comma == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : comma - start);
        while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.front())))
            cell.remove_prefix(1);
        while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back())))
            cell.remove_suffix(1);
        if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"')
            cell = cell.substr(1, cell.size() - 2);
        out.emplace_back(cell);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

void PropagationNetwork::validate() const {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (matrix.rows() != n || matrix.cols() != n)
        throw Error(ErrorKind::Alignment, "network matrix dimension does not match labels");
    if (!(threshold >= 0.0) || !std::isfinite(threshold))
        throw Error(ErrorKind::Validation, "contagion threshold must be finite and >= 0");
    if (!matrix.allFinite()) throw Error(ErrorKind::Data, "network matrix has non-finite entries");
    if (kind == NetworkKind::Correlation) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (matrix(i, i) != 1.0)
                throw Error(ErrorKind::Data, "correlation network needs a unit diagonal");
            for (Eigen::Index j = 0; j < n; ++j) {
                if (std::abs(matrix(i, j)) > 1.0 || matrix(i, j) != matrix(j, i))
                    throw Error(ErrorKind::Data,
                                "correlation network must be symmetric with entries in [-1, 1]");
            }
        }
    } else if ((matrix.array() < 0.0).any()) {
        throw Error(ErrorKind::Data, "adjacency matrix entries must be nonnegative");
    }
}

PropagationNetwork correlation_network(const MomentEstimates& moments, double threshold) {
    return correlation_network(moments.labels, moments.correlation, threshold);
}

PropagationNetwork correlation_network(std::vector<std::string> labels,
                                       Eigen::MatrixXd correlation, double threshold) {
    PropagationNetwork net{NetworkKind::Correlation, std::move(labels), std::move(correlation),
                           threshold};
    net.validate();
    return net;
}

PropagationNetwork parse_adjacency(std::string_view csv_text, double threshold,
                                   std::string_view source) {
    const std::string where(source);
    std::vector<std::vector<std::string>> rows;
    std::istringstream in{std::string(csv_text)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        rows.push_back(split_row(line));
    }
    if (rows.empty()) throw Error(ErrorKind::Schema, where + ": empty adjacency file");
    std::vector<std::string> labels(rows.front().begin() + 1, rows.front().end());
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (n == 0 || static_cast<Eigen::Index>(rows.size()) != n + 1)
        throw Error(ErrorKind::Schema, where + ": adjacency matrix must be square and labeled");
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i + 1)];
        if (static_cast<Eigen::Index>(row.size()) != n + 1)
            throw Error(ErrorKind::Schema, where + ": row " + std::to_string(i + 2) +
                                               " has the wrong number of cells");
        if (row.front() != labels[static_cast<std::size_t>(i)])
            throw Error(ErrorKind::Schema, where + ": row label '" + row.front() +
                                               "' does not match header order");
        for (Eigen::Index j = 0; j < n; ++j) {
            const std::string& cell = row[static_cast<std::size_t>(j + 1)];
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size())
                throw Error(ErrorKind::Data, where + ": bad matrix entry '" + cell + "'");
            a(i, j) = v;
        }
    }
    PropagationNetwork net{NetworkKind::Adjacency, std::move(labels), std::move(a), threshold};
    net.validate();
    return net;
}

PropagationNetwork load_adjacency(const std::filesystem::path& file, double threshold) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorKind::Data, "cannot open adjacency file " + file.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_adjacency(buffer.str(), threshold, file.string());
}

double dead_zone(double x, double threshold) noexcept {
    return std::abs(x) < threshold ? 0.0 : x;
}

ContagionResult propagate(const PropagationNetwork& network, const ShockVector& shock) {
    require_same_labels(network.labels, shock.labels, "propagate");
    if (shock.epsilon.size() != network.matrix.cols())
        throw Error(ErrorKind::Alignment, "shock vector dimension does not match network");
    for (Eigen::Index i = 0; i < shock.epsilon.size(); ++i) {
        if (!std::isfinite(shock.epsilon(i)) || shock.epsilon(i) < -1.0)
            throw Error(ErrorKind::Validation, "shock components must be finite and >= -1");
    }
    ContagionResult out;
    out.labels = network.labels;
    out.raw = network.matrix * shock.epsilon;
    out.delta.resize(out.raw.size());
    out.thresholded.resize(static_cast<std::size_t>(out.raw.size()));
    for (Eigen::Index j = 0; j < out.raw.size(); ++j) {
        out.delta(j) = dead_zone(out.raw(j), network.threshold);
        out.thresholded[static_cast<std::size_t>(j)] = out.delta(j) == 0.0 && out.raw(j) != 0.0;
    }
    return out;
}

ContagionResult single_asset_crash(const PropagationNetwork& network, std::string_view asset,
                                   double magnitude) {
    const auto it = std::find(network.labels.begin(), network.labels.end(), asset);
    if (it == network.labels.end())
        throw Error(ErrorKind::Label, "unknown asset '" + std::string(asset) + "'");
    if (!(magnitude >= -1.0 && magnitude < 0.0))
        throw Error(ErrorKind::Validation, "crash magnitude must lie in [-1, 0)");
    ShockVector shock{network.labels, Eigen::VectorXd::Zero(network.matrix.cols())};
    shock.epsilon(it - network.labels.begin()) = magnitude;
    return propagate(network, shock);
}

ShockedValue shocked_portfolio_value(const PortfolioSpec& spec, const ContagionResult& result) {
    require_same_labels(spec.labels, result.labels, "shocked_portfolio_value");
    ShockedValue out;
    out.change = spec.weights.dot(result.delta);
    out.value_after = spec.initial_value * (1.0 + out.change);
    return out;
}

}  // namespace cryptorisk
