#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cryptorisk/portfolio.hpp"

namespace cryptorisk {

enum class NetworkKind { Correlation, Adjacency };

struct PropagationNetwork {
    NetworkKind kind = NetworkKind::Correlation;
    std::vector<std::string> labels;
    Eigen::MatrixXd matrix;
    double threshold = 0.0;  // θ; 0 disables the dead zone

    // Correlation: symmetric, unit diagonal, entries in [-1, 1].
    // Adjacency: nonnegative finite entries. θ >= 0 either way.
    void validate() const;
};

PropagationNetwork correlation_network(const MomentEstimates& moments, double threshold = 0.0);
PropagationNetwork correlation_network(std::vector<std::string> labels,
                                       Eigen::MatrixXd correlation, double threshold = 0.0);

// Dense labeled square matrix: header row `,A,B,...` and one row per label in
// the same order.
PropagationNetwork load_adjacency(const std::filesystem::path& file, double threshold = 0.0);
PropagationNetwork parse_adjacency(std::string_view csv_text, double threshold = 0.0,
                                   std::string_view source = "<memory>");

struct ShockVector {
    std::vector<std::string> labels;
    Eigen::VectorXd epsilon;
};

struct ContagionResult {
    std::vector<std::string> labels;
    Eigen::VectorXd raw;    // matrix · ε
    Eigen::VectorXd delta;  // φ(raw)
    std::vector<bool> thresholded;
};

// φ(x) = 0 for |x| < θ, x otherwise.
double dead_zone(double x, double threshold) noexcept;

/// Single-round propagation Δ = φ(M ε).
ContagionResult propagate(const PropagationNetwork& network, const ShockVector& shock);

/// propagate with ε = magnitude · e_asset; magnitude in [-1, 0).
ContagionResult single_asset_crash(const PropagationNetwork& network, std::string_view asset,
                                   double magnitude);

struct ShockedValue {
    double change = 0.0;       // wᵀΔ
    double value_after = 0.0;  // V_0 (1 + wᵀΔ)
};

ShockedValue shocked_portfolio_value(const PortfolioSpec& spec, const ContagionResult& result);

}  // namespace cryptorisk
