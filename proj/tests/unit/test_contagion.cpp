#include <catch_amalgamated.hpp>

#include <random>

#include "cryptorisk/contagion.hpp"
#include "cryptorisk/errors.hpp"
#include "oracles.hpp"

using namespace cryptorisk;
using Catch::Approx;

namespace {

const std::vector<std::string> kAssets{"BTC", "ETH", "USDT"};

Eigen::Matrix3d crypto_correlation() {
    return Eigen::Matrix3d{{1.0, 0.85, 0.02}, {0.85, 1.0, 0.01}, {0.02, 0.01, 1.0}};
}

Eigen::MatrixXd random_correlation(std::mt19937_64& gen, Eigen::Index n) {
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd a(n, n + 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n + 2; ++j) a(i, j) = z(gen);
    Eigen::MatrixXd c = a * a.transpose();
    const Eigen::VectorXd d = c.diagonal().cwiseSqrt().cwiseInverse();
    c = d.asDiagonal() * c * d.asDiagonal();
    for (Eigen::Index i = 0; i < n; ++i) {
        c(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) c(i, j) = c(j, i);
    }
    return c;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a cryptorisk::Error");
    return ErrorKind::Validation;
}

}  // namespace

TEST_CASE("propagate identity network", "[contagion]") {
    const auto net = correlation_network(kAssets, Eigen::Matrix3d::Identity());
    const ShockVector shock{kAssets, Eigen::Vector3d{-0.3, 0.1, -0.05}};
    const auto r = propagate(net, shock);
    CHECK(r.delta == shock.epsilon);
}

TEST_CASE("propagate BTC crash through correlation", "[contagion]") {
    const auto net = correlation_network(kAssets, crypto_correlation());
    const auto r = propagate(net, {kAssets, Eigen::Vector3d{-0.20, 0.0, 0.0}});
    CHECK(r.delta(0) == -0.20);
    CHECK(r.delta(1) == -0.17);
    CHECK(r.delta(2) == Approx(-0.004));
}

TEST_CASE("threshold zeroes small induced shocks", "[contagion]") {
    const auto net = correlation_network(kAssets, crypto_correlation(), 0.01);
    const auto r = propagate(net, {kAssets, Eigen::Vector3d{-0.20, 0.0, 0.0}});
    CHECK(r.raw(2) == Approx(-0.004));
    CHECK(r.delta(2) == 0.0);
    CHECK(r.thresholded[2]);
    CHECK_FALSE(r.thresholded[1]);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK((std::abs(r.delta(j)) >= 0.01 || r.delta(j) == 0.0));
}

TEST_CASE("single_asset_crash", "[contagion]") {
    const auto ident = correlation_network(kAssets, Eigen::Matrix3d::Identity());
    const auto r = single_asset_crash(ident, "BTC", -0.20);
    CHECK(r.delta == Eigen::Vector3d{-0.20, 0.0, 0.0});

    const auto net = correlation_network(kAssets, crypto_correlation());
    const auto c = single_asset_crash(net, "BTC", -0.20);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(c.delta(j) == crypto_correlation()(j, 0) * -0.20);

    const auto half = single_asset_crash(net, "BTC", -0.10);
    CHECK((half.delta + half.delta - c.delta).cwiseAbs().maxCoeff() <= 1e-15);

    CHECK(kind_of([&] { single_asset_crash(net, "DOGE", -0.2); }) == ErrorKind::Label);
    CHECK(kind_of([&] { single_asset_crash(net, "BTC", 0.1); }) == ErrorKind::Validation);
}

TEST_CASE("shocked_portfolio_value", "[contagion]") {
    const auto two = PortfolioSpec::create({"BTC", "ETH"}, Eigen::Vector2d{0.5, 0.5}, 1000.0);
    ContagionResult r{{"BTC", "ETH"}, Eigen::Vector2d{-0.20, -0.17}, Eigen::Vector2d{-0.20, -0.17}, {false, false}};
    const auto v = shocked_portfolio_value(two, r);
    CHECK(v.change == Approx(-0.185).epsilon(1e-15));
    CHECK(v.value_after == Approx(815.0));

    r.delta.setZero();
    CHECK(shocked_portfolio_value(two, r).change == 0.0);

    // All capital in the unshocked stablecoin whose induced shock was gated.
    const auto net = correlation_network(kAssets, crypto_correlation(), 0.01);
    const auto gated = single_asset_crash(net, "BTC", -0.2);
    const auto stable = PortfolioSpec::create(kAssets, Eigen::Vector3d{0.0, 0.0, 1.0}, 1.0);
    CHECK(shocked_portfolio_value(stable, gated).change == 0.0);

    CHECK(kind_of([&] { shocked_portfolio_value(stable, r); }) == ErrorKind::Alignment);
}

TEST_CASE("contagion invariants on random networks", "[contagion][property]") {
    std::mt19937_64 gen(404);
    std::normal_distribution<double> eps(0.0, 0.1);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    const std::vector<std::string> names{"A", "B", "C", "D"};
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = correlation_network(names, random_correlation(gen, 4));
        Eigen::Vector4d e1, e2;
        for (int i = 0; i < 4; ++i) {
            e1(i) = eps(gen);
            e2(i) = eps(gen);
        }
        const double a = coef(gen), b = coef(gen);
        const auto combined = propagate(net, {names, a * e1 + b * e2}).delta;
        const Eigen::VectorXd separate =
            a * propagate(net, {names, e1}).delta + b * propagate(net, {names, e2}).delta;
        REQUIRE((combined - separate).cwiseAbs().maxCoeff() <= 1e-12);

        // Explicit double loop.
        oracle::Rows m(4, std::vector<double>(4));
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) m[i][j] = net.matrix(i, j);
        const auto brute = oracle::mat_vec(m, {e1(0), e1(1), e1(2), e1(3)});
        const auto r1 = propagate(net, {names, e1});
        for (int i = 0; i < 4; ++i) REQUIRE(std::abs(r1.delta(i) - brute[static_cast<std::size_t>(i)]) <= 1e-15);

        // Self impact under unit diagonal.
        const auto solo = single_asset_crash(net, names[static_cast<std::size_t>(trial % 4)], -0.25);
        REQUIRE(solo.delta(trial % 4) == -0.25);
    }
}

TEST_CASE("dead zone preserves sign and shrinks magnitude", "[contagion][property]") {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> x(-1.0, 1.0);
    std::uniform_real_distribution<double> theta(0.0, 0.5);
    for (int k = 0; k < 10000; ++k) {
        const double v = x(gen), t = theta(gen);
        const double y = dead_zone(v, t);
        REQUIRE(y * v >= 0.0);
        REQUIRE(std::abs(y) <= std::abs(v));
    }
    CHECK(dead_zone(0.01, 0.01) == 0.01);
    CHECK(dead_zone(-0.0099, 0.01) == 0.0);
}

TEST_CASE("adjacency networks", "[contagion][adjacency]") {
    const auto net = parse_adjacency(",BTC,ETH,USDT\nBTC,0.5,0.6,0\nETH,0.8,1,0\nUSDT,0.05,0.02,1\n");
    CHECK(net.kind == NetworkKind::Adjacency);
    CHECK(net.labels == kAssets);
    const auto r = single_asset_crash(net, "BTC", -0.2);
    // Own impact comes from A's diagonal; no unit diagonal is injected.
    CHECK(r.delta(0) == Approx(-0.1));
    CHECK(r.delta(1) == Approx(-0.16));
    CHECK(r.delta(2) == Approx(-0.01));

    const auto from_file = load_adjacency(std::filesystem::path(CRYPTORISK_FIXTURE_DIR) / "adjacency.csv");
    CHECK(from_file.matrix(1, 0) == 0.8);

    CHECK(kind_of([] { parse_adjacency(",A,B\nA,1,-0.5\nB,0,1\n"); }) == ErrorKind::Data);
    CHECK(kind_of([] { parse_adjacency(",A,B\nB,1,0\nA,0,1\n"); }) == ErrorKind::Schema);
    CHECK(kind_of([] { parse_adjacency(",A,B\nA,1,0\n"); }) == ErrorKind::Schema);
    CHECK(kind_of([] { parse_adjacency(",A,B\nA,1,x\nB,0,1\n"); }) == ErrorKind::Data);
}

TEST_CASE("network validation", "[contagion]") {
    CHECK(kind_of([] { correlation_network({"A", "B"}, Eigen::Matrix2d{{1.0, 0.5}, {0.4, 1.0}}); }) ==
          ErrorKind::Data);
    CHECK(kind_of([] { correlation_network({"A", "B"}, Eigen::Matrix2d{{0.9, 0.5}, {0.5, 1.0}}); }) ==
          ErrorKind::Data);
    CHECK(kind_of([] { correlation_network({"A"}, Eigen::Matrix2d::Identity()); }) ==
          ErrorKind::Alignment);
    CHECK(kind_of([] { correlation_network({"A", "B"}, Eigen::Matrix2d::Identity(), -0.1); }) ==
          ErrorKind::Validation);
    const auto net = correlation_network({"A", "B"}, Eigen::Matrix2d::Identity());
    CHECK(kind_of([&] { propagate(net, {{"B", "A"}, Eigen::Vector2d::Zero()}); }) ==
          ErrorKind::Alignment);
}
