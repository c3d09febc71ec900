// Regenerates the bundled synthetic price fixtures under data/fixtures.
//
//   BTC  seed 20200101  drift 0.0012  vol 0.045
//   ETH  seed 20200101  drift 0.0015  vol 0.052  corr(BTC) 0.85
//   USDT seed 20200102  drift 0       vol 0.0002 (every 17th day missing)

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "cryptorisk/timeseries.hpp"

int main(int argc, char** argv) {
    const std::filesystem::path dir = argc > 1 ? argv[1] : "data/fixtures";
    std::filesystem::create_directories(dir);
    constexpr int kDays = 400;
    const auto start = *cryptorisk::parse_iso_date("2020-01-01");

    std::mt19937_64 crypto_rng(20200101);
    std::mt19937_64 stable_rng(20200102);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::ofstream btc(dir / "btc.csv");
    std::ofstream eth(dir / "eth.csv");
    std::ofstream usdt(dir / "usdt.csv");
    btc << "Date,Open,Close\n";
    eth << "Date,Close\n";
    usdt << "Date,Close\n";

    const double rho = 0.85;
    double p_btc = 7200.0;
    double p_eth = 130.0;
    char line[96];
    for (int d = 0; d < kDays; ++d) {
        if (d > 0) {
            const double z1 = normal(crypto_rng);
            const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * normal(crypto_rng);
            p_btc *= std::exp(0.0012 - 0.5 * 0.045 * 0.045 + 0.045 * z1);
            p_eth *= std::exp(0.0015 - 0.5 * 0.052 * 0.052 + 0.052 * z2);
        }
        const double p_usdt = 1.0 + 0.0002 * normal(stable_rng);
        const std::string date = cryptorisk::format_iso_date(start + std::chrono::days{d});
        std::snprintf(line, sizeof line, "%s,%.2f,%.2f\n", date.c_str(), p_btc * 0.995, p_btc);
        btc << line;
        std::snprintf(line, sizeof line, "%s,%.4f\n", date.c_str(), p_eth);
        eth << line;
        if (d % 17 != 16) {
            std::snprintf(line, sizeof line, "%s,%.6f\n", date.c_str(), p_usdt);
            usdt << line;
        }
    }

    std::ofstream adj(dir / "adjacency.csv");
    adj << ",BTC,ETH,USDT\n"
        << "BTC,1,0.6,0\n"
        << "ETH,0.8,1,0\n"
        << "USDT,0.05,0.02,1\n";
    std::cout << "fixtures written to " << dir.string() << "\n";
    return 0;
}
