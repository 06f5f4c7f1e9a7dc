#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mcd/channel.hpp"
#include "mcd/signal.hpp"
#include "oracles.hpp"

using namespace mcd;

namespace {

const Topology kTopo{15.0, 5.0, 100.0};

ChannelVector half_rate(int L = 10) { return channel_vector(kTopo, grid_from_rate(kTopo, 0.5, 5, L)); }

EmissionVector silent(std::size_t slots, int N)
{
    EmissionVector x;
    x.x.assign(slots, 0.0);
    x.N = N;
    return x;
}

}  // namespace

TEST_SUITE("signal")
{
    TEST_CASE("bcsk modulation")
    {
        const auto x = modulate_bcsk({1, 0, 1}, 100.0, 2);
        CHECK(x.x == std::vector<double>{100, 0, 0, 0, 100, 0});
        CHECK(modulate_bcsk({0, 0, 0}, 50.0, 3).x == std::vector<double>(9, 0.0));
        CHECK(modulate_bcsk({1}, 0.0, 4).x == std::vector<double>(4, 0.0));
        CHECK_THROWS(modulate_bcsk({1}, -1.0, 4));
        CHECK_THROWS(modulate_bcsk({2}, 1.0, 4));
    }

    TEST_CASE("received stats of a silent block")
    {
        const auto h = half_rate();
        const auto g = received_stats(silent(15, 5), h, 2.0);
        CHECK(g.mu.isApprox(Eigen::VectorXd::Constant(15, 2.0)));
        CHECK(g.sigma.isApprox(2.0 * Eigen::MatrixXd::Identity(15, 15)));
    }

    TEST_CASE("single emission reproduces the taps")
    {
        const auto h = half_rate();
        const double M = 1e6, lam = 3.0;
        const auto g = received_stats(modulate_bcsk({1, 0, 0, 0}, M, 5), h, lam);
        for (int n = 0; n < 20; ++n)
            CHECK(g.mu(n) == doctest::Approx(M * h[n] + lam).epsilon(1e-15));
    }

    TEST_CASE("overlapping symbols match a direct convolution")
    {
        const auto h = half_rate(4);
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            BitSequence s(12);
            for (auto& b : s)
                b = rng() & 1;
            const double M = 1e5 + trial, lam = 0.7;
            const auto g = received_stats(modulate_bcsk(s, M, 5), h, lam);
            const auto ref = oracle::convolve(oracle::emissions(s, M, 5), h.h, lam);
            for (std::size_t n = 0; n < ref.size(); ++n) {
                CHECK(g.mu(n) == doctest::Approx(ref[n]).epsilon(1e-13));
                CHECK(g.sigma(n, n) == doctest::Approx(ref[n]).epsilon(1e-13));
            }
            CHECK((g.sigma - Eigen::MatrixXd(g.sigma.diagonal().asDiagonal())).norm() == 0.0);
        }
    }

    TEST_CASE("received stats input checks")
    {
        const auto h = half_rate();
        CHECK_THROWS(received_stats(silent(10, 5), h, -1.0));
        CHECK_THROWS(received_stats(silent(10, 2), h, 1.0));
    }

    TEST_CASE("linearity in the emissions")
    {
        const auto h = half_rate();
        const auto x1 = modulate_bcsk({1, 0, 1, 1, 0}, 1e4, 5);
        const auto x2 = modulate_bcsk({0, 1, 1, 0, 1}, 1e4, 5);
        EmissionVector sum = x1;
        for (std::size_t i = 0; i < sum.x.size(); ++i)
            sum.x[i] += x2.x[i];
        const double lam = 4.0;
        const auto a = received_stats(x1, h, lam), b = received_stats(x2, h, lam), c = received_stats(sum, h, lam);
        const Eigen::VectorXd expect = a.mu + b.mu - Eigen::VectorXd::Constant(a.dim(), lam);
        CHECK((c.mu - expect).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((c.sigma.diagonal() - expect).cwiseAbs().maxCoeff() < 1e-9);
        // positive diagonal whenever the noise rate is
        CHECK(c.sigma.diagonal().minCoeff() >= lam);
    }

    TEST_CASE("silent rates give silent samples; seeds reproduce")
    {
        const auto h = half_rate();
        auto rng = make_stream(5, {1});
        const auto y = simulate_arrivals(silent(25, 5), h, 0.0, rng);
        CHECK(std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; }));

        const auto x = modulate_bcsk({1, 1, 0, 1, 0, 0, 1}, 1e6, 5);
        auto r1 = make_stream(42, {3, 4});
        auto r2 = make_stream(42, {3, 4});
        CHECK(simulate_arrivals(x, h, 10.0, r1) == simulate_arrivals(x, h, 10.0, r2));
        auto r3 = make_stream(42, {3, 5});
        CHECK(simulate_arrivals(x, h, 10.0, r1) != simulate_arrivals(x, h, 10.0, r3));
    }

    TEST_CASE("sample moments match the rates")
    {
        // one exact-Poisson rate and one in the rounded-normal regime
        for (double rate : {37.5, 2.0e6}) {
            auto rng = make_stream(9, {static_cast<std::uint64_t>(rate)});
            const std::size_t n = 1000000;
            std::vector<double> rates(n, rate), y(n);
            sample_arrivals(rates, y, rng, ArrivalModel::Poisson);
            CHECK(std::all_of(y.begin(), y.end(), [](double v) { return v >= 0.0 && v == std::floor(v); }));
            const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
            double ss = 0.0;
            for (double v : y)
                ss += (v - mean) * (v - mean);
            const double var = ss / (n - 1);
            CHECK(std::abs(mean - rate) < 5.0 * std::sqrt(rate / n));
            // Var of the sample variance of a Poisson: (lambda + 2 lambda^2) / n
            CHECK(std::abs(var - rate) < 5.0 * std::sqrt((rate + 2 * rate * rate) / n));
        }
    }

    TEST_CASE("large-rate counts are consistent with a normal law")
    {
        // KS distance with continuity correction against N(lambda, lambda), 1% critical value.
        for (double rate : {5000.0, 1.0e6}) {
            auto rng = make_stream(21, {static_cast<std::uint64_t>(rate)});
            const std::size_t n = 100000;
            std::vector<double> rates(n, rate), y(n);
            sample_arrivals(rates, y, rng, ArrivalModel::Poisson);
            std::sort(y.begin(), y.end());
            double ks = 0.0;
            for (std::size_t i = 0; i < n;) {
                std::size_t j = i;
                while (j < n && y[j] == y[i])
                    ++j;
                const double below = oracle::q(-(y[i] - 0.5 - rate) / std::sqrt(rate));
                const double upto = oracle::q(-(y[i] + 0.5 - rate) / std::sqrt(rate));
                ks = std::max({ks, std::abs(static_cast<double>(i) / n - below), std::abs(static_cast<double>(j) / n - upto)});
                i = j;
            }
            CHECK(ks < 1.628 / std::sqrt(static_cast<double>(n)));
        }
    }

    TEST_CASE("gaussian and noiseless arrival models")
    {
        const auto h = half_rate();
        const auto x = modulate_bcsk({1, 0, 1}, 1e4, 5);
        auto rng = make_stream(1, {});
        const auto mu = mean_arrivals(x.x, h, 2.0);
        CHECK(simulate_arrivals(x, h, 2.0, rng, ArrivalModel::Noiseless) == mu);
        const auto g = simulate_arrivals(x, h, 2.0, rng, ArrivalModel::Gaussian);
        CHECK(std::any_of(g.begin(), g.end(), [](double v) { return v != std::floor(v); }));
        CHECK(parse_arrival_model("gaussian") == ArrivalModel::Gaussian);
        CHECK(parse_arrival_model("poisson") == ArrivalModel::Poisson);
        CHECK(parse_arrival_model("noiseless") == ArrivalModel::Noiseless);
        CHECK_THROWS(parse_arrival_model("binomial"));
    }

    TEST_CASE("noise rate from SNR")
    {
        CHECK(snr_to_noise_rate(10.0, 1e8, 5) == doctest::Approx(1e6).epsilon(1e-14));
        CHECK(snr_to_noise_rate(0.0, 10.0, 1) == doctest::Approx(5.0).epsilon(1e-15));
        CHECK(snr_to_noise_rate(7.0, 1e5, 10) == doctest::Approx(0.5 * snr_to_noise_rate(7.0, 1e5, 5)).epsilon(1e-15));
        CHECK_THROWS(snr_to_noise_rate(10.0, 0.0, 5));
        CHECK_THROWS(snr_to_noise_rate(10.0, 1.0, 0));
    }
}
