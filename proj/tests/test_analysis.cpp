#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mcd/analysis.hpp"
#include "mcd/channel.hpp"
#include "mcd/derivative.hpp"
#include "mcd/signal.hpp"
#include "oracles.hpp"

using namespace mcd;

namespace {

const Topology kTopo{15.0, 5.0, 100.0};

DetectorConfig fstd_config(double Sr, int N, int L, int m, double M, double snr_db = 10.0)
{
    DetectorConfig c;
    c.kind = DetectorKind::FSTD;
    c.channel = channel_vector(kTopo, grid_from_rate(kTopo, Sr, N, L));
    c.N = N;
    c.m = m;
    c.M = M;
    c.lambda_s = M > 0 ? snr_to_noise_rate(snr_db, M, N) : 0.0;
    c.L_prime = L;
    return c;
}

// Brute-force SINR ISI term over all strings, straight from the definition.
double isi_term_bruteforce(const DetectorConfig& c, int Lp, int m, int q)
{
    const int N = c.N;
    const Eigen::RowVectorXd d = oracle::derivative_matrix(N, m).row(q);
    double e_var = 0, e_sq = 0, e_mean = 0;
    const int strings = 1 << (Lp - 1);
    for (int code = 0; code < strings; ++code) {
        Eigen::VectorXd mu = Eigen::VectorXd::Constant(N, c.lambda_s);
        for (int b = 0; b < Lp - 1; ++b)
            if ((code >> b) & 1)
                for (int j = 0; j < N; ++j)
                    mu(j) += c.M * c.channel.tap((b + 1) * N + j);
        const double mean = d * mu;
        const double var = d.array().square().matrix() * mu;
        e_var += var / strings;
        e_sq += mean * mean / strings;
        e_mean += mean / strings;
    }
    return e_var + e_sq - e_mean * e_mean;
}

}  // namespace

TEST_SUITE("analysis")
{
    TEST_CASE("conditional statistics")
    {
        const auto h = channel_vector(kTopo, grid_from_rate(kTopo, 0.5, 5, 6));
        const auto zero = conditional_stats(BitSequence(6, 0), h, 1e6, 3.0);
        CHECK(zero.mu.isApprox(Eigen::VectorXd::Constant(5, 3.0)));
        CHECK(zero.isi.size() == 5);

        BitSequence last(6, 0);
        last.back() = 1;
        const auto one = conditional_stats(last, h, 1e6, 3.0);
        for (int j = 0; j < 5; ++j)
            CHECK(one.mu(j) == 1e6 * h[j] + 3.0);

        std::mt19937_64 rng(1);
        for (int t = 0; t < 50; ++t) {
            BitSequence s(6);
            for (auto& b : s)
                b = rng() & 1;
            const auto c = conditional_stats(s, h, 1e7, 11.0);
            const auto g = received_stats(modulate_bcsk(s, 1e7, 5), h, 11.0);
            CHECK((c.mu - g.mu.tail(5)).cwiseAbs().maxCoeff() <= 1e-12 * g.mu.maxCoeff());
            CHECK((c.sigma - g.sigma.bottomRightCorner(5, 5)).cwiseAbs().maxCoeff() <= 1e-12 * g.mu.maxCoeff());
        }
    }

    TEST_CASE("FSTD theory without signal is a coin flip")
    {
        for (double g : {-3.0, 0.0, 1.0, 50.0}) {
            auto c = fstd_config(0.5, 5, 6, 1, 0.0);
            c.lambda_s = 2.0;
            c.gamma = g;
            CHECK(std::abs(fstd_theoretical_ber(c, 6) - 0.5) < 1e-15);
            CHECK(std::abs(matd_theoretical_ber(c, 6) - 0.5) < 1e-15);
        }
    }

    TEST_CASE("single conditional, single sample")
    {
        auto c = fstd_config(1.0, 1, 1, 0, 1e3);
        c.gamma = 60.0;
        const double mu1 = c.M * c.channel[0] + c.lambda_s, mu0 = c.lambda_s;
        const double ref = 0.5 * (oracle::q((mu1 - c.gamma) / std::sqrt(mu1)) + oracle::q((c.gamma - mu0) / std::sqrt(mu0)));
        CHECK(fstd_theoretical_ber(c, 1) == doctest::Approx(ref).epsilon(1e-14));
    }

    TEST_CASE("FSTD theory against a direct enumeration")
    {
        for (int m = 0; m <= 3; ++m) {
            auto c = fstd_config(0.25, 5, 8, m, 1e9);
            const auto sample = fstd_select_sample(c.channel, c.M, 5, m);
            const Eigen::RowVectorXd d = sample.sign * oracle::derivative_matrix(5, m).row(sample.q);
            c.gamma = 0.3 * std::abs(intended_mean(c.channel, c.M, 5, m)(sample.q));
            double total = 0;
            for (int code = 0; code < 256; ++code) {
                BitSequence s(8);
                for (int k = 0; k < 8; ++k)
                    s[k] = (code >> k) & 1;
                const auto g = received_stats(modulate_bcsk(s, c.M, 5), c.channel, c.lambda_s);
                const Eigen::VectorXd mu = g.mu.tail(5);
                const double mean = d * mu, sd = std::sqrt(d.array().square().matrix() * mu);
                total += s.back() ? oracle::q((mean - c.gamma) / sd) : oracle::q((c.gamma - mean) / sd);
            }
            CHECK(fstd_theoretical_ber(c, 8) == doctest::Approx(total / 256).epsilon(1e-12));
        }
    }

    TEST_CASE("Clark approximation closed cases")
    {
        Eigen::VectorXd mu(2);
        mu << 0, 0;
        const auto r = clark_max_stats(mu, Eigen::MatrixXd::Identity(2, 2));
        CHECK(r.mean == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)).epsilon(1e-14));
        CHECK(r.variance == doctest::Approx(1.0 - 1.0 / std::numbers::pi).epsilon(1e-14));

        // identical variables
        Eigen::MatrixXd same(2, 2);
        same << 4, 4, 4, 4;
        mu << 3, 3;
        const auto s = clark_max_stats(mu, same);
        CHECK(s.mean == 3.0);
        CHECK(s.variance == 4.0);

        Eigen::VectorXd one(1);
        one << -2.5;
        const auto o = clark_max_stats(one, Eigen::MatrixXd::Constant(1, 1, 0.7));
        CHECK(o.mean == -2.5);
        CHECK(o.variance == 0.7);
        CHECK_THROWS(clark_max_stats(Eigen::VectorXd(), Eigen::MatrixXd()));
    }

    TEST_CASE("Clark mean dominates every input mean")
    {
        std::mt19937_64 rng(2);
        std::normal_distribution<double> n01;
        for (int t = 0; t < 200; ++t) {
            const int dim = 2 + t % 4;
            Eigen::MatrixXd a(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j)
                    a(i, j) = n01(rng);
            const Eigen::MatrixXd cov = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
            Eigen::VectorXd mu(dim);
            for (auto& v : mu)
                v = 2 * n01(rng);
            const auto r = clark_max_stats(mu, cov);
            CHECK(r.mean >= mu.maxCoeff() - 1e-12);
            CHECK(r.variance >= 0.0);
        }
    }

    TEST_CASE("MaTD with one surviving sample equals FSTD")
    {
        auto c = fstd_config(0.5, 2, 8, 1, 1e6);
        REQUIRE(fstd_select_sample(c.channel, c.M, 2, 1).sign == 1);
        for (double g : {0.0, 100.0, 500.0, 2000.0}) {
            c.gamma = g;
            CHECK(matd_theoretical_ber(c, 8) == doctest::Approx(fstd_theoretical_ber(c, 8)).epsilon(1e-14));
        }
    }

    TEST_CASE("conditional errors are probabilities, sum is order independent")
    {
        auto c = fstd_config(0.25, 5, 12, 2, 1e9);
        for (auto kind : {DetectorKind::FSTD, DetectorKind::MaTD, DetectorKind::FTD}) {
            const int m = kind == DetectorKind::FTD ? 0 : 2;
            const ThresholdBerModel model(kind, c.channel, c.M, c.lambda_s, m, 12);
            const auto [lo, hi] = model.search_interval();
            for (double g = lo; g <= hi; g += (hi - lo) / 10) {
                double reversed = 0;
                for (auto it = model.conditionals().rbegin(); it != model.conditionals().rend(); ++it) {
                    const double e = conditional_error(*it, g);
                    CHECK(e >= 0.0);
                    CHECK(e <= 1.0);
                    reversed += e;
                }
                reversed /= static_cast<double>(model.conditionals().size());
                const double p = model.ber(g);
                CHECK(p >= 0.0);
                CHECK(p <= 1.0);
                CHECK(p == doctest::Approx(reversed).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("theory input checks")
    {
        const auto c = fstd_config(0.5, 5, 30, 1, 1e6);
        CHECK_THROWS(ThresholdBerModel(DetectorKind::FSTD, c.channel, c.M, c.lambda_s, 1, 25));
        CHECK_THROWS(ThresholdBerModel(DetectorKind::MLDA, c.channel, c.M, c.lambda_s, 1, 5));
        CHECK_THROWS(ThresholdBerModel(DetectorKind::FTD, c.channel, c.M, c.lambda_s, 1, 5));
        CHECK_THROWS(ThresholdBerModel(DetectorKind::FSTD, c.channel, c.M, c.lambda_s, 5, 5));
    }

    TEST_CASE("SINR limits and components")
    {
        auto c = fstd_config(0.5, 5, 10, 1, 0.0);
        CHECK(sinr(c, 10, 1).value == 0.0);

        // no tail and no external noise
        auto t = fstd_config(0.5, 5, 1, 1, 1e6);
        t.lambda_s = 0.0;
        const auto r = sinr(t, 1, 1);
        CHECK(r.isi_noise == 0.0);
        const Eigen::VectorXd mus = intended_mean(t.channel, t.M, 5, 1);
        const Eigen::RowVectorXd d = oracle::derivative_matrix(5, 1).row(r.sample.q);
        Eigen::VectorXd own(5);
        for (int j = 0; j < 5; ++j)
            own(j) = t.M * t.channel[j];
        const double ref = 0.5 * mus(r.sample.q) * mus(r.sample.q) / (0.5 * (d.array().square().matrix() * own).value());
        CHECK(r.value == doctest::Approx(ref).epsilon(1e-13));
    }

    TEST_CASE("SINR ISI term against enumeration and the independent-bit formula")
    {
        for (double Sr : {0.25, 0.5}) {
            for (int m = 0; m <= 3; ++m) {
                for (int Lp : {1, 4, 9}) {
                    const auto c = fstd_config(Sr, 5, 12, m, 1e8);
                    const auto r = sinr(c, Lp, m);
                    const double brute = isi_term_bruteforce(c, Lp, m, r.sample.q);
                    CHECK(r.isi_noise == doctest::Approx(brute).epsilon(1e-9));

                    // independent bits: lambda |d|^2 + sum (v_b / 2 + a_b^2 / 4)
                    const Eigen::RowVectorXd d = oracle::derivative_matrix(5, m).row(r.sample.q);
                    double closed = c.lambda_s * d.squaredNorm();
                    for (int b = 1; b < Lp; ++b) {
                        double a = 0, v = 0;
                        for (int j = 0; j < 5; ++j) {
                            a += d(j) * c.M * c.channel.tap(b * 5 + j);
                            v += d(j) * d(j) * c.M * c.channel.tap(b * 5 + j);
                        }
                        closed += 0.5 * v + 0.25 * a * a;
                    }
                    CHECK(r.isi_noise == doctest::Approx(closed).epsilon(1e-9));
                    CHECK(r.value == doctest::Approx(r.signal / (r.intended_noise + r.isi_noise)).epsilon(1e-15));
                }
            }
        }
    }

    TEST_CASE("SINR components are nonnegative")
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0, 1);
        for (int t = 0; t < 60; ++t) {
            const double Sr = 0.1 + 2 * u(rng);
            const int N = 2 + static_cast<int>(u(rng) * 6);
            const int m = static_cast<int>(u(rng) * N);
            const double M = std::pow(10.0, 2 + 9 * u(rng));
            auto c = fstd_config(Sr, N, 12, m, M, -5 + 25 * u(rng));
            const auto r = sinr(c, 1 + t % 10, m);
            CHECK(r.signal >= 0);
            CHECK(r.intended_noise >= 0);
            CHECK(r.isi_noise >= 0);
            CHECK(r.value >= 0);
        }
    }

    TEST_CASE("threshold search")
    {
        // symmetric pair of equal-variance Gaussians
        auto ber = [](double g) { return 0.5 * (oracle::q((10 - g) / 2) + oracle::q((g - 4) / 2)); };
        const auto s = optimize_threshold(-1.0, 16.0, ber, 201);
        CHECK(std::abs(s.gamma - 7.0) <= 17.0 / 200);
        const auto fine = optimize_threshold(-1.0, 16.0, ber, 201, 3);
        CHECK(std::abs(fine.gamma - 7.0) <= std::abs(s.gamma - 7.0));

        // flat objective keeps the lower edge
        const auto flat = optimize_threshold(-3.0, 5.0, [](double) { return 0.5; }, 201);
        CHECK(flat.gamma == -3.0);
        CHECK(flat.ber == 0.5);

        auto c = fstd_config(0.5, 5, 6, 1, 0.0);
        c.lambda_s = 1.0;
        const ThresholdBerModel silent(DetectorKind::FSTD, c.channel, 0.0, 1.0, 1, 6);
        const auto z = optimize_threshold(silent, 201);
        // every threshold is equally bad; rounding picks the winner
        CHECK(z.gamma >= silent.search_interval().first);
        CHECK(z.gamma <= silent.search_interval().second);
        CHECK(z.ber == doctest::Approx(0.5).epsilon(1e-15));

        CHECK_THROWS(optimize_threshold(1.0, 0.0, ber));
        CHECK_THROWS(optimize_threshold(0.0, 1.0, ber, 1));
        CHECK_THROWS(optimize_threshold(0.0, 1.0, [](double) -> double { throw std::runtime_error("x"); }));
    }

    TEST_CASE("empirical threshold evaluator")
    {
        EmpiricalThresholdBer e;
        for (double v : {1.0, 2.0, 3.0})
            e.add(v, 0);
        for (double v : {2.0, 5.0, 6.0})
            e.add(v, 1);
        CHECK_THROWS(e.ber(0.0));
        e.finalize();
        CHECK(e.ber(3.0) == doctest::Approx(1.0 / 6.0));  // the 1 at 2.0 is missed
        CHECK(e.ber(0.0) == doctest::Approx(0.5));
        CHECK(e.ber(10.0) == doctest::Approx(0.5));
        CHECK(e.ber(2.0) == doctest::Approx(2.0 / 6.0));  // equality decides 0
        CHECK(e.range() == std::pair<double, double>{1.0, 6.0});
    }

    TEST_CASE("optimized FSTD theory is non-increasing in M")
    {
        for (double Sr : {0.5, 0.25}) {
            const double start = Sr == 0.5 ? 4.0 : 6.0, stop = Sr == 0.5 ? 8.5 : 11.0;
            for (int m = 0; m <= 3; ++m) {
                double prev = 1.0;
                for (double e = start; e <= stop + 1e-9; e += 0.5) {
                    const auto c = fstd_config(Sr, 5, 10, m, std::pow(10.0, e));
                    const ThresholdBerModel model(DetectorKind::FSTD, c.channel, c.M, c.lambda_s, m, 10);
                    const double p = optimize_threshold(model, 201, 3).ber;
                    CHECK(p <= prev);
                    prev = p;
                }
            }
        }
    }

    TEST_CASE("derivative order selection")
    {
        // single-tap channel: differencing only adds noise
        auto c = fstd_config(0.5, 5, 4, 0, 1e6);
        std::fill(c.channel.h.begin(), c.channel.h.end(), 0.0);
        c.channel.h[2] = 1e-3;
        c.lambda_s = 1.0;
        const auto sel = optimize_derivative_order(c, 2, 4);
        CHECK(sel.m_star == 0);
        for (int m = 1; m <= 2; ++m)
            CHECK(sel.reports[m].value < sel.reports[0].value);

        // half-rate channel prefers a small order across the moderate-M range
        for (double e = 5.0; e <= 8.0; e += 0.5)
            CHECK(optimize_derivative_order(fstd_config(0.5, 5, 10, 0, std::pow(10.0, e)), 3, 10).m_star <= 1);

        // quarter rate: second order at small M, third at large M
        CHECK(optimize_derivative_order(fstd_config(0.25, 5, 10, 0, 1e7), 3, 10).m_star == 2);
        CHECK(optimize_derivative_order(fstd_config(0.25, 5, 10, 0, 1e8), 3, 10).m_star == 2);
        CHECK(optimize_derivative_order(fstd_config(0.25, 5, 10, 0, 1e11), 3, 10).m_star == 3);

        CHECK_THROWS(optimize_derivative_order(c, 5, 4));
    }
}
