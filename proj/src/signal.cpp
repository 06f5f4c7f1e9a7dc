#include "mcd/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mcd {

ArrivalModel parse_arrival_model(std::string_view name)
{
    if (name == "poisson")
        return ArrivalModel::Poisson;
    if (name == "gaussian")
        return ArrivalModel::Gaussian;
    if (name == "noiseless")
        return ArrivalModel::Noiseless;
    throw std::invalid_argument("unknown arrival model '" + std::string(name) + "'");
}

std::string_view to_string(ArrivalModel model)
{
    switch (model) {
    case ArrivalModel::Poisson: return "poisson";
    case ArrivalModel::Gaussian: return "gaussian";
    case ArrivalModel::Noiseless: return "noiseless";
    }
    return "?";
}

EmissionVector modulate_bcsk(const BitSequence& s, double M, int N)
{
    if (!(M >= 0.0))
        throw std::invalid_argument("molecule count must be non-negative");
    if (N < 1)
        throw std::invalid_argument("N must be >= 1");
    EmissionVector out;
    out.M = M;
    out.N = N;
    out.x.assign(s.size() * static_cast<std::size_t>(N), 0.0);
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] > 1)
            throw std::invalid_argument("bit sequence entries must be 0 or 1");
        if (s[k] == 1)
            out.x[k * static_cast<std::size_t>(N)] = M;
    }
    return out;
}

std::vector<double> mean_arrivals(std::span<const double> x, const ChannelVector& h, double lambda_s)
{
    std::vector<double> mu(x.size(), lambda_s);
    const std::size_t taps = h.size();
    for (std::size_t e = 0; e < x.size(); ++e) {
        if (x[e] == 0.0)
            continue;
        const std::size_t end = std::min(taps, x.size() - e);
        for (std::size_t k = 0; k < end; ++k)
            mu[e + k] += x[e] * h.h[k];
    }
    return mu;
}

GaussianStats received_stats(const EmissionVector& x, const ChannelVector& h, double lambda_s)
{
    if (!(lambda_s >= 0.0))
        throw std::invalid_argument("noise rate must be non-negative");
    if (x.N != h.grid.N)
        throw std::invalid_argument("emission vector and channel disagree on samples per symbol");
    const auto mu = mean_arrivals(x.x, h, lambda_s);
    GaussianStats g;
    g.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    g.sigma = g.mu.asDiagonal();
    return g;
}

void sample_arrivals(std::span<const double> rates, std::span<double> out, RngStream& rng, ArrivalModel model)
{
    if (out.size() != rates.size())
        throw std::invalid_argument("output length differs from rate vector");
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t n = 0; n < rates.size(); ++n) {
        const double rate = rates[n];
        switch (model) {
        case ArrivalModel::Noiseless:
            out[n] = rate;
            break;
        case ArrivalModel::Gaussian:
            out[n] = rate + std::sqrt(rate) * unit(rng);
            break;
        case ArrivalModel::Poisson:
            if (rate <= 0.0) {
                out[n] = 0.0;
            } else if (rate <= kExactPoissonLimit) {
                std::poisson_distribution<long long> pois(rate);
                out[n] = static_cast<double>(pois(rng));
            } else {
                out[n] = std::max(0.0, std::round(rate + std::sqrt(rate) * unit(rng)));
            }
            break;
        }
    }
}

ReceivedSequence simulate_arrivals(const EmissionVector& x, const ChannelVector& h, double lambda_s,
                                   RngStream& rng, ArrivalModel model)
{
    if (!(lambda_s >= 0.0))
        throw std::invalid_argument("noise rate must be non-negative");
    const auto rates = mean_arrivals(x.x, h, lambda_s);
    ReceivedSequence y(rates.size());
    sample_arrivals(rates, y, rng, model);
    return y;
}

double snr_to_noise_rate(double snr_db, double M, int N)
{
    if (!(M > 0.0) || N < 1)
        throw std::invalid_argument("snr_to_noise_rate requires M > 0 and N >= 1");
    return M / (2.0 * static_cast<double>(N) * std::pow(10.0, snr_db / 10.0));
}

}  // namespace mcd
