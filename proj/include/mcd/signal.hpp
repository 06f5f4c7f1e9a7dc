#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mcd/channel.hpp"
#include "mcd/rng.hpp"

namespace mcd {

using BitSequence = std::vector<std::uint8_t>;

/// Molecules released per slot; non-zero only on the first slot of a bit-1 symbol.
struct EmissionVector {
    std::vector<double> x;
    double M{};
    int N{1};
};

/// Mean vector and covariance of a block of samples.
struct GaussianStats {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;

    Eigen::Index dim() const { return mu.size(); }
};

/// Arrival counts per slot.
using ReceivedSequence = std::vector<double>;

enum class ArrivalModel {
    Poisson,    ///< exact Poisson up to kExactPoissonLimit, rounded normal above
    Gaussian,   ///< real-valued N(rate, rate)
    Noiseless,  ///< y equals the expected count
};

inline constexpr double kExactPoissonLimit = 1e4;

ArrivalModel parse_arrival_model(std::string_view name);
std::string_view to_string(ArrivalModel model);

EmissionVector modulate_bcsk(const BitSequence& s, double M, int N);

/// Expected arrivals H x + lambda_s, by direct convolution over the non-zero emissions.
std::vector<double> mean_arrivals(std::span<const double> x, const ChannelVector& h, double lambda_s);

/// mu = H x + lambda_s j, Sigma = diag(H x) + lambda_s I.
GaussianStats received_stats(const EmissionVector& x, const ChannelVector& h, double lambda_s);

/// One independent draw per slot with rate lambda_s + (h * x)[n].
ReceivedSequence simulate_arrivals(const EmissionVector& x, const ChannelVector& h, double lambda_s,
                                   RngStream& rng, ArrivalModel model = ArrivalModel::Poisson);

/// Draws one count per entry of `rates` into `out`.
void sample_arrivals(std::span<const double> rates, std::span<double> out, RngStream& rng, ArrivalModel model);

/// External noise rate per slot that gives the requested SNR: M / (2 N 10^(snr/10)).
double snr_to_noise_rate(double snr_db, double M, int N);

}  // namespace mcd
