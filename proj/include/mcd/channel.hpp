#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mcd {

/// Point transmitter and fully absorbing spherical receiver in unbounded 3-D space.
/// Lengths in micrometres, time in seconds, D in um^2/s.
struct Topology {
    double r0{};  ///< transmitter to receiver-centre distance
    double rr{};  ///< receiver radius
    double D{};   ///< diffusion coefficient

    void validate() const;
    double capture_probability() const { return rr / r0; }
};

/// Time slotting of the receiver: N samples of length ts per symbol, L symbols of channel memory.
struct SlotGrid {
    double ts{};
    int N{1};
    int L{1};

    double tb() const { return static_cast<double>(N) * ts; }
    std::size_t taps() const { return static_cast<std::size_t>(N) * static_cast<std::size_t>(L); }
    void validate() const;
};

/// Discretised impulse response. h[k] (0-based) is the probability that a molecule
/// emitted at the start of slot 0 is absorbed during slot k.
struct ChannelVector {
    std::vector<double> h;
    SlotGrid grid;

    std::size_t size() const { return h.size(); }
    double operator[](std::size_t k) const { return h[k]; }
    /// Tap k, or zero past the end of the stored memory.
    double tap(std::size_t k) const { return k < h.size() ? h[k] : 0.0; }
    /// The N taps seen by a symbol emitted `symbols_back` symbols earlier.
    std::span<const double> symbol_row(int symbols_back) const;
};

/// First-hitting-time density, in 1/s. Throws std::domain_error for t <= 0.
double hit_density(double t, const Topology& topo);

/// Probability of absorption by time t. Throws std::domain_error for t < 0.
double hit_cdf(double t, const Topology& topo);

/// hit_cdf(t2) - hit_cdf(t1) for t2 >= t1 >= 0 without cancellation in the tail.
double hit_probability(double t1, double t2, const Topology& topo);

ChannelVector channel_vector(const Topology& topo, const SlotGrid& grid);

/// (r0 - rr)^2 / (6 D)
double peak_time(const Topology& topo);

/// Grid whose symbol duration is S_r peak times.
SlotGrid grid_from_rate(const Topology& topo, double symbol_ratio, int N, int L);

}  // namespace mcd
