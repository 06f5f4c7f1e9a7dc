#include "mcd/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mcd {

void Topology::validate() const
{
    if (!(rr > 0.0) || !(r0 > rr) || !(D > 0.0) || !std::isfinite(r0) || !std::isfinite(D))
        throw std::invalid_argument("topology requires r0 > rr > 0 and D > 0");
}

void SlotGrid::validate() const
{
    if (!(ts > 0.0) || !std::isfinite(ts))
        throw std::invalid_argument("slot duration must be positive");
    if (N < 1 || L < 1)
        throw std::invalid_argument("slot grid requires N >= 1 and L >= 1");
}

std::span<const double> ChannelVector::symbol_row(int symbols_back) const
{
    const auto n = static_cast<std::size_t>(grid.N);
    const auto start = static_cast<std::size_t>(symbols_back) * n;
    if (symbols_back < 0 || start + n > h.size())
        throw std::out_of_range("symbol row outside channel memory");
    return std::span<const double>(h).subspan(start, n);
}

double hit_density(double t, const Topology& topo)
{
    if (!(t > 0.0))
        throw std::domain_error("hit_density requires t > 0");
    const double d = topo.r0 - topo.rr;
    const double four_dt = 4.0 * topo.D * t;
    return topo.capture_probability() / std::sqrt(std::numbers::pi * four_dt) * (d / t) * std::exp(-d * d / four_dt);
}

namespace {

// Argument of the complementary error function at time t.
double erfc_argument(double t, const Topology& topo)
{
    return (topo.r0 - topo.rr) / std::sqrt(4.0 * topo.D * t);
}

}  // namespace

double hit_cdf(double t, const Topology& topo)
{
    if (t < 0.0 || std::isnan(t))
        throw std::domain_error("hit_cdf requires t >= 0");
    if (t == 0.0)
        return 0.0;
    return topo.capture_probability() * std::erfc(erfc_argument(t, topo));
}

double hit_probability(double t1, double t2, const Topology& topo)
{
    if (t1 < 0.0 || t2 < t1)
        throw std::domain_error("hit_probability requires 0 <= t1 <= t2");
    if (t1 == t2)
        return 0.0;
    if (t1 == 0.0)
        return hit_cdf(t2, topo);
    const double a1 = erfc_argument(t1, topo);
    const double a2 = erfc_argument(t2, topo);
    // Late slots: erfc(a) is close to 1, so difference the small erf values instead.
    const double diff = a1 < 0.5 ? std::erf(a1) - std::erf(a2) : std::erfc(a2) - std::erfc(a1);
    return topo.capture_probability() * std::max(diff, 0.0);
}

ChannelVector channel_vector(const Topology& topo, const SlotGrid& grid)
{
    topo.validate();
    grid.validate();
    ChannelVector out;
    out.grid = grid;
    out.h.resize(grid.taps());
    for (std::size_t k = 0; k < out.h.size(); ++k) {
        const double lo = static_cast<double>(k) * grid.ts;
        const double hi = static_cast<double>(k + 1) * grid.ts;
        out.h[k] = hit_probability(lo, hi, topo);
    }
    return out;
}

double peak_time(const Topology& topo)
{
    const double d = topo.r0 - topo.rr;
    return d * d / (6.0 * topo.D);
}

SlotGrid grid_from_rate(const Topology& topo, double symbol_ratio, int N, int L)
{
    if (!(symbol_ratio > 0.0))
        throw std::invalid_argument("S_r must be positive");
    if (N < 1)
        throw std::invalid_argument("N must be >= 1");
    const double tb = symbol_ratio * peak_time(topo);
    SlotGrid g{tb / static_cast<double>(N), N, L};
    g.validate();
    return g;
}

}  // namespace mcd
