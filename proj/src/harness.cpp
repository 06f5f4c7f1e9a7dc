#include "mcd/harness.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>

#include "mcd/derivative.hpp"
#include "mcd/parallel.hpp"
#include "mcd/rng.hpp"

namespace mcd {

void set_counts(BerRecord& r, std::uint64_t bits, std::uint64_t errors)
{
    r.bits_simulated = bits;
    r.bit_errors = errors;
    if (bits == 0) {
        r.ber = kNaN;
        r.std_error = kNaN;
        return;
    }
    r.ber = static_cast<double>(errors) / static_cast<double>(bits);
    r.std_error = std::sqrt(r.ber * (1.0 - r.ber) / static_cast<double>(bits));
}

namespace {

// Blocks simulated between stopping checks. Fixed, so the stopping point never
// depends on how many workers there are.
constexpr std::size_t kBatchBlocks = 16;

// One receiver bound to a point: the threshold ones only need their statistic.
class BoundReceiver {
public:
    BoundReceiver(const ExperimentConfig& cfg, const ChannelVector& h, double M, const Receiver& r)
        : r_(r), N_(cfg.N)
    {
        if (r.kind == DetectorKind::FTD && r.m != 0)
            throw std::invalid_argument("FTD operates on raw samples (m = 0)");
        if (r.m < 0 || r.m >= cfg.N)
            throw std::invalid_argument("derivative order must satisfy 0 <= m < N");
        if (r.kind == DetectorKind::MLSD && cfg.block_symbols > 20)
            throw std::invalid_argument("exhaustive MLSD needs block_symbols <= 20");
        if (r.kind == DetectorKind::FSTD) {
            const bool silent = !(intended_mean(h, M, cfg.N, r.m).cwiseAbs().maxCoeff() > 0.0);
            sample_ = silent ? FstdSample{} : fstd_select_sample(h, M, cfg.N, r.m);
        }
        // With nothing sent and no noise every hypothesis coincides; the tie rule declares 0.
        if (!is_threshold_detector(r.kind) && M > 0.0) {
            DetectorConfig d = cfg.detector_config(r.kind, r.m, r.L_prime, M, 0.0);
            d.channel = h;
            engine_.emplace(d);
        }
    }

    int m() const { return r_.m; }
    bool threshold() const { return is_threshold_detector(r_.kind); }

    double statistic(std::span<const double> y, std::span<const double> y_m, std::size_t i) const
    {
        const std::size_t base = i * static_cast<std::size_t>(N_);
        switch (r_.kind) {
        case DetectorKind::FSTD:
            return sample_.sign * y_m[base + static_cast<std::size_t>(sample_.q)];
        case DetectorKind::MaTD:
            return *std::max_element(y_m.begin() + static_cast<std::ptrdiff_t>(base),
                                     y_m.begin() + static_cast<std::ptrdiff_t>(base) + (N_ - r_.m));
        case DetectorKind::FTD: {
            double total = 0.0;
            for (int j = 0; j < N_; ++j)
                total += y[base + static_cast<std::size_t>(j)];
            return total;
        }
        default:
            throw std::logic_error("statistic requested from a non-threshold receiver");
        }
    }

    BitSequence detect(std::span<const double> y, std::span<const double> y_m) const
    {
        const std::size_t S = y.size() / static_cast<std::size_t>(N_);
        if (threshold()) {
            if (!std::isfinite(r_.gamma))
                throw std::invalid_argument("threshold receiver without a threshold");
            BitSequence out(S);
            for (std::size_t i = 0; i < S; ++i)
                out[i] = statistic(y, y_m, i) > r_.gamma ? 1 : 0;
            return out;
        }
        if (!engine_)
            return BitSequence(S, 0);
        return engine_->detect(y);
    }

private:
    Receiver r_;
    int N_;
    FstdSample sample_{};
    std::optional<Detector> engine_;
};

struct Block {
    BitSequence bits;
    std::vector<double> y;
    std::map<int, std::vector<double>> y_m;  // by derivative order
};

Block simulate_block(const ExperimentConfig& cfg, const ChannelVector& h, double M, double lambda_s,
                     std::uint64_t point_key, StreamPhase phase, std::uint64_t block,
                     const std::vector<int>& orders)
{
    auto rng = make_stream(cfg.seed, {point_key, static_cast<std::uint64_t>(phase), block});
    Block b;
    b.bits.resize(static_cast<std::size_t>(cfg.block_symbols));
    for (auto& bit : b.bits)
        bit = static_cast<std::uint8_t>(rng() >> 63);
    const auto x = modulate_bcsk(b.bits, M, cfg.N);
    const auto rates = mean_arrivals(x.x, h, lambda_s);
    b.y.resize(rates.size());
    sample_arrivals(rates, b.y, rng, cfg.arrival_model);
    for (int m : orders)
        b.y_m.emplace(m, apply_derivative(b.y, m));
    return b;
}

std::uint64_t point_key(double M) { return std::bit_cast<std::uint64_t>(M); }

std::vector<int> distinct_orders(const std::vector<BoundReceiver>& bound)
{
    std::vector<int> orders;
    for (const auto& r : bound)
        orders.push_back(r.m());
    std::sort(orders.begin(), orders.end());
    orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
    return orders;
}

std::vector<BoundReceiver> bind(const ExperimentConfig& cfg, const ChannelVector& h, double M,
                                const std::vector<Receiver>& receivers)
{
    std::vector<BoundReceiver> out;
    out.reserve(receivers.size());
    for (const auto& r : receivers)
        out.emplace_back(cfg, h, M, r);
    return out;
}

}  // namespace

std::vector<ErrorCount> simulate_point(const ExperimentConfig& cfg, double M, const std::vector<Receiver>& receivers,
                                       StreamPhase phase)
{
    cfg.validate();
    const auto h = cfg.channel();
    const double lambda_s = cfg.noise_rate(M);
    const auto bound = bind(cfg, h, M, receivers);
    const auto orders = distinct_orders(bound);
    const auto warm = static_cast<std::size_t>(cfg.warmup_symbols());
    const auto counted = static_cast<std::uint64_t>(cfg.block_symbols) - warm;
    const auto key = point_key(M);

    std::vector<ErrorCount> counts(receivers.size());
    std::vector<bool> active(receivers.size(), true);
    std::size_t remaining = receivers.size();
    std::uint64_t next_block = 0;

    while (remaining > 0) {
        const std::vector<bool> snapshot = active;
        std::vector<std::vector<std::uint64_t>> errors(kBatchBlocks, std::vector<std::uint64_t>(receivers.size(), 0));
        parallel_for(kBatchBlocks, [&](std::size_t k) {
            const auto b = simulate_block(cfg, h, M, lambda_s, key, phase, next_block + k, orders);
            for (std::size_t r = 0; r < bound.size(); ++r) {
                if (!snapshot[r])
                    continue;
                const auto decided = bound[r].detect(b.y, b.y_m.at(bound[r].m()));
                std::uint64_t e = 0;
                for (std::size_t i = warm; i < decided.size(); ++i)
                    e += decided[i] != b.bits[i];
                errors[k][r] = e;
            }
        });
        for (std::size_t k = 0; k < kBatchBlocks && remaining > 0; ++k) {
            for (std::size_t r = 0; r < receivers.size(); ++r) {
                if (!active[r])
                    continue;
                counts[r].bits += counted;
                counts[r].errors += errors[k][r];
                const bool budget = counts[r].bits >= cfg.bit_budget;
                const bool enough = cfg.target_errors > 0 && counts[r].errors >= cfg.target_errors;
                if (budget || enough) {
                    active[r] = false;
                    --remaining;
                }
            }
        }
        next_block += kBatchBlocks;
    }
    return counts;
}

std::vector<EmpiricalThresholdBer> collect_statistics(const ExperimentConfig& cfg, double M,
                                                      const std::vector<Receiver>& receivers, std::uint64_t bits,
                                                      StreamPhase phase)
{
    cfg.validate();
    const auto h = cfg.channel();
    const double lambda_s = cfg.noise_rate(M);
    const auto bound = bind(cfg, h, M, receivers);
    for (const auto& r : bound)
        if (!r.threshold())
            throw std::invalid_argument("decision statistics exist only for threshold detectors");
    const auto orders = distinct_orders(bound);
    const auto warm = static_cast<std::size_t>(cfg.warmup_symbols());
    const auto counted = static_cast<std::uint64_t>(cfg.block_symbols) - warm;
    const std::uint64_t blocks = (bits + counted - 1) / counted;
    const auto key = point_key(M);

    std::vector<EmpiricalThresholdBer> out(receivers.size());
    for (std::uint64_t first = 0; first < blocks; first += kBatchBlocks) {
        const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kBatchBlocks, blocks - first));
        // stats[k][r] holds (statistic, bit) pairs of block first + k
        std::vector<std::vector<std::vector<std::pair<double, std::uint8_t>>>> stats(
            n, std::vector<std::vector<std::pair<double, std::uint8_t>>>(receivers.size()));
        parallel_for(n, [&](std::size_t k) {
            const auto b = simulate_block(cfg, h, M, lambda_s, key, phase, first + k, orders);
            for (std::size_t r = 0; r < bound.size(); ++r) {
                auto& s = stats[k][r];
                s.reserve(b.bits.size() - warm);
                const auto& y_m = b.y_m.at(bound[r].m());
                for (std::size_t i = warm; i < b.bits.size(); ++i)
                    s.emplace_back(bound[r].statistic(b.y, y_m, i), b.bits[i]);
            }
        });
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t r = 0; r < receivers.size(); ++r)
                for (const auto& [v, bit] : stats[k][r])
                    out[r].add(v, bit);
    }
    for (auto& e : out)
        e.finalize();
    return out;
}

ThresholdBerModel theory_model(const ExperimentConfig& cfg, DetectorKind kind, int m, double M)
{
    const int L = cfg.effective_theory_memory();
    if (L == 0)
        throw std::invalid_argument("closed-form BER needs L <= 24 or an explicit theory_memory");
    return ThresholdBerModel(kind, cfg.channel(), M, cfg.noise_rate(M), m, L);
}

namespace {

// Refinement passes for the empirical objective, which is piecewise constant.
constexpr int kEmpiricalRefinements = 2;

ThresholdSearch empirical_search(const EmpiricalThresholdBer& e, int resolution)
{
    auto [lo, hi] = e.range();
    return optimize_threshold(lo, hi, [&](double g) { return e.ber(g); }, resolution, kEmpiricalRefinements);
}

}  // namespace

ThresholdSearch search_gamma(const ExperimentConfig& cfg, DetectorKind kind, int m, double M, GammaPolicy evaluator)
{
    if (!is_threshold_detector(kind))
        throw std::invalid_argument("only threshold detectors have a threshold");
    switch (evaluator) {
    case GammaPolicy::Fixed: {
        ThresholdSearch s{cfg.gamma, kNaN};
        if (cfg.effective_theory_memory() > 0 && kind != DetectorKind::FTD)
            s.ber = theory_model(cfg, kind, m, M).ber(cfg.gamma);
        return s;
    }
    case GammaPolicy::OptimizeTheory:
        return optimize_threshold(theory_model(cfg, kind, m, M), cfg.threshold_resolution);
    case GammaPolicy::OptimizeEmpirical: {
        const auto stats = collect_statistics(cfg, M, {Receiver{kind, m, cfg.L_prime, 0.0}}, cfg.pilot_bits);
        return empirical_search(stats.front(), cfg.threshold_resolution);
    }
    }
    throw std::logic_error("unhandled gamma policy");
}

void resolve_gammas(const ExperimentConfig& cfg, double M, std::vector<Receiver>& receivers)
{
    if (cfg.gamma_policy == GammaPolicy::OptimizeEmpirical) {
        std::vector<Receiver> pilots;
        std::vector<std::size_t> where;
        for (std::size_t i = 0; i < receivers.size(); ++i) {
            if (is_threshold_detector(receivers[i].kind)) {
                pilots.push_back(receivers[i]);
                where.push_back(i);
            }
        }
        if (pilots.empty())
            return;
        const auto stats = collect_statistics(cfg, M, pilots, cfg.pilot_bits);
        for (std::size_t k = 0; k < pilots.size(); ++k)
            receivers[where[k]].gamma = empirical_search(stats[k], cfg.threshold_resolution).gamma;
        return;
    }
    for (auto& r : receivers)
        if (is_threshold_detector(r.kind))
            r.gamma = search_gamma(cfg, r.kind, r.m, M, cfg.gamma_policy).gamma;
}

BerRecord run_ber_point(const ExperimentConfig& cfg, DetectorKind detector, int m, double M)
{
    ExperimentConfig one = cfg;
    one.detectors = {detector};
    one.m_list = {m};
    one.M_grid = {M};
    auto rows = run_grid(one, {cfg.L_prime});
    if (rows.size() != 1)
        throw std::invalid_argument("detector/config mismatch: FTD runs only at m = 0");
    return rows.front();
}

std::vector<BerRecord> run_grid(const ExperimentConfig& cfg, const std::vector<int>& L_primes)
{
    cfg.validate();
    if (L_primes.empty())
        throw std::invalid_argument("at least one L' is needed");

    // Output order: detector, m, L', M.
    std::vector<Receiver> layout;
    for (auto kind : cfg.detectors) {
        for (int m : cfg.m_list) {
            if (kind == DetectorKind::FTD && m != 0)
                continue;
            if (is_memory_detector(kind)) {
                for (int lp : L_primes)
                    layout.push_back({kind, m, lp, kNaN});
            } else {
                const int lp = kind == DetectorKind::MLSD ? cfg.L : cfg.L_prime;
                layout.push_back({kind, m, lp, kNaN});
            }
        }
    }
    // Duplicate m entries in the config would otherwise produce duplicate rows.
    std::vector<Receiver> unique_layout;
    for (const auto& r : layout) {
        const bool seen = std::any_of(unique_layout.begin(), unique_layout.end(), [&](const Receiver& u) {
            return u.kind == r.kind && u.m == r.m && u.L_prime == r.L_prime;
        });
        if (!seen)
            unique_layout.push_back(r);
    }
    layout = std::move(unique_layout);

    const std::size_t points = cfg.M_grid.size();
    std::vector<BerRecord> rows(layout.size() * points);
    if (layout.empty())
        return rows;

    const auto h = cfg.channel();
    const int theory_L = cfg.effective_theory_memory();
    for (std::size_t p = 0; p < points; ++p) {
        const double M = cfg.M_grid[p];
        const auto start = std::chrono::steady_clock::now();
        auto receivers = layout;
        resolve_gammas(cfg, M, receivers);
        const auto counts = simulate_point(cfg, M, receivers);
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        for (std::size_t r = 0; r < receivers.size(); ++r) {
            BerRecord& row = rows[r * points + p];
            row.detector = receivers[r].kind;
            row.m = receivers[r].m;
            row.L_prime = receivers[r].L_prime;
            row.M = M;
            row.gamma = receivers[r].gamma;
            set_counts(row, counts[r].bits, counts[r].errors);
            row.wall_time = elapsed;
            const auto kind = receivers[r].kind;
            if ((kind == DetectorKind::FSTD || kind == DetectorKind::MaTD) && theory_L > 0)
                row.ber_theory = theory_model(cfg, kind, row.m, M).ber(row.gamma);
            if (kind == DetectorKind::FSTD) {
                DetectorConfig d = cfg.detector_config(kind, row.m, row.L_prime, M, row.gamma);
                d.channel = h;
                row.sinr = sinr(d, std::min(row.L_prime, ThresholdBerModel::kMaxMemory), row.m).value;
            }
        }
    }
    return rows;
}

Figure parse_figure(std::string_view name)
{
    if (name == "fig4") return Figure::Fig4;
    if (name == "fig5") return Figure::Fig5;
    if (name == "fig7") return Figure::Fig7;
    if (name == "fig8") return Figure::Fig8;
    throw std::invalid_argument("unknown figure '" + std::string(name) + "' (expected fig4, fig5, fig7 or fig8)");
}

std::vector<BerRecord> run_figure_sweep(const ExperimentConfig& cfg, Figure figure)
{
    switch (figure) {
    case Figure::Fig4:
        for (auto d : cfg.detectors)
            if (d != DetectorKind::FSTD && d != DetectorKind::MaTD)
                throw std::invalid_argument("fig4 compares FSTD and MaTD only");
        if (cfg.effective_theory_memory() == 0)
            throw std::invalid_argument("fig4 needs an enumerable theory memory");
        return run_grid(cfg, {cfg.L_prime});
    case Figure::Fig5:
        for (auto d : cfg.detectors)
            if (d != DetectorKind::FSTD)
                throw std::invalid_argument("fig5 is an FSTD sweep");
        return run_grid(cfg, {cfg.L_prime});
    case Figure::Fig7:
        for (auto d : cfg.detectors)
            if (!is_memory_detector(d))
                throw std::invalid_argument("fig7 sweeps memory detectors only");
        if (cfg.L_prime_list.empty())
            throw std::invalid_argument("fig7 needs L_prime_list");
        return run_grid(cfg, cfg.L_prime_list);
    case Figure::Fig8:
        return run_grid(cfg, {cfg.L_prime});
    }
    throw std::logic_error("unhandled figure");
}

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{})
        throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

void write_ber_csv(std::ostream& out, const std::vector<BerRecord>& rows, bool include_timing)
{
    out << kBerCsvHeader << '\n';
    for (const auto& r : rows) {
        out << to_string(r.detector) << ',' << r.m << ',' << r.L_prime << ',' << format_number(r.M) << ','
            << format_number(r.gamma) << ',' << format_number(r.ber) << ',' << format_number(r.std_error) << ','
            << r.bits_simulated << ',' << r.bit_errors << ',' << format_number(include_timing ? r.wall_time : 0.0)
            << ',' << format_number(r.ber_theory) << ',' << format_number(r.sinr) << '\n';
    }
}

}  // namespace mcd
