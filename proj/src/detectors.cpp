#include "mcd/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mcd/derivative.hpp"

namespace mcd {

DetectorKind parse_detector_kind(std::string_view name)
{
    if (name == "MLSD") return DetectorKind::MLSD;
    if (name == "BandedMLSD") return DetectorKind::BandedMLSD;
    if (name == "MLDA") return DetectorKind::MLDA;
    if (name == "MaTD") return DetectorKind::MaTD;
    if (name == "FSTD") return DetectorKind::FSTD;
    if (name == "FTD") return DetectorKind::FTD;
    throw std::invalid_argument("unknown detector '" + std::string(name) + "'");
}

std::string_view to_string(DetectorKind kind)
{
    switch (kind) {
    case DetectorKind::MLSD: return "MLSD";
    case DetectorKind::BandedMLSD: return "BandedMLSD";
    case DetectorKind::MLDA: return "MLDA";
    case DetectorKind::MaTD: return "MaTD";
    case DetectorKind::FSTD: return "FSTD";
    case DetectorKind::FTD: return "FTD";
    }
    return "?";
}

bool is_threshold_detector(DetectorKind kind)
{
    return kind == DetectorKind::MaTD || kind == DetectorKind::FSTD || kind == DetectorKind::FTD;
}

bool is_memory_detector(DetectorKind kind)
{
    return kind == DetectorKind::BandedMLSD || kind == DetectorKind::MLDA;
}

void DetectorConfig::validate() const
{
    channel.grid.validate();
    if (N != channel.grid.N)
        throw std::invalid_argument("detector N differs from the channel grid");
    if (m < 0 || m >= N)
        throw std::invalid_argument("derivative order must satisfy 0 <= m < N");
    if (is_memory_detector(kind) && L_prime < 1)
        throw std::invalid_argument("memory detectors need L' >= 1");
    if (is_threshold_detector(kind) && !std::isfinite(gamma))
        throw std::invalid_argument("threshold must be finite");
    if (!(lambda_s >= 0.0) || !(M >= 0.0))
        throw std::invalid_argument("noise rate and molecule count must be non-negative");
}

namespace {

std::size_t symbol_count(std::span<const double> y, int N)
{
    if (y.size() % static_cast<std::size_t>(N) != 0)
        throw std::invalid_argument("received length is not a whole number of symbols");
    return y.size() / static_cast<std::size_t>(N);
}

std::vector<double> differentiate(std::span<const double> y, int m)
{
    std::vector<double> out(y.begin(), y.end());
    apply_derivative_inplace(out, m);
    return out;
}

Eigen::Map<const Eigen::VectorXd> symbol_view(const std::vector<double>& y_m, std::size_t i, int N, int m)
{
    return {y_m.data() + i * static_cast<std::size_t>(N), N - m};
}

// Expected contribution of the symbols older than the L' window, for each number of
// such symbols that precede the current one (0 .. L - L').
std::vector<Eigen::VectorXd> expected_fill(const DetectorConfig& cfg, bool enabled)
{
    const int L = cfg.memory();
    const int extra = enabled ? std::max(0, L - cfg.L_prime) : 0;
    std::vector<Eigen::VectorXd> fill(static_cast<std::size_t>(extra) + 1, Eigen::VectorXd::Zero(cfg.N));
    for (int pc = 1; pc <= extra; ++pc) {
        fill[static_cast<std::size_t>(pc)] = fill[static_cast<std::size_t>(pc - 1)];
        const int back = cfg.L_prime + pc - 1;
        for (int j = 0; j < cfg.N; ++j)
            fill[static_cast<std::size_t>(pc)](j) +=
                0.5 * cfg.M * cfg.channel.tap(static_cast<std::size_t>(back * cfg.N + j));
    }
    return fill;
}

std::size_t fill_class(std::size_t symbol_index, int L_prime, std::size_t classes)
{
    const auto older = static_cast<long long>(symbol_index) - L_prime + 1;
    if (older <= 0)
        return 0;
    return std::min(static_cast<std::size_t>(older), classes - 1);
}

}  // namespace

Eigen::MatrixXd truncated_derivative_rows(int N, int m)
{
    if (m < 0 || m >= N)
        throw std::invalid_argument("derivative order must satisfy 0 <= m < N");
    return derivative_matrix(N, m).topRows(N - m);
}

GaussianMetric symbol_metric(const Eigen::MatrixXd& rows, const Eigen::VectorXd& raw_mean)
{
    Eigen::VectorXd mu = rows * raw_mean;
    Eigen::MatrixXd sigma = rows * raw_mean.asDiagonal() * rows.transpose();
    return {std::move(mu), sigma};
}

// ---------------------------------------------------------------------------
// MLSD

double mlsd_metric(std::span<const double> y, const DetectorConfig& cfg, const BitSequence& candidate,
                   MlsdWindow window)
{
    const int N = cfg.N;
    const std::size_t S = symbol_count(y, N);
    if (candidate.size() != S)
        throw std::invalid_argument("candidate length differs from block length");
    const auto x = modulate_bcsk(candidate, cfg.M, N);
    const auto mu = mean_arrivals(x.x, cfg.channel, cfg.lambda_s);

    if (window == MlsdWindow::Full) {
        GaussianStats g;
        g.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
        g.sigma = g.mu.asDiagonal();
        const auto t = transform_stats(g, cfg.m);
        const auto y_m = differentiate(y, cfg.m);
        const GaussianMetric metric(t.mu, t.sigma);
        return metric(Eigen::Map<const Eigen::VectorXd>(y_m.data(), static_cast<Eigen::Index>(y_m.size())));
    }

    const auto rows = truncated_derivative_rows(N, cfg.m);
    const auto y_m = differentiate(y, cfg.m);
    double total = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
        const Eigen::VectorXd raw = Eigen::Map<const Eigen::VectorXd>(mu.data() + i * static_cast<std::size_t>(N), N);
        total += symbol_metric(rows, raw)(symbol_view(y_m, i, N, cfg.m));
    }
    return total;
}

BitSequence mlsd_detect(std::span<const double> y, const DetectorConfig& cfg, int S, MlsdWindow window)
{
    cfg.validate();
    if (S < 1 || S > 20)
        throw std::invalid_argument("exhaustive MLSD supports 1 <= S <= 20");
    if (symbol_count(y, cfg.N) != static_cast<std::size_t>(S))
        throw std::invalid_argument("received length differs from S * N");
    if (!(cfg.lambda_s > 0.0))
        throw std::invalid_argument("MLSD requires lambda_s > 0");

    const std::uint32_t count = 1u << S;
    BitSequence best(static_cast<std::size_t>(S), 0);
    BitSequence cand(static_cast<std::size_t>(S), 0);
    double best_metric = std::numeric_limits<double>::infinity();
    // Enumerating with s[0] as the most significant bit visits candidates in
    // lexicographic order, so a strict improvement test keeps the smallest on ties.
    for (std::uint32_t c = 0; c < count; ++c) {
        for (int k = 0; k < S; ++k)
            cand[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>((c >> (S - 1 - k)) & 1u);
        const double metric = mlsd_metric(y, cfg, cand, window);
        if (metric < best_metric) {
            best_metric = metric;
            best = cand;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Banded MLSD

BandedMlsd::BandedMlsd(const DetectorConfig& cfg)
    : cfg_(cfg)
{
    cfg_.validate();
    if (!(cfg_.lambda_s > 0.0))
        throw std::invalid_argument("banded MLSD requires lambda_s > 0");
    const int Lp = cfg_.L_prime;
    if (Lp > 20)
        throw std::invalid_argument("banded MLSD supports L' <= 20");
    states_ = std::size_t{1} << (Lp - 1);
    traceback_depth_ = 5 * Lp;

    const int N = cfg_.N;
    const auto rows = truncated_derivative_rows(N, cfg_.m);
    const auto fill = expected_fill(cfg_, cfg_.expected_isi_fill);
    const std::size_t windows = std::size_t{1} << Lp;

    branches_.resize(fill.size());
    for (std::size_t pc = 0; pc < fill.size(); ++pc) {
        branches_[pc].reserve(windows);
        for (std::size_t w = 0; w < windows; ++w) {
            Eigen::VectorXd raw = fill[pc].array() + cfg_.lambda_s;
            for (int b = 0; b < Lp; ++b) {
                if (((w >> b) & 1u) == 0)
                    continue;
                for (int j = 0; j < N; ++j)
                    raw(j) += cfg_.M * cfg_.channel.tap(static_cast<std::size_t>(b * N + j));
            }
            branches_[pc].push_back(symbol_metric(rows, raw));
        }
    }
}

std::size_t BandedMlsd::position_class(std::size_t symbol_index) const
{
    return fill_class(symbol_index, cfg_.L_prime, branches_.size());
}

BitSequence BandedMlsd::detect(std::span<const double> y) const
{
    const int N = cfg_.N;
    const std::size_t S = symbol_count(y, N);
    const auto y_m = differentiate(y, cfg_.m);
    const std::size_t mask = states_ - 1;
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> metric(states_, inf), next(states_);
    metric[0] = 0.0;  // silent past
    // Survivor per (symbol, state): predecessor state and the bit that led here.
    std::vector<std::uint32_t> prev(S * states_);
    std::vector<std::uint8_t> input(S * states_);
    BitSequence out(S, 0);
    std::vector<double> branch_values(states_ * 2);

    auto trace = [&](std::size_t t, std::size_t state, std::size_t down_to, bool write_all) {
        // Walk back from (t, state); write bits for symbols in [down_to, t] when write_all,
        // otherwise only the bit of symbol down_to.
        for (std::size_t k = t + 1; k-- > down_to;) {
            if (write_all || k == down_to)
                out[k] = input[k * states_ + state];
            state = prev[k * states_ + state];
        }
    };

    const auto depth = static_cast<std::size_t>(traceback_depth_);
    for (std::size_t i = 0; i < S; ++i) {
        const auto& table = branches_[position_class(i)];
        const auto obs = symbol_view(y_m, i, N, cfg_.m);
        for (std::size_t w = 0; w < table.size(); ++w)
            branch_values[w] = table[w](obs);

        std::fill(next.begin(), next.end(), inf);
        for (std::size_t st = 0; st < states_; ++st) {
            if (metric[st] == inf)
                continue;
            for (std::size_t u = 0; u < 2; ++u) {
                const std::size_t w = (st << 1) | u;
                const std::size_t ns = w & mask;
                const double cand = metric[st] + branch_values[w];
                const std::size_t slot = i * states_ + ns;
                if (cand < next[ns] || (cand == next[ns] && st < prev[slot])) {
                    next[ns] = cand;
                    prev[slot] = static_cast<std::uint32_t>(st);
                    input[slot] = static_cast<std::uint8_t>(u);
                }
            }
        }
        const double lowest = *std::min_element(next.begin(), next.end());
        for (std::size_t st = 0; st < states_; ++st)
            metric[st] = next[st] - lowest;

        if (i >= depth) {
            const auto best = static_cast<std::size_t>(std::min_element(metric.begin(), metric.end()) - metric.begin());
            trace(i, best, i - depth, false);
        }
    }
    if (S > 0) {
        const auto best = static_cast<std::size_t>(std::min_element(metric.begin(), metric.end()) - metric.begin());
        const std::size_t flushed_from = S > depth ? S - depth : 0;
        trace(S - 1, best, flushed_from, true);
    }
    return out;
}

BitSequence banded_mlsd_detect(std::span<const double> y, const DetectorConfig& cfg)
{
    return BandedMlsd(cfg).detect(y);
}

// ---------------------------------------------------------------------------
// MLDA

Mlda::Mlda(const DetectorConfig& cfg)
    : cfg_(cfg)
{
    cfg_.validate();
    if (!(cfg_.lambda_s > 0.0))
        throw std::invalid_argument("MLDA requires lambda_s > 0");
    rows_ = truncated_derivative_rows(cfg_.N, cfg_.m);
    fill_ = expected_fill(cfg_, true);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> Mlda::hypothesis_means(const BitSequence& decided, std::size_t i) const
{
    const int N = cfg_.N;
    Eigen::VectorXd isi = fill_[fill_class(i, cfg_.L_prime, fill_.size())];
    for (int b = 1; b < cfg_.L_prime && static_cast<std::size_t>(b) <= i; ++b) {
        if (decided[i - static_cast<std::size_t>(b)] == 0)
            continue;
        for (int j = 0; j < N; ++j)
            isi(j) += cfg_.M * cfg_.channel.tap(static_cast<std::size_t>(b * N + j));
    }
    Eigen::VectorXd mu0 = isi.array() + cfg_.lambda_s;
    Eigen::VectorXd mu1 = mu0;
    for (int j = 0; j < N; ++j)
        mu1(j) += cfg_.M * cfg_.channel.tap(static_cast<std::size_t>(j));
    return {std::move(mu0), std::move(mu1)};
}

BitSequence Mlda::detect(std::span<const double> y) const
{
    const int N = cfg_.N;
    const std::size_t S = symbol_count(y, N);
    const auto y_m = differentiate(y, cfg_.m);
    BitSequence out(S, 0);
    for (std::size_t i = 0; i < S; ++i) {
        const auto [mu0, mu1] = hypothesis_means(out, i);
        const auto obs = symbol_view(y_m, i, N, cfg_.m);
        const double d1 = symbol_metric(rows_, mu1)(obs);
        const double d0 = symbol_metric(rows_, mu0)(obs);
        // log L1 - log L0 = (d0 - d1) / 2; equality declares 0.
        out[i] = d1 < d0 ? 1 : 0;
    }
    return out;
}

BitSequence mlda_detect(std::span<const double> y, const DetectorConfig& cfg)
{
    return Mlda(cfg).detect(y);
}

// ---------------------------------------------------------------------------
// Threshold detectors

FstdSample fstd_select_sample(const ChannelVector& h, double M, int N, int m)
{
    const Eigen::VectorXd mus = intended_mean(h, M, N, m);
    FstdSample best;
    double best_abs = 0.0;
    for (Eigen::Index q = 0; q < mus.size(); ++q) {
        const double a = std::abs(mus(q));
        if (a > best_abs) {
            best_abs = a;
            best.q = static_cast<int>(q);
        }
    }
    if (!(best_abs > 0.0))
        throw std::invalid_argument("intended signal is identically zero; no FSTD sample");
    best.sign = mus(best.q) >= 0.0 ? 1 : -1;
    return best;
}

BitSequence matd_decide(std::span<const double> y_m, int N, int m, double gamma)
{
    const std::size_t S = symbol_count(y_m, N);
    BitSequence out(S, 0);
    for (std::size_t i = 0; i < S; ++i) {
        const auto first = y_m.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(N));
        out[i] = *std::max_element(first, first + (N - m)) > gamma ? 1 : 0;
    }
    return out;
}

BitSequence fstd_decide(std::span<const double> y_m, int N, FstdSample sample, double gamma)
{
    const std::size_t S = symbol_count(y_m, N);
    BitSequence out(S, 0);
    for (std::size_t i = 0; i < S; ++i)
        out[i] = sample.sign * y_m[i * static_cast<std::size_t>(N) + static_cast<std::size_t>(sample.q)] > gamma ? 1 : 0;
    return out;
}

BitSequence matd_detect(std::span<const double> y, const DetectorConfig& cfg)
{
    cfg.validate();
    return matd_decide(differentiate(y, cfg.m), cfg.N, cfg.m, cfg.gamma);
}

BitSequence fstd_detect(std::span<const double> y, const DetectorConfig& cfg)
{
    cfg.validate();
    const auto sample = fstd_select_sample(cfg.channel, cfg.M, cfg.N, cfg.m);
    return fstd_decide(differentiate(y, cfg.m), cfg.N, sample, cfg.gamma);
}

BitSequence ftd_detect(std::span<const double> y, const DetectorConfig& cfg)
{
    cfg.validate();
    const int N = cfg.N;
    const std::size_t S = symbol_count(y, N);
    BitSequence out(S, 0);
    for (std::size_t i = 0; i < S; ++i) {
        double total = 0.0;
        for (int j = 0; j < N; ++j)
            total += y[i * static_cast<std::size_t>(N) + static_cast<std::size_t>(j)];
        out[i] = total > cfg.gamma ? 1 : 0;
    }
    return out;
}

// ---------------------------------------------------------------------------

Detector::Detector(DetectorConfig cfg)
    : cfg_(std::move(cfg))
{
    cfg_.validate();
    switch (cfg_.kind) {
    case DetectorKind::BandedMLSD: engine_.emplace<BandedMlsd>(cfg_); break;
    case DetectorKind::MLDA: engine_.emplace<Mlda>(cfg_); break;
    case DetectorKind::FSTD: sample_ = fstd_select_sample(cfg_.channel, cfg_.M, cfg_.N, cfg_.m); break;
    default: break;
    }
}

BitSequence Detector::detect(std::span<const double> y) const
{
    switch (cfg_.kind) {
    case DetectorKind::MLSD:
        return mlsd_detect(y, cfg_, static_cast<int>(symbol_count(y, cfg_.N)));
    case DetectorKind::BandedMLSD:
        return std::get<BandedMlsd>(engine_).detect(y);
    case DetectorKind::MLDA:
        return std::get<Mlda>(engine_).detect(y);
    case DetectorKind::MaTD:
        return matd_decide(differentiate(y, cfg_.m), cfg_.N, cfg_.m, cfg_.gamma);
    case DetectorKind::FSTD:
        return fstd_decide(differentiate(y, cfg_.m), cfg_.N, sample_, cfg_.gamma);
    case DetectorKind::FTD:
        return ftd_detect(y, cfg_);
    }
    throw std::logic_error("unhandled detector kind");
}

}  // namespace mcd
