#include "mcd/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mcd/derivative.hpp"
#include "mcd/gaussian.hpp"
#include "mcd/parallel.hpp"

namespace mcd {

ConditionalStats conditional_stats(const BitSequence& s_L, const ChannelVector& h, double M, double lambda_s)
{
    if (s_L.empty())
        throw std::invalid_argument("conditional_stats needs at least the intended bit");
    const int N = h.grid.N;
    const auto L = s_L.size();
    ConditionalStats out;
    out.mu = Eigen::VectorXd::Constant(N, lambda_s);
    for (std::size_t k = 0; k < L; ++k) {
        if (s_L[k] == 0)
            continue;
        const std::size_t back = L - 1 - k;
        for (int j = 0; j < N; ++j)
            out.mu(j) += M * h.tap(back * static_cast<std::size_t>(N) + static_cast<std::size_t>(j));
    }
    out.sigma = out.mu.asDiagonal();
    out.isi.assign(s_L.begin(), s_L.end() - 1);
    return out;
}

ClarkResult clark_max_stats(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma)
{
    const Eigen::Index n = mu.size();
    if (n < 1)
        throw std::invalid_argument("clark_max_stats needs at least one variable");
    if (sigma.rows() != n || sigma.cols() != n)
        throw std::invalid_argument("clark_max_stats: dimension mismatch");

    ClarkResult r;
    double m1 = mu(0);
    double v1 = sigma(0, 0);
    Eigen::VectorXd cov = sigma.row(0).transpose();  // cov(running max, X_k)

    for (Eigen::Index k = 1; k < n; ++k) {
        const double m2 = mu(k);
        const double v2 = sigma(k, k);
        const double a2 = v1 + v2 - 2.0 * cov(k);
        if (!(a2 > 1e-12 * (std::abs(v1) + std::abs(v2)))) {
            // Perfectly correlated pair: the larger mean dominates everywhere.
            if (m2 > m1) {
                m1 = m2;
                v1 = v2;
                cov = sigma.row(k).transpose();
            }
            continue;
        }
        const double a = std::sqrt(a2);
        const double alpha = (m1 - m2) / a;
        const double p1 = q_function(-alpha);  // weight on the running max
        const double p2 = q_function(alpha);
        const double dens = normal_pdf(alpha);
        // Moments about m1; the variance is shift-invariant and this avoids
        // cancellation when the means are large next to the spread.
        const double d2 = m2 - m1;
        const double nu1 = d2 * p2 + a * dens;
        const double nu2 = v1 * p1 + (d2 * d2 + v2) * p2 + d2 * a * dens;
        double var = nu2 - nu1 * nu1;
        if (var < 0.0) {
            var = 0.0;
            ++r.clamped;
        }
        cov = cov * p1 + sigma.row(k).transpose() * p2;
        m1 += nu1;
        v1 = var;
    }
    r.mean = m1;
    r.variance = v1;
    return r;
}

void CompensatedSum::add(double v)
{
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
        carry_ += (sum_ - t) + v;
    else
        carry_ += (v - t) + sum_;
    sum_ = t;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kChunk = 4096;

double tail_below(double mean, double sd, double gamma)
{
    // P(Y <= gamma)
    if (sd > 0.0)
        return q_function((mean - gamma) / sd);
    return mean <= gamma ? 1.0 : 0.0;
}

double tail_above(double mean, double sd, double gamma)
{
    // P(Y > gamma)
    if (sd > 0.0)
        return q_function((gamma - mean) / sd);
    return mean > gamma ? 1.0 : 0.0;
}

}  // namespace

double conditional_error(const ThresholdBerModel::Conditional& c, double gamma)
{
    return 0.5 * (tail_below(c.mean1, c.sd1, gamma) + tail_above(c.mean0, c.sd0, gamma));
}

ThresholdBerModel::ThresholdBerModel(DetectorKind kind, const ChannelVector& h, double M, double lambda_s, int m,
                                     int L)
    : kind_(kind)
{
    if (!is_threshold_detector(kind))
        throw std::invalid_argument("theoretical BER exists only for threshold detectors");
    if (L < 1 || L > kMaxMemory)
        throw std::invalid_argument("theory memory must satisfy 1 <= L <= 24");
    const int N = h.grid.N;
    if (m < 0 || m >= N)
        throw std::invalid_argument("derivative order must satisfy 0 <= m < N");
    if (kind == DetectorKind::FTD && m != 0)
        throw std::invalid_argument("FTD operates on raw samples (m = 0)");

    const Eigen::MatrixXd rows = truncated_derivative_rows(N, m);
    Eigen::VectorXd pick;  // linear functional for FSTD / FTD
    if (kind == DetectorKind::FSTD) {
        const Eigen::VectorXd mus = intended_mean(h, M, N, m);
        const bool silent = !(mus.cwiseAbs().maxCoeff() > 0.0);
        sample_ = silent ? FstdSample{} : fstd_select_sample(h, M, N, m);
        pick = static_cast<double>(sample_.sign) * rows.row(sample_.q).transpose();
    } else if (kind == DetectorKind::FTD) {
        pick = Eigen::VectorXd::Ones(N);
    }
    const Eigen::VectorXd pick_sq = pick.size() > 0 ? Eigen::VectorXd(pick.array().square()) : Eigen::VectorXd();

    Eigen::VectorXd own(N);
    for (int j = 0; j < N; ++j)
        own(j) = M * h.tap(static_cast<std::size_t>(j));
    // Rows of the ISI symbols; bit b of the Gray index is the symbol b + 1 back.
    const int isi_bits = L - 1;
    std::vector<Eigen::VectorXd> isi_rows(static_cast<std::size_t>(isi_bits));
    for (int b = 0; b < isi_bits; ++b) {
        isi_rows[static_cast<std::size_t>(b)].resize(N);
        for (int j = 0; j < N; ++j)
            isi_rows[static_cast<std::size_t>(b)](j) =
                M * h.tap(static_cast<std::size_t>((b + 1) * N + j));
    }

    const std::size_t total = std::size_t{1} << isi_bits;
    cond_.resize(total);
    const std::size_t chunks = (total + kChunk - 1) / kChunk;
    std::vector<int> clamps(chunks, 0);

    auto evaluate = [&](const Eigen::VectorXd& raw, double& mean, double& sd, int& clamp_count) {
        if (kind == DetectorKind::MaTD) {
            const Eigen::VectorXd mu = rows * raw;
            const Eigen::MatrixXd sigma = rows * raw.asDiagonal() * rows.transpose();
            const auto c = clark_max_stats(mu, sigma);
            clamp_count += c.clamped;
            mean = c.mean;
            sd = std::sqrt(c.variance);
        } else {
            mean = pick.dot(raw);
            sd = std::sqrt(std::max(0.0, pick_sq.dot(raw)));
        }
    };

    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t begin = c * kChunk;
        const std::size_t end = std::min(total, begin + kChunk);
        std::size_t gray = begin ^ (begin >> 1);
        Eigen::VectorXd isi = Eigen::VectorXd::Constant(N, lambda_s);
        for (int b = 0; b < isi_bits; ++b)
            if ((gray >> b) & 1u)
                isi += isi_rows[static_cast<std::size_t>(b)];
        int clamp_count = 0;
        for (std::size_t k = begin; k < end; ++k) {
            if (k != begin) {
                const int flip = std::countr_zero(k);
                gray ^= std::size_t{1} << flip;
                if ((gray >> flip) & 1u)
                    isi += isi_rows[static_cast<std::size_t>(flip)];
                else
                    isi -= isi_rows[static_cast<std::size_t>(flip)];
            }
            auto& out = cond_[k];
            evaluate(isi, out.mean0, out.sd0, clamp_count);
            const Eigen::VectorXd with_bit = isi + own;
            evaluate(with_bit, out.mean1, out.sd1, clamp_count);
        }
        clamps[c] = clamp_count;
    });
    for (int v : clamps)
        clark_clamps_ += v;
}

double ThresholdBerModel::ber(double gamma) const
{
    CompensatedSum sum;
    for (const auto& c : cond_)
        sum.add(conditional_error(c, gamma));
    return sum.value() / static_cast<double>(cond_.size());
}

std::pair<double, double> ThresholdBerModel::search_interval() const
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sd_max = 0.0;
    for (const auto& c : cond_) {
        lo = std::min({lo, c.mean0, c.mean1});
        hi = std::max({hi, c.mean0, c.mean1});
        sd_max = std::max({sd_max, c.sd0, c.sd1});
    }
    return {lo - 4.0 * sd_max, hi + 4.0 * sd_max};
}

namespace {

ThresholdBerModel model_for(DetectorKind kind, const DetectorConfig& cfg, int L)
{
    cfg.channel.grid.validate();
    return ThresholdBerModel(kind, cfg.channel, cfg.M, cfg.lambda_s, cfg.m, L);
}

}  // namespace

double fstd_theoretical_ber(const DetectorConfig& cfg, int L)
{
    return model_for(DetectorKind::FSTD, cfg, L).ber(cfg.gamma);
}

double matd_theoretical_ber(const DetectorConfig& cfg, int L)
{
    return model_for(DetectorKind::MaTD, cfg, L).ber(cfg.gamma);
}

// ---------------------------------------------------------------------------

SinrReport sinr(const DetectorConfig& cfg, int L_prime, int m)
{
    const int N = cfg.N;
    if (N != cfg.channel.grid.N)
        throw std::invalid_argument("sinr: N differs from the channel grid");
    if (m < 0 || m >= N)
        throw std::invalid_argument("derivative order must satisfy 0 <= m < N");
    if (L_prime < 1 || L_prime > ThresholdBerModel::kMaxMemory)
        throw std::invalid_argument("sinr: L' must satisfy 1 <= L' <= 24");

    SinrReport rep;
    rep.L_prime = L_prime;
    rep.m = m;
    const Eigen::MatrixXd rows = truncated_derivative_rows(N, m);
    const Eigen::VectorXd mus = intended_mean(cfg.channel, cfg.M, N, m);
    const bool silent = !(mus.cwiseAbs().maxCoeff() > 0.0);
    if (!silent)
        rep.sample = fstd_select_sample(cfg.channel, cfg.M, N, m);
    const Eigen::VectorXd d = rows.row(rep.sample.q).transpose();
    const Eigen::VectorXd d2 = d.array().square();

    Eigen::VectorXd own(N);
    for (int j = 0; j < N; ++j)
        own(j) = cfg.M * cfg.channel.tap(static_cast<std::size_t>(j));
    rep.signal = silent ? 0.0 : 0.5 * mus(rep.sample.q) * mus(rep.sample.q);
    rep.intended_noise = 0.5 * d2.dot(own);

    // ISI plus external noise at the fixed sample over all 2^(L'-1) equiprobable strings.
    const int isi_bits = L_prime - 1;
    std::vector<double> row_mean(static_cast<std::size_t>(isi_bits)), row_var(static_cast<std::size_t>(isi_bits));
    for (int b = 0; b < isi_bits; ++b) {
        double a = 0.0, v = 0.0;
        for (int j = 0; j < N; ++j) {
            const double t = cfg.M * cfg.channel.tap(static_cast<std::size_t>((b + 1) * N + j));
            a += d(j) * t;
            v += d2(j) * t;
        }
        row_mean[static_cast<std::size_t>(b)] = a;
        row_var[static_cast<std::size_t>(b)] = v;
    }
    const double base_mean = cfg.lambda_s * d.sum();
    const double base_var = cfg.lambda_s * d2.sum();
    // Means are accumulated relative to the all-zero string; the variance is shift-invariant.
    double shift = 0.0, var = base_var;
    CompensatedSum sum_var, sum_sq, sum_shift;
    const std::size_t total = std::size_t{1} << isi_bits;
    std::size_t gray = 0;
    for (std::size_t k = 0; k < total; ++k) {
        if (k != 0) {
            const int flip = std::countr_zero(k);
            gray ^= std::size_t{1} << flip;
            const double sgn = ((gray >> flip) & 1u) ? 1.0 : -1.0;
            shift += sgn * row_mean[static_cast<std::size_t>(flip)];
            var += sgn * row_var[static_cast<std::size_t>(flip)];
        }
        sum_var.add(var);
        sum_sq.add(shift * shift);
        sum_shift.add(shift);
    }
    const double n = static_cast<double>(total);
    const double mean_shift = sum_shift.value() / n;
    (void)base_mean;
    rep.isi_noise = std::max(0.0, sum_var.value() / n + sum_sq.value() / n - mean_shift * mean_shift);

    const double denom = rep.intended_noise + rep.isi_noise;
    rep.value = denom > 0.0 ? rep.signal / denom : (rep.signal > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return rep;
}

// ---------------------------------------------------------------------------

ThresholdSearch optimize_threshold(double lo, double hi, const std::function<double(double)>& ber, int resolution,
                                   int refinements)
{
    if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
        throw std::invalid_argument("threshold search needs a finite interval");
    if (resolution < 2)
        throw std::invalid_argument("threshold search needs at least two grid points");
    ThresholdSearch best{lo, std::numeric_limits<double>::infinity()};
    double a = lo, b = hi;
    for (int pass = 0; pass <= refinements; ++pass) {
        const double step = (b - a) / static_cast<double>(resolution - 1);
        for (int i = 0; i < resolution; ++i) {
            const double g = a + step * static_cast<double>(i);
            const double e = ber(g);
            if (e < best.ber || (e == best.ber && g < best.gamma)) {
                best.ber = e;
                best.gamma = g;
            }
        }
        if (step == 0.0)
            break;
        a = std::max(lo, best.gamma - step);
        b = std::min(hi, best.gamma + step);
    }
    return best;
}

ThresholdSearch optimize_threshold(const ThresholdBerModel& model, int resolution, int refinements)
{
    const auto [lo, hi] = model.search_interval();
    return optimize_threshold(lo, hi, [&](double g) { return model.ber(g); }, resolution, refinements);
}

void EmpiricalThresholdBer::add(double statistic, std::uint8_t bit)
{
    (bit ? ones_ : zeros_).push_back(statistic);
    sorted_ = false;
}

void EmpiricalThresholdBer::finalize()
{
    std::sort(ones_.begin(), ones_.end());
    std::sort(zeros_.begin(), zeros_.end());
    sorted_ = true;
}

double EmpiricalThresholdBer::ber(double gamma) const
{
    if (!sorted_)
        throw std::logic_error("EmpiricalThresholdBer::finalize not called");
    if (size() == 0)
        throw std::logic_error("no samples collected");
    // Bit 1 missed when statistic <= gamma; bit 0 flagged when statistic > gamma.
    const auto missed = std::upper_bound(ones_.begin(), ones_.end(), gamma) - ones_.begin();
    const auto false_alarm = zeros_.end() - std::upper_bound(zeros_.begin(), zeros_.end(), gamma);
    return static_cast<double>(missed + false_alarm) / static_cast<double>(size());
}

std::pair<double, double> EmpiricalThresholdBer::range() const
{
    if (!sorted_ || size() == 0)
        throw std::logic_error("EmpiricalThresholdBer: no finalized samples");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* v : {&ones_, &zeros_}) {
        if (v->empty())
            continue;
        lo = std::min(lo, v->front());
        hi = std::max(hi, v->back());
    }
    return {lo, hi};
}

OrderSelection optimize_derivative_order(const DetectorConfig& cfg, int m_max, int L_prime)
{
    if (m_max < 0 || m_max >= cfg.N)
        throw std::invalid_argument("m_max must satisfy 0 <= m_max < N");
    OrderSelection sel;
    for (int m = 0; m <= m_max; ++m) {
        sel.reports.push_back(sinr(cfg, L_prime, m));
        if (sel.reports.back().value > sel.reports[static_cast<std::size_t>(sel.m_star)].value)
            sel.m_star = m;
    }
    return sel;
}

}  // namespace mcd
