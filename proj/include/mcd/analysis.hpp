#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mcd/channel.hpp"
#include "mcd/detectors.hpp"
#include "mcd/signal.hpp"

namespace mcd {

/// Statistics of the last symbol's N raw samples given an L-symbol string
/// (oldest first, intended symbol last).
struct ConditionalStats {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;  ///< diag(mu)
    BitSequence isi;        ///< the leading L-1 bits
};

ConditionalStats conditional_stats(const BitSequence& s_L, const ChannelVector& h, double M, double lambda_s);

/// Gaussian approximation to the maximum of jointly Gaussian variables.
struct ClarkResult {
    double mean{0.0};
    double variance{0.0};
    int clamped{0};  ///< steps whose variance came out slightly negative and was set to 0
};

/// Left-to-right pairwise recursion. The running maximum's covariance with each
/// remaining variable is carried with cov(Z, X_k) = cov(X1, X_k) Phi(alpha) + cov(X2, X_k) Phi(-alpha).
ClarkResult clark_max_stats(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma);

/// Sum with Neumaier compensation.
class CompensatedSum {
public:
    void add(double v);
    double value() const { return sum_ + carry_; }

private:
    double sum_{0.0};
    double carry_{0.0};
};

/// Closed-form BER of a threshold detector, averaged over all 2^(L-1) ISI strings.
///
/// Per conditional, the decision statistic under each hypothesis is approximated
/// as Gaussian: for FSTD the signed fixed sample, for MaTD Clark's approximation of
/// the max, for FTD the symbol's total count. The conditionals are enumerated in
/// Gray-code order so that each step adds or removes one channel row.
class ThresholdBerModel {
public:
    struct Conditional {
        double mean0, sd0;  ///< bit 0 sent
        double mean1, sd1;  ///< bit 1 sent
    };

    ThresholdBerModel(DetectorKind kind, const ChannelVector& h, double M, double lambda_s, int m, int L);

    double ber(double gamma) const;
    /// [min mean - 4 sd_max, max mean + 4 sd_max] over all conditionals.
    std::pair<double, double> search_interval() const;

    const std::vector<Conditional>& conditionals() const { return cond_; }
    DetectorKind kind() const { return kind_; }
    FstdSample sample() const { return sample_; }
    int clark_clamps() const { return clark_clamps_; }

    static constexpr int kMaxMemory = 24;

private:
    DetectorKind kind_;
    FstdSample sample_{};
    int clark_clamps_{0};
    std::vector<Conditional> cond_;
};

/// Error probability of one conditional: (P(Y1 <= gamma) + P(Y0 > gamma)) / 2.
double conditional_error(const ThresholdBerModel::Conditional& c, double gamma);

double fstd_theoretical_ber(const DetectorConfig& cfg, int L);
double matd_theoretical_ber(const DetectorConfig& cfg, int L);

struct SinrReport {
    double value{0.0};
    double signal{0.0};          ///< (mu_s,(m)[q])^2 / 2
    double intended_noise{0.0};  ///< Sigma_s,(m)[q,q] / 2
    double isi_noise{0.0};       ///< ISI and external-noise variance at q
    int L_prime{1};
    int m{0};
    FstdSample sample{};
};

/// Threshold-free SINR of D^m-FSTD with the ISI taken over an L'-symbol window.
SinrReport sinr(const DetectorConfig& cfg, int L_prime, int m);

struct ThresholdSearch {
    double gamma{0.0};
    double ber{0.5};
};

/// Exhaustive scan of `resolution` equispaced thresholds on [lo, hi]; ties keep the
/// smaller threshold. Each refinement rescans +-1 step around the incumbent.
ThresholdSearch optimize_threshold(double lo, double hi, const std::function<double(double)>& ber,
                                   int resolution = 201, int refinements = 0);
ThresholdSearch optimize_threshold(const ThresholdBerModel& model, int resolution = 201, int refinements = 0);

/// Empirical BER of a threshold rule over collected (statistic, bit) pairs.
class EmpiricalThresholdBer {
public:
    void add(double statistic, std::uint8_t bit);
    void finalize();
    /// Fraction of decisions (statistic > gamma) that disagree with the bit.
    double ber(double gamma) const;
    std::pair<double, double> range() const;
    std::size_t size() const { return ones_.size() + zeros_.size(); }

private:
    std::vector<double> ones_, zeros_;
    bool sorted_{false};
};

struct OrderSelection {
    int m_star{0};
    std::vector<SinrReport> reports;  ///< index m
};

/// argmax over m in [0, m_max] of SINR_{L'}(m); ties keep the smaller order.
OrderSelection optimize_derivative_order(const DetectorConfig& cfg, int m_max, int L_prime);

}  // namespace mcd
