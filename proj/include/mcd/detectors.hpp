#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mcd/channel.hpp"
#include "mcd/gaussian.hpp"
#include "mcd/signal.hpp"

namespace mcd {

enum class DetectorKind { MLSD, BandedMLSD, MLDA, MaTD, FSTD, FTD };

DetectorKind parse_detector_kind(std::string_view name);
std::string_view to_string(DetectorKind kind);
bool is_threshold_detector(DetectorKind kind);
bool is_memory_detector(DetectorKind kind);

struct DetectorConfig {
    DetectorKind kind{DetectorKind::FSTD};
    int m{0};
    int L_prime{1};
    double gamma{0.0};  ///< post-derivative count units; threshold kinds only
    ChannelVector channel;
    double lambda_s{0.0};
    double M{0.0};
    int N{1};
    /// Banded MLSD: add the expected contribution (M/2 per symbol) of the symbols
    /// older than the L' window to the branch statistics, as MLDA does.
    bool expected_isi_fill{true};

    int memory() const { return channel.grid.L; }
    void validate() const;
};

/// Fixed sample of FSTD: 0-based offset q within the symbol and sign B.
struct FstdSample {
    int q{0};
    int sign{1};
};

enum class MlsdWindow {
    Full,       ///< whole-block D^m statistics, all S N samples
    PerSymbol,  ///< per-symbol N x N D^m with the last m samples dropped (banded-MLSD windowing)
};

/// Dense rows 0..N-m-1 of the N x N D^m.
Eigen::MatrixXd truncated_derivative_rows(int N, int m);

/// Metric for one symbol's truncated post-derivative samples whose raw samples have
/// mean `raw_mean` and covariance diag(raw_mean).
GaussianMetric symbol_metric(const Eigen::MatrixXd& truncated_rows, const Eigen::VectorXd& raw_mean);

/// Exhaustive ML sequence detection over all 2^S candidates. Ties go to the
/// lexicographically smaller candidate. Test-scale only (S <= 20).
BitSequence mlsd_detect(std::span<const double> y, const DetectorConfig& cfg, int S,
                        MlsdWindow window = MlsdWindow::Full);

/// Sum of negative log-likelihood terms MLSD minimises, for one candidate.
double mlsd_metric(std::span<const double> y, const DetectorConfig& cfg, const BitSequence& candidate,
                   MlsdWindow window = MlsdWindow::Full);

/// Viterbi detector over 2^(L'-1) states with per-symbol branch metrics.
///
/// Branch statistics for every L'-symbol candidate window are built once at
/// construction. Symbols older than the window contribute their expected value
/// when expected_isi_fill is set; symbols before the block start contribute nothing.
class BandedMlsd {
public:
    explicit BandedMlsd(const DetectorConfig& cfg);

    BitSequence detect(std::span<const double> y) const;

    int traceback_depth() const { return traceback_depth_; }
    std::size_t states() const { return states_; }
    /// Branch metric for window bits w (bit b = symbol b back, bit 0 = current)
    /// at position class pc (number of older-than-window symbols present).
    const GaussianMetric& branch(std::size_t pc, std::size_t w) const { return branches_[pc][w]; }
    std::size_t position_classes() const { return branches_.size(); }
    std::size_t position_class(std::size_t symbol_index) const;

private:
    DetectorConfig cfg_;
    std::size_t states_{1};
    int traceback_depth_{5};
    std::vector<std::vector<GaussianMetric>> branches_;
};

/// Decision-feedback symbol-by-symbol ML detector.
class Mlda {
public:
    explicit Mlda(const DetectorConfig& cfg);

    BitSequence detect(std::span<const double> y) const;

    /// Raw (pre-derivative) hypothesis means {bit 0, bit 1} for symbol i given
    /// earlier decisions.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> hypothesis_means(const BitSequence& decided,
                                                                  std::size_t i) const;

private:
    DetectorConfig cfg_;
    Eigen::MatrixXd rows_;
    std::vector<Eigen::VectorXd> fill_;  // expected older-symbol ISI per position class
};

BitSequence banded_mlsd_detect(std::span<const double> y, const DetectorConfig& cfg);
BitSequence mlda_detect(std::span<const double> y, const DetectorConfig& cfg);
BitSequence matd_detect(std::span<const double> y, const DetectorConfig& cfg);
BitSequence fstd_detect(std::span<const double> y, const DetectorConfig& cfg);
BitSequence ftd_detect(std::span<const double> y, const DetectorConfig& cfg);

/// Sample with the largest |expected post-derivative intended signal|; ties to smaller q.
/// Throws std::invalid_argument when the intended signal is identically zero.
FstdSample fstd_select_sample(const ChannelVector& h, double M, int N, int m);

/// Threshold rules on already-differentiated samples; one decision per symbol.
BitSequence matd_decide(std::span<const double> y_m, int N, int m, double gamma);
BitSequence fstd_decide(std::span<const double> y_m, int N, FstdSample sample, double gamma);

/// Any detector behind one interface; caches built once at construction.
class Detector {
public:
    explicit Detector(DetectorConfig cfg);

    BitSequence detect(std::span<const double> y) const;
    const DetectorConfig& config() const { return cfg_; }

private:
    DetectorConfig cfg_;
    FstdSample sample_{};
    std::variant<std::monostate, BandedMlsd, Mlda> engine_;
};

}  // namespace mcd
