#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mcd/analysis.hpp"
#include "mcd/config.hpp"
#include "mcd/detectors.hpp"

namespace mcd {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One result row. ber_theory and sinr are NaN where undefined.
struct BerRecord {
    DetectorKind detector{DetectorKind::FSTD};
    int m{0};
    int L_prime{1};
    double M{0.0};
    double gamma{kNaN};
    double ber{0.0};
    double std_error{0.0};
    std::uint64_t bits_simulated{0};
    std::uint64_t bit_errors{0};
    double wall_time{0.0};
    double ber_theory{kNaN};
    double sinr{kNaN};
};

/// ber = errors / bits, std_error = sqrt(ber (1 - ber) / bits).
void set_counts(BerRecord& r, std::uint64_t bits, std::uint64_t errors);

/// A detector attached to the shared simulation. gamma is used by threshold kinds only.
struct Receiver {
    DetectorKind kind{DetectorKind::FSTD};
    int m{0};
    int L_prime{1};
    double gamma{kNaN};
};

struct ErrorCount {
    std::uint64_t bits{0};
    std::uint64_t errors{0};
};

/// Stream phases, so pilot runs never reuse the measurement streams.
enum class StreamPhase : std::uint64_t { Measure = 0, Pilot = 1 };

/// Monte Carlo over i.i.d. blocks shared by all receivers. Each receiver stops on its
/// own once it has bit_budget counted bits or target_errors errors; blocks are drawn
/// from substreams keyed by (M, phase, block) and reduced in block order, so the
/// result does not depend on the worker count or on which other receivers run.
std::vector<ErrorCount> simulate_point(const ExperimentConfig& cfg, double M, const std::vector<Receiver>& receivers,
                                       StreamPhase phase = StreamPhase::Measure);

/// Decision statistics of threshold receivers over pilot_bits counted symbols.
std::vector<EmpiricalThresholdBer> collect_statistics(const ExperimentConfig& cfg, double M,
                                                      const std::vector<Receiver>& receivers,
                                                      std::uint64_t bits, StreamPhase phase = StreamPhase::Pilot);

/// Closed-form model for a threshold receiver, at the config's theory memory.
ThresholdBerModel theory_model(const ExperimentConfig& cfg, DetectorKind kind, int m, double M);

/// Fills gamma for every threshold receiver according to cfg.gamma_policy.
void resolve_gammas(const ExperimentConfig& cfg, double M, std::vector<Receiver>& receivers);

/// Threshold search for one receiver with an explicit evaluator.
ThresholdSearch search_gamma(const ExperimentConfig& cfg, DetectorKind kind, int m, double M, GammaPolicy evaluator);

BerRecord run_ber_point(const ExperimentConfig& cfg, DetectorKind detector, int m, double M);

/// Every (detector, m, L') combination of the config over its M grid. L' runs over
/// `L_primes` for memory detectors; FTD only runs at m = 0.
std::vector<BerRecord> run_grid(const ExperimentConfig& cfg, const std::vector<int>& L_primes);

enum class Figure { Fig4, Fig5, Fig7, Fig8 };
Figure parse_figure(std::string_view name);

std::vector<BerRecord> run_figure_sweep(const ExperimentConfig& cfg, Figure figure);

/// Shortest round-trip decimal with '.' separator; NaN as "nan".
std::string format_number(double v);

inline constexpr std::string_view kBerCsvHeader =
    "detector,m,L_prime,M,gamma,ber,std_error,bits_simulated,bit_errors,wall_time,ber_theory,sinr";

/// wall_time is written as 0 unless include_timing, so reruns are byte-identical.
void write_ber_csv(std::ostream& out, const std::vector<BerRecord>& rows, bool include_timing = false);

}  // namespace mcd
