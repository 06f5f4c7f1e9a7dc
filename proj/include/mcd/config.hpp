#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mcd/channel.hpp"
#include "mcd/detectors.hpp"
#include "mcd/signal.hpp"

namespace mcd {

inline constexpr int kSchemaVersion = 1;

enum class GammaPolicy {
    Fixed,              ///< use `gamma` as given
    OptimizeTheory,     ///< scan the closed-form BER
    OptimizeEmpirical,  ///< scan the BER of a pilot simulation on separate streams
};

GammaPolicy parse_gamma_policy(std::string_view name);
std::string_view to_string(GammaPolicy policy);

/// Everything one experiment needs. See README for the JSON schema.
struct ExperimentConfig {
    int schema_version{kSchemaVersion};
    Topology topology{15.0, 5.0, 100.0};
    double symbol_ratio{0.5};  ///< symbol duration in channel peak times
    int N{5};
    int L{10};
    int L_prime{10};
    std::vector<int> L_prime_list;  ///< memory windows swept by fig7
    std::vector<int> m_list{0, 1, 2, 3};
    int m_max{3};
    std::vector<double> M_grid;
    double snr_db{10.0};
    std::vector<DetectorKind> detectors{DetectorKind::FSTD};
    std::uint64_t bit_budget{1000000};
    std::uint64_t target_errors{100};  ///< 0 runs the whole budget
    int block_symbols{1000};
    bool warmup_discard{true};
    std::uint64_t seed{1};
    ArrivalModel arrival_model{ArrivalModel::Poisson};
    GammaPolicy gamma_policy{GammaPolicy::OptimizeTheory};
    double gamma{0.0};
    int threshold_resolution{201};
    std::uint64_t pilot_bits{200000};
    int theory_memory{0};  ///< 0 means L, if L is small enough to enumerate
    bool expected_isi_fill{true};

    void validate() const;

    ChannelVector channel() const;
    /// Noise scales with M at fixed SNR, so a silent transmitter also means no noise.
    double noise_rate(double M) const { return M > 0.0 ? snr_to_noise_rate(snr_db, M, N) : 0.0; }
    /// Symbols excluded from error counting at the start of each block.
    int warmup_symbols() const { return warmup_discard ? L : 0; }
    /// Memory used by the closed-form BER, or 0 when it is not enumerable.
    int effective_theory_memory() const;
    DetectorConfig detector_config(DetectorKind kind, int m, int L_prime, double M, double gamma) const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Parses "0,1,2" style integer lists.
std::vector<int> parse_int_list(std::string_view text);

}  // namespace mcd
