#include "mcd/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "mcd/analysis.hpp"

namespace mcd {

using nlohmann::json;

GammaPolicy parse_gamma_policy(std::string_view name)
{
    if (name == "fixed") return GammaPolicy::Fixed;
    if (name == "optimize-theory") return GammaPolicy::OptimizeTheory;
    if (name == "optimize-empirical") return GammaPolicy::OptimizeEmpirical;
    throw std::invalid_argument("unknown gamma policy '" + std::string(name) + "'");
}

std::string_view to_string(GammaPolicy policy)
{
    switch (policy) {
    case GammaPolicy::Fixed: return "fixed";
    case GammaPolicy::OptimizeTheory: return "optimize-theory";
    case GammaPolicy::OptimizeEmpirical: return "optimize-empirical";
    }
    return "?";
}

void ExperimentConfig::validate() const
{
    if (schema_version != kSchemaVersion)
        throw std::invalid_argument("unsupported schema_version " + std::to_string(schema_version));
    topology.validate();
    if (!(symbol_ratio > 0.0) || !std::isfinite(symbol_ratio))
        throw std::invalid_argument("symbol_ratio must be positive");
    if (N < 1 || L < 1)
        throw std::invalid_argument("N and L must be at least 1");
    if (L_prime < 1)
        throw std::invalid_argument("L_prime must be at least 1");
    for (int lp : L_prime_list)
        if (lp < 1)
            throw std::invalid_argument("L_prime_list entries must be at least 1");
    for (int m : m_list)
        if (m < 0 || m >= N)
            throw std::invalid_argument("every m must satisfy 0 <= m < N");
    if (m_max < 0 || m_max >= N)
        throw std::invalid_argument("m_max must satisfy 0 <= m_max < N");
    for (std::size_t i = 0; i < M_grid.size(); ++i) {
        if (!(M_grid[i] >= 0.0) || !std::isfinite(M_grid[i]))
            throw std::invalid_argument("M values must be finite and non-negative");
        if (i > 0 && !(M_grid[i] > M_grid[i - 1]))
            throw std::invalid_argument("M grid must be strictly ascending");
    }
    if (!std::isfinite(snr_db))
        throw std::invalid_argument("snr_db must be finite");
    if (bit_budget < 10000)
        throw std::invalid_argument("bit budget must be at least 10^4");
    if (block_symbols < 1 || block_symbols <= warmup_symbols())
        throw std::invalid_argument("block_symbols must exceed the warm-up length L");
    if (threshold_resolution < 2)
        throw std::invalid_argument("threshold_resolution must be at least 2");
    if (gamma_policy == GammaPolicy::OptimizeEmpirical && pilot_bits < 1000)
        throw std::invalid_argument("pilot_bits must be at least 1000");
    if (!std::isfinite(gamma))
        throw std::invalid_argument("gamma must be finite");
    if (theory_memory < 0 || theory_memory > ThresholdBerModel::kMaxMemory)
        throw std::invalid_argument("theory_memory must be between 0 and 24");
}

ChannelVector ExperimentConfig::channel() const
{
    return channel_vector(topology, grid_from_rate(topology, symbol_ratio, N, L));
}

int ExperimentConfig::effective_theory_memory() const
{
    if (theory_memory > 0)
        return theory_memory;
    return L <= ThresholdBerModel::kMaxMemory ? L : 0;
}

DetectorConfig ExperimentConfig::detector_config(DetectorKind kind, int m, int Lp, double M, double g) const
{
    DetectorConfig d;
    d.kind = kind;
    d.m = m;
    d.L_prime = Lp;
    d.gamma = g;
    d.channel = channel();
    d.lambda_s = noise_rate(M);
    d.M = M;
    d.N = N;
    d.expected_isi_fill = expected_isi_fill;
    return d;
}

namespace {

std::vector<double> parse_M_grid(const json& j)
{
    std::vector<double> out;
    if (j.contains("M")) {
        out = j.at("M").get<std::vector<double>>();
    } else if (j.contains("log10_M")) {
        for (double e : j.at("log10_M").get<std::vector<double>>())
            out.push_back(std::pow(10.0, e));
    } else if (j.contains("log10_M_range")) {
        const auto& r = j.at("log10_M_range");
        const double start = r.at("start").get<double>();
        const double stop = r.at("stop").get<double>();
        const double step = r.at("step").get<double>();
        if (!(step > 0.0) || stop < start)
            throw std::invalid_argument("log10_M_range needs step > 0 and stop >= start");
        const auto count = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (int i = 0; i < count; ++i)
            out.push_back(std::pow(10.0, start + step * i));
    }
    return out;
}

const std::set<std::string> kKnownKeys = {
    "schema_version", "topology", "symbol_ratio", "N", "L", "L_prime", "L_prime_list", "m", "m_max",
    "M", "log10_M", "log10_M_range", "snr_db", "detectors", "bit_budget", "target_errors", "block_symbols",
    "warmup_discard", "seed", "arrival_model", "gamma_policy", "gamma", "threshold_resolution",
    "pilot_bits", "theory_memory", "expected_isi_fill", "description",
};

template <class T>
void read(const json& j, const char* key, T& into)
{
    if (j.contains(key))
        into = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig parse_config(const json& j)
{
    if (!j.is_object())
        throw std::invalid_argument("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kKnownKeys.count(key))
            throw std::invalid_argument("unknown config key '" + key + "'");
    if (!j.contains("schema_version"))
        throw std::invalid_argument("config is missing schema_version");

    ExperimentConfig c;
    try {
        read(j, "schema_version", c.schema_version);
        if (j.contains("topology")) {
            const auto& t = j.at("topology");
            c.topology.r0 = t.at("r0").get<double>();
            c.topology.rr = t.at("rr").get<double>();
            c.topology.D = t.at("D").get<double>();
        }
        read(j, "symbol_ratio", c.symbol_ratio);
        read(j, "N", c.N);
        read(j, "L", c.L);
        read(j, "L_prime", c.L_prime);
        read(j, "L_prime_list", c.L_prime_list);
        read(j, "m", c.m_list);
        read(j, "m_max", c.m_max);
        c.M_grid = parse_M_grid(j);
        read(j, "snr_db", c.snr_db);
        if (j.contains("detectors")) {
            c.detectors.clear();
            for (const auto& d : j.at("detectors"))
                c.detectors.push_back(parse_detector_kind(d.get<std::string>()));
        }
        if (j.contains("bit_budget"))
            c.bit_budget = static_cast<std::uint64_t>(j.at("bit_budget").get<double>());
        read(j, "target_errors", c.target_errors);
        read(j, "block_symbols", c.block_symbols);
        read(j, "warmup_discard", c.warmup_discard);
        read(j, "seed", c.seed);
        if (j.contains("arrival_model"))
            c.arrival_model = parse_arrival_model(j.at("arrival_model").get<std::string>());
        if (j.contains("gamma_policy"))
            c.gamma_policy = parse_gamma_policy(j.at("gamma_policy").get<std::string>());
        read(j, "gamma", c.gamma);
        read(j, "threshold_resolution", c.threshold_resolution);
        if (j.contains("pilot_bits"))
            c.pilot_bits = static_cast<std::uint64_t>(j.at("pilot_bits").get<double>());
        read(j, "theory_memory", c.theory_memory);
        read(j, "expected_isi_fill", c.expected_isi_fill);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("malformed config '" + path + "': " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c)
{
    json j;
    j["schema_version"] = c.schema_version;
    j["topology"] = {{"r0", c.topology.r0}, {"rr", c.topology.rr}, {"D", c.topology.D}};
    j["symbol_ratio"] = c.symbol_ratio;
    j["N"] = c.N;
    j["L"] = c.L;
    j["L_prime"] = c.L_prime;
    j["L_prime_list"] = c.L_prime_list;
    j["m"] = c.m_list;
    j["m_max"] = c.m_max;
    j["M"] = c.M_grid;
    j["snr_db"] = c.snr_db;
    j["detectors"] = json::array();
    for (auto d : c.detectors)
        j["detectors"].push_back(std::string(to_string(d)));
    j["bit_budget"] = c.bit_budget;
    j["target_errors"] = c.target_errors;
    j["block_symbols"] = c.block_symbols;
    j["warmup_discard"] = c.warmup_discard;
    j["seed"] = c.seed;
    j["arrival_model"] = std::string(to_string(c.arrival_model));
    j["gamma_policy"] = std::string(to_string(c.gamma_policy));
    j["gamma"] = c.gamma;
    j["threshold_resolution"] = c.threshold_resolution;
    j["pilot_bits"] = c.pilot_bits;
    j["theory_memory"] = c.theory_memory;
    j["expected_isi_fill"] = c.expected_isi_fill;
    return j;
}

std::vector<int> parse_int_list(std::string_view text)
{
    std::vector<int> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto item = text.substr(0, comma);
        int v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size())
            throw std::invalid_argument("bad integer list '" + std::string(text) + "'");
        out.push_back(v);
        if (comma == std::string_view::npos)
            break;
        text.remove_prefix(comma + 1);
        if (text.empty())
            throw std::invalid_argument("trailing comma in integer list");
    }
    return out;
}

}  // namespace mcd
