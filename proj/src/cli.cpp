#include "mcd/cli.hpp"

#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcd/analysis.hpp"
#include "mcd/config.hpp"
#include "mcd/harness.hpp"

namespace mcd {

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string m;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "experiment JSON")->required();
    sub->add_option("--out", c.out, "CSV output path (default: stdout)");
    sub->add_option("--seed", c.seed, "override the master seed");
    sub->add_option("--m", c.m, "derivative orders, e.g. 0,1,2,3");
}

ExperimentConfig load(const Common& c)
{
    ExperimentConfig cfg = load_config(c.config);
    if (c.seed)
        cfg.seed = *c.seed;
    if (!c.m.empty())
        cfg.m_list = parse_int_list(c.m);
    cfg.validate();
    return cfg;
}

std::vector<DetectorKind> parse_detector_list(const std::string& text)
{
    std::vector<DetectorKind> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_detector_kind(item));
    return out;
}

// Writes the text produced by `emit` to --out, or to the default stream.
void deliver(const Common& c, std::ostream& fallback, const std::function<void(std::ostream&)>& emit)
{
    if (c.out.empty()) {
        emit(fallback);
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open '" + c.out + "' for writing");
    emit(f);
    if (!f)
        throw std::runtime_error("write to '" + c.out + "' failed");
}

DetectorConfig fstd_config(const ExperimentConfig& cfg, int m, int Lp, double M)
{
    return cfg.detector_config(DetectorKind::FSTD, m, Lp, M, 0.0);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Derivative pre-processed receivers for diffusion channels"};
    app.require_subcommand(1);

    Common theory_c, sim_c, sinr_c, order_c, thr_c, sweep_c;

    auto* theory = app.add_subcommand("theory", "closed-form BER table (m, M, gamma, ber_theory)");
    add_common(theory, theory_c);
    std::string theory_det = "FSTD";
    theory->add_option("--detector", theory_det, "FSTD or MaTD");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo BER over the config grid");
    add_common(simulate, sim_c);
    std::optional<double> sim_bits;
    std::optional<std::uint64_t> sim_target;
    std::string sim_det;
    bool sim_timing = false;
    simulate->add_option("--bits", sim_bits, "bit budget per point");
    simulate->add_option("--target-errors", sim_target, "stop after this many errors (0 disables)");
    simulate->add_option("--detector", sim_det, "comma-separated detector list");
    simulate->add_flag("--timing", sim_timing, "write measured wall_time instead of 0");

    auto* sinr_cmd = app.add_subcommand("sinr", "SINR of D^m-FSTD per m and M");
    add_common(sinr_cmd, sinr_c);
    std::optional<int> sinr_lp;
    sinr_cmd->add_option("--L-prime", sinr_lp, "ISI window (default: config L_prime)");

    auto* order = app.add_subcommand("optimize-order", "SINR-optimal derivative order per M");
    add_common(order, order_c);
    std::optional<int> order_lp, order_mmax;
    order->add_option("--L-prime", order_lp, "ISI window (default: config L_prime)");
    order->add_option("--m-max", order_mmax, "largest order considered (default: config m_max)");

    auto* thr = app.add_subcommand("optimize-threshold", "exhaustive threshold search per m and M");
    add_common(thr, thr_c);
    std::string thr_det = "FSTD";
    std::string thr_eval = "theory";
    thr->add_option("--detector", thr_det, "FSTD, MaTD or FTD");
    thr->add_option("--evaluator", thr_eval, "theory or empirical")->check(CLI::IsMember({"theory", "empirical"}));

    auto* sweep = app.add_subcommand("sweep", "figure sweep as BER CSV");
    add_common(sweep, sweep_c);
    std::string figure;
    std::optional<double> sweep_bits;
    bool sweep_timing = false;
    sweep->add_option("--figure", figure, "fig4, fig5, fig7 or fig8")->required();
    sweep->add_option("--bits", sweep_bits, "bit budget per point");
    sweep->add_flag("--timing", sweep_timing, "write measured wall_time instead of 0");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*theory) {
            auto cfg = load(theory_c);
            const auto kind = parse_detector_kind(theory_det);
            if (kind != DetectorKind::FSTD && kind != DetectorKind::MaTD)
                throw std::invalid_argument("closed-form BER is available for FSTD and MaTD");
            const auto policy = cfg.gamma_policy == GammaPolicy::Fixed ? GammaPolicy::Fixed : GammaPolicy::OptimizeTheory;
            deliver(theory_c, out, [&](std::ostream& o) {
                o << "m,M,gamma,ber_theory\n";
                for (int m : cfg.m_list) {
                    for (double M : cfg.M_grid) {
                        const auto s = search_gamma(cfg, kind, m, M, policy);
                        o << m << ',' << format_number(M) << ',' << format_number(s.gamma) << ','
                          << format_number(s.ber) << '\n';
                    }
                }
            });
        } else if (*simulate) {
            auto cfg = load(sim_c);
            if (sim_bits)
                cfg.bit_budget = static_cast<std::uint64_t>(*sim_bits);
            if (sim_target)
                cfg.target_errors = *sim_target;
            if (!sim_det.empty())
                cfg.detectors = parse_detector_list(sim_det);
            cfg.validate();
            const auto rows = run_grid(cfg, {cfg.L_prime});
            deliver(sim_c, out, [&](std::ostream& o) { write_ber_csv(o, rows, sim_timing); });
        } else if (*sinr_cmd) {
            auto cfg = load(sinr_c);
            const int lp = sinr_lp.value_or(cfg.L_prime);
            deliver(sinr_c, out, [&](std::ostream& o) {
                o << "m,M,L_prime,q,sign,signal,intended_noise,isi_noise,sinr\n";
                for (int m : cfg.m_list) {
                    for (double M : cfg.M_grid) {
                        const auto r = sinr(fstd_config(cfg, m, lp, M), lp, m);
                        o << m << ',' << format_number(M) << ',' << lp << ',' << r.sample.q << ',' << r.sample.sign
                          << ',' << format_number(r.signal) << ',' << format_number(r.intended_noise) << ','
                          << format_number(r.isi_noise) << ',' << format_number(r.value) << '\n';
                    }
                }
            });
        } else if (*order) {
            auto cfg = load(order_c);
            const int lp = order_lp.value_or(cfg.L_prime);
            const int mmax = order_mmax.value_or(cfg.m_max);
            deliver(order_c, out, [&](std::ostream& o) {
                o << "M,L_prime,m_star";
                for (int m = 0; m <= mmax; ++m)
                    o << ",sinr_m" << m;
                o << '\n';
                for (double M : cfg.M_grid) {
                    const auto sel = optimize_derivative_order(fstd_config(cfg, 0, lp, M), mmax, lp);
                    o << format_number(M) << ',' << lp << ',' << sel.m_star;
                    for (const auto& r : sel.reports)
                        o << ',' << format_number(r.value);
                    o << '\n';
                }
            });
        } else if (*thr) {
            auto cfg = load(thr_c);
            const auto kind = parse_detector_kind(thr_det);
            const auto policy = thr_eval == "theory" ? GammaPolicy::OptimizeTheory : GammaPolicy::OptimizeEmpirical;
            deliver(thr_c, out, [&](std::ostream& o) {
                o << "detector,m,M,evaluator,gamma,ber\n";
                for (int m : cfg.m_list) {
                    if (kind == DetectorKind::FTD && m != 0)
                        continue;
                    for (double M : cfg.M_grid) {
                        const auto s = search_gamma(cfg, kind, m, M, policy);
                        o << to_string(kind) << ',' << m << ',' << format_number(M) << ',' << thr_eval << ','
                          << format_number(s.gamma) << ',' << format_number(s.ber) << '\n';
                    }
                }
            });
        } else if (*sweep) {
            auto cfg = load(sweep_c);
            if (sweep_bits)
                cfg.bit_budget = static_cast<std::uint64_t>(*sweep_bits);
            cfg.validate();
            const auto rows = run_figure_sweep(cfg, parse_figure(figure));
            deliver(sweep_c, out, [&](std::ostream& o) { write_ber_csv(o, rows, sweep_timing); });
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace mcd
