#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mcd/cli.hpp"
#include "mcd/config.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "mcd");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = mcd::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> v;
    std::istringstream s(text);
    for (std::string l; std::getline(s, l);)
        v.push_back(l);
    return v;
}

fs::path write_temp(const std::string& name, const std::string& body)
{
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream(p) << body;
    return p;
}

const std::string kSmall = R"({
  "schema_version": 1,
  "symbol_ratio": 0.5, "N": 5, "L": 10, "L_prime": 10,
  "m": [0, 1],
  "M": [1e5, 1e6],
  "detectors": ["FSTD", "MaTD"],
  "bit_budget": 20000, "target_errors": 0, "block_symbols": 500, "seed": 3
})";

}  // namespace

TEST_SUITE("cli")
{
    TEST_CASE("theory table")
    {
        const auto cfg = write_temp("mcd_cli_small.json", kSmall);
        const auto r = run({"theory", "--config", cfg.string(), "--detector", "MaTD"});
        REQUIRE(r.code == 0);
        const auto l = lines(r.out);
        REQUIRE(l.size() == 5);
        CHECK(l[0] == "m,M,gamma,ber_theory");
        CHECK(l[1].rfind("0,1e+05,", 0) == 0);
    }

    TEST_CASE("simulate is reproducible and honours --out")
    {
        const auto cfg = write_temp("mcd_cli_small.json", kSmall);
        const auto a = run({"simulate", "--config", cfg.string(), "--m", "1"});
        const auto b = run({"simulate", "--config", cfg.string(), "--m", "1"});
        REQUIRE(a.code == 0);
        CHECK(a.out == b.out);
        const auto l = lines(a.out);
        REQUIRE(l.size() == 5);
        CHECK(l[0] == "detector,m,L_prime,M,gamma,ber,std_error,bits_simulated,bit_errors,wall_time,ber_theory,sinr");

        const auto other = run({"simulate", "--config", cfg.string(), "--m", "1", "--seed", "99"});
        CHECK(other.out != a.out);

        const fs::path out = fs::temp_directory_path() / "mcd_cli_out.csv";
        fs::remove(out);
        const auto f = run({"simulate", "--config", cfg.string(), "--m", "1", "--out", out.string()});
        REQUIRE(f.code == 0);
        CHECK(f.out.empty());
        std::ifstream in(out);
        std::stringstream got;
        got << in.rdbuf();
        CHECK(got.str() == a.out);
    }

    TEST_CASE("sinr and order selection")
    {
        const auto cfg = write_temp("mcd_cli_small.json", kSmall);
        const auto s = run({"sinr", "--config", cfg.string(), "--L-prime", "5"});
        REQUIRE(s.code == 0);
        CHECK(lines(s.out)[0] == "m,M,L_prime,q,sign,signal,intended_noise,isi_noise,sinr");
        CHECK(lines(s.out).size() == 5);

        const auto o = run({"optimize-order", "--config", cfg.string(), "--m-max", "3"});
        REQUIRE(o.code == 0);
        const auto l = lines(o.out);
        REQUIRE(l.size() == 3);
        CHECK(l[0] == "M,L_prime,m_star,sinr_m0,sinr_m1,sinr_m2,sinr_m3");
    }

    TEST_CASE("threshold search output")
    {
        const auto cfg = write_temp("mcd_cli_small.json", kSmall);
        const auto t = run({"optimize-threshold", "--config", cfg.string(), "--m", "1", "--evaluator", "theory"});
        REQUIRE(t.code == 0);
        const auto l = lines(t.out);
        REQUIRE(l.size() == 3);
        CHECK(l[0] == "detector,m,M,evaluator,gamma,ber");
        CHECK(l[1].rfind("FSTD,1,1e+05,theory,", 0) == 0);
    }

    TEST_CASE("bad input exits nonzero")
    {
        const auto cfg = write_temp("mcd_cli_small.json", kSmall);
        CHECK(run({}).code != 0);
        CHECK(run({"simulate"}).code != 0);
        CHECK(run({"simulate", "--config", cfg.string(), "--bogus"}).code != 0);
        CHECK(run({"simulate", "--config", cfg.string(), "--m", "7"}).code != 0);
        CHECK(run({"optimize-threshold", "--config", cfg.string(), "--evaluator", "guess"}).code != 0);
        CHECK(run({"sweep", "--config", cfg.string(), "--figure", "fig9"}).code != 0);

        const auto missing = run({"theory", "--config", "/nonexistent/mcd.json"});
        CHECK(missing.code != 0);
        CHECK(missing.err.find("error:") == 0);

        const auto broken = write_temp("mcd_cli_broken.json", "{\"schema_version\": 1, ");
        CHECK(run({"theory", "--config", broken.string()}).code != 0);
        const auto unknown = write_temp("mcd_cli_unknown.json", R"({"schema_version": 1, "colour": "red"})");
        CHECK(run({"theory", "--config", unknown.string()}).code != 0);
        const auto version = write_temp("mcd_cli_version.json", R"({"schema_version": 2})");
        CHECK(run({"theory", "--config", version.string()}).code != 0);
        const auto descending = write_temp("mcd_cli_desc.json", R"({"schema_version": 1, "M": [1e6, 1e5]})");
        CHECK(run({"theory", "--config", descending.string()}).code != 0);
    }

    TEST_CASE("shipped configs parse")
    {
        for (const char* name : {"fig4a", "fig4b", "fig5a", "fig5b", "fig7", "fig8a", "fig8b"}) {
            CAPTURE(name);
            const auto cfg = mcd::load_config(std::string(MCD_CONFIG_DIR) + "/" + name + ".json");
            CHECK_NOTHROW(cfg.validate());
            CHECK(!cfg.M_grid.empty());
        }
    }
}
