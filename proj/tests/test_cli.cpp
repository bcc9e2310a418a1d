#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "eitsim/cli.hpp"
#include "eitsim/csv.hpp"
#include "eitsim/lineshape.hpp"
#include "eitsim/params.hpp"
#include "eitsim/slowlight.hpp"
#include "eitsim/spectrum.hpp"

using namespace eit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

/// Fresh scratch directory per test case.
struct Scratch {
    fs::path dir;
    Scratch() {
        static int counter = 0;
        dir = fs::temp_directory_path() / ("eitsim_cli_test_" + std::to_string(::getpid()) + "_" +
                                           std::to_string(counter++));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string file(const std::string& name, const std::string& content = {}) const {
        const auto p = dir / name;
        if (!content.empty()) std::ofstream(p) << content;
        return p.string();
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), {}};
}

json read_json(const std::string& path) { return json::parse(slurp(path)); }

/// Side files replace the output extension: run.csv -> run.manifest.json.
std::string sibling(const std::string& out, const char* suffix) {
    return fs::path(out).replace_extension(suffix).string();
}

/// The single stderr line is a JSON diagnostic with the same exit code.
void check_diagnostic(const Run& r, int code) {
    CHECK(r.code == code);
    REQUIRE_FALSE(r.err.empty());
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    const json j = json::parse(r.err);
    CHECK(j["exit_code"].get<int>() == code);
    CHECK(j.contains("error"));
    CHECK(j.contains("message"));
}

const char* kFringeConfig = R"({"od": 100, "omega_hz": 15e6, "gamma0_hz": 30e3, "delta_c_hz": 40e6})";

std::string slowlight_params(double od) {
    return json{{"od", od}, {"omega_hz", 1.5e6}, {"gamma0_hz", 5e3}}.dump();
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("convert") {
        const auto a = run({"convert", "--od", "7.5"});
        REQUIRE(a.code == kExitOk);
        const json j = json::parse(a.out);
        CHECK(j["od"].get<double>() == 7.5);
        CHECK(j["ratio"].get<double>() > 4.4);
        CHECK(j["ratio"].get<double>() < 4.8);
        const auto b = run({"convert", "--d", std::to_string(j["d"].get<double>())});
        CHECK(json::parse(b.out)["od"].get<double>() == doctest::Approx(7.5).epsilon(1e-6));
        check_diagnostic(run({"convert", "--od", "1", "--d", "2"}), kExitValidation);
        check_diagnostic(run({"convert"}), kExitValidation);
        check_diagnostic(run({"convert", "--od", "-3"}), kExitValidation);
    }

    TEST_CASE("usage errors") {
        check_diagnostic(run({"spectrum"}), kExitValidation);
        check_diagnostic(run({"bogus"}), kExitValidation);
        check_diagnostic(run({"fit", "nonsense", "x.csv", "--out", "y.json"}), kExitValidation);
        CHECK(run({"--help"}).code == kExitOk);
    }

    TEST_CASE("spectrum of an empty medium") {
        Scratch s;
        const auto cfg = s.file("c.json", R"({"od": 0, "omega_hz": 1e6})");
        const auto out = s.file("s.csv");
        const auto r = run({"spectrum", cfg, "--out", out, "--points", "11", "--delta-min-hz", "-1e6",
                            "--delta-max-hz", "1e6"});
        REQUIRE(r.code == kExitOk);
        const auto t = read_csv(fs::path(out));
        CHECK(t.rows() == 11);
        for (const char* col : {"t_full", "t_firstorder", "t_eit"})
            for (double v : t.column(col)) CHECK(v == 1.0);
        CHECK(json::parse(r.out)["gain"].get<bool>() == false);
    }

    TEST_CASE("spectrum at the fringe parameters") {
        Scratch s;
        const auto cfg = s.file("c.json", kFringeConfig);
        const auto out = s.file("s.csv");
        const std::vector<std::string> args{"spectrum", cfg, "--out", out, "--modes", "full",
                                            "--delta-min-hz", "-10e6", "--delta-max-hz", "10e6", "--points", "1201"};
        REQUIRE(run(args).code == kExitOk);
        const auto t = read_csv(fs::path(out));
        CHECK(find_peaks(t.column("delta_hz"), t.column("t_full")).size() >= 3);
        CHECK(std::isnan(t.column("t_eit")[0]));

        const json m = read_json(sibling(out, ".manifest.json"));
        CHECK(m["command"].get<std::string>() == "spectrum");
        CHECK(m["params"]["od"].get<double>() == 100);
        CHECK(m["params"]["delta_hf_hz"].get<double>() == 6.8e9);
        CHECK(m["options"]["points"].get<int>() == 1201);
        CHECK(m.contains("timestamp"));
        CHECK(m.contains("version"));

        // Same inputs, same bytes.
        const auto first = slurp(out);
        REQUIRE(run(args).code == kExitOk);
        CHECK(slurp(out) == first);

        check_diagnostic(run({"spectrum", cfg, "--out", out, "--points", "1"}), kExitValidation);
        check_diagnostic(run({"spectrum", cfg, "--out", out, "--modes", "full,nope"}), kExitValidation);
    }

    TEST_CASE("config and output errors") {
        Scratch s;
        const auto out = s.file("s.csv");
        check_diagnostic(run({"spectrum", (s.dir / "missing.json").string(), "--out", out}), kExitIo);
        check_diagnostic(run({"spectrum", s.file("bad.json", "{ nope"), "--out", out}), kExitValidation);
        check_diagnostic(run({"spectrum", s.file("both.json", R"({"od": 1, "d": 4})"), "--out", out}),
                         kExitValidation);
        check_diagnostic(run({"spectrum", s.file("ok.json", R"({"od": 1})"), "--out",
                              (s.dir / "no" / "such" / "dir" / "s.csv").string()}),
                         kExitIo);
    }

    TEST_CASE("pulse") {
        Scratch s;
        const auto out = s.file("p.csv");
        const auto r = run({"pulse", s.file("c.json", slowlight_params(7.5)), "--out", out});
        REQUIRE(r.code == kExitOk);
        const json m = read_json(sibling(out, ".metrics.json"));
        CHECK(m["delay_s"].get<double>() == doctest::Approx(6e-6).epsilon(0.2));
        CHECK(m["energy_fraction"].get<double>() == doctest::Approx(0.18).epsilon(0.2));
        CHECK(m["grid_adequate"].get<bool>());
        CHECK(m["gain"].get<bool>() == false);
        const auto t = read_csv(fs::path(out));
        CHECK(t.header == std::vector<std::string>{"t_s", "intensity_in", "intensity_out"});
        CHECK(fs::exists(sibling(out, ".manifest.json")));

        const auto deep_metrics = s.file("deep.json");
        REQUIRE(run({"pulse", s.file("c59.json", slowlight_params(59)), "--out", s.file("p59.csv"), "--metrics",
                     deep_metrics})
                    .code == kExitOk);
        CHECK(read_json(deep_metrics)["dbp"].get<double>() == doctest::Approx(2.9).epsilon(0.25));

        const auto empty = s.file("p0.csv");
        REQUIRE(run({"pulse", s.file("c0.json", slowlight_params(0)), "--out", empty}).code == kExitOk);
        CHECK(read_json(sibling(empty, ".metrics.json"))["energy_fraction"].get<double>() ==
              doctest::Approx(1.0).epsilon(1e-9));
    }

    TEST_CASE("pulse on a grid too short for the delay") {
        Scratch s;
        const auto r = run({"pulse", s.file("c.json", slowlight_params(59)), "--out", s.file("p.csv"), "--grid-points", "1024"});
        check_diagnostic(r, kExitNumerical);
        CHECK(json::parse(r.err)["error"].get<std::string>() == "wraparound");
        CHECK(r.err.find("--grid-points") != std::string::npos);
        check_diagnostic(run({"pulse", s.file("c2.json", slowlight_params(7.5)), "--out", s.file("q.csv"), "--grid-points",
                              "1000"}),
                         kExitValidation);
    }

    TEST_CASE("fit decay") {
        Scratch s;
        std::string csv = "t_s,od\n";
        for (int i = 0; i <= 10; ++i) {
            const double t = 0.05 + 0.006 * i;
            csv += std::to_string(t) + "," + std::to_string(75.0 * std::exp(-t / 0.0175)) + "\n";
        }
        const auto out = s.file("f.json");
        REQUIRE(run({"fit", "decay", s.file("d.csv", csv), "--out", out}).code == kExitOk);
        const json j = read_json(out);
        CHECK(j["od0"].get<double>() == doctest::Approx(75.0).epsilon(1e-3));
        CHECK(j["tau_s"].get<double>() == doctest::Approx(0.0175).epsilon(1e-3));

        const auto flat = s.file("g.json");
        const auto r = run({"fit", "decay", s.file("flat.csv", "t_s,od\n0,5\n1,5\n2,5.1\n"), "--out", flat});
        check_diagnostic(r, kExitNoConvergence);
        CHECK(read_json(flat)["tau_s"].is_null());

        const auto bad = run({"fit", "decay", s.file("bad.csv", "t_s,od\n0,5\n1,abc\n"), "--out", out});
        check_diagnostic(bad, kExitValidation);
        CHECK(bad.err.find("line 3") != std::string::npos);
        check_diagnostic(run({"fit", "decay", s.file("neg.csv", "t_s,od\n0,5\n1,-1\n"), "--out", out}),
                         kExitValidation);
    }

    TEST_CASE("fit voigt") {
        Scratch s;
        const LineParams line;
        const double sigma = sigma_from_fwhm(angular(75e6));
        std::ostringstream csv;
        csv.precision(12);
        csv << "delta_hz,transmission\n";
        for (int i = -200; i <= 200; ++i)
            csv << 2e6 * i << "," << voigt_transmission(angular(2e6 * i), 3.7, sigma, line.gamma) << "\n";
        const auto out = s.file("v.json");
        const auto r = run({"fit", "voigt", s.file("v.csv", csv.str()), "--out", out, "--exclusion-hz", "0"});
        REQUIRE(r.code == kExitOk);
        const json j = read_json(out);
        CHECK(j["od"].get<double>() == doctest::Approx(3.7).epsilon(1e-4));
        CHECK(j["delta_d_hz"].get<double>() == doctest::Approx(75e6).epsilon(1e-4));
        CHECK(j["fit"]["converged"].get<bool>());
        CHECK(j["d"].get<double>() == doctest::Approx(od_to_d(3.7, line.gamma, sigma)).epsilon(1e-3));
    }

    TEST_CASE("fit pulse round trip") {
        Scratch s;
        const auto trace = s.file("p.csv");
        REQUIRE(run({"pulse", s.file("c.json", slowlight_params(7.5)), "--out", trace}).code == kExitOk);
        const auto out = s.file("f.json");
        const auto cfg = s.file("base.json", R"({"gamma0_hz": 5e3})");
        REQUIRE(run({"fit", "pulse", trace, "--config", cfg, "--out", out}).code == kExitOk);
        const json j = read_json(out);
        CHECK(j["od"].get<double>() == doctest::Approx(7.5).epsilon(0.01));
        CHECK(j["omega_hz"].get<double>() == doctest::Approx(1.5e6).epsilon(0.01));
    }

    TEST_CASE("installed binary") {
        const char* bin = std::getenv("EITSIM_BIN");
        if (bin == nullptr) return;
        Scratch s;
        const auto out = s.file("stdout.txt");
        const auto err = s.file("stderr.txt");
        const std::string base = std::string("\"") + bin + "\" ";
        CHECK(std::system((base + "convert --od 10 > \"" + out + "\"").c_str()) == 0);
        CHECK(json::parse(slurp(out))["od"].get<double>() == 10.0);
        const int status = std::system((base + "convert 2> \"" + err + "\"").c_str());
        CHECK(WEXITSTATUS(status) == kExitValidation);
        CHECK(json::parse(slurp(err))["exit_code"].get<int>() == kExitValidation);
    }
}
