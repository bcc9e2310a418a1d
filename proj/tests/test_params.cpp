#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "eitsim/errors.hpp"
#include "eitsim/lineshape.hpp"
#include "eitsim/params.hpp"

using namespace eit;
using nlohmann::json;

TEST_SUITE("params") {
    TEST_CASE("angular conversion and default constants") {
        CHECK(angular(1.0) == doctest::Approx(2.0 * M_PI));
        const Params p;
        CHECK(p.line.gamma == doctest::Approx(M_PI * 5.7e6));
        CHECK(p.line.delta_hf == doctest::Approx(angular(6.8e9)));
        CHECK(p.medium.sigma == sigma_from_fwhm(p.medium.delta_d));
        CHECK(p.medium.sigma == doctest::Approx(angular(31.849e6)).epsilon(1e-4));
        CHECK_NOTHROW(p.validate());
    }

    TEST_CASE("config defaults and od to d derivation") {
        const Params p = from_config(json{{"od", 7.5}});
        CHECK(p.medium.source == DepthSource::od);
        CHECK(p.medium.od == 7.5);
        CHECK(p.medium.d == doctest::Approx(od_to_d(7.5, p.line.gamma, p.medium.sigma)));
        CHECK(p.drive.omega == 0.0);
        CHECK(p.medium.length_m == 0.02);
        CHECK(p.line.lambda == 795e-9);

        const Params empty = from_config(json::object());
        CHECK(empty.medium.od == 0.0);
        CHECK(empty.medium.d == 0.0);
    }

    TEST_CASE("d given directly") {
        const Params p = from_config(json{{"d", 34.5}, {"omega_hz", 1.5e6}});
        CHECK(p.medium.source == DepthSource::d);
        CHECK(p.medium.d == 34.5);
        CHECK(p.medium.od == doctest::Approx(d_to_od(34.5, p.line.gamma, p.medium.sigma)));
        CHECK(p.drive.omega == doctest::Approx(angular(1.5e6)));
    }

    TEST_CASE("serialize round trip is exact") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int k = 0; k < 200; ++k) {
            json cfg{{"gamma_fwhm_hz", 1e6 + 1e7 * u(rng)},
                     {"delta_hf_hz", 1e9 + 1e10 * u(rng)},
                     {"lambda_m", 700e-9 + 200e-9 * u(rng)},
                     {"delta_d_hz", 1e8 * u(rng)},
                     {"length_m", 0.001 + 0.1 * u(rng)},
                     {"omega_hz", 3e7 * u(rng)},
                     {"delta_c_hz", 1e8 * (u(rng) - 0.5)},
                     {"gamma0_hz", 1e6 * u(rng)}};
            if (k % 2 == 0)
                cfg["od"] = 200 * u(rng);
            else
                cfg["d"] = 900 * u(rng);
            const Params p = from_config(cfg);
            const Params q = from_config(to_config(p));
            CHECK(p == q);
        }
    }

    TEST_CASE("to_config writes short decimal values") {
        const json j = to_config(from_config(json{{"od", 100}, {"omega_hz", 15e6}}));
        CHECK(j["delta_hf_hz"].get<double>() == 6.8e9);
        CHECK(j["omega_hz"].get<double>() == 15e6);
        CHECK(j["gamma_fwhm_hz"].get<double>() == 5.7e6);
        CHECK(j.contains("od"));
        CHECK_FALSE(j.contains("d"));
    }

    TEST_CASE("invalid configs are rejected") {
        CHECK_THROWS_AS(from_config(json{{"od", 1}, {"d", 4}}), ValidationError);
        CHECK_THROWS_AS(from_config(json{{"bogus", 1}}), ValidationError);
        CHECK_THROWS_AS(from_config(json{{"od", "seven"}}), ValidationError);
        CHECK_THROWS_AS(from_config(json{{"od", -1}}), ValidationError);
        CHECK_THROWS_AS(from_config(json{{"omega_hz", -1e6}}), ValidationError);
        CHECK_THROWS_AS(from_config(json{{"gamma_fwhm_hz", 0}}), ValidationError);
        CHECK_THROWS_AS(from_config(json::array()), ValidationError);
        CHECK_NOTHROW(from_config(json{{"delta_c_hz", -40e6}}));
    }

    TEST_CASE("validate catches inconsistent depth") {
        Params p = from_config(json{{"od", 10}});
        p.medium.d *= 1.01;
        CHECK_THROWS_AS(p.validate(), ValidationError);
        p = from_config(json{{"od", 10}});
        p.medium.sigma *= 2;
        CHECK_THROWS_AS(p.validate(), ValidationError);
    }

    TEST_CASE("with_od and with_d keep the rest") {
        const Params base = from_config(json{{"od", 1}, {"omega_hz", 2e6}});
        const Params a = with_od(base, 50);
        CHECK(a.medium.od == 50);
        CHECK(a.drive == base.drive);
        const Params b = with_d(base, a.medium.d);
        CHECK(b.medium.od == doctest::Approx(50).epsilon(1e-12));
        CHECK(b.medium.source == DepthSource::d);
    }

    TEST_CASE("zero Doppler width gives d = od / 2") {
        const Params p = from_config(json{{"od", 1}, {"delta_d_hz", 0}});
        CHECK(p.medium.d == doctest::Approx(0.5));
    }

    TEST_CASE("d from atomic density") {
        const double n = 1e17;
        CHECK(d_from_density(795e-9, 0.02, n) ==
              doctest::Approx(3.0 / (8.0 * M_PI) * 795e-9 * 795e-9 * 0.02 * n));
    }

    TEST_CASE("warning when the hyperfine splitting is small") {
        CHECK(warnings(Params{}).empty());
        const Params p = from_config(json{{"delta_hf_hz", 50e6}});
        CHECK(warnings(p).size() == 1);
    }

    TEST_CASE("load_config reports I/O and parse errors") {
        namespace fs = std::filesystem;
        CHECK_THROWS_AS(load_config("/nonexistent/dir/config.json"), IoError);
        const auto path = fs::temp_directory_path() / "eitsim_test_bad.json";
        {
            std::ofstream(path) << "{ not json";
        }
        CHECK_THROWS_AS(load_config(path), ValidationError);
        {
            std::ofstream(path) << R"({"od": 3.7})";
        }
        CHECK(load_config(path).medium.od == 3.7);
        fs::remove(path);
    }

    TEST_CASE("config key list") {
        CHECK(config_keys().size() == 10);
    }
}
