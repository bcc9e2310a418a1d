#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>

#include "eitsim/errors.hpp"
#include "eitsim/lineshape.hpp"
#include "eitsim/params.hpp"

using namespace eit;
using cplx = std::complex<double>;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

// ∫ f over [a, b] by the trapezoid rule on n points.
template <typename F>
double trapezoid(F f, double a, double b, std::size_t n) {
    const double h = (b - a) / static_cast<double>(n - 1);
    double acc = 0.5 * (f(a) + f(b));
    for (std::size_t i = 1; i + 1 < n; ++i) acc += f(a + h * static_cast<double>(i));
    return acc * h;
}

}  // namespace

TEST_SUITE("lineshape") {
    TEST_CASE("Faddeeva reference values") {
        CHECK(rel(faddeeva({0.0, 0.0}), 1.0) < 1e-14);
        // e^{-1} + i 2/√π D(1), with Dawson D(1) = 0.5380795069127684.
        CHECK(rel(faddeeva({1.0, 0.0}), {std::exp(-1.0), 2.0 / std::sqrt(M_PI) * 0.5380795069127684}) < 1e-13);
        // e erfc(1).
        CHECK(rel(faddeeva({0.0, 1.0}), 0.42758357615580700) < 1e-13);
        CHECK(rel(faddeeva({1.0, 1.0}), {0.30474420525691259, 0.20821893820283162}) < 1e-13);
        // erfcx(10), continued-fraction region.
        CHECK(rel(faddeeva({0.0, 10.0}), 0.056140992743822585) < 1e-13);
        // e erfc(-1), lower half plane.
        CHECK(rel(faddeeva({0.0, -1.0}), 5.0089800807622450) < 1e-13);
    }

    TEST_CASE("Faddeeva symmetry and asymptotics") {
        for (cplx z : {cplx{0.3, 0.2}, cplx{3.0, 0.5}, cplx{8.0, 0.01}, cplx{20.0, 3.0}, cplx{0.5, 6.5}}) {
            CHECK(rel(faddeeva(-std::conj(z)), std::conj(faddeeva(z))) < 1e-13);
        }
        const cplx big{200.0, 1.0};
        CHECK(rel(faddeeva(big), cplx{0.0, 1.0} / (std::sqrt(M_PI) * big)) < 1e-4);
    }

    TEST_CASE("Faddeeva is continuous across its region boundaries") {
        for (double x : {6.999999, 7.000001}) {
            const cplx a = faddeeva({x, 1.0});
            const cplx b = faddeeva({x + 1e-7, 1.0});
            CHECK(std::abs(a - b) < 1e-7);
        }
        for (double y : {1.999999, 2.000001}) {
            const cplx a = faddeeva({1.0, y});
            const cplx b = faddeeva({1.0, y + 1e-7});
            CHECK(std::abs(a - b) < 1e-7);
        }
    }

    TEST_CASE("Voigt profile has unit area and correct limits") {
        const double sigma = 1.3, gamma = 0.7;
        const double area = trapezoid([&](double x) { return voigt(x, sigma, gamma); }, -4000, 4000, 2'000'001);
        CHECK(area == doctest::Approx(1.0).epsilon(2e-4));  // Lorentz tails beyond ±4000 carry ~1.1e-4
        // Nearly Lorentzian.
        CHECK(voigt(0.4, 1e-6, 1.0) == doctest::Approx(1.0 / (M_PI * (1.0 + 0.16))).epsilon(1e-9));
        // Nearly Gaussian.
        CHECK(voigt(0.5, 1.0, 1e-9) == doctest::Approx(std::exp(-0.125) / std::sqrt(2 * M_PI)).epsilon(1e-7));
        CHECK(voigt(-2.0, sigma, gamma) == voigt(2.0, sigma, gamma));
        CHECK_THROWS_AS(voigt(0.0, 0.0, 1.0), ValidationError);
        CHECK_THROWS_AS(voigt(0.0, 1.0, -1.0), ValidationError);
    }

    TEST_CASE("resonant absorption factor matches direct integration") {
        const double gamma = M_PI * 5.7e6;
        for (double fwhm_mhz : {5.0, 75.0, 300.0}) {
            const double sigma = sigma_from_fwhm(angular(fwhm_mhz * 1e6));
            const double k = trapezoid(
                [&](double x) {
                    const double g = std::exp(-0.5 * x * x / (sigma * sigma)) / (std::sqrt(2 * M_PI) * sigma);
                    return g * gamma * gamma / (x * x + gamma * gamma);
                },
                -9 * sigma, 9 * sigma, 400'001);
            CHECK(resonant_absorption_factor(gamma, sigma) == doctest::Approx(k).epsilon(1e-8));
        }
        CHECK(resonant_absorption_factor(gamma, 0.0) == 1.0);
    }

    TEST_CASE("OD and d conversions") {
        const double gamma = M_PI * 5.7e6;
        const double sigma = sigma_from_fwhm(angular(75e6));
        const double ratio = od_to_d(1.0, gamma, sigma);
        CHECK(ratio > 4.4);
        CHECK(ratio < 4.8);
        CHECK(d_to_od(od_to_d(37.0, gamma, sigma), gamma, sigma) == doctest::Approx(37.0));
        CHECK(od_to_d(1.0, gamma, 0.0) == 0.5);
    }

    TEST_CASE("Voigt transmission") {
        const double gamma = M_PI * 5.7e6, sigma = sigma_from_fwhm(angular(75e6));
        CHECK(voigt_transmission(0.0, 3.7, sigma, gamma) == doctest::Approx(std::exp(-3.7)));
        CHECK(voigt_transmission(angular(50e6), 0.0, sigma, gamma) == 1.0);
        CHECK(voigt_transmission(angular(1e9), 3.7, sigma, gamma) > 0.999);
        CHECK(voigt_transmission(gamma, 2.0, 0.0, gamma) == doctest::Approx(std::exp(-1.0)));
    }

    TEST_CASE("adaptive Doppler quadrature") {
        const double sigma = angular(30e6), gamma = M_PI * 5.7e6;
        const std::array<double, 0> none{};
        const auto one = integrate_doppler(sigma, 0.0, none, sigma, [](double) { return cplx{1.0}; });
        CHECK(std::abs(one.value - 1.0) < 1e-12);

        // ∫ G(Δ - Δc)/(δ + Δ + iγ) dΔ = -i √(π/2)/σ · conj w(conj z), z = -(δ + Δc + iγ)/(√2 σ).
        const double delta_c = angular(10e6), delta = angular(2e6);
        const std::array<double, 1> feature{-delta};
        const auto q = integrate_doppler(sigma, delta_c, feature, gamma, [&](double big) {
            return 1.0 / cplx{delta + big, gamma};
        });
        const cplx z = cplx{-(delta + delta_c), -gamma} / (std::sqrt(2.0) * sigma);
        const cplx exact = -cplx{0.0, 1.0} * std::sqrt(M_PI / 2.0) / sigma * std::conj(faddeeva(std::conj(z)));
        CHECK(rel(q.value, exact) < 1e-9);
        CHECK(q.achieved_tolerance < 1e-8);
        CHECK(q.evaluations > 0);
    }

    TEST_CASE("quadrature budget exhaustion reports the achieved tolerance") {
        QuadratureOptions opts;
        opts.max_nodes = 100;
        opts.rel_tol = 1e-14;
        const std::array<double, 1> feature{0.0};
        try {
            integrate_doppler(1.0, 0.0, feature, 1e-6, [](double x) { return cplx{1.0 / (x * x + 1e-12)}; }, opts);
            FAIL("expected QuadratureError");
        } catch (const QuadratureError& e) {
            CHECK(e.achieved_tolerance() > 0.0);
        }
    }

    TEST_CASE("materialized quadrature grid") {
        const double sigma = angular(30e6);
        const std::array<double, 1> feature{angular(5e6)};
        const auto grid = doppler_grid(sigma, 0.0, feature, angular(3e6));
        CHECK(grid.size() > 0);
        CHECK(grid.size() % 15 == 0);
        double total = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            total += grid.weights[i];
            if (i > 0) CHECK(grid.nodes[i] > grid.nodes[i - 1]);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(grid.integrate([&](double x) { return x * x; }) == doctest::Approx(sigma * sigma).epsilon(1e-10));
    }
}
