#include "eitsim/lineshape.hpp"

#include <cmath>
#include <numbers>

#include <fmt/core.h>

#include "eitsim/errors.hpp"

namespace eit {

namespace {

void check_width(double w, const char* name) {
    if (!(std::isfinite(w) && w > 0.0))
        throw ValidationError(fmt::format("{} must be positive, got {}", name, w));
}

}  // namespace

double voigt(double delta, double sigma, double gamma) {
    check_width(sigma, "sigma");
    check_width(gamma, "gamma");
    const double scale = sigma * std::numbers::sqrt2;
    const std::complex<double> z(std::abs(delta) / scale, gamma / scale);
    return faddeeva(z).real() / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double resonant_absorption_factor(double gamma, double sigma) {
    check_width(gamma, "gamma");
    if (!(std::isfinite(sigma) && sigma >= 0.0))
        throw ValidationError(fmt::format("sigma must be >= 0, got {}", sigma));
    if (sigma == 0.0) return 1.0;
    return std::numbers::pi * gamma * voigt(0.0, sigma, gamma);
}

double od_to_d(double od, double gamma, double sigma) {
    if (!(std::isfinite(od) && od >= 0.0))
        throw ValidationError(fmt::format("od must be >= 0, got {}", od));
    return od / (2.0 * resonant_absorption_factor(gamma, sigma));
}

double d_to_od(double d, double gamma, double sigma) {
    if (!(std::isfinite(d) && d >= 0.0))
        throw ValidationError(fmt::format("d must be >= 0, got {}", d));
    return 2.0 * resonant_absorption_factor(gamma, sigma) * d;
}

double voigt_transmission(double delta, double od, double sigma, double gamma) {
    if (!(std::isfinite(od) && od >= 0.0))
        throw ValidationError(fmt::format("od must be >= 0, got {}", od));
    check_width(gamma, "gamma");
    if (od == 0.0) return 1.0;
    double ratio;
    if (sigma == 0.0) {
        ratio = gamma * gamma / (delta * delta + gamma * gamma);
    } else {
        ratio = voigt(delta, sigma, gamma) / voigt(0.0, sigma, gamma);
    }
    return std::exp(-od * ratio);
}

}  // namespace eit
