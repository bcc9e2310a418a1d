#pragma once

// Brute-force reference implementations used only by the tests.

#include <cmath>
#include <complex>
#include <cstddef>

#include "eitsim/params.hpp"
#include "eitsim/transfer.hpp"

namespace eit::oracle {

using cplx = std::complex<double>;

/// M11 by the composite trapezoid rule on n points over Δc ± 8σ.
inline cplx m11_trapezoid(double delta, const Params& p, std::size_t n = 1'000'000) {
    const double s = p.medium.sigma;
    const double a = p.drive.delta_c - 8.0 * s;
    const double h = 16.0 * s / static_cast<double>(n - 1);
    const double norm = 1.0 / (std::sqrt(kTwoPi) * s);
    const double gamma = p.line.gamma;
    const double omega2 = p.drive.omega * p.drive.omega;
    const cplx x{delta, p.drive.gamma0};
    cplx acc{};
    for (std::size_t i = 0; i < n; ++i) {
        const double big_delta = a + h * static_cast<double>(i);
        const double u = (big_delta - p.drive.delta_c) / s;
        const double g = norm * std::exp(-0.5 * u * u);
        const cplx f = omega2 - cplx{delta + big_delta, gamma} * x;
        const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        acc += w * g * x / f;
    }
    return cplx{0.0, p.medium.d * gamma} * acc * h;
}

/// exp(A) by its Taylor series truncated after `terms` terms.
inline Mat2 expm_taylor(const Mat2& a, int terms = 30) {
    Mat2 sum = Mat2::identity();
    Mat2 term = Mat2::identity();
    for (int k = 1; k < terms; ++k) {
        term = cplx{1.0 / k} * (term * a);
        sum = sum + term;
    }
    return sum;
}

inline double max_abs_diff(const Mat2& x, const Mat2& y) {
    return std::max({std::abs(x.a11 - y.a11), std::abs(x.a12 - y.a12), std::abs(x.a21 - y.a21),
                     std::abs(x.a22 - y.a22)});
}

inline double max_abs(const Mat2& x) {
    return std::max({std::abs(x.a11), std::abs(x.a12), std::abs(x.a21), std::abs(x.a22)});
}

}  // namespace eit::oracle
