#include "eitsim/transfer.hpp"

#include <array>
#include <cmath>

#include <fmt/core.h>

#include "eitsim/errors.hpp"

namespace eit {

namespace {

constexpr cplx kI{0.0, 1.0};

// Below this |s| the hyperbolic functions come from their Taylor series;
// (1 - e^{-2s})/(2s) loses ~eps/|s| relative accuracy otherwise.
constexpr double kTaylorRadius = 0.1;

// cosh(s) and sinh(s)/s as power series in s²; 12 terms reach far below
// double precision for |s| < 0.1.
std::pair<cplx, cplx> cosh_sinhc_series(cplx s2) {
    cplx c = 1.0, sc = 1.0;
    cplx tc = 1.0, ts = 1.0;
    for (int k = 1; k <= 12; ++k) {
        tc *= s2 / static_cast<double>((2 * k - 1) * (2 * k));
        ts *= s2 / static_cast<double>((2 * k) * (2 * k + 1));
        c += tc;
        sc += ts;
    }
    return {c, sc};
}

}  // namespace

TransferMatrix TransferMatrix::scaled(double factor) const {
    TransferMatrix t = *this;
    t.m11 *= factor;
    t.m12 *= factor;
    t.m21 *= factor;
    return t;
}

TransferMatrix transfer_matrix(double delta, const Params& p, const QuadratureOptions& opts) {
    TransferMatrix t;
    t.delta = delta;
    const double d = p.medium.d;
    if (d == 0.0) return t;

    const double gamma = p.line.gamma;
    const double omega2 = p.drive.omega * p.drive.omega;
    const cplx x(delta, p.drive.gamma0);  // δ + iγ0
    const bool driven = omega2 > 0.0;

    // Driven: integrate 1/F, with F ≠ 0 everywhere because Im(δ + Δ + iγ) = γ > 0.
    // Undriven: x/F reduces to -1/(δ + Δ + iγ), which stays finite at x = 0.
    auto integrand = [&](double big_delta) -> cplx {
        const cplx detuned(delta + big_delta, gamma);
        if (driven) return 1.0 / (omega2 - detuned * x);
        return -1.0 / detuned;
    };

    // Pole of the integrand in Δ and its distance from the real axis.
    double feature = -delta;
    double width = gamma;
    if (driven && x != cplx(0.0)) {
        const cplx q = omega2 / x;
        feature = q.real() - delta;
        width = gamma - q.imag();
    }

    cplx integral;
    if (p.medium.sigma == 0.0) {
        integral = integrand(p.drive.delta_c);
    } else {
        const std::array<double, 1> features{feature};
        const auto q = integrate_doppler(p.medium.sigma, p.drive.delta_c, features, width,
                                         integrand, opts);
        integral = q.value;
        t.quadrature_tolerance = q.achieved_tolerance;
    }

    const cplx pref = kI * d * gamma * integral;
    if (driven) {
        const double coupling = omega2 / p.line.delta_hf;
        t.m11 = pref * x;
        t.m12 = -pref * coupling;
        t.m21 = pref * coupling;
    } else {
        t.m11 = pref;
    }
    if (!(std::isfinite(t.m11.real()) && std::isfinite(t.m11.imag()) &&
          std::isfinite(std::abs(t.m12))))
        throw NumericalError(fmt::format("non-finite transfer matrix at delta = {} rad/s", delta));
    return t;
}

namespace {

// A = λ̄I + N with N² = s²I. Outside the Taylor radius the exponential is
// e^{λ̄+s} P+ + e^{λ̄-s} P-, with P± = (I ± N/s)/2 and Re s >= 0.
struct Split {
    cplx mean, half_diff, s2, s;
    cplx sp, sm;  // s + h and s - h, the smaller one rebuilt from their product
    bool series;
};

Split split(const Mat2& a) {
    Split out;
    out.mean = 0.5 * (a.a11 + a.a22);
    out.half_diff = 0.5 * (a.a11 - a.a22);
    out.s2 = out.half_diff * out.half_diff + a.a12 * a.a21;
    out.series = std::abs(out.s2) < kTaylorRadius * kTaylorRadius;
    if (out.series) return out;
    out.s = std::sqrt(out.s2);
    // (s + h)(s - h) = a12 a21 avoids cancellation when one eigenvalue is
    // far below the other.
    const cplx bc = a.a12 * a.a21;
    out.sp = out.s + out.half_diff;
    out.sm = out.s - out.half_diff;
    if (std::abs(out.sp) < std::abs(out.sm))
        out.sp = bc / out.sm;
    else if (std::abs(out.sm) < std::abs(out.sp))
        out.sm = bc / out.sp;
    return out;
}

}  // namespace

ScaledMatrix expm2_scaled(const Mat2& a) {
    const Split sp = split(a);
    ScaledMatrix out;
    if (sp.series) {
        const auto [c, sc] = cosh_sinhc_series(sp.s2);
        out.log_scale = sp.mean;
        out.mat = Mat2{c + sc * sp.half_diff, sc * a.a12, sc * a.a21, c - sc * sp.half_diff};
        return out;
    }
    const cplx two_s = 2.0 * sp.s;
    const cplx q = std::exp(-two_s);
    const cplx sc = (1.0 - q) / two_s;
    out.log_scale = sp.mean + sp.s;
    out.mat = Mat2{(sp.sp + q * sp.sm) / two_s, sc * a.a12, sc * a.a21, (sp.sm + q * sp.sp) / two_s};
    return out;
}

Mat2 expm2(const Mat2& a) { return expm2_scaled(a).value(); }

FieldPair propagate(const TransferMatrix& m) {
    const auto e = expm2_scaled(m.matrix());
    const cplx scale = std::exp(e.log_scale);
    return {scale * (e.mat.a11 - e.mat.a12), scale * (e.mat.a21 - e.mat.a22)};
}

FieldPair propagate_full(double delta, const Params& p) {
    return propagate(transfer_matrix(delta, p));
}

double log_transmission(const TransferMatrix& m) {
    const Mat2 a = m.matrix();
    const Split sp = split(a);
    if (sp.series) {
        const auto e = expm2_scaled(a);
        return 2.0 * (e.log_scale.real() + std::log(std::abs(e.mat.a11 - e.mat.a12)));
    }
    // E(L) = e^{λ̄+s} u + e^{λ̄-s} w with u, w the first rows of P± applied to [1, -1].
    const cplx two_s = 2.0 * sp.s;
    const cplx u = (sp.sp - a.a12) / two_s;
    const cplx w = (sp.sm + a.a12) / two_s;
    const double lead = sp.mean.real() + sp.s.real();
    const double gap = 2.0 * sp.s.real();
    if (gap > 700.0 || u == cplx(0.0)) {
        if (u != cplx(0.0)) return 2.0 * (lead + std::log(std::abs(u)));
        return 2.0 * (lead - gap + std::log(std::abs(w)));
    }
    return 2.0 * (lead + std::log(std::abs(u + std::exp(-two_s) * w)));
}

double transmission_full(const TransferMatrix& m) { return std::exp(log_transmission(m)); }

double transmission_firstorder(const TransferMatrix& m, const Params& p) {
    const cplx eit = std::exp(m.m11);
    const cplx x(m.delta, p.drive.gamma0);
    const double omega2 = p.drive.omega * p.drive.omega;
    cplx mixing = 0.0;
    if (omega2 > 0.0) {
        // At x = 0 the factor (e^{M11} - 1)/x tends to M11/x = i dγ ∫G/F, i.e. -M12·Δ_HF/Ω².
        mixing = (x == cplx(0.0)) ? -m.m12 : omega2 / (p.line.delta_hf * x) * (eit - 1.0);
    }
    return std::norm(eit + mixing);
}

double propagate_firstorder(double delta, const Params& p) {
    return transmission_firstorder(transfer_matrix(delta, p), p);
}

cplx eit_only(double delta, const Params& p) { return std::exp(transfer_matrix(delta, p).m11); }

}  // namespace eit
