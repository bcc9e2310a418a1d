#pragma once

#include <complex>

#include "eitsim/lineshape.hpp"
#include "eitsim/params.hpp"

namespace eit {

using cplx = std::complex<double>;

/// Plain 2×2 complex matrix, row-major.
struct Mat2 {
    cplx a11{}, a12{}, a21{}, a22{};

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    friend Mat2 operator*(const Mat2& x, const Mat2& y) {
        return {x.a11 * y.a11 + x.a12 * y.a21, x.a11 * y.a12 + x.a12 * y.a22,
                x.a21 * y.a11 + x.a22 * y.a21, x.a21 * y.a12 + x.a22 * y.a22};
    }
    friend Mat2 operator+(const Mat2& x, const Mat2& y) {
        return {x.a11 + y.a11, x.a12 + y.a12, x.a21 + y.a21, x.a22 + y.a22};
    }
    friend Mat2 operator*(cplx s, const Mat2& x) {
        return {s * x.a11, s * x.a12, s * x.a21, s * x.a22};
    }
};

/// exp(A) written as exp(log_scale) · mat, so that very large negative
/// exponents (d ~ 500 in the stop band) do not underflow.
struct ScaledMatrix {
    cplx log_scale{};
    Mat2 mat;

    Mat2 value() const { return std::exp(log_scale) * mat; }
};

/// Doppler-averaged propagation matrix at one two-photon detuning.
///
///   M(δ) = ∫ G(Δ - Δc) · i dγ/F · [[δ + iγ0, -Ω²/Δ_HF], [Ω²/Δ_HF, 0]] dΔ,
///   F = Ω² - (δ + Δ + iγ)(δ + iγ0).
///
/// All three nonzero entries share the scalar integral ∫ G/F, so one
/// complex quadrature per δ is enough. m22 is identically zero.
struct TransferMatrix {
    cplx m11{}, m12{}, m21{}, m22{};
    double delta = 0.0;
    double quadrature_tolerance = 0.0;

    Mat2 matrix() const { return {m11, m12, m21, m22}; }
    /// M is linear in d; this rescales every entry by `factor`.
    TransferMatrix scaled(double factor) const;
};

/// Probe amplitude E and conjugated sideband amplitude E'* at z = L.
struct FieldPair {
    cplx e{};
    cplx ep_conj{};
};

TransferMatrix transfer_matrix(double delta, const Params& p,
                               const QuadratureOptions& opts = {});

/// Closed-form 2×2 matrix exponential. Uses exp(A) = e^{λ̄}[cosh s·I +
/// (sinh s/s)(A - λ̄I)] with λ̄ = tr A/2 and s² = ((a11 - a22)/2)² + a12 a21;
/// small |s| switches to the Taylor series of cosh and sinh(s)/s.
Mat2 expm2(const Mat2& a);
ScaledMatrix expm2_scaled(const Mat2& a);

/// exp(M)·[1, -1]ᵀ: the boundary condition E(0) = -E'(0) = 1.
FieldPair propagate(const TransferMatrix& m);
FieldPair propagate_full(double delta, const Params& p);

/// ln |E(L)|², evaluated in the log domain.
double log_transmission(const TransferMatrix& m);
double transmission_full(const TransferMatrix& m);

/// First-order expansion in 1/Δ_HF:
///   |e^{M11} + Ω²/(Δ_HF(δ + iγ0)) (e^{M11} - 1)|².
double transmission_firstorder(const TransferMatrix& m, const Params& p);
double propagate_firstorder(double delta, const Params& p);

/// The pure-EIT factor exp(M11).
cplx eit_only(double delta, const Params& p);

}  // namespace eit
