#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace eit {

/// Faddeeva function w(z) = exp(-z²) erfc(-iz), relative accuracy ~1e-13
/// over the upper half plane. The lower half plane is reached through
/// w(z) = 2 exp(-z²) - w(-z).
std::complex<double> faddeeva(std::complex<double> z);

/// Unit-area Voigt profile: a Gaussian of standard deviation `sigma`
/// convolved with a Lorentzian of half-width `gamma`.
double voigt(double delta, double sigma, double gamma);

/// Resonant Doppler-averaged absorption factor
///   K = ∫ G(Δ; σ) γ²/(Δ² + γ²) dΔ,
/// with K = 1 for σ = 0. OD = 2 K d.
double resonant_absorption_factor(double gamma, double sigma);

double od_to_d(double od, double gamma, double sigma);
double d_to_od(double d, double gamma, double sigma);

/// exp(-od · V(δ)/V(0)), so that the resonant value is exp(-od).
double voigt_transmission(double delta, double od, double sigma, double gamma);

// ---------------------------------------------------------------------------
// Doppler quadrature

/// Nodes and Gaussian-weighted weights over [Δc - 8σ, Δc + 8σ].
/// The weights already contain G(Δ - Δc; σ), so Σ w_i f(Δ_i) ≈ ∫ G f dΔ.
struct QuadratureGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    double achieved_tolerance = 0.0;

    std::size_t size() const noexcept { return nodes.size(); }

    template <class F>
    auto integrate(F&& f) const {
        using R = decltype(f(0.0));
        R acc{};
        for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
        return acc;
    }
};

struct QuadratureOptions {
    double rel_tol = 1e-8;
    std::size_t max_nodes = 200'000;
    double window_sigmas = 8.0;
};

using DopplerIntegrand = std::function<std::complex<double>(double)>;

struct QuadratureValue {
    std::complex<double> value;
    double achieved_tolerance;  // estimated error relative to |value|
    std::size_t evaluations;
};

/// Adaptive Gauss-Kronrod (7/15) integration of G(Δ - Δc; σ) f(Δ).
///
/// The window is cut at the feature points and at ±s/10, ±s, ±4s around
/// each of them (s = `feature_scale`), then bisected where the G7/K15
/// difference is largest until the relative tolerance is met.
/// Throws QuadratureError when the node budget is exhausted.
QuadratureValue integrate_doppler(double sigma, double delta_c,
                                  std::span<const double> feature_points,
                                  double feature_scale, const DopplerIntegrand& f,
                                  const QuadratureOptions& opts = {});

/// Materializes the grid that integrate_doppler() converges to for `refine_for`.
/// Without an integrand the grid is refined for f ≡ 1 only.
QuadratureGrid doppler_grid(double sigma, double delta_c,
                            std::span<const double> feature_points,
                            double feature_scale,
                            const DopplerIntegrand& refine_for = {},
                            const QuadratureOptions& opts = {});

}  // namespace eit
