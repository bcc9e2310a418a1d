#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "eitsim/params.hpp"
#include "eitsim/slowlight.hpp"

namespace eit {

using ModelFn = std::function<std::vector<double>(std::span<const double>)>;

/// Bounded nonlinear least-squares problem: minimize Σ wᵢ² (model(p)ᵢ - dataᵢ)².
struct FitProblem {
    ModelFn model;
    std::vector<double> data;
    std::vector<double> init;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> weights;  // empty: all ones
    /// The model may be called concurrently (Jacobian columns in parallel).
    bool reentrant = true;

    void validate() const;
};

struct FitOptions {
    std::size_t max_iterations = 200;
    double ftol = 1e-10;  // relative decrease of the residual norm
    double gtol = 1e-8;   // max cosine between residual and Jacobian columns
    double xtol = 1e-14;  // relative step length
    double lambda0 = 1e-3;
    double rel_step = 1e-6;  // finite-difference step: max(rel_step·|p|, min_step)
    double min_step = 1e-9;
};

struct FitResult {
    std::vector<double> params;
    std::vector<double> std_errors;
    double residual_norm = 0.0;
    double gradient_norm = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
    std::string message;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling, ×10/÷10 damping
/// updates, forward-difference Jacobian (step max(1e-6|p|, 1e-9), flipped
/// to a backward step at an upper bound) and projection onto the box.
/// Converges on a relative residual decrease below ftol, a gradient
/// cosine below gtol, or a projected step below xtol.
/// Non-finite model output throws EvaluationError naming the parameters.
FitResult least_squares(const FitProblem& problem, const FitOptions& opts = {});

nlohmann::json to_json(const FitResult& r, const std::vector<std::string>& names);

// ---------------------------------------------------------------------------
// Single-photon absorption dip

struct VoigtFitOptions {
    /// Points with |δ - center| < exclusion_half_width are ignored (EIT peak).
    double exclusion_half_width = 0.0;
    /// Center of the exclusion window; defaults to the transmission minimum.
    std::optional<double> exclusion_center;
    std::optional<double> init_od;
    std::optional<double> init_delta_d;
    std::optional<double> init_center;
    /// Hold the Doppler width at init_delta_d and fit only OD and center.
    bool fix_delta_d = false;
};

struct VoigtFit {
    double od = 0.0;
    double delta_d = 0.0;
    double center_offset = 0.0;
    FitResult result;
};

/// Fits T(δ) = voigt_transmission(δ - center; od, Δ_D, γ) with γ fixed.
VoigtFit fit_voigt_absorption(std::span<const double> deltas,
                              std::span<const double> transmissions,
                              const LineParams& line, const VoigtFitOptions& opts = {});

// ---------------------------------------------------------------------------
// OD decay

struct DecayFit {
    double od0 = 0.0;
    double tau = 0.0;  // s; +inf when the data does not decay
    double slope = 0.0;
    double intercept = 0.0;
    bool decaying = true;  // false when slope >= 0
    double residual_norm = 0.0;
};

/// Closed-form regression of ln(OD) on t.
DecayFit fit_od_decay(std::span<const double> times, std::span<const double> od_values);

// ---------------------------------------------------------------------------
// Slow-light pulse

struct SlowlightFitOptions {
    double t_fwhm = 2.2e-6;
    bool include_sideband = true;
    /// Third free parameter: vertical scale of the output trace.
    bool fit_scale = false;
    /// Hold Ω fixed and fit OD only.
    std::optional<double> fixed_omega;
    double init_od = 10.0;
    double init_omega = angular(2e6);
    double od_min = 0.1, od_max = 500.0;
    double omega_min = angular(0.1e6), omega_max = angular(100e6);
};

struct SlowlightFit {
    double od = 0.0;
    double omega = 0.0;
    double scale = 1.0;
    FitResult result;
};

/// Fits (OD, Ω) of the medium to a measured input/output intensity pair.
/// The forward model propagates a Gaussian of FWHM opts.t_fwhm centered on
/// the input peak; both traces are normalized to the input maximum.
/// `base` supplies γ, Δ_HF, Δ_D, γ0 and Δ_c.
SlowlightFit fit_slowlight(std::span<const double> trace_in,
                           std::span<const double> trace_out, const PulseGrid& grid,
                           const Params& base, const SlowlightFitOptions& opts = {});

}  // namespace eit
