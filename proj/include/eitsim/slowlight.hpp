#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <span>
#include <vector>

#include <json.hpp>

#include "eitsim/params.hpp"
#include "eitsim/transfer.hpp"

namespace eit {

/// Uniform periodic time grid. The input peak (t = 0) sits at index n/4,
/// leaving three quarters of the window for the delayed output.
struct PulseGrid {
    std::size_t n = std::size_t{1} << 15;
    double dt = 0.05e-6;
    double t0 = 0.0;

    std::size_t origin() const noexcept { return n / 4; }
    double time(std::size_t i) const noexcept {
        return t0 + (static_cast<double>(i) - static_cast<double>(origin())) * dt;
    }
    double window() const noexcept { return static_cast<double>(n) * dt; }
    /// Angular detuning of FFT bin k (standard wrap-around ordering).
    double bin_detuning(std::size_t k) const noexcept;
    std::vector<double> times() const;

    /// n must be a power of two and dt > 0.
    void validate() const;
    /// Window ≥ 20× expected delay + 10× FWHM and full band 2π/dt ≥ 2π·40/T.
    bool adequate_for(double expected_delay, double t_fwhm) const noexcept;
};

/// Gaussian amplitude exp(-t² 2 ln2 / T²): |a|² has FWHM T and peak 1 at t = 0.
std::vector<std::complex<double>> gaussian_pulse(double t_fwhm, const PulseGrid& grid);

struct PulseOptions {
    /// Feed the conjugate sideband E'* = -E into the cell with the probe.
    bool include_sideband = true;
};

struct PulseResult {
    std::vector<double> t;
    std::vector<double> intensity_in;   // normalized to max = 1
    std::vector<double> intensity_out;  // same normalization as the input
    double delay = 0.0;                 // s, peak to peak
    double fwhm_out = 0.0;              // s
    double dbp = 0.0;                   // delay / fwhm_out
    double energy_fraction = 0.0;
    bool grid_adequate = true;
    bool gain = false;  // energy_fraction > 1
    std::vector<std::string> warnings;
};

/// Per-bin transfer factors [exp M]₁₁ and [exp M]₁₂ at unit depth-scaling.
///
/// M is linear in d, so the Doppler quadrature is done once per bin at d = 1
/// and any other depth is a rescale followed by the 2×2 exponential.
class SpectralResponse {
public:
    /// Builds unit-d matrices for every bin whose input amplitude exceeds
    /// `threshold` times the spectral maximum (other bins carry no energy).
    SpectralResponse(const PulseGrid& grid, const Params& p,
                     std::span<const std::complex<double>> input_spectrum,
                     double threshold = 1e-15);

    /// Output spectrum for homogeneous depth `d`.
    std::vector<std::complex<double>> apply(std::span<const std::complex<double>> input_spectrum,
                                            double d, bool include_sideband) const;

private:
    std::vector<std::size_t> bins_;
    std::vector<TransferMatrix> unit_;
};

/// Forward FFT with the e^{+iδt} kernel (analysis), normalized by 1/n.
std::vector<std::complex<double>> to_spectrum(std::span<const std::complex<double>> envelope);
/// Inverse of to_spectrum (synthesis with e^{-iδt}).
std::vector<std::complex<double>> to_envelope(std::span<const std::complex<double>> spectrum);

/// Output envelope only (no metrics, no wraparound check).
std::vector<std::complex<double>> propagate_envelope(std::span<const std::complex<double>> envelope,
                                                     const PulseGrid& grid, const Params& p,
                                                     const PulseOptions& opts = {});

/// Propagates the envelope through the cell and measures the output.
/// Throws WraparoundError if the output peak is within 5 samples of an edge
/// of the periodic window.
PulseResult propagate_pulse(std::span<const std::complex<double>> envelope,
                            const PulseGrid& grid, const Params& p,
                            const PulseOptions& opts = {});

struct PulseMetrics {
    double delay = 0.0;
    double fwhm_out = 0.0;
    double dbp = 0.0;
    double energy_fraction = 0.0;
};

/// Peak-to-peak delay with parabolic sub-sample refinement, output FWHM by
/// interpolated half-maximum crossings, and the energy ratio.
PulseMetrics measure_pulse(std::span<const double> t, std::span<const double> intensity_in,
                           std::span<const double> intensity_out);

/// Sub-sample peak position of a sampled curve (parabola through the maximum).
double peak_time(std::span<const double> t, std::span<const double> y);
/// Full width at half maximum about the global maximum.
double fwhm(std::span<const double> t, std::span<const double> y);

/// CSV with header `t_s,intensity_in,intensity_out`.
void write_pulse_csv(std::ostream& os, const PulseResult& r);
/// {delay_s, fwhm_out_s, dbp, energy_fraction}.
nlohmann::json metrics_json(const PulseResult& r);

}  // namespace eit
