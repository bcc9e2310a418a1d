#include "eitsim/slowlight.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>
#include <ostream>

#include <fftw3.h>
#include <fmt/core.h>

#include "eitsim/csv.hpp"
#include "eitsim/errors.hpp"
#include "eitsim/parallel.hpp"
#include "eitsim/spectrum.hpp"

namespace eit {

namespace {

/// Output power at the window boundary, relative to the peak, above which the pulse is taken to wrap.
constexpr double kEdgeFraction = 1e-3;

using cplx = std::complex<double>;

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<cplx> dft(std::span<const cplx> in, int sign) {
    const int n = static_cast<int>(in.size());
    std::vector<cplx> out(in.begin(), in.end());
    auto* buf = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE);
    }
    if (!plan) throw NumericalError("FFTW could not create a plan");
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

std::size_t argmax(std::span<const double> y) {
    return static_cast<std::size_t>(std::distance(y.begin(), std::max_element(y.begin(), y.end())));
}

}  // namespace

double PulseGrid::bin_detuning(std::size_t k) const noexcept {
    const double df = kTwoPi / window();
    const auto signed_k = k < n / 2 ? static_cast<double>(k)
                                    : static_cast<double>(k) - static_cast<double>(n);
    return signed_k * df;
}

std::vector<double> PulseGrid::times() const {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = time(i);
    return t;
}

void PulseGrid::validate() const {
    if (n < 16 || !std::has_single_bit(n))
        throw ValidationError(fmt::format("pulse grid size must be a power of two >= 16, got {}", n));
    if (!(dt > 0.0 && std::isfinite(dt)))
        throw ValidationError(fmt::format("pulse grid step must be positive, got {}", dt));
}

bool PulseGrid::adequate_for(double expected_delay, double t_fwhm) const noexcept {
    return window() >= 20.0 * expected_delay + 10.0 * t_fwhm && dt <= t_fwhm / 40.0;
}

std::vector<cplx> gaussian_pulse(double t_fwhm, const PulseGrid& grid) {
    grid.validate();
    if (!(t_fwhm > 0.0)) throw ValidationError(fmt::format("pulse FWHM must be positive, got {}", t_fwhm));
    if (grid.window() < 10.0 * t_fwhm)
        throw ValidationError(fmt::format("pulse grid window {:.4g} s is shorter than 10 FWHM ({:.4g} s)",
                                          grid.window(), 10.0 * t_fwhm));
    const double k = 2.0 * std::log(2.0) / (t_fwhm * t_fwhm);
    std::vector<cplx> a(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double t = grid.time(i) - grid.t0;
        a[i] = std::exp(-k * t * t);
    }
    return a;
}

std::vector<cplx> to_spectrum(std::span<const cplx> envelope) {
    auto s = dft(envelope, FFTW_BACKWARD);
    const double inv = 1.0 / static_cast<double>(envelope.size());
    for (auto& v : s) v *= inv;
    return s;
}

std::vector<cplx> to_envelope(std::span<const cplx> spectrum) { return dft(spectrum, FFTW_FORWARD); }

SpectralResponse::SpectralResponse(const PulseGrid& grid, const Params& p,
                                   std::span<const cplx> input_spectrum, double threshold) {
    double peak = 0.0;
    for (const auto& v : input_spectrum) peak = std::max(peak, std::abs(v));
    for (std::size_t k = 0; k < input_spectrum.size(); ++k)
        if (std::abs(input_spectrum[k]) > threshold * peak) bins_.push_back(k);

    Params unit = p;
    unit.medium.d = 1.0;
    unit_.resize(bins_.size());
    parallel_for(bins_.size(), [&](std::size_t i) {
        unit_[i] = transfer_matrix(grid.bin_detuning(bins_[i]), unit);
    });
}

std::vector<cplx> SpectralResponse::apply(std::span<const cplx> input_spectrum, double d,
                                          bool include_sideband) const {
    if (d == 0.0) return {input_spectrum.begin(), input_spectrum.end()};
    std::vector<cplx> out(input_spectrum.size(), cplx{});
    for (std::size_t i = 0; i < bins_.size(); ++i) {
        const auto e = expm2_scaled(unit_[i].scaled(d).matrix());
        const cplx factor = include_sideband ? e.mat.a11 - e.mat.a12 : e.mat.a11;
        out[bins_[i]] = std::exp(e.log_scale) * factor * input_spectrum[bins_[i]];
    }
    return out;
}

std::vector<cplx> propagate_envelope(std::span<const cplx> envelope, const PulseGrid& grid,
                                     const Params& p, const PulseOptions& opts) {
    grid.validate();
    if (envelope.size() != grid.n)
        throw ValidationError(fmt::format("envelope has {} samples, grid has {}", envelope.size(), grid.n));
    const auto spectrum = to_spectrum(envelope);
    if (p.medium.d == 0.0) return to_envelope(spectrum);
    const SpectralResponse response(grid, p, spectrum);
    return to_envelope(response.apply(spectrum, p.medium.d, opts.include_sideband));
}

double peak_time(std::span<const double> t, std::span<const double> y) {
    const std::size_t i = argmax(y);
    if (i == 0 || i + 1 >= y.size()) return t[i];
    const double curvature = y[i - 1] - 2.0 * y[i] + y[i + 1];
    if (curvature == 0.0) return t[i];
    const double offset = 0.5 * (y[i - 1] - y[i + 1]) / curvature;
    return t[i] + offset * 0.5 * (t[i + 1] - t[i - 1]);
}

double fwhm(std::span<const double> t, std::span<const double> y) {
    const std::size_t i = argmax(y);
    const double half = 0.5 * y[i];
    if (!(half > 0.0)) throw NumericalError("cannot measure the FWHM of an all-zero trace");
    std::size_t l = i;
    while (l > 0 && y[l] >= half) --l;
    std::size_t r = i;
    while (r + 1 < y.size() && y[r] >= half) ++r;
    if (y[l] >= half || y[r] >= half) throw NumericalError("trace does not fall to half maximum inside the window");
    auto cross = [&](std::size_t below, std::size_t above) {
        return t[below] + (half - y[below]) * (t[above] - t[below]) / (y[above] - y[below]);
    };
    return cross(r, r - 1) - cross(l, l + 1);
}

PulseMetrics measure_pulse(std::span<const double> t, std::span<const double> intensity_in,
                           std::span<const double> intensity_out) {
    PulseMetrics m;
    m.delay = peak_time(t, intensity_out) - peak_time(t, intensity_in);
    m.fwhm_out = fwhm(t, intensity_out);
    m.dbp = m.delay / m.fwhm_out;
    const double e_in = std::accumulate(intensity_in.begin(), intensity_in.end(), 0.0);
    const double e_out = std::accumulate(intensity_out.begin(), intensity_out.end(), 0.0);
    m.energy_fraction = e_out / e_in;
    return m;
}

PulseResult propagate_pulse(std::span<const cplx> envelope, const PulseGrid& grid, const Params& p,
                            const PulseOptions& opts) {
    const auto out = propagate_envelope(envelope, grid, p, opts);

    PulseResult r;
    r.t = grid.times();
    r.intensity_in.resize(grid.n);
    r.intensity_out.resize(grid.n);
    double peak_in = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) {
        r.intensity_in[i] = std::norm(envelope[i]);
        peak_in = std::max(peak_in, r.intensity_in[i]);
    }
    if (!(peak_in > 0.0)) throw ValidationError("input envelope is identically zero");
    for (std::size_t i = 0; i < grid.n; ++i) {
        r.intensity_in[i] /= peak_in;
        r.intensity_out[i] = std::norm(out[i]) / peak_in;
    }

    const std::size_t i_out = argmax(r.intensity_out);
    if (i_out < 5 || i_out + 5 >= grid.n)
        throw WraparoundError(fmt::format(
            "output peak at sample {} of {} is at the edge of the time window; enlarge the grid",
            i_out, grid.n));
    // An aliased pulse can peak inside the window; it then still carries power at the boundary.
    const double edge = std::max(r.intensity_out.front(), r.intensity_out.back());
    if (edge > kEdgeFraction * r.intensity_out[i_out])
        throw WraparoundError(fmt::format(
            "output intensity at the time-window edge is {:.3g} of its peak; the pulse wraps around, enlarge the grid",
            edge / r.intensity_out[i_out]));

    const auto m = measure_pulse(r.t, r.intensity_in, r.intensity_out);
    r.delay = m.delay;
    r.fwhm_out = m.fwhm_out;
    r.dbp = m.dbp;
    r.energy_fraction = m.energy_fraction;
    r.gain = r.energy_fraction > 1.0;

    if (p.drive.delta_c != 0.0)
        r.warnings.push_back("control detuning is nonzero; slow-light runs normally use delta_c = 0");
    const double t_in = fwhm(r.t, r.intensity_in);
    const double expected = (p.drive.omega > 0.0 && p.medium.d > 0.0) ? group_delay(p) : 0.0;
    r.grid_adequate = grid.adequate_for(expected, t_in);
    if (!r.grid_adequate)
        r.warnings.push_back(fmt::format(
            "time grid ({} x {:.3g} s) is small for an expected delay of {:.3g} s", grid.n, grid.dt, expected));
    return r;
}

void write_pulse_csv(std::ostream& os, const PulseResult& r) {
    os << "t_s,intensity_in,intensity_out\n";
    for (std::size_t i = 0; i < r.t.size(); ++i)
        os << format_number(r.t[i]) << ',' << format_number(r.intensity_in[i]) << ','
           << format_number(r.intensity_out[i]) << '\n';
}

nlohmann::json metrics_json(const PulseResult& r) {
    return {{"delay_s", r.delay},
            {"fwhm_out_s", r.fwhm_out},
            {"dbp", r.dbp},
            {"energy_fraction", r.energy_fraction}};
}

}  // namespace eit
