#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "eitsim/params.hpp"

namespace eit {

enum class Mode { full, firstorder, eit };

struct ModeSet {
    bool full = true;
    bool firstorder = true;
    bool eit = true;

    bool has(Mode m) const noexcept;
    /// Parses a comma-separated list such as "full,eit".
    static ModeSet parse(std::string_view list);
};

/// Transmission spectrum on a uniform δ grid (rad/s). Columns for modes that
/// were not requested are empty.
struct SpectrumScan {
    std::vector<double> deltas;
    std::vector<double> t_full;
    std::vector<double> t_firstorder;
    std::vector<double> t_eit;
    Params params;
    ModeSet modes;
    /// Set when any transmission exceeds 1 (four-wave-mixing gain).
    bool gain = false;

    std::span<const double> column(Mode m) const;
};

inline constexpr double kDefaultScanHalfWidth = angular(15e6);
inline constexpr std::size_t kDefaultScanPoints = 3001;

/// Evaluates the requested modes at n_points uniformly spaced detunings.
/// Quadrature failures are rethrown with the offending δ in the message.
SpectrumScan scan(double delta_min, double delta_max, std::size_t n_points,
                  const Params& p, ModeSet modes = {});

/// v_g/L = Ω²/(γ d), in s⁻¹.
double group_velocity_rate(const Params& p);
/// L/v_g = γ d/Ω², in s.
double group_delay(const Params& p);
/// Fringe period 2π v_g/L, in rad/s.
double fringe_period(const Params& p);

struct Peak {
    double delta;
    double transmission;
};

/// Interior local maxima (strict 3-point test) refined by a parabola
/// through the three samples.
std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y);
std::vector<Peak> find_peaks(const SpectrumScan& s, Mode m);

/// Mean spacing of the peaks nearest to `center` (up to `count` of them).
/// Returns 0 when fewer than two peaks are available.
double mean_peak_spacing(const std::vector<Peak>& peaks, double center,
                         std::size_t count = 4);

/// CSV with header `delta_hz,t_full,t_firstorder,t_eit` and 12 significant
/// digits. Missing modes are written as `nan`.
void write_csv(std::ostream& os, const SpectrumScan& s);

}  // namespace eit
