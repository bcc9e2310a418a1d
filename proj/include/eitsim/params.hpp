#pragma once

#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

namespace eit {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// FWHM of a Gaussian in units of its standard deviation, 2√(2 ln 2).
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

/// Converts an ordinary frequency in Hz to angular frequency in rad/s.
constexpr double angular(double hz) noexcept { return kTwoPi * hz; }

/// Atomic line constants. All frequencies are angular (rad/s).
struct LineParams {
    double gamma = angular(5.7e6) / 2.0;  // half of the natural FWHM
    double delta_hf = angular(6.8e9);     // ground hyperfine splitting
    double lambda = 795e-9;               // m

    void validate() const;
    bool operator==(const LineParams&) const = default;
};

enum class DepthSource { od, d };

/// Optical depth and Doppler width of the cell.
///
/// `od` is the Doppler-broadened resonant optical depth, `d` the homogeneous
/// half-depth; the two are tied by od_to_d(). `source` records which one was
/// supplied so that serialization reproduces the input exactly.
struct MediumParams {
    double od = 0.0;
    double d = 0.0;
    double delta_d = angular(75e6);  // Doppler FWHM
    double sigma = angular(75e6) / kFwhmPerSigma;  // Doppler standard deviation
    double length_m = 0.02;
    DepthSource source = DepthSource::od;

    void validate() const;
    bool operator==(const MediumParams&) const = default;
};

/// Control field and ground-coherence decay.
struct DriveParams {
    double omega = 0.0;    // control Rabi frequency, real and >= 0
    double delta_c = 0.0;  // control single-photon detuning
    double gamma0 = 0.0;   // |s>-|g> coherence decay

    void validate() const;
    bool operator==(const DriveParams&) const = default;
};

struct Params {
    LineParams line;
    MediumParams medium;
    DriveParams drive;

    void validate() const;
    bool operator==(const Params&) const = default;
};

/// Doppler standard deviation from a Doppler FWHM.
double sigma_from_fwhm(double fwhm);

/// Builds a medium from the Doppler-broadened OD (d is derived).
MediumParams medium_from_od(double od, double delta_d, const LineParams& line,
                            double length_m = 0.02);
/// Builds a medium from the homogeneous half-depth (OD is derived).
MediumParams medium_from_d(double d, double delta_d, const LineParams& line,
                           double length_m = 0.02);

/// Returns a copy of `p` with the depth replaced, keeping od and d consistent.
Params with_od(Params p, double od);
Params with_d(Params p, double d);

/// d = (3/8π) λ² L N/V. Helper only; the rest of the code works from OD.
double d_from_density(double lambda, double length_m, double density_per_m3);

/// Non-fatal diagnostics about a parameter set (e.g. Δ_HF not ≫ γ).
std::vector<std::string> warnings(const Params& p);

/// Parses the flat config object. Frequencies are read in Hz (keys ending
/// in `_hz`) and stored as angular frequencies.
Params from_config(const nlohmann::json& doc);
Params load_config(const std::filesystem::path& path);

/// Inverse of from_config: from_config(to_config(p)) == p exactly.
nlohmann::json to_config(const Params& p);

/// The set of keys from_config accepts.
const std::vector<std::string>& config_keys();

}  // namespace eit
