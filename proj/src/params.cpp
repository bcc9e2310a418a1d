#include "eitsim/params.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include <fmt/core.h>

#include "eitsim/errors.hpp"
#include "eitsim/lineshape.hpp"

namespace eit {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }
bool finite_pos(double x) { return std::isfinite(x) && x > 0.0; }

std::size_t shortest_length(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return static_cast<std::size_t>(r.ptr - buf);
}

// Among the doubles within 8 ulps of omega/(2π·scale), the one with the
// shortest decimal form for which angular(x)·scale reproduces omega exactly.
double exact_hz(double omega, double scale = 1.0) {
    const double x0 = omega / (kTwoPi * scale);
    double best = x0;
    bool found = angular(x0) * scale == omega;
    double up = x0, down = x0;
    auto consider = [&](double x) {
        if (angular(x) * scale != omega) return;
        if (!found || shortest_length(x) < shortest_length(best)) best = x;
        found = true;
    };
    for (int i = 0; i < 8; ++i) {
        up = std::nextafter(up, std::numeric_limits<double>::infinity());
        down = std::nextafter(down, -std::numeric_limits<double>::infinity());
        consider(up);
        consider(down);
    }
    return best;
}

}  // namespace

void LineParams::validate() const {
    require(finite_pos(gamma), fmt::format("gamma must be positive, got {}", gamma));
    require(finite_pos(delta_hf), fmt::format("delta_hf must be positive, got {}", delta_hf));
    require(finite_pos(lambda), fmt::format("lambda must be positive, got {}", lambda));
}

void MediumParams::validate() const {
    require(finite_nonneg(od), fmt::format("od must be >= 0, got {}", od));
    require(finite_nonneg(d), fmt::format("d must be >= 0, got {}", d));
    require(finite_nonneg(delta_d), fmt::format("delta_d must be >= 0, got {}", delta_d));
    require(finite_pos(length_m), fmt::format("length_m must be positive, got {}", length_m));
    require(sigma == sigma_from_fwhm(delta_d), "sigma is inconsistent with delta_d");
}

void DriveParams::validate() const {
    require(finite_nonneg(omega), fmt::format("omega must be >= 0, got {}", omega));
    require(std::isfinite(delta_c), "delta_c must be finite");
    require(finite_nonneg(gamma0), fmt::format("gamma0 must be >= 0, got {}", gamma0));
}

void Params::validate() const {
    line.validate();
    medium.validate();
    drive.validate();
    const double k = resonant_absorption_factor(line.gamma, medium.sigma);
    const double expected_od = 2.0 * k * medium.d;
    require(std::abs(expected_od - medium.od) <= 1e-6 * std::max(medium.od, 1e-300) ||
                (medium.od == 0.0 && medium.d == 0.0),
            fmt::format("od={} and d={} are inconsistent (expected od={})", medium.od,
                        medium.d, expected_od));
}

double sigma_from_fwhm(double fwhm) { return fwhm / kFwhmPerSigma; }

MediumParams medium_from_od(double od, double delta_d, const LineParams& line,
                            double length_m) {
    MediumParams m;
    m.delta_d = delta_d;
    m.sigma = sigma_from_fwhm(delta_d);
    m.od = od;
    m.d = od_to_d(od, line.gamma, m.sigma);
    m.length_m = length_m;
    m.source = DepthSource::od;
    return m;
}

MediumParams medium_from_d(double d, double delta_d, const LineParams& line,
                           double length_m) {
    MediumParams m;
    m.delta_d = delta_d;
    m.sigma = sigma_from_fwhm(delta_d);
    m.d = d;
    m.od = d_to_od(d, line.gamma, m.sigma);
    m.length_m = length_m;
    m.source = DepthSource::d;
    return m;
}

Params with_od(Params p, double od) {
    p.medium = medium_from_od(od, p.medium.delta_d, p.line, p.medium.length_m);
    return p;
}

Params with_d(Params p, double d) {
    p.medium = medium_from_d(d, p.medium.delta_d, p.line, p.medium.length_m);
    return p;
}

double d_from_density(double lambda, double length_m, double density_per_m3) {
    return 3.0 / (8.0 * std::numbers::pi) * lambda * lambda * length_m * density_per_m3;
}

std::vector<std::string> warnings(const Params& p) {
    std::vector<std::string> out;
    if (p.line.delta_hf < 100.0 * p.line.gamma)
        out.push_back(fmt::format("delta_hf ({:.4g} rad/s) is not much larger than gamma ({:.4g} rad/s)",
                                  p.line.delta_hf, p.line.gamma));
    return out;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "gamma_fwhm_hz", "delta_hf_hz", "lambda_m", "od", "d",
        "delta_d_hz", "length_m", "omega_hz", "delta_c_hz", "gamma0_hz"};
    return keys;
}

Params from_config(const nlohmann::json& doc) {
    require(doc.is_object(), "config must be a key-value object");
    for (const auto& [key, value] : doc.items()) {
        if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end())
            throw ValidationError(fmt::format("unknown config key '{}'", key));
        require(value.is_number(), fmt::format("config key '{}' must be a number", key));
    }

    auto get = [&](const char* key) -> std::optional<double> {
        if (!doc.contains(key)) return std::nullopt;
        return doc.at(key).get<double>();
    };
    auto frequency = [&](const char* key, double fallback) {
        const double hz = get(key).value_or(fallback);
        require(std::isfinite(hz) && hz >= 0.0,
                fmt::format("'{}' must be a nonnegative frequency, got {}", key, hz));
        return hz;
    };

    Params p;
    p.line.gamma = angular(frequency("gamma_fwhm_hz", 5.7e6)) / 2.0;
    p.line.delta_hf = angular(frequency("delta_hf_hz", 6.8e9));
    p.line.lambda = get("lambda_m").value_or(795e-9);

    const double delta_d = angular(frequency("delta_d_hz", 75e6));
    const double length = get("length_m").value_or(0.02);

    p.drive.omega = angular(frequency("omega_hz", 0.0));
    p.drive.gamma0 = angular(frequency("gamma0_hz", 0.0));
    const double delta_c_hz = get("delta_c_hz").value_or(0.0);
    require(std::isfinite(delta_c_hz), "'delta_c_hz' must be finite");
    p.drive.delta_c = angular(delta_c_hz);

    p.line.validate();
    const auto od = get("od");
    const auto d = get("d");
    require(!(od && d), "config gives both 'od' and 'd'; supply only one");
    if (d) {
        require(finite_nonneg(*d), fmt::format("'d' must be >= 0, got {}", *d));
        p.medium = medium_from_d(*d, delta_d, p.line, length);
    } else {
        const double v = od.value_or(0.0);
        require(finite_nonneg(v), fmt::format("'od' must be >= 0, got {}", v));
        p.medium = medium_from_od(v, delta_d, p.line, length);
    }
    p.validate();
    return p;
}

Params load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open config '{}'", path.string()));
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return from_config(doc);
}

nlohmann::json to_config(const Params& p) {
    nlohmann::json j;
    j["gamma_fwhm_hz"] = exact_hz(p.line.gamma, 0.5);
    j["delta_hf_hz"] = exact_hz(p.line.delta_hf);
    j["lambda_m"] = p.line.lambda;
    if (p.medium.source == DepthSource::d)
        j["d"] = p.medium.d;
    else
        j["od"] = p.medium.od;
    j["delta_d_hz"] = exact_hz(p.medium.delta_d);
    j["length_m"] = p.medium.length_m;
    j["omega_hz"] = exact_hz(p.drive.omega);
    j["delta_c_hz"] = exact_hz(p.drive.delta_c);
    j["gamma0_hz"] = exact_hz(p.drive.gamma0);
    return j;
}

}  // namespace eit
