#include "eitsim/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/core.h>
#include <json.hpp>

#include "eitsim/csv.hpp"
#include "eitsim/errors.hpp"
#include "eitsim/fitting.hpp"
#include "eitsim/lineshape.hpp"
#include "eitsim/params.hpp"
#include "eitsim/slowlight.hpp"
#include "eitsim/spectrum.hpp"

namespace eit {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Fit did not converge; the partial result has already been written.
class NoConvergence : public Error {
public:
    using Error::Error;
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    os << contents;
    os.close();
    if (!os) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
    fs::path p = out;
    p.replace_extension(suffix);
    return p;
}

std::string timestamp() {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", now);
}

void write_manifest(const fs::path& out, const std::string& command, const std::optional<Params>& p,
                    const json& options, const std::vector<fs::path>& inputs,
                    const std::vector<fs::path>& outputs) {
    json m;
    m["command"] = command;
    m["version"] = EITSIM_VERSION;
    m["params"] = p ? to_config(*p) : json();
    m["options"] = options;
    m["inputs"] = json::array();
    for (const auto& i : inputs) m["inputs"].push_back(i.string());
    m["outputs"] = json::array();
    for (const auto& o : outputs) m["outputs"].push_back(o.string());
    m["timestamp"] = timestamp();
    write_file(sibling(out, ".manifest.json"), m.dump(2) + "\n");
}

Params config_or_default(const std::string& path) {
    return path.empty() ? from_config(json::object()) : load_config(path);
}

/// Named columns when present, otherwise positional for a table of exactly
/// that many columns.
std::vector<const std::vector<double>*> columns(const CsvTable& t, const std::vector<std::string>& names) {
    std::vector<const std::vector<double>*> out;
    bool named = true;
    for (const auto& n : names)
        if (std::find(t.header.begin(), t.header.end(), n) == t.header.end()) named = false;
    if (named) {
        for (const auto& n : names) out.push_back(&t.column(n));
        return out;
    }
    if (t.header.size() != names.size())
        throw ValidationError(fmt::format("data CSV must have columns '{}'", fmt::join(names, ",")));
    for (const auto& c : t.columns) out.push_back(&c);
    return out;
}

json fit_json(FitResult r, const std::vector<std::string>& names, const std::vector<bool>& is_frequency) {
    for (std::size_t i = 0; i < r.params.size(); ++i) {
        if (is_frequency[i]) {
            r.params[i] /= kTwoPi;
            r.std_errors[i] /= kTwoPi;
        }
    }
    return to_json(r, names);
}

// ---------------------------------------------------------------------------

struct SpectrumArgs {
    std::string config, out, modes = "full,firstorder,eit";
    double delta_min_hz = -kDefaultScanHalfWidth / kTwoPi;
    double delta_max_hz = kDefaultScanHalfWidth / kTwoPi;
    std::size_t points = kDefaultScanPoints;
};

int cmd_spectrum(const SpectrumArgs& a, std::ostream& out) {
    const Params p = load_config(a.config);
    const auto modes = ModeSet::parse(a.modes);
    const auto s = scan(angular(a.delta_min_hz), angular(a.delta_max_hz), a.points, p, modes);
    std::ostringstream csv;
    write_csv(csv, s);
    write_file(a.out, csv.str());
    const json options{{"modes", a.modes},
                       {"delta_min_hz", a.delta_min_hz},
                       {"delta_max_hz", a.delta_max_hz},
                       {"points", a.points}};
    write_manifest(a.out, "spectrum", p, options, {a.config}, {a.out});
    json summary{{"output", a.out}, {"points", a.points}, {"gain", s.gain}, {"warnings", warnings(p)}};
    out << summary.dump() << "\n";
    return kExitOk;
}

struct PulseArgs {
    std::string config, out, metrics;
    double t_fwhm_us = 2.2;
    bool sideband = true;
    std::size_t grid_points = PulseGrid{}.n;
    double dt_us = PulseGrid{}.dt * 1e6;
};

int cmd_pulse(const PulseArgs& a, std::ostream& out) {
    const Params p = load_config(a.config);
    PulseGrid grid;
    grid.n = a.grid_points;
    grid.dt = a.dt_us * 1e-6;
    const auto envelope = gaussian_pulse(a.t_fwhm_us * 1e-6, grid);
    PulseResult r;
    try {
        r = propagate_pulse(envelope, grid, p, {a.sideband});
    } catch (const WraparoundError& e) {
        throw WraparoundError(fmt::format("{} (hint: raise --grid-points or --dt-us)", e.what()));
    }
    std::ostringstream csv;
    write_pulse_csv(csv, r);
    write_file(a.out, csv.str());
    const fs::path metrics = a.metrics.empty() ? sibling(a.out, ".metrics.json") : fs::path(a.metrics);
    auto m = metrics_json(r);
    m["gain"] = r.gain;
    m["grid_adequate"] = r.grid_adequate;
    m["warnings"] = r.warnings;
    write_file(metrics, m.dump(2) + "\n");
    const json options{{"t_fwhm_us", a.t_fwhm_us},
                       {"sideband", a.sideband},
                       {"grid_points", a.grid_points},
                       {"dt_us", a.dt_us}};
    write_manifest(a.out, "pulse", p, options, {a.config}, {a.out, metrics});
    out << m.dump() << "\n";
    return kExitOk;
}

struct FitArgs {
    std::string subtype, data, config, out;
    double exclusion_hz = 5e6;
    double t_fwhm_us = 2.2;
    bool sideband = true;
    std::optional<double> omega_hz;
    double init_od = 10.0;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
    const auto table = read_csv(a.data);
    const Params base = config_or_default(a.config);
    json result;
    bool converged = true;
    std::string message;

    if (a.subtype == "voigt") {
        const auto c = columns(table, {"delta_hz", "transmission"});
        std::vector<double> deltas(c[0]->size());
        for (std::size_t i = 0; i < deltas.size(); ++i) deltas[i] = angular((*c[0])[i]);
        VoigtFitOptions opts;
        opts.exclusion_half_width = angular(a.exclusion_hz);
        const auto f = fit_voigt_absorption(deltas, *c[1], base.line, opts);
        result = {{"subtype", "voigt"},
                  {"od", f.od},
                  {"delta_d_hz", f.delta_d / kTwoPi},
                  {"center_hz", f.center_offset / kTwoPi},
                  {"d", od_to_d(f.od, base.line.gamma, sigma_from_fwhm(f.delta_d))},
                  {"fit", fit_json(f.result, {"od", "delta_d_hz", "center_hz"}, {false, true, true})}};
        converged = f.result.converged;
        message = f.result.message;
    } else if (a.subtype == "decay") {
        const auto c = columns(table, {"t_s", "od"});
        const auto f = fit_od_decay(*c[0], *c[1]);
        result = {{"subtype", "decay"},
                  {"od0", f.od0},
                  {"tau_s", number_or_null(f.tau)},
                  {"slope", f.slope},
                  {"intercept", f.intercept},
                  {"decaying", f.decaying},
                  {"residual_norm", f.residual_norm}};
        converged = f.decaying;
        message = f.decaying ? "closed-form regression" : "OD does not decay (slope >= 0)";
    } else {
        const auto c = columns(table, {"t_s", "intensity_in", "intensity_out"});
        const auto& t = *c[0];
        PulseGrid grid;
        grid.n = t.size();
        grid.validate();
        grid.dt = (t.back() - t.front()) / static_cast<double>(grid.n - 1);
        grid.t0 = t[grid.origin()];
        SlowlightFitOptions opts;
        opts.t_fwhm = a.t_fwhm_us * 1e-6;
        opts.include_sideband = a.sideband;
        opts.init_od = a.init_od;
        if (a.omega_hz) opts.fixed_omega = angular(*a.omega_hz);
        const auto f = fit_slowlight(*c[1], *c[2], grid, base, opts);
        result = {{"subtype", "pulse"},
                  {"od", f.od},
                  {"omega_hz", f.omega / kTwoPi},
                  {"d", od_to_d(f.od, base.line.gamma, base.medium.sigma)},
                  {"fit", fit_json(f.result, {"od", "omega_hz"}, {false, true})}};
        converged = f.result.converged;
        message = f.result.message;
    }
    result["converged"] = converged;
    result["message"] = message;
    write_file(a.out, result.dump(2) + "\n");
    json options{{"subtype", a.subtype}};
    if (a.subtype == "voigt") options["exclusion_hz"] = a.exclusion_hz;
    if (a.subtype == "pulse") {
        options["t_fwhm_us"] = a.t_fwhm_us;
        options["sideband"] = a.sideband;
        options["init_od"] = a.init_od;
        options["omega_hz"] = a.omega_hz ? json(*a.omega_hz) : json();
    }
    std::vector<fs::path> inputs{a.data};
    if (!a.config.empty()) inputs.emplace_back(a.config);
    write_manifest(a.out, "fit " + a.subtype, a.config.empty() ? std::nullopt : std::optional(base),
                   options, inputs, {a.out});
    out << result.dump() << "\n";
    if (!converged) throw NoConvergence(fmt::format("fit did not converge: {}", message));
    return kExitOk;
}

struct ConvertArgs {
    std::string config;
    std::optional<double> od, d;
};

int cmd_convert(const ConvertArgs& a, std::ostream& out) {
    if (a.od.has_value() == a.d.has_value()) throw ValidationError("give exactly one of --od or --d");
    const Params p = config_or_default(a.config);
    const double sigma = p.medium.sigma;
    const double od = a.od ? *a.od : d_to_od(*a.d, p.line.gamma, sigma);
    const double d = a.d ? *a.d : od_to_d(*a.od, p.line.gamma, sigma);
    if (!(od >= 0.0) || !(d >= 0.0)) throw ValidationError("OD and d must be nonnegative");
    json j{{"od", od}, {"d", d}, {"ratio", od > 0.0 ? json(d / od) : json(od_to_d(1.0, p.line.gamma, sigma))}};
    out << j.dump() << "\n";
    return kExitOk;
}

void diagnostic(std::ostream& err, int code, const std::string& kind, const std::string& message) {
    json j{{"error", kind}, {"message", message}, {"exit_code", code}};
    err << j.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulate and fit EIT probe propagation in a Doppler-broadened Lambda medium", "eitsim"};
    app.require_subcommand(1);
    app.set_version_flag("--version", EITSIM_VERSION);

    SpectrumArgs sa;
    auto* spectrum = app.add_subcommand("spectrum", "Probe transmission spectrum");
    spectrum->add_option("config", sa.config, "JSON config")->required();
    spectrum->add_option("--out", sa.out, "Output CSV")->required();
    spectrum->add_option("--modes", sa.modes, "Comma list of full,firstorder,eit")->capture_default_str();
    spectrum->add_option("--delta-min-hz", sa.delta_min_hz, "Scan start (Hz)")->capture_default_str();
    spectrum->add_option("--delta-max-hz", sa.delta_max_hz, "Scan end (Hz)")->capture_default_str();
    spectrum->add_option("--points", sa.points, "Number of detunings")->capture_default_str();

    PulseArgs pa;
    auto* pulse = app.add_subcommand("pulse", "Gaussian pulse propagation");
    pulse->add_option("config", pa.config, "JSON config")->required();
    pulse->add_option("--out", pa.out, "Output CSV")->required();
    pulse->add_option("--metrics", pa.metrics, "Metrics JSON (default: output path with extension .metrics.json)");
    pulse->add_option("--t-fwhm-us", pa.t_fwhm_us, "Input intensity FWHM (us)")->capture_default_str();
    pulse->add_flag("--sideband,!--no-sideband", pa.sideband, "Include the conjugate sideband");
    pulse->add_option("--grid-points", pa.grid_points, "Time samples (power of two)")->capture_default_str();
    pulse->add_option("--dt-us", pa.dt_us, "Time step (us)")->capture_default_str();

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Fit measured data");
    fit->add_option("subtype", fa.subtype, "voigt, decay or pulse")
        ->required()
        ->check(CLI::IsMember({"voigt", "decay", "pulse"}));
    fit->add_option("data", fa.data, "Data CSV")->required();
    fit->add_option("--config", fa.config, "JSON config (line and medium constants)");
    fit->add_option("--out", fa.out, "Output JSON")->required();
    fit->add_option("--exclusion-hz", fa.exclusion_hz, "Voigt: half-width of the ignored EIT window (Hz)")
        ->capture_default_str();
    fit->add_option("--t-fwhm-us", fa.t_fwhm_us, "Pulse: input intensity FWHM (us)")->capture_default_str();
    fit->add_flag("--sideband,!--no-sideband", fa.sideband, "Pulse: include the conjugate sideband");
    fit->add_option("--omega-hz", fa.omega_hz, "Pulse: hold the control Rabi frequency fixed (Hz)");
    fit->add_option("--init-od", fa.init_od, "Pulse: initial OD")->capture_default_str();

    ConvertArgs ca;
    auto* convert = app.add_subcommand("convert", "Convert between OD and d");
    convert->add_option("--config", ca.config, "JSON config (gamma, Doppler width)");
    convert->add_option("--od", ca.od, "Optical depth");
    convert->add_option("--d", ca.d, "Homogeneous depth parameter");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        diagnostic(err, kExitValidation, "usage", e.what());
        return kExitValidation;
    }

    try {
        if (spectrum->parsed()) return cmd_spectrum(sa, out);
        if (pulse->parsed()) return cmd_pulse(pa, out);
        if (fit->parsed()) return cmd_fit(fa, out);
        return cmd_convert(ca, out);
    } catch (const IoError& e) {
        diagnostic(err, kExitIo, "io", e.what());
        return kExitIo;
    } catch (const ValidationError& e) {
        diagnostic(err, kExitValidation, "validation", e.what());
        return kExitValidation;
    } catch (const QuadratureError& e) {
        diagnostic(err, kExitNumerical, "quadrature", e.what());
        return kExitNumerical;
    } catch (const WraparoundError& e) {
        diagnostic(err, kExitNumerical, "wraparound", e.what());
        return kExitNumerical;
    } catch (const NumericalError& e) {
        diagnostic(err, kExitNumerical, "numerical", e.what());
        return kExitNumerical;
    } catch (const EvaluationError& e) {
        diagnostic(err, kExitNumerical, "evaluation", e.what());
        return kExitNumerical;
    } catch (const NoConvergence& e) {
        diagnostic(err, kExitNoConvergence, "no_convergence", e.what());
        return kExitNoConvergence;
    } catch (const std::exception& e) {
        diagnostic(err, kExitNumerical, "internal", e.what());
        return kExitNumerical;
    }
}

}  // namespace eit
