#include "eitsim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/core.h>
#include <fmt/ranges.h>

#include "eitsim/errors.hpp"
#include "eitsim/lineshape.hpp"
#include "eitsim/parallel.hpp"

namespace eit {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kMHz = angular(1e6);  // fit variables for frequencies are in units of 2π·MHz

class Residuals {
public:
    explicit Residuals(const FitProblem& p) : p_(p) {}

    VectorXd operator()(const VectorXd& params) {
        ++evaluations_;
        const std::vector<double> x(params.data(), params.data() + params.size());
        const auto y = p_.model(x);
        if (y.size() != p_.data.size())
            throw EvaluationError(fmt::format("model returned {} values, expected {}", y.size(),
                                              p_.data.size()));
        VectorXd r(static_cast<Eigen::Index>(y.size()));
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!std::isfinite(y[i]))
                throw EvaluationError(fmt::format("model is not finite at point {} for parameters [{}]",
                                                  i, fmt::join(x, ", ")));
            const double w = p_.weights.empty() ? 1.0 : p_.weights[i];
            r[static_cast<Eigen::Index>(i)] = w * (y[i] - p_.data[i]);
        }
        return r;
    }

    std::size_t evaluations() const noexcept { return evaluations_; }

private:
    const FitProblem& p_;
    std::size_t evaluations_ = 0;
};

VectorXd project(VectorXd x, const FitProblem& p) {
    for (Eigen::Index j = 0; j < x.size(); ++j)
        x[j] = std::clamp(x[j], p.lower[static_cast<std::size_t>(j)], p.upper[static_cast<std::size_t>(j)]);
    return x;
}

MatrixXd jacobian(Residuals& residuals, const FitProblem& problem, const VectorXd& x,
                  const VectorXd& r, const FitOptions& opts) {
    const auto n = x.size();
    MatrixXd jac(r.size(), n);
    std::mutex count_mutex;
    auto column = [&](std::size_t jj) {
        const auto j = static_cast<Eigen::Index>(jj);
        double h = std::max(opts.rel_step * std::abs(x[j]), opts.min_step);
        if (x[j] + h > problem.upper[jj]) h = -h;
        VectorXd xp = x;
        xp[j] += h;
        const VectorXd rp = residuals(xp);
        jac.col(j) = (rp - r) / (xp[j] - x[j]);
    };
    if (problem.reentrant) {
        parallel_for(static_cast<std::size_t>(n), column);
    } else {
        for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) column(j);
    }
    return jac;
}

double gradient_cosine(const MatrixXd& jac, const VectorXd& r) {
    const double rn = r.norm();
    if (rn == 0.0) return 0.0;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < jac.cols(); ++j) {
        const double cn = jac.col(j).norm();
        if (cn > 0.0) worst = std::max(worst, std::abs(jac.col(j).dot(r)) / (cn * rn));
    }
    return worst;
}

}  // namespace

void FitProblem::validate() const {
    if (!model) throw ValidationError("fit problem has no model");
    const auto n = init.size();
    if (n == 0) throw ValidationError("fit problem has no parameters");
    if (lower.size() != n || upper.size() != n)
        throw ValidationError("bounds do not match the number of parameters");
    if (!weights.empty() && weights.size() != data.size())
        throw ValidationError("weights do not match the number of data points");
    if (data.empty()) throw ValidationError("fit problem has no data");
    for (std::size_t j = 0; j < n; ++j)
        if (!(lower[j] <= init[j] && init[j] <= upper[j]))
            throw ValidationError(fmt::format("initial parameter {} = {} is outside [{}, {}]", j,
                                              init[j], lower[j], upper[j]));
}

FitResult least_squares(const FitProblem& problem, const FitOptions& opts) {
    problem.validate();
    Residuals residuals(problem);
    const auto n = static_cast<Eigen::Index>(problem.init.size());

    VectorXd x = Eigen::Map<const VectorXd>(problem.init.data(), n);
    VectorXd r = residuals(x);
    double norm = r.norm();
    double lambda = opts.lambda0;

    FitResult out;
    MatrixXd jac;
    std::size_t iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        if (norm == 0.0) {
            out.converged = true;
            out.message = "exact fit";
            break;
        }
        jac = jacobian(residuals, problem, x, r, opts);
        out.gradient_norm = gradient_cosine(jac, r);
        if (out.gradient_norm < opts.gtol) {
            out.converged = true;
            out.message = "gradient below tolerance";
            break;
        }
        const MatrixXd normal = jac.transpose() * jac;
        const VectorXd grad = jac.transpose() * r;
        VectorXd diag = normal.diagonal();
        const double diag_floor = std::max(diag.maxCoeff(), 1e-300) * 1e-12;
        for (Eigen::Index j = 0; j < n; ++j) diag[j] = std::max(diag[j], diag_floor);

        bool accepted = false;
        bool stop = false;
        while (!accepted) {
            MatrixXd damped = normal;
            damped.diagonal() += lambda * diag;
            const VectorXd step = damped.ldlt().solve(-grad);
            const VectorXd trial = project(x + step, problem);
            const double moved = (trial - x).norm();
            if (moved <= opts.xtol * (x.norm() + opts.xtol)) {
                out.converged = true;
                out.message = "step below tolerance";
                stop = true;
                break;
            }
            const VectorXd rt = residuals(trial);
            const double nt = rt.norm();
            if (nt < norm) {
                const double decrease = (norm - nt) / norm;
                x = trial;
                r = rt;
                norm = nt;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                if (decrease < opts.ftol) {
                    out.converged = true;
                    out.message = "relative residual decrease below tolerance";
                    stop = true;
                }
            } else {
                lambda *= 10.0;
                if (lambda > 1e16) {
                    out.converged = out.gradient_norm < std::sqrt(opts.gtol);
                    out.message = "no downhill step found";
                    stop = true;
                    break;
                }
            }
        }
        if (stop) {
            ++iter;
            break;
        }
    }
    if (iter >= opts.max_iterations && !out.converged) out.message = "iteration limit reached";

    out.iterations = iter;
    out.params.assign(x.data(), x.data() + n);
    out.residual_norm = norm;

    // Standard errors from s²(JᵀJ)⁻¹ at the final point.
    out.std_errors.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
    if (norm > 0.0) {
        jac = jacobian(residuals, problem, x, r, opts);
        out.gradient_norm = gradient_cosine(jac, r);
        const auto m = static_cast<double>(r.size());
        const double dof = std::max(m - static_cast<double>(n), 1.0);
        const double s2 = norm * norm / dof;
        Eigen::FullPivLU<MatrixXd> lu(jac.transpose() * jac);
        if (lu.isInvertible()) {
            const MatrixXd cov = s2 * lu.inverse();
            for (Eigen::Index j = 0; j < n; ++j) out.std_errors[static_cast<std::size_t>(j)] = std::sqrt(std::max(cov(j, j), 0.0));
        }
    } else {
        out.gradient_norm = 0.0;
        std::fill(out.std_errors.begin(), out.std_errors.end(), 0.0);
    }
    out.evaluations = residuals.evaluations();
    return out;
}

nlohmann::json to_json(const FitResult& r, const std::vector<std::string>& names) {
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json errors = nlohmann::json::object();
    for (std::size_t i = 0; i < r.params.size(); ++i) {
        const auto key = i < names.size() ? names[i] : fmt::format("p{}", i);
        params[key] = r.params[i];
        errors[key] = std::isfinite(r.std_errors[i]) ? nlohmann::json(r.std_errors[i]) : nlohmann::json();
    }
    return {{"params", params},
            {"std_errors", errors},
            {"residual_norm", r.residual_norm},
            {"gradient_norm", r.gradient_norm},
            {"iterations", r.iterations},
            {"evaluations", r.evaluations},
            {"converged", r.converged},
            {"message", r.message}};
}

// ---------------------------------------------------------------------------

VoigtFit fit_voigt_absorption(std::span<const double> deltas, std::span<const double> transmissions,
                              const LineParams& line, const VoigtFitOptions& opts) {
    if (deltas.size() != transmissions.size())
        throw ValidationError("fit_voigt_absorption: deltas and transmissions differ in length");
    if (deltas.size() < 4) throw ValidationError("fit_voigt_absorption needs at least 4 points");
    line.validate();

    const auto imin = static_cast<std::size_t>(
        std::distance(transmissions.begin(), std::min_element(transmissions.begin(), transmissions.end())));
    const double dip_center = deltas[imin];
    const double mask_center = opts.exclusion_center.value_or(dip_center);

    std::vector<double> x, y;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (opts.exclusion_half_width > 0.0 && std::abs(deltas[i] - mask_center) < opts.exclusion_half_width)
            continue;
        x.push_back(deltas[i]);
        y.push_back(transmissions[i]);
    }
    if (x.size() < 4) throw ValidationError("fewer than 4 points remain outside the exclusion window");
    const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());

    // Initial guesses: depth from the minimum, width from the absorbance FWHM.
    const double od_lo = 0.0, od_hi = 200.0;
    const double dd_lo = angular(1e6), dd_hi = angular(1e9);
    double od0 = opts.init_od.value_or(std::clamp(-std::log(std::max(transmissions[imin], 1e-12)), 1e-3, od_hi));
    double dd0 = 0.0;
    if (opts.init_delta_d) {
        dd0 = *opts.init_delta_d;
    } else {
        const double half = 0.5 * -std::log(std::max(transmissions[imin], 1e-12));
        double lo = dip_center, hi = dip_center;
        for (std::size_t i = 0; i < deltas.size(); ++i) {
            if (-std::log(std::max(transmissions[i], 1e-300)) >= half) {
                lo = std::min(lo, deltas[i]);
                hi = std::max(hi, deltas[i]);
            }
        }
        const double fv = hi - lo;
        const double fl = 2.0 * line.gamma;
        const double g2 = (fv - 0.5346 * fl) * (fv - 0.5346 * fl) - 0.2166 * fl * fl;
        dd0 = std::sqrt(std::max(g2, 0.01 * fv * fv));
    }
    dd0 = std::clamp(dd0, dd_lo, dd_hi);
    od0 = std::clamp(od0, od_lo, od_hi);
    const double c0 = std::clamp(opts.init_center.value_or(dip_center), *xmin_it, *xmax_it);

    const bool fit_width = !opts.fix_delta_d;
    const double fixed_dd = dd0;
    auto unpack = [&](std::span<const double> p) {
        return std::tuple{p[0], fit_width ? p[1] * kMHz : fixed_dd, p[fit_width ? 2 : 1] * kMHz};
    };

    FitProblem prob;
    prob.data = y;
    prob.model = [&, gamma = line.gamma](std::span<const double> p) {
        const auto [od, dd, center] = unpack(p);
        const double sigma = sigma_from_fwhm(dd);
        const double peak = voigt(0.0, sigma, gamma);
        std::vector<double> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] = std::exp(-od * voigt(x[i] - center, sigma, gamma) / peak);
        return out;
    };
    if (fit_width) {
        prob.init = {od0, dd0 / kMHz, c0 / kMHz};
        prob.lower = {od_lo, dd_lo / kMHz, *xmin_it / kMHz};
        prob.upper = {od_hi, dd_hi / kMHz, *xmax_it / kMHz};
    } else {
        prob.init = {od0, c0 / kMHz};
        prob.lower = {od_lo, *xmin_it / kMHz};
        prob.upper = {od_hi, *xmax_it / kMHz};
    }

    VoigtFit fit;
    fit.result = least_squares(prob);
    const auto [od, dd, center] = unpack(fit.result.params);
    fit.od = od;
    fit.delta_d = dd;
    fit.center_offset = center;
    // Report parameters and errors in physical units (rad/s for frequencies).
    auto& pr = fit.result;
    for (std::size_t j = 1; j < pr.params.size(); ++j) {
        pr.params[j] *= kMHz;
        pr.std_errors[j] *= kMHz;
    }
    if (!fit_width) {
        pr.params.insert(pr.params.begin() + 1, fixed_dd);
        pr.std_errors.insert(pr.std_errors.begin() + 1, 0.0);
    }
    return fit;
}

// ---------------------------------------------------------------------------

DecayFit fit_od_decay(std::span<const double> times, std::span<const double> od_values) {
    if (times.size() != od_values.size()) throw ValidationError("fit_od_decay: times and OD values differ in length");
    if (times.size() < 2) throw ValidationError("fit_od_decay needs at least 2 points");
    const auto n = static_cast<double>(times.size());
    std::vector<double> y(od_values.size());
    for (std::size_t i = 0; i < od_values.size(); ++i) {
        if (!(od_values[i] > 0.0 && std::isfinite(od_values[i])))
            throw ValidationError(fmt::format("OD value {} at t = {} s is not positive", od_values[i], times[i]));
        y[i] = std::log(od_values[i]);
    }
    const double tm = std::accumulate(times.begin(), times.end(), 0.0) / n;
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sxx += (times[i] - tm) * (times[i] - tm);
        sxy += (times[i] - tm) * (y[i] - ym);
    }
    if (sxx == 0.0) throw ValidationError("fit_od_decay needs at least two distinct times");

    DecayFit f;
    f.slope = sxy / sxx;
    f.intercept = ym - f.slope * tm;
    f.od0 = std::exp(f.intercept);
    f.decaying = f.slope < 0.0;
    f.tau = f.decaying ? -1.0 / f.slope : std::numeric_limits<double>::infinity();
    double rss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - (f.intercept + f.slope * times[i]);
        rss += e * e;
    }
    f.residual_norm = std::sqrt(rss);
    return f;
}

// ---------------------------------------------------------------------------

namespace {

// Forward model for the slow-light fit. The Doppler quadrature depends on Ω
// only (M is linear in d), so responses are cached per Ω value.
class PulseModel {
public:
    PulseModel(const PulseGrid& grid, const Params& base, double t_center, double t_fwhm,
               bool sideband)
        : grid_(grid), base_(base), sideband_(sideband) {
        std::vector<std::complex<double>> env(grid.n);
        const double k = 2.0 * std::log(2.0) / (t_fwhm * t_fwhm);
        for (std::size_t i = 0; i < grid.n; ++i) {
            const double t = grid.time(i) - t_center;
            env[i] = std::exp(-k * t * t);
        }
        spectrum_ = to_spectrum(env);
    }

    std::vector<double> intensity(double od, double omega) {
        const auto response = response_for(omega);
        const double d = od_to_d(od, base_.line.gamma, base_.medium.sigma);
        const auto env = to_envelope(response->apply(spectrum_, d, sideband_));
        std::vector<double> out(env.size());
        for (std::size_t i = 0; i < env.size(); ++i) out[i] = std::norm(env[i]);
        return out;
    }

private:
    std::shared_ptr<const SpectralResponse> response_for(double omega) {
        {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(omega); it != cache_.end()) return it->second;
        }
        Params p = base_;
        p.drive.omega = omega;
        auto r = std::make_shared<const SpectralResponse>(grid_, p, spectrum_);
        std::lock_guard lock(mutex_);
        if (cache_.size() >= 4) cache_.clear();
        cache_.emplace(omega, r);
        return r;
    }

    PulseGrid grid_;
    Params base_;
    bool sideband_;
    std::vector<std::complex<double>> spectrum_;
    std::mutex mutex_;
    std::map<double, std::shared_ptr<const SpectralResponse>> cache_;
};

}  // namespace

SlowlightFit fit_slowlight(std::span<const double> trace_in, std::span<const double> trace_out,
                           const PulseGrid& grid, const Params& base, const SlowlightFitOptions& opts) {
    grid.validate();
    if (trace_in.size() != grid.n || trace_out.size() != grid.n)
        throw ValidationError(fmt::format("traces must have {} samples (got {} and {})", grid.n,
                                          trace_in.size(), trace_out.size()));
    if (!(opts.t_fwhm > 0.0)) throw ValidationError("pulse FWHM must be positive");
    const auto t = grid.times();

    // Input pulse center from the centroid of its upper part, amplitude from a
    // linear least-squares match of the known Gaussian shape.
    const double in_max = *std::max_element(trace_in.begin(), trace_in.end());
    if (!(in_max > 0.0)) throw ValidationError("input trace is identically zero");
    double sw = 0.0, swt = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) {
        if (trace_in[i] > 0.1 * in_max) {
            sw += trace_in[i];
            swt += trace_in[i] * t[i];
        }
    }
    const double t_center = swt / sw;
    const double k = 4.0 * std::log(2.0) / (opts.t_fwhm * opts.t_fwhm);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double g = std::exp(-k * (t[i] - t_center) * (t[i] - t_center));
        num += trace_in[i] * g;
        den += g * g;
    }
    const double in_scale = num / den;

    std::vector<double> data(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) data[i] = trace_out[i] / in_scale;

    auto model = std::make_shared<PulseModel>(grid, base, t_center, opts.t_fwhm, opts.include_sideband);

    // Start Ω where the group delay of the initial OD matches the observed delay.
    double omega0 = opts.fixed_omega.value_or(opts.init_omega);
    if (!opts.fixed_omega) {
        const double delay = peak_time(t, data) - t_center;
        const double d0 = od_to_d(opts.init_od, base.line.gamma, base.medium.sigma);
        if (delay > 0.0) omega0 = std::sqrt(base.line.gamma * d0 / delay);
        omega0 = std::clamp(omega0, opts.omega_min, opts.omega_max);
    }

    const bool fit_omega = !opts.fixed_omega;
    FitProblem prob;
    prob.data = std::move(data);
    prob.init = {opts.init_od};
    prob.lower = {opts.od_min};
    prob.upper = {opts.od_max};
    if (fit_omega) {
        prob.init.push_back(omega0 / kMHz);
        prob.lower.push_back(opts.omega_min / kMHz);
        prob.upper.push_back(opts.omega_max / kMHz);
    }
    if (opts.fit_scale) {
        prob.init.push_back(1.0);
        prob.lower.push_back(1e-3);
        prob.upper.push_back(1e3);
    }
    const double fixed_omega = omega0;
    prob.model = [model, fit_omega, fit_scale = opts.fit_scale, fixed_omega](std::span<const double> p) {
        const double omega = fit_omega ? p[1] * kMHz : fixed_omega;
        auto y = model->intensity(p[0], omega);
        if (fit_scale) {
            const double s = p.back();
            for (auto& v : y) v *= s;
        }
        return y;
    };

    SlowlightFit fit;
    fit.result = least_squares(prob);
    auto& pr = fit.result;
    fit.od = pr.params[0];
    fit.omega = fit_omega ? pr.params[1] * kMHz : fixed_omega;
    fit.scale = opts.fit_scale ? pr.params.back() : 1.0;
    if (fit_omega) {
        pr.params[1] *= kMHz;
        pr.std_errors[1] *= kMHz;
    } else {
        pr.params.insert(pr.params.begin() + 1, fixed_omega);
        pr.std_errors.insert(pr.std_errors.begin() + 1, 0.0);
    }
    return fit;
}

}  // namespace eit
