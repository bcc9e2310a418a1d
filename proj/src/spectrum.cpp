#include "eitsim/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <fmt/core.h>

#include "eitsim/csv.hpp"
#include "eitsim/errors.hpp"
#include "eitsim/parallel.hpp"
#include "eitsim/transfer.hpp"

namespace eit {

bool ModeSet::has(Mode m) const noexcept {
    switch (m) {
        case Mode::full: return full;
        case Mode::firstorder: return firstorder;
        case Mode::eit: return eit;
    }
    return false;
}

ModeSet ModeSet::parse(std::string_view list) {
    ModeSet s{false, false, false};
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const auto comma = std::min(list.find(',', pos), list.size());
        auto token = list.substr(pos, comma - pos);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        if (token == "full") s.full = true;
        else if (token == "firstorder") s.firstorder = true;
        else if (token == "eit") s.eit = true;
        else throw ValidationError(fmt::format("unknown spectrum mode '{}'", token));
        pos = comma + 1;
    }
    return s;
}

std::span<const double> SpectrumScan::column(Mode m) const {
    switch (m) {
        case Mode::full: return t_full;
        case Mode::firstorder: return t_firstorder;
        case Mode::eit: return t_eit;
    }
    return {};
}

SpectrumScan scan(double delta_min, double delta_max, std::size_t n_points, const Params& p,
                  ModeSet modes) {
    if (n_points < 2) throw ValidationError("a scan needs at least 2 points");
    if (!(delta_min < delta_max))
        throw ValidationError(fmt::format("delta_min ({}) must be below delta_max ({})",
                                          delta_min, delta_max));
    SpectrumScan s;
    s.params = p;
    s.modes = modes;
    s.deltas.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i)
        s.deltas[i] = delta_min + (delta_max - delta_min) * static_cast<double>(i) /
                                      static_cast<double>(n_points - 1);
    if (modes.full) s.t_full.resize(n_points);
    if (modes.firstorder) s.t_firstorder.resize(n_points);
    if (modes.eit) s.t_eit.resize(n_points);

    parallel_for(n_points, [&](std::size_t i) {
        const double delta = s.deltas[i];
        TransferMatrix m;
        try {
            m = transfer_matrix(delta, p);
        } catch (const QuadratureError& e) {
            throw QuadratureError(fmt::format("{} at delta = {:.6g} Hz", e.what(), delta / kTwoPi),
                                  e.achieved_tolerance());
        }
        if (modes.full) s.t_full[i] = transmission_full(m);
        if (modes.firstorder) s.t_firstorder[i] = transmission_firstorder(m, p);
        if (modes.eit) s.t_eit[i] = std::norm(std::exp(m.m11));
    });

    for (const auto* col : {&s.t_full, &s.t_firstorder, &s.t_eit})
        if (std::any_of(col->begin(), col->end(), [](double t) { return t > 1.0; })) s.gain = true;
    return s;
}

namespace {

void require_drive(const Params& p) {
    if (!(p.drive.omega > 0.0))
        throw ValidationError("group velocity needs a nonzero control Rabi frequency");
    if (!(p.medium.d > 0.0)) throw ValidationError("group velocity needs a nonzero depth d");
}

}  // namespace

double group_velocity_rate(const Params& p) {
    require_drive(p);
    return p.drive.omega * p.drive.omega / (p.line.gamma * p.medium.d);
}

double group_delay(const Params& p) { return 1.0 / group_velocity_rate(p); }

double fringe_period(const Params& p) { return kTwoPi * group_velocity_rate(p); }

std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("find_peaks: x and y differ in length");
    std::vector<Peak> peaks;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (!(y[i] > y[i - 1] && y[i] > y[i + 1])) continue;
        const double curvature = y[i - 1] - 2.0 * y[i] + y[i + 1];
        const double offset = 0.5 * (y[i - 1] - y[i + 1]) / curvature;  // in samples
        const double h = 0.5 * (x[i + 1] - x[i - 1]);
        peaks.push_back({x[i] + offset * h, y[i] - 0.25 * (y[i - 1] - y[i + 1]) * offset});
    }
    return peaks;
}

std::vector<Peak> find_peaks(const SpectrumScan& s, Mode m) {
    if (!s.modes.has(m)) throw ValidationError("find_peaks: mode was not computed in this scan");
    return find_peaks(s.deltas, s.column(m));
}

double mean_peak_spacing(const std::vector<Peak>& peaks, double center, std::size_t count) {
    if (peaks.size() < 2 || count < 2) return 0.0;
    std::vector<Peak> near = peaks;
    std::sort(near.begin(), near.end(), [&](const Peak& a, const Peak& b) {
        return std::abs(a.delta - center) < std::abs(b.delta - center);
    });
    near.resize(std::min(count, near.size()));
    std::sort(near.begin(), near.end(), [](const Peak& a, const Peak& b) { return a.delta < b.delta; });
    return (near.back().delta - near.front().delta) / static_cast<double>(near.size() - 1);
}

void write_csv(std::ostream& os, const SpectrumScan& s) {
    os << "delta_hz,t_full,t_firstorder,t_eit\n";
    auto cell = [](const std::vector<double>& col, std::size_t i) {
        return col.empty() ? std::string("nan") : format_number(col[i]);
    };
    for (std::size_t i = 0; i < s.deltas.size(); ++i) {
        os << format_number(s.deltas[i] / kTwoPi) << ',' << cell(s.t_full, i) << ','
           << cell(s.t_firstorder, i) << ',' << cell(s.t_eit, i) << '\n';
    }
}

}  // namespace eit
