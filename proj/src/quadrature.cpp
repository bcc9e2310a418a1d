#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <tuple>
#include <vector>

#include <fmt/core.h>

#include "eitsim/errors.hpp"
#include "eitsim/lineshape.hpp"

namespace eit {

namespace {

using cplx = std::complex<double>;

// Kronrod 15-point abscissae (positive half) and weights; the embedded
// 7-point Gauss rule uses the odd-indexed abscissae.
constexpr std::array<double, 8> kXgk{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr std::size_t kNodesPerPanel = 15;
constexpr int kBaselinePanels = 16;

struct Panel {
    double a = 0.0, b = 0.0;
    cplx kronrod{};
    double error = 0.0;
    double l1 = 0.0;
};

class Adaptive {
public:
    Adaptive(double sigma, double delta_c, const DopplerIntegrand& f)
        : sigma_(sigma), center_(delta_c), f_(f),
          norm_(1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma)) {}

    double weight(double x) const {
        const double u = (x - center_) / sigma_;
        return norm_ * std::exp(-0.5 * u * u);
    }

    Panel evaluate(double a, double b) {
        Panel p{a, b};
        const double c = 0.5 * (a + b);
        const double h = 0.5 * (b - a);
        const cplx fc = value(c);
        cplx k = kWgk[7] * fc;
        cplx g = kWg[3] * fc;
        double l1 = kWgk[7] * std::abs(fc);
        for (int j = 0; j < 7; ++j) {
            const double dx = h * kXgk[j];
            const cplx f1 = value(c - dx);
            const cplx f2 = value(c + dx);
            k += kWgk[j] * (f1 + f2);
            l1 += kWgk[j] * (std::abs(f1) + std::abs(f2));
            if (j % 2 == 1) g += kWg[j / 2] * (f1 + f2);
        }
        p.kronrod = h * k;
        p.error = std::abs(h * (k - g));
        p.l1 = h * l1;
        return p;
    }

    std::size_t evaluations() const noexcept { return evaluations_; }

private:
    cplx value(double x) {
        ++evaluations_;
        const double w = weight(x);
        if (w == 0.0) return 0.0;
        return w * (f_ ? f_(x) : cplx(1.0));
    }

    double sigma_, center_;
    const DopplerIntegrand& f_;
    double norm_;
    std::size_t evaluations_ = 0;
};

std::vector<double> breakpoints(double lo, double hi, double delta_c,
                                std::span<const double> features, double scale) {
    std::vector<double> pts;
    pts.reserve(kBaselinePanels + 1 + 7 * features.size());
    for (int i = 0; i <= kBaselinePanels; ++i)
        pts.push_back(lo + (hi - lo) * i / kBaselinePanels);
    pts.push_back(delta_c);
    if (scale > 0.0) {
        for (double f : features) {
            if (!std::isfinite(f)) continue;
            for (double off : {0.0, -0.1, 0.1, -1.0, 1.0, -4.0, 4.0}) pts.push_back(f + off * scale);
        }
    }
    std::erase_if(pts, [&](double x) { return !(x >= lo && x <= hi); });
    std::sort(pts.begin(), pts.end());
    const double min_width = 1e-12 * (hi - lo);
    std::vector<double> out;
    for (double x : pts)
        if (out.empty() || x - out.back() > min_width) out.push_back(x);
    if (hi - out.back() <= min_width) out.back() = hi;
    else out.push_back(hi);
    return out;
}

struct Refined {
    std::vector<Panel> panels;
    cplx value{};
    double error = 0.0;
    std::size_t evaluations = 0;
};

Refined refine(double sigma, double delta_c, std::span<const double> features,
               double scale, const DopplerIntegrand& f, const QuadratureOptions& opts) {
    if (!(std::isfinite(sigma) && sigma > 0.0))
        throw ValidationError(fmt::format("sigma must be positive, got {}", sigma));
    const double half = opts.window_sigmas * sigma;
    const double lo = delta_c - half;
    const double hi = delta_c + half;

    Adaptive rule(sigma, delta_c, f);
    const auto cuts = breakpoints(lo, hi, delta_c, features, scale);
    std::vector<Panel> heap;
    heap.reserve(2 * cuts.size());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) heap.push_back(rule.evaluate(cuts[i], cuts[i + 1]));

    auto by_error = [](const Panel& x, const Panel& y) { return x.error < y.error; };
    std::make_heap(heap.begin(), heap.end(), by_error);

    auto totals = [&] {
        cplx v{};
        double e = 0.0, l1 = 0.0;
        for (const auto& p : heap) {
            v += p.kronrod;
            e += p.error;
            l1 += p.l1;
        }
        return std::tuple{v, e, l1};
    };

    auto [value, error, l1] = totals();
    while (error > opts.rel_tol * std::abs(value) + 1e-14 * l1) {
        if ((heap.size() + 1) * kNodesPerPanel > opts.max_nodes) {
            const double achieved = error / std::max(std::abs(value), 1e-300);
            throw QuadratureError(
                fmt::format("Doppler quadrature did not converge within {} nodes "
                            "(achieved relative tolerance {:.3g})",
                            opts.max_nodes, achieved),
                achieved);
        }
        std::pop_heap(heap.begin(), heap.end(), by_error);
        const Panel worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        for (const Panel& p : {rule.evaluate(worst.a, mid), rule.evaluate(mid, worst.b)}) {
            heap.push_back(p);
            std::push_heap(heap.begin(), heap.end(), by_error);
        }
        std::tie(value, error, l1) = totals();
    }

    Refined r;
    r.value = value;
    r.error = error;
    r.evaluations = rule.evaluations();
    r.panels = std::move(heap);
    return r;
}

}  // namespace

QuadratureValue integrate_doppler(double sigma, double delta_c,
                                  std::span<const double> feature_points,
                                  double feature_scale, const DopplerIntegrand& f,
                                  const QuadratureOptions& opts) {
    const auto r = refine(sigma, delta_c, feature_points, feature_scale, f, opts);
    return {r.value, r.error / std::max(std::abs(r.value), 1e-300), r.evaluations};
}

QuadratureGrid doppler_grid(double sigma, double delta_c,
                            std::span<const double> feature_points, double feature_scale,
                            const DopplerIntegrand& refine_for,
                            const QuadratureOptions& opts) {
    auto r = refine(sigma, delta_c, feature_points, feature_scale, refine_for, opts);
    std::sort(r.panels.begin(), r.panels.end(),
              [](const Panel& x, const Panel& y) { return x.a < y.a; });

    Adaptive weights(sigma, delta_c, refine_for);
    QuadratureGrid grid;
    grid.achieved_tolerance = r.error / std::max(std::abs(r.value), 1e-300);
    grid.nodes.reserve(r.panels.size() * kNodesPerPanel);
    grid.weights.reserve(r.panels.size() * kNodesPerPanel);
    auto add = [&](double x, double w) {
        grid.nodes.push_back(x);
        grid.weights.push_back(w * weights.weight(x));
    };
    for (const auto& p : r.panels) {
        const double c = 0.5 * (p.a + p.b);
        const double h = 0.5 * (p.b - p.a);
        for (int j = 0; j < 7; ++j) add(c - h * kXgk[j], h * kWgk[j]);
        add(c, h * kWgk[7]);
        for (int j = 6; j >= 0; --j) add(c + h * kXgk[j], h * kWgk[j]);
    }
    return grid;
}

}  // namespace eit
