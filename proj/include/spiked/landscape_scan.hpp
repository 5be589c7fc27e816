// Numerical projections of the two-dimensional complexities onto a single axis, grids of
// complexity values over the (m, x) plane, and the endpoints of the non-negative band.
//
// All maximizations use a coarse scan followed by golden-section refinement of every
// detected local maximum; the m-profile can be bimodal, so no unimodality is assumed.
#pragma once

#include "spiked/complexity.hpp"
#include "spiked/explicit_formulas.hpp"
#include "spiked/parallel.hpp"
#include "spiked/types.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace spiked {

struct GridSpec {
    double m_min = -1.0;
    double m_max = 1.0;
    double x_min = -3.0;
    double x_max = 3.0;
    std::size_t m_steps = 201;
    std::size_t x_steps = 201;

    void validate() const {
        if (!(std::isfinite(m_min) && std::isfinite(m_max) && std::isfinite(x_min) && std::isfinite(x_max)))
            throw UsageError("grid bounds must be finite");
        if (m_min < -1.0 || m_max > 1.0) throw UsageError("grid m bounds must lie within [-1, 1]");
        if (!(m_min < m_max) || !(x_min < x_max)) throw UsageError("grid bounds must satisfy min < max");
        if (m_steps < 2 || x_steps < 2) throw UsageError("grid needs at least 2 steps per axis");
    }

    // Cell centers.
    [[nodiscard]] double m_at(std::size_t i) const {
        return m_min + (static_cast<double>(i) + 0.5) * (m_max - m_min) / static_cast<double>(m_steps);
    }
    [[nodiscard]] double x_at(std::size_t j) const {
        return x_min + (static_cast<double>(j) + 0.5) * (x_max - x_min) / static_cast<double>(x_steps);
    }
};

struct ScanOptions {
    std::size_t coarse_points = 401;
    double arg_tol = 1e-9;
};

struct ProjectionResult {
    double arg = 0.0;
    ComplexityValue value = ComplexityValue::neg_infinity();
};

/// Both complexities on the cell centers of a grid, m-major.
struct ComplexityGrid {
    GridSpec spec;
    std::vector<double> s_star;
    std::vector<double> s_zero;

    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const { return i * spec.x_steps + j; }
};

struct CellMask {
    GridSpec spec;
    std::vector<std::uint8_t> cells;  // m-major

    [[nodiscard]] bool at(std::size_t i, std::size_t j) const { return cells[i * spec.x_steps + j] != 0; }
    [[nodiscard]] std::size_t count() const {
        std::size_t c = 0;
        for (auto v : cells) c += v;
        return c;
    }
};

struct BandReport {
    std::optional<double> m1;      // negative-side end of the band around m = 0
    std::optional<double> m2;      // positive-side end
    std::optional<double> m_star;  // good-maxima touch point near 1
    double m_star_value = -kInf;
};

struct BandOptions {
    double scan_step = 1e-3;
    double bisect_tol = 1e-10;
    double touch_tol = 1e-9;
    std::optional<Interval> x_search;
};

/// Default objective search window [-(lambda + 3), lambda + 3].
inline Interval default_x_search(const ModelParams& p) { return {-(p.lambda() + 3.0), p.lambda() + 3.0}; }

inline double complexity_at(const ModelParams& p, Which which, LandscapePoint pt) {
    return which == Which::star ? s_star(p, pt).value() : s_zero(p, pt).value();
}

namespace detail {

inline void require_interval(Interval iv) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) throw UsageError("search interval must be finite");
    if (!(iv.lo < iv.hi)) throw UsageError("search interval is empty or inverted");
}

// Golden-section maximization on [a, b]. -inf values are ordinary "low" values.
inline std::pair<double, double> golden_max(const std::function<double(double)>& f, double a, double b, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < 200 && (b - a) > tol; ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

// Global maximum of f over iv: coarse scan, then golden refinement of each local maximum.
// `extra` are points evaluated exactly (branch boundaries where f jumps from -inf).
// With interior_only, maxima sitting on the interval ends are ignored.
inline ProjectionResult scan_and_refine(const std::function<double(double)>& f, Interval iv,
                                        const ScanOptions& opt, const std::vector<double>& extra = {},
                                        bool interior_only = false) {
    const std::size_t n = std::max<std::size_t>(opt.coarse_points, 3);
    std::vector<double> xs(n);
    std::vector<double> vs(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = iv.lo + iv.width() * static_cast<double>(i) / static_cast<double>(n - 1);
        vs[i] = f(xs[i]);
    }
    ProjectionResult best{interior_only ? 0.5 * (iv.lo + iv.hi) : xs[0], ComplexityValue::neg_infinity()};
    auto consider = [&](double arg, double v) {
        if (v > best.value.value()) best = {arg, ComplexityValue(v)};
    };
    if (!interior_only) {
        for (std::size_t i = 0; i < n; ++i) consider(xs[i], vs[i]);
        for (double e : extra) {
            if (iv.contains(e)) consider(e, f(e));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(vs[i])) continue;
        if (interior_only && (i == 0 || i + 1 == n)) continue;
        const bool left_ok = i == 0 || vs[i] >= vs[i - 1];
        const bool right_ok = i + 1 == n || vs[i] >= vs[i + 1];
        if (!left_ok || !right_ok) continue;
        const double a = xs[i == 0 ? 0 : i - 1];
        const double b = xs[i + 1 == n ? n - 1 : i + 1];
        auto [arg, v] = golden_max(f, a, b, opt.arg_tol);
        consider(arg, v);
    }
    return best;
}

}  // namespace detail

/// max over x in x_search of the chosen complexity at fixed overlap m, |m| < 1.
inline ProjectionResult project_max_over_x(const ModelParams& p, double m, Which which, Interval x_search,
                                           const ScanOptions& opt = {}) {
    detail::require_interval(x_search);
    if (!(std::abs(m) < 1.0)) throw DomainError("project_max_over_x requires |m| < 1");
    auto f = [&](double x) { return complexity_at(p, which, {m, x}); };
    // Where t(x) = +-2 the rate jumps from +inf to a finite value; the maximum often sits there.
    const double edge = 2.0 / t_of_x(p, 1.0);
    return detail::scan_and_refine(f, x_search, opt, {edge, -edge});
}

inline ProjectionResult project_max_over_x(const ModelParams& p, double m, Which which) {
    return project_max_over_x(p, m, which, default_x_search(p));
}

/// max over m in m_search (a subset of (-1, 1)) of the chosen complexity at fixed objective x.
inline ProjectionResult project_max_over_m(const ModelParams& p, double x, Which which, Interval m_search,
                                           const ScanOptions& opt = {}) {
    detail::require_interval(m_search);
    if (!(m_search.lo > -1.0 && m_search.hi < 1.0)) throw UsageError("m search interval must lie inside (-1, 1)");
    detail::require_finite(x, "x");
    auto f = [&](double m) { return complexity_at(p, which, {m, x}); };
    return detail::scan_and_refine(f, m_search, opt);
}

/// Evaluates S_star and S_zero at every cell center.
inline ComplexityGrid evaluate_grid(const ModelParams& p, const GridSpec& grid, unsigned threads = 1) {
    grid.validate();
    ComplexityGrid out{grid, std::vector<double>(grid.m_steps * grid.x_steps),
                       std::vector<double>(grid.m_steps * grid.x_steps)};
    parallel_for(grid.m_steps, threads, [&](std::size_t i) {
        const double m = grid.m_at(i);
        for (std::size_t j = 0; j < grid.x_steps; ++j) {
            const LandscapePoint pt{m, grid.x_at(j)};
            out.s_star[out.index(i, j)] = s_star(p, pt).value();
            out.s_zero[out.index(i, j)] = s_zero(p, pt).value();
        }
    });
    return out;
}

/// Cells whose center has complexity >= -tolerance (tolerance 0 gives the plain >= 0 region).
inline CellMask region_nonnegative(const ModelParams& p, const GridSpec& grid, Which which,
                                   double tolerance = 0.0, unsigned threads = 1) {
    const ComplexityGrid values = evaluate_grid(p, grid, threads);
    const auto& v = which == Which::star ? values.s_star : values.s_zero;
    CellMask mask{grid, std::vector<std::uint8_t>(v.size())};
    for (std::size_t c = 0; c < v.size(); ++c) mask.cells[c] = v[c] >= -tolerance ? 1 : 0;
    return mask;
}

/// 4-connected components of a mask; each component is a list of (i, j) cells.
inline std::vector<std::vector<std::pair<std::size_t, std::size_t>>> mask_components(const CellMask& mask) {
    const std::size_t rows = mask.spec.m_steps;
    const std::size_t cols = mask.spec.x_steps;
    std::vector<std::uint8_t> seen(rows * cols, 0);
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> comps;
    std::vector<std::pair<std::size_t, std::size_t>> stack;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (!mask.at(i, j) || seen[i * cols + j]) continue;
            comps.emplace_back();
            stack.push_back({i, j});
            seen[i * cols + j] = 1;
            while (!stack.empty()) {
                auto [a, b] = stack.back();
                stack.pop_back();
                comps.back().push_back({a, b});
                auto visit = [&](std::size_t r, std::size_t c) {
                    if (mask.at(r, c) && !seen[r * cols + c]) {
                        seen[r * cols + c] = 1;
                        stack.push_back({r, c});
                    }
                };
                if (a > 0) visit(a - 1, b);
                if (a + 1 < rows) visit(a + 1, b);
                if (b > 0) visit(a, b - 1);
                if (b + 1 < cols) visit(a, b + 1);
            }
        }
    }
    return comps;
}

/// Projection curve m -> max_x S(m, x) sampled at the given overlaps.
inline std::vector<ProjectionResult> projection_curve_m(const ModelParams& p, Which which,
                                                        const std::vector<double>& ms,
                                                        std::optional<Interval> x_search = std::nullopt,
                                                        unsigned threads = 1) {
    const Interval xs = x_search.value_or(default_x_search(p));
    std::vector<ProjectionResult> out(ms.size());
    parallel_for(ms.size(), threads, [&](std::size_t i) { out[i] = project_max_over_x(p, ms[i], which, xs); });
    return out;
}

/// Endpoints of the band around m = 0 where max_x S(m, x) >= 0, and the touch point near 1.
inline BandReport band_endpoints(const ModelParams& p, Which which = Which::zero, const BandOptions& opt = {}) {
    if (p.lambda() <= 0.0) throw DomainError("band_endpoints requires lambda > 0");
    const Interval xs = opt.x_search.value_or(default_x_search(p));
    auto h = [&](double m) { return project_max_over_x(p, m, which, xs).value.value(); };

    BandReport report;
    if (!(h(0.0) >= 0.0)) return report;

    auto crossing = [&](double direction) -> std::optional<double> {
        double prev = 0.0;
        for (double m = opt.scan_step; m < 1.0; m += opt.scan_step) {
            const double cur = direction * m;
            if (h(cur) < 0.0) {
                double inside = prev;
                double outside = cur;
                while (std::abs(outside - inside) > opt.bisect_tol) {
                    const double mid = 0.5 * (inside + outside);
                    if (h(mid) >= 0.0) inside = mid; else outside = mid;
                }
                return 0.5 * (inside + outside);
            }
            prev = cur;
        }
        return std::nullopt;
    };
    report.m2 = crossing(+1.0);
    report.m1 = crossing(-1.0);

    if (report.m2 && p.lambda() >= lambda_critical(p.k())) {
        const double start = *report.m2;
        const double stop = 1.0 - 1e-9;
        if (start < stop) {
            ScanOptions opt_m;
            opt_m.coarse_points = static_cast<std::size_t>((stop - start) / opt.scan_step) + 3;
            opt_m.arg_tol = opt.bisect_tol;
            // Only a secondary maximum counts, not the decaying edge of the band itself.
            const ProjectionResult best = detail::scan_and_refine(h, {start, stop}, opt_m, {}, true);
            if (best.value.value() >= -opt.touch_tol) {
                report.m_star = best.arg;
                report.m_star_value = best.value.value();
            }
        }
    }
    return report;
}

}  // namespace spiked
