// Explicit hemisphere projection S_star(m) = max_x S_star(m, x) for m in [0, 1), the
// thresholds of its "good" branch S_G, and the scalar minimization both rely on.
//
// Writing u = sqrt(2k/(k-1)) x, maximizing S_star over x reduces to minimizing
//   g(u) = a u^2 - b u + int_2^|u| sqrt(y^2 - 4) dy 1{|u| > 2}
// with a = (k-2)/(2k) and b = 4 lambda m^k sqrt((k-1)/(2k)). The regime b < 4a gives S_U,
// b > 4a gives S_G; b = 4a defines the critical overlap m_c.
#pragma once

#include "spiked/complexity.hpp"
#include "spiked/types.hpp"

#include <cmath>
#include <optional>

namespace spiked {

struct GMinimum {
    double argmin = 0.0;
    double min_value = 0.0;
};

struct ThresholdReport {
    double m_c = 0.0;
    double lambda_c = 0.0;
    std::optional<double> good_zero;
};

namespace detail {

inline void require_hemisphere(double m) {
    if (!(m >= 0.0 && m < 1.0)) throw DomainError("overlap must lie in [0, 1)");
}

// Left-hand side minus right-hand side of m^(2k-4) (1 - m^2) = 1 / (2 k lambda^2).
inline double good_location_residual(const ModelParams& p, double m) {
    const int k = p.k();
    const double lam = p.lambda();
    return ipow(m, 2 * k - 4) * (1.0 - m * m) - 1.0 / (2.0 * k * lam * lam);
}

}  // namespace detail

/// Overlap where the maximizer of S_star(m, .) leaves the bulk, b = 4a. May exceed 1.
inline double m_critical(const ModelParams& p) {
    if (p.lambda() <= 0.0) throw DomainError("m_critical requires lambda > 0");
    const int k = p.k();
    return std::pow((k - 2.0) / (p.lambda() * std::sqrt(2.0 * k * (k - 1))), 1.0 / k);
}

/// SNR above which S_G touches zero.
inline double lambda_critical(int k) {
    if (k < 3) throw DomainError("lambda_critical requires k >= 3");
    const double km1 = k - 1.0;
    const double km2 = k - 2.0;
    // (k-1)^(k-1) / (k-2)^(k-2) evaluated through logs to stay finite for large k.
    const double log_ratio = km1 * std::log(km1) - km2 * std::log(km2);
    return std::sqrt(std::exp(log_ratio) / (2.0 * k));
}

/// "Uninformative" branch of the projection, valid for m < m_c.
inline double s_u(const ModelParams& p, double m) {
    detail::require_hemisphere(m);
    const int k = p.k();
    const double lam2 = p.lambda() * p.lambda();
    const double one_minus = 1.0 - m * m;
    return 0.5 * std::log(one_minus) - k * lam2 * detail::ipow(m, 2 * k - 2) * one_minus
           + (static_cast<double>(k) / (k - 2)) * lam2 * detail::ipow(m, 2 * k)
           + 0.5 * std::log(k - 1.0);
}

/// "Good" branch of the projection, valid for m >= m_c. Never positive.
inline double s_g(const ModelParams& p, double m) {
    detail::require_hemisphere(m);
    const int k = p.k();
    const double lam = p.lambda();
    const double one_minus = 1.0 - m * m;
    const double y = std::sqrt(0.5 * k) * lam * detail::ipow(m, k);
    return 0.5 * std::log(one_minus) - k * lam * lam * detail::ipow(m, 2 * k - 2) * one_minus
           - y * y + y * std::sqrt(1.0 + y * y) + std::asinh(y);
}

/// Piecewise projection: S_U below m_c, S_G at and above it.
inline double s_star_projection(const ModelParams& p, double m) {
    detail::require_hemisphere(m);
    if (p.lambda() == 0.0) return s_u(p, m);
    return m < m_critical(p) ? s_u(p, m) : s_g(p, m);
}

/// f_alpha(x) = 1/2 ln(1 - alpha) - 2x^2/alpha + x^2 + x sqrt(1 + x^2) + asinh(x).
/// Peaks at x = alpha / (2 sqrt(1 - alpha)) with value 0; S_G(m) = f_{m^2}(sqrt(k/2) lambda m^k).
inline double f_alpha(double alpha, double x) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("f_alpha requires alpha in (0, 1)");
    detail::require_finite(x, "x");
    return 0.5 * std::log1p(-alpha) - 2.0 * x * x / alpha + x * x + x * std::sqrt(1.0 + x * x)
           + std::asinh(x);
}

/// Maximizer of f_alpha.
inline double f_alpha_argmax(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("f_alpha requires alpha in (0, 1)");
    return 0.5 * alpha / std::sqrt(1.0 - alpha);
}

/// Minimizer and minimum of g(x) = a x^2 - b x + int_2^|x| sqrt(y^2 - 4) dy 1{|x| > 2}.
inline GMinimum minimize_g(double a, double b) {
    detail::require_finite(a, "a");
    detail::require_finite(b, "b");
    if (a <= 0.0 || b <= 0.0) throw DomainError("minimize_g requires a > 0 and b > 0");
    if (b <= 4.0 * a) return {b / (2.0 * a), -b * b / (4.0 * a)};
    // Larger root of (4a^2 - 1) x^2 - 4ab x + b^2 + 4 = 0, rationalized so that a = 1/2 is
    // not a special case: x* = (2ab - sqrt(D)) / (4a^2 - 1) = (b^2 + 4) / (2ab + sqrt(D)).
    const double disc = b * b + 4.0 - 16.0 * a * a;
    const double xs = (b * b + 4.0) / (2.0 * a * b + std::sqrt(disc));
    return {xs, -0.5 * b * xs - 2.0 * std::log((0.5 - a) * xs + 0.5 * b)};
}

/// Root of m^(2k-4)(1 - m^2) = 1/(2k lambda^2) in [m_c, 1), where S_G vanishes.
/// Absent below lambda_c. At lambda_c the root is the tangency point sqrt((k-2)/(k-1)).
inline std::optional<double> good_location_zero(const ModelParams& p, double tol = 1e-12) {
    if (p.lambda() <= 0.0) throw DomainError("good_location_zero requires lambda > 0");
    const int k = p.k();
    // The residual is unimodal on [0, 1] with its peak at the tangency point.
    const double peak = std::sqrt((k - 2.0) / (k - 1.0));
    const double peak_residual = detail::good_location_residual(p, peak);
    if (std::abs(peak_residual) <= tol) return peak;
    if (peak_residual < 0.0) return std::nullopt;

    double lo = std::max(peak, std::min(m_critical(p), 1.0));
    double hi = 1.0;
    double f_lo = detail::good_location_residual(p, lo);
    if (f_lo < 0.0) return std::nullopt;  // no root left in [m_c, 1]
    if (f_lo == 0.0) return lo;
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = detail::good_location_residual(p, mid);
        if (f_mid == 0.0) return mid;
        if (f_mid > 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline ThresholdReport thresholds(const ModelParams& p) {
    return {m_critical(p), lambda_critical(p.k()), good_location_zero(p)};
}

}  // namespace spiked
