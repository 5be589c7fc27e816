// Closed-form complexity functions of the spiked tensor landscape.
//
//   S_star(m, x) = 1/2 (log(k-1) + 1) + 1/2 log(1 - m^2) - k lambda^2 m^(2k-2) (1 - m^2)
//                  - (x - lambda m^k)^2 + Phi_star(sqrt(2k/(k-1)) x)
//   S_zero(m, x) = S_star(m, x) - L(theta(m), t(x))
//
// Phi_star is the logarithmic potential of the semicircle law on [-2, 2] and L is the
// large-deviation rate for the top eigenvalue of a rank-one deformed GOE matrix to sit
// below t. All functions are pure and thread-safe.
#pragma once

#include "spiked/types.hpp"

#include <algorithm>
#include <cmath>

namespace spiked {

/// Absolute tolerance used to classify arguments that land on a branch boundary.
inline constexpr double kBranchTol = 1e-12;

namespace detail {

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

// m^p for integer p >= 0 with 0^0 = 1.
inline double ipow(double m, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= m;
    return r;
}

}  // namespace detail

/// Logarithmic potential of the semicircle law, int log|l - x| sigma_sc(dl).
inline double phi_star(double x) {
    detail::require_finite(x, "phi_star argument");
    const double ax = std::abs(x);
    if (ax <= 2.0) return x * x / 4.0 - 0.5;
    const double root = std::sqrt(x * x - 4.0);
    // x^2/4 - |x| root/4 rewritten as |x| / (|x| + root) to avoid cancellation.
    return ax / (ax + root) - 0.5 + std::log(root / 2.0 + ax / 2.0);
}

/// int_2^y sqrt(s^2 - 4) ds for y >= 2.
inline double semicircle_edge_integral(double y) {
    if (y <= 2.0) return 0.0;
    const double root = std::sqrt(y * y - 4.0);
    return 0.5 * y * root - 2.0 * std::log((y + root) / 2.0);
}

/// BBP outlier location theta + 1/theta.
inline double bbp_edge(double theta) {
    detail::require_finite(theta, "theta");
    if (theta <= 0.0) throw DomainError("bbp_edge requires theta > 0");
    return theta + 1.0 / theta;
}

/// Rate L(theta, t). Returns +inf for t < 2. Non-positive theta behaves like theta <= 1.
inline double ldp_rate(double theta, double t, double tol = kBranchTol) {
    detail::require_finite(theta, "theta");
    detail::require_finite(t, "t");
    if (t < 2.0 - tol) return kInf;
    if (theta <= 1.0 + tol) return 0.0;
    const double rho = bbp_edge(theta);
    if (t >= rho - tol) return 0.0;
    const double tt = std::max(t, 2.0);
    const double integral = semicircle_edge_integral(tt) - semicircle_edge_integral(rho);
    const double value = 0.25 * integral - 0.5 * theta * (tt - rho) + 0.125 * (tt * tt - rho * rho);
    // Cancellation near t = rho can leave a few ulps of negative noise.
    return std::max(value, 0.0);
}

/// Spike strength theta(m) = sqrt(2k(k-1)) lambda m^(k-2) (1 - m^2).
inline double theta_of_m(const ModelParams& p, double m) {
    detail::require_finite(m, "m");
    if (std::abs(m) > 1.0) throw DomainError("overlap |m| must be <= 1");
    const int k = p.k();
    return std::sqrt(2.0 * k * (k - 1)) * p.lambda() * detail::ipow(m, k - 2) * (1.0 - m * m);
}

/// Spectral shift t(x) = sqrt(2k/(k-1)) x.
inline double t_of_x(const ModelParams& p, double x) {
    detail::require_finite(x, "x");
    const int k = p.k();
    return std::sqrt(2.0 * k / (k - 1)) * x;
}

inline MatrixCoords matrix_coords(const ModelParams& p, LandscapePoint pt) {
    return {theta_of_m(p, pt.m), t_of_x(p, pt.x)};
}

/// Complexity of critical points at overlap m and objective value x.
inline ComplexityValue s_star(const ModelParams& p, LandscapePoint pt) {
    detail::require_finite(pt.m, "m");
    detail::require_finite(pt.x, "x");
    const double m = pt.m;
    if (std::abs(m) > 1.0) throw DomainError("overlap |m| must be <= 1");
    if (std::abs(m) == 1.0) return ComplexityValue::neg_infinity();
    const int k = p.k();
    const double lam = p.lambda();
    const double one_minus = 1.0 - m * m;
    const double dev = pt.x - lam * detail::ipow(m, k);
    const double v = 0.5 * (std::log(k - 1.0) + 1.0) + 0.5 * std::log(one_minus)
                     - k * lam * lam * detail::ipow(m, 2 * k - 2) * one_minus - dev * dev
                     + phi_star(t_of_x(p, pt.x));
    return ComplexityValue(v);
}

/// Complexity of local maxima: S_star minus the rate of the Hessian being negative definite.
inline ComplexityValue s_zero(const ModelParams& p, LandscapePoint pt, double tol = kBranchTol) {
    const ComplexityValue star = s_star(p, pt);
    if (star.is_neg_infinity()) return star;
    const double rate = ldp_rate(theta_of_m(p, pt.m), t_of_x(p, pt.x), tol);
    if (std::isinf(rate)) return ComplexityValue::neg_infinity();
    return ComplexityValue(star.value() - rate);
}

/// Real Stieltjes transform of the semicircle law, int sigma_sc(dl) / (z - l), for |z| >= 2.
inline double stieltjes_semicircle(double z) {
    detail::require_finite(z, "z");
    if (std::abs(z) < 2.0) throw DomainError("stieltjes_semicircle requires |z| >= 2");
    const double az = std::abs(z);
    // (z - sqrt(z^2 - 4)) / 2 on the branch that decays at infinity; 2 / (z + root) is the
    // cancellation-free form.
    return std::copysign(2.0 / (az + std::sqrt(az * az - 4.0)), z);
}

/// R-transform of the semicircle law.
inline double r_transform_semicircle(double w) { return w; }

/// Functional inverse of the semicircle Stieltjes transform on (0, 1]: G(w) = R(w) + 1/w.
inline double stieltjes_inverse_semicircle(double w) {
    if (w == 0.0) throw DomainError("inverse Stieltjes transform undefined at w = 0");
    return r_transform_semicircle(w) + 1.0 / w;
}

/// Limit of (1/n) log of the rank-one spherical integral against the semicircle law.
inline double j_spherical(double x, double theta) {
    detail::require_finite(x, "x");
    detail::require_finite(theta, "theta");
    if (x < 2.0) throw DomainError("j_spherical requires x >= 2");
    if (theta <= 0.0) throw DomainError("j_spherical requires theta > 0");
    if (theta <= 1.0 && x <= bbp_edge(theta)) return theta * theta / 4.0;
    return 0.5 * (theta * x - 1.0 - std::log(theta) - phi_star(x));
}

}  // namespace spiked
