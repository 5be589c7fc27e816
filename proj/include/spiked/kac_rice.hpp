// Finite-n Monte-Carlo evaluation of the Kac-Rice expected counts of critical points and
// local maxima of the spiked tensor objective:
//
//   E Crt(M, E) = C_n int_E dx int_M (1 - m^2)^(-3/2) dm  E|det H_n| 1{H_n <= 0}?
//                 * exp{n [1/2 (log(k-1) + 1) + 1/2 log(1 - m^2) - k lambda^2 m^(2k-2)(1 - m^2)
//                          - (x - lambda m^k)^2]}
//
// with H_n = theta_n(m) e1 e1^T + W_{n-1} - t_n(x) I and W_{n-1} ~ GOE(n-1). Everything is
// accumulated in log space; the same GOE samples are reused for every (m, x) cell.
#pragma once

#include "spiked/complexity.hpp"
#include "spiked/parallel.hpp"
#include "spiked/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace spiked {

/// Symmetric matrix with off-diagonal variance 1/n and diagonal variance 2/n.
struct GOEMatrix {
    Eigen::MatrixXd entries;

    [[nodiscard]] Eigen::Index n() const { return entries.rows(); }
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
};

/// Monte-Carlo estimate of a quantity too large for linear storage.
/// log_std_error is the delta-method error of log_mean (relative error of the mean).
struct LogMcEstimate {
    double log_mean = -kInf;
    double log_std_error = 0.0;
    std::size_t n_samples = 0;
};

struct CrtQuadrature {
    Interval m_range{-0.99, 0.99};
    Interval x_range{-3.0, 3.0};
    std::size_t m_steps = 60;
    std::size_t x_steps = 60;
};

struct GrowthFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_std_error = 0.0;
};

/// Overlap ranges are clipped to [-kOverlapClip, kOverlapClip] so the (1 - m^2)^(-3/2) weight stays bounded.
inline constexpr double kOverlapClip = 0.999;

inline double log_sum_exp(std::span<const double> v) {
    double mx = -kInf;
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

template <class Rng>
GOEMatrix sample_goe(Eigen::Index n, Rng& rng) {
    if (n < 1) throw UsageError("GOE dimension must be >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    const double off = 1.0 / std::sqrt(static_cast<double>(n));
    const double diag = std::sqrt(2.0 / static_cast<double>(n));
    GOEMatrix w{Eigen::MatrixXd(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        w.entries(i, i) = diag * normal(rng);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = off * normal(rng);
            w.entries(i, j) = v;
            w.entries(j, i) = v;
        }
    }
    return w;
}

inline GOEMatrix sample_goe(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_goe(n, rng);
}

/// log C_n, the prefactor of the Kac-Rice integral. Exponentially trivial in n.
inline double log_kac_rice_prefactor(int n, int k) {
    const double h = 0.5 * (n - 1);
    return std::log(2.0) + h * std::log((n - 1) / (2.0 * std::numbers::e)) - std::lgamma(h)
           + 0.5 * std::log(n / ((k - 1) * std::numbers::e * std::numbers::pi));
}

/// theta_n(m) of the finite-n Hessian law.
inline double theta_n(const ModelParams& p, int n, double m) {
    const int k = p.k();
    return std::sqrt(2.0 * k * (k - 1) * n / (n - 1.0)) * p.lambda() * detail::ipow(m, k - 2) * (1.0 - m * m);
}

/// t_n(x) of the finite-n Hessian law.
inline double t_n(const ModelParams& p, int n, double x) {
    const int k = p.k();
    return std::sqrt(2.0 * k * n / ((k - 1.0) * (n - 1.0))) * x;
}

namespace detail {

// Eigenvalues (ascending) of theta e1 e1^T + W.
inline Eigen::VectorXd spiked_spectrum(const Eigen::MatrixXd& w, double theta) {
    Eigen::MatrixXd a = w;
    a(0, 0) += theta;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
    return solver.eigenvalues();
}

// log|det(X - tI)| from the spectrum of X; -inf when restricted and X - tI is not <= 0.
inline double log_abs_det_shifted(const Eigen::VectorXd& spectrum, double t, bool restrict_negative) {
    if (restrict_negative && spectrum.maxCoeff() > t) return -kInf;
    double s = 0.0;
    for (Eigen::Index i = 0; i < spectrum.size(); ++i) s += std::log(std::abs(spectrum(i) - t));
    return s;
}

inline McEstimate summarize(const std::vector<double>& xs) {
    const auto n = xs.size();
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : xs) var += (v - mean) * (v - mean);
    var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

inline LogMcEstimate summarize_log(const std::vector<double>& log_xs) {
    const auto n = log_xs.size();
    LogMcEstimate est;
    est.n_samples = n;
    est.log_mean = log_sum_exp(log_xs) - std::log(static_cast<double>(n));
    if (!std::isfinite(est.log_mean)) return est;
    double var = 0.0;
    for (double lx : log_xs) {
        const double r = std::exp(lx - est.log_mean) - 1.0;
        var += r * r;
    }
    var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
    est.log_std_error = std::sqrt(var / static_cast<double>(n));
    return est;
}

}  // namespace detail

/// E|det(theta e1 e1^T + W_{n-1} - t I)|, optionally restricted to the event that the matrix
/// is negative semidefinite. Sample i uses seed derive_seed(seed, i).
inline McEstimate expected_abs_det(int n, MatrixCoords coords, std::size_t n_samples, std::uint64_t seed,
                                   bool restrict_negative, unsigned threads = 1) {
    if (n < 2) throw UsageError("expected_abs_det requires n >= 2");
    if (n_samples < 1) throw UsageError("need at least one sample");
    std::vector<double> draws(n_samples);
    parallel_for(n_samples, threads, [&](std::size_t s) {
        const GOEMatrix w = sample_goe(n - 1, derive_seed(seed, s));
        const Eigen::VectorXd spec = detail::spiked_spectrum(w.entries, coords.theta);
        draws[s] = std::exp(detail::log_abs_det_shifted(spec, coords.t, restrict_negative));
    });
    return detail::summarize(draws);
}

/// Kac-Rice expected number of critical points (star) or local maxima (zero) with overlap in
/// quad.m_range and objective value in quad.x_range, by midpoint quadrature in (m, x).
inline LogMcEstimate crt_expected(const ModelParams& p, int n, const CrtQuadrature& quad, std::size_t n_samples,
                                  std::uint64_t seed, Which which, unsigned threads = 1) {
    if (n < 3) throw UsageError("crt_expected requires n >= 3");
    if (n_samples < 1) throw UsageError("need at least one sample");
    if (quad.m_steps < 1 || quad.x_steps < 1) throw UsageError("quadrature needs at least one cell per axis");
    if (!(quad.m_range.lo < quad.m_range.hi) || !(quad.x_range.lo < quad.x_range.hi))
        throw UsageError("quadrature ranges must satisfy lo < hi");
    if (!std::isfinite(quad.x_range.lo) || !std::isfinite(quad.x_range.hi))
        throw UsageError("objective range must be finite");
    if (quad.m_range.lo <= -1.0 || quad.m_range.hi >= 1.0) throw UsageError("overlap range must not touch |m| = 1");
    const Interval m_range{std::max(quad.m_range.lo, -kOverlapClip), std::min(quad.m_range.hi, kOverlapClip)};
    if (!(m_range.lo < m_range.hi)) throw UsageError("overlap range is empty after clipping");

    const int k = p.k();
    const double lam = p.lambda();
    const double dm = m_range.width() / static_cast<double>(quad.m_steps);
    const double dx = quad.x_range.width() / static_cast<double>(quad.x_steps);
    const double log_c = log_kac_rice_prefactor(n, k) + std::log(dm * dx);

    std::vector<double> ms(quad.m_steps), thetas(quad.m_steps);
    std::vector<double> xs(quad.x_steps), ts(quad.x_steps);
    for (std::size_t i = 0; i < quad.m_steps; ++i) {
        ms[i] = m_range.lo + (static_cast<double>(i) + 0.5) * dm;
        thetas[i] = theta_n(p, n, ms[i]);
    }
    for (std::size_t j = 0; j < quad.x_steps; ++j) {
        xs[j] = quad.x_range.lo + (static_cast<double>(j) + 0.5) * dx;
        ts[j] = t_n(p, n, xs[j]);
    }
    // Deterministic part of the log-integrand per cell.
    std::vector<double> log_weight(quad.m_steps * quad.x_steps);
    for (std::size_t i = 0; i < quad.m_steps; ++i) {
        const double m = ms[i];
        const double one_minus = 1.0 - m * m;
        const double base = 0.5 * (std::log(k - 1.0) + 1.0) + 0.5 * std::log(one_minus)
                            - k * lam * lam * detail::ipow(m, 2 * k - 2) * one_minus;
        for (std::size_t j = 0; j < quad.x_steps; ++j) {
            const double dev = xs[j] - lam * detail::ipow(m, k);
            log_weight[i * quad.x_steps + j] = log_c - 1.5 * std::log(one_minus) + n * (base - dev * dev);
        }
    }

    const bool restrict_negative = which == Which::zero;
    std::vector<double> log_per_sample(n_samples);
    parallel_for(n_samples, threads, [&](std::size_t s) {
        const GOEMatrix w = sample_goe(n - 1, derive_seed(seed, s));
        std::vector<double> terms(quad.m_steps * quad.x_steps);
        Eigen::VectorXd spec;
        double spec_theta = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < quad.m_steps; ++i) {
            if (!(thetas[i] == spec_theta)) {
                spec = detail::spiked_spectrum(w.entries, thetas[i]);
                spec_theta = thetas[i];
            }
            for (std::size_t j = 0; j < quad.x_steps; ++j) {
                const std::size_t c = i * quad.x_steps + j;
                terms[c] = log_weight[c] + detail::log_abs_det_shifted(spec, ts[j], restrict_negative);
            }
        }
        log_per_sample[s] = log_sum_exp(terms);
    });
    return detail::summarize_log(log_per_sample);
}

/// Least-squares slope of log E[Crt] against n: the exponential growth-rate estimate.
inline GrowthFit growth_rate_fit(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) throw UsageError("growth_rate_fit needs at least 3 points");
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (points[i].first == points[j].first) throw UsageError("growth_rate_fit needs distinct n values");
    const double cnt = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (auto [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= cnt;
    my /= cnt;
    double sxx = 0.0, sxy = 0.0;
    for (auto [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    GrowthFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (auto [x, y] : points) {
        const double r = y - fit.intercept - fit.slope * x;
        rss += r * r;
    }
    fit.slope_std_error = points.size() > 2 ? std::sqrt(rss / (cnt - 2.0) / sxx) : 0.0;
    return fit;
}

}  // namespace spiked
