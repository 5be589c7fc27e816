// Simulation of the spiked tensor model Y = lambda u^{(x)k} + W / sqrt(2n): tensor sampling,
// the objective f(sigma) = <Y, sigma^{(x)k}> with its Riemannian gradient and Hessian on the
// unit sphere, ascent dynamics, and multi-start Newton search for critical points.
//
// Tensors are stored densely (n^k doubles, row-major in the index tuple). Symmetry is used
// only in the derivative formulas: grad f = k Y[sigma^(k-1)], Hess f = k(k-1) Y[sigma^(k-2)].
#pragma once

#include "spiked/parallel.hpp"
#include "spiked/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace spiked {

struct SpikedTensor {
    int n = 0;
    int k = 0;
    double lambda = 0.0;
    Eigen::VectorXd u;          // planted unit spike
    std::vector<double> data;   // n^k entries, symmetric under index permutations

    [[nodiscard]] double at(std::span<const int> idx) const {
        std::size_t flat = 0;
        for (int i : idx) flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
        return data[flat];
    }
};

struct CriticalPointRecord {
    Eigen::VectorXd sigma;
    double f_value = 0.0;
    double grad_norm = 0.0;
    int index = 0;             // positive tangent Hessian eigenvalues (above kZeroEigenvalue)
    double m = 0.0;            // <sigma, u>
    double hess_max = 0.0;     // largest tangent Hessian eigenvalue
    bool near_singular = false;
    int iters = 0;             // Newton iterations used

    [[nodiscard]] bool is_local_max() const { return index == 0; }
};

struct CriticalPointSearch {
    std::vector<CriticalPointRecord> records;
    std::size_t n_starts = 0;
    std::size_t n_failed = 0;  // starts that never met the gradient tolerance
};

struct CriticalPointOptions {
    std::size_t n_starts = 200;
    double newton_tol = 1e-10;
    double dedup_angle = 1e-6;
    int max_iters = 200;
    double max_step = 0.5;  // cap on the tangent step length
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct PowerIterationResult {
    Eigen::VectorXd sigma;
    int iters = 0;
    bool converged = false;
};

struct AscentResult {
    Eigen::VectorXd sigma;
    std::vector<double> trace;  // objective after each accepted step, starting value first
    int iters = 0;
    double grad_norm = 0.0;
    bool converged = false;
};

struct Histogram2D {
    Interval m_range;
    Interval f_range;
    std::size_t m_bins = 0;
    std::size_t f_bins = 0;
    std::vector<std::size_t> counts;  // m-major

    [[nodiscard]] std::size_t at(std::size_t i, std::size_t j) const { return counts[i * f_bins + j]; }
    [[nodiscard]] std::size_t total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }
};

/// Hessian eigenvalues at or below this count as zero when computing the index.
inline constexpr double kZeroEigenvalue = 1e-8;
/// Tangent Hessian eigenvalues below this (in magnitude) are dropped from Newton steps.
inline constexpr double kSingularGuard = 1e-10;

namespace detail {

inline std::size_t ipow_size(int n, int k) {
    std::size_t r = 1;
    for (int i = 0; i < k; ++i) r *= static_cast<std::size_t>(n);
    return r;
}

// Contracts the last index of an order-`order` tensor with v.
inline std::vector<double> contract_last(const std::vector<double>& t, int n, const Eigen::VectorXd& v) {
    const std::size_t rows = t.size() / static_cast<std::size_t>(n);
    std::vector<double> out(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = t.data() + r * static_cast<std::size_t>(n);
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += row[i] * v(i);
        out[r] = s;
    }
    return out;
}

inline std::vector<double> contract_times(const SpikedTensor& y, const Eigen::VectorXd& v, int times) {
    std::vector<double> cur = contract_last(y.data, y.n, v);
    for (int i = 1; i < times; ++i) cur = contract_last(cur, y.n, v);
    return cur;
}

inline double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double chord = std::min(2.0, (a - b).norm());
    return 2.0 * std::asin(chord / 2.0);
}

inline void require_unit(const Eigen::VectorXd& v, const char* what, double tol) {
    if (std::abs(v.norm() - 1.0) > tol) throw UsageError(std::string(what) + " must be a unit vector");
}

}  // namespace detail

template <class Rng>
Eigen::VectorXd random_unit_vector(int n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(n);
    do {
        for (int i = 0; i < n; ++i) v(i) = normal(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

/// Random unit vector with prescribed overlap m against the unit vector u.
template <class Rng>
Eigen::VectorXd unit_vector_with_overlap(const Eigen::VectorXd& u, double m, Rng& rng) {
    if (std::abs(m) > 1.0) throw DomainError("overlap must satisfy |m| <= 1");
    Eigen::VectorXd w;
    do {
        w = random_unit_vector(static_cast<int>(u.size()), rng);
        w -= w.dot(u) * u;
    } while (w.norm() < 1e-8);
    w.normalize();
    Eigen::VectorXd s = m * u + std::sqrt(1.0 - m * m) * w;
    return s / s.norm();
}

/// Noiseless tensor lambda u^{(x)k}.
inline SpikedTensor make_planted_tensor(int n, int k, double lambda, const Eigen::VectorXd& u) {
    if (n < 2) throw UsageError("tensor dimension must be >= 2");
    if (k < 3) throw UsageError("tensor order must be >= 3");
    if (u.size() != n) throw UsageError("spike length must equal n");
    detail::require_unit(u, "spike u", 1e-10);
    SpikedTensor y{n, k, lambda, u, std::vector<double>(detail::ipow_size(n, k))};
    std::vector<int> idx(static_cast<std::size_t>(k), 0);
    std::vector<int> sorted(static_cast<std::size_t>(k));
    for (std::size_t flat = 0; flat < y.data.size(); ++flat) {
        // Multiply in sorted index order so that permuted entries are bitwise equal.
        std::copy(idx.begin(), idx.end(), sorted.begin());
        std::sort(sorted.begin(), sorted.end());
        double prod = lambda;
        for (int i : sorted) prod *= u(i);
        y.data[flat] = prod;
        for (int pos = k - 1; pos >= 0; --pos) {
            if (++idx[static_cast<std::size_t>(pos)] < n) break;
            idx[static_cast<std::size_t>(pos)] = 0;
        }
    }
    return y;
}

/// Y = lambda u^{(x)k} + W / sqrt(2n), where W averages an iid N(0, 1) array over all k!
/// permutations of its index positions. Deterministic given seed.
inline SpikedTensor make_spiked_tensor(int n, int k, double lambda, const Eigen::VectorXd& u, std::uint64_t seed) {
    SpikedTensor y = make_planted_tensor(n, k, lambda, u);
    const std::size_t total = y.data.size();
    std::vector<double> g(total);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : g) v = normal(rng);

    auto flat_of = [&](const std::vector<int>& idx) {
        std::size_t f = 0;
        for (int i : idx) f = f * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
        return f;
    };
    double k_factorial = 1.0;
    for (int i = 2; i <= k; ++i) k_factorial *= i;
    const double scale = 1.0 / (k_factorial * std::sqrt(2.0 * n));

    std::vector<int> idx(static_cast<std::size_t>(k), 0);
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::vector<int> permuted(static_cast<std::size_t>(k));
    for (std::size_t flat = 0; flat < total; ++flat) {
        if (std::is_sorted(idx.begin(), idx.end())) {
            // Average G over all position permutations of this index tuple.
            std::iota(perm.begin(), perm.end(), 0);
            double sum = 0.0;
            do {
                for (std::size_t p = 0; p < perm.size(); ++p) permuted[p] = idx[static_cast<std::size_t>(perm[p])];
                sum += g[flat_of(permuted)];
            } while (std::next_permutation(perm.begin(), perm.end()));
            const double w = sum * scale;
            // Every distinct rearrangement of the tuple shares the value.
            std::vector<int> arrangement = idx;
            do {
                y.data[flat_of(arrangement)] += w;
            } while (std::next_permutation(arrangement.begin(), arrangement.end()));
        }
        for (int pos = k - 1; pos >= 0; --pos) {
            if (++idx[static_cast<std::size_t>(pos)] < n) break;
            idx[static_cast<std::size_t>(pos)] = 0;
        }
    }
    return y;
}

/// f(sigma) = <Y, sigma^{(x)k}>.
inline double objective(const SpikedTensor& y, const Eigen::VectorXd& sigma) {
    return detail::contract_times(y, sigma, y.k)[0];
}

/// Euclidean gradient k Y[sigma^(k-1)].
inline Eigen::VectorXd euclidean_grad(const SpikedTensor& y, const Eigen::VectorXd& sigma) {
    const std::vector<double> v = detail::contract_times(y, sigma, y.k - 1);
    return y.k * Eigen::Map<const Eigen::VectorXd>(v.data(), y.n);
}

/// Euclidean Hessian k(k-1) Y[sigma^(k-2)].
inline Eigen::MatrixXd euclidean_hess(const SpikedTensor& y, const Eigen::VectorXd& sigma) {
    const std::vector<double> v = detail::contract_times(y, sigma, y.k - 2);
    Eigen::MatrixXd h = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        v.data(), y.n, y.n);
    return static_cast<double>(y.k * (y.k - 1)) * h;
}

/// Orthonormal basis (n x (n-1)) of the tangent space at sigma, from a Householder reflection.
inline Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& sigma) {
    const Eigen::MatrixXd col = sigma;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(col);
    Eigen::MatrixXd q = qr.householderQ();
    return q.rightCols(sigma.size() - 1);
}

/// Tangent basis whose first column is the normalized tangent projection of `direction`.
inline Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& sigma, const Eigen::VectorXd& direction) {
    const Eigen::Index n = sigma.size();
    Eigen::MatrixXd two(n, 2);
    two.col(0) = sigma;
    two.col(1) = direction;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(two);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd b = q.rightCols(n - 1);
    Eigen::VectorXd d = direction - direction.dot(sigma) * sigma;
    if (d.norm() < 1e-12) throw DomainError("direction has no tangent component at sigma");
    if (b.col(0).dot(d) < 0.0) b.col(0) = -b.col(0);
    return b;
}

/// Riemannian gradient P_perp grad f(sigma), an n-vector orthogonal to sigma.
inline Eigen::VectorXd riemannian_grad(const SpikedTensor& y, const Eigen::VectorXd& sigma) {
    const Eigen::VectorXd g = euclidean_grad(y, sigma);
    Eigen::VectorXd r = g - g.dot(sigma) * sigma;
    // Second projection pass removes the residual component left by rounding.
    r -= r.dot(sigma) * sigma;
    return r;
}

/// Riemannian Hessian B^T (hess f) B - <sigma, grad f> I in the given tangent basis B.
inline Eigen::MatrixXd riemannian_hess(const SpikedTensor& y, const Eigen::VectorXd& sigma,
                                       const Eigen::MatrixXd& basis) {
    const double radial = sigma.dot(euclidean_grad(y, sigma));
    Eigen::MatrixXd h = basis.transpose() * euclidean_hess(y, sigma) * basis;
    h.diagonal().array() -= radial;
    return 0.5 * (h + h.transpose());
}

inline Eigen::MatrixXd riemannian_hess(const SpikedTensor& y, const Eigen::VectorXd& sigma) {
    return riemannian_hess(y, sigma, tangent_basis(sigma));
}

/// Tensor power method sigma <- Y[sigma^(k-1)] / |Y[sigma^(k-1)]|.
inline PowerIterationResult power_iteration(const SpikedTensor& y, const Eigen::VectorXd& sigma0, int max_iters,
                                            double tol) {
    detail::require_unit(sigma0, "initial point", 1e-8);
    PowerIterationResult res{sigma0, 0, false};
    for (int it = 0; it < max_iters; ++it) {
        const std::vector<double> v = detail::contract_times(y, res.sigma, y.k - 1);
        Eigen::VectorXd next = Eigen::Map<const Eigen::VectorXd>(v.data(), y.n);
        const double norm = next.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("power iteration hit a zero contraction");
        next /= norm;
        res.iters = it + 1;
        const double step = detail::angle_between(next, res.sigma);
        res.sigma = next;
        if (step < tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

/// Projected gradient ascent with normalization retraction. A step is accepted when the
/// objective does not drop by more than 1e-12; otherwise the step is halved.
inline AscentResult gradient_ascent(const SpikedTensor& y, const Eigen::VectorXd& sigma0, double step, int max_iters,
                                    double tol) {
    detail::require_unit(sigma0, "initial point", 1e-8);
    if (!(step > 0.0)) throw UsageError("ascent step must be positive");
    AscentResult res{sigma0, {}, 0, 0.0, false};
    double f = objective(y, res.sigma);
    res.trace.push_back(f);
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::VectorXd g = riemannian_grad(y, res.sigma);
        res.grad_norm = g.norm();
        if (res.grad_norm < tol) {
            res.converged = true;
            return res;
        }
        double eta = step;
        bool accepted = false;
        for (int halvings = 0; halvings < 60; ++halvings, eta *= 0.5) {
            Eigen::VectorXd cand = res.sigma + eta * g;
            cand.normalize();
            const double fc = objective(y, cand);
            if (fc >= f - 1e-12) {
                res.sigma = cand;
                f = fc;
                accepted = true;
                break;
            }
        }
        res.iters = it + 1;
        if (!accepted) break;
        res.trace.push_back(f);
    }
    res.grad_norm = riemannian_grad(y, res.sigma).norm();
    res.converged = res.grad_norm < tol;
    return res;
}

namespace detail {

// Builds the record for an accepted point.
inline CriticalPointRecord describe_point(const SpikedTensor& y, const Eigen::VectorXd& sigma, double grad_norm) {
    CriticalPointRecord rec;
    rec.sigma = sigma;
    rec.f_value = objective(y, sigma);
    rec.grad_norm = grad_norm;
    rec.m = sigma.dot(y.u);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(riemannian_hess(y, sigma), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd mu = eig.eigenvalues();
    rec.hess_max = mu.maxCoeff();
    rec.index = static_cast<int>((mu.array() > kZeroEigenvalue).count());
    rec.near_singular = mu.cwiseAbs().minCoeff() < kZeroEigenvalue;
    return rec;
}

// Riemannian Newton from one start. Returns the converged point or nothing.
inline std::optional<CriticalPointRecord> newton_from(const SpikedTensor& y, Eigen::VectorXd sigma,
                                                      const CriticalPointOptions& opt) {
    for (int it = 0; it <= opt.max_iters; ++it) {
        const Eigen::MatrixXd basis = tangent_basis(sigma);
        const Eigen::VectorXd grad = basis.transpose() * euclidean_grad(y, sigma);
        const double grad_norm = grad.norm();
        if (!std::isfinite(grad_norm)) return std::nullopt;
        if (grad_norm < opt.newton_tol) {
            CriticalPointRecord rec = describe_point(y, sigma, grad_norm);
            rec.iters = it;
            return rec;
        }
        if (it == opt.max_iters) break;

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(riemannian_hess(y, sigma, basis));
        const Eigen::VectorXd& mu = eig.eigenvalues();
        const Eigen::MatrixXd& vecs = eig.eigenvectors();
        // Pseudo-inverse Newton step: singular directions are dropped.
        Eigen::VectorXd coeff = vecs.transpose() * grad;
        for (Eigen::Index i = 0; i < mu.size(); ++i) coeff(i) = std::abs(mu(i)) > kSingularGuard ? -coeff(i) / mu(i) : 0.0;
        Eigen::VectorXd step = vecs * coeff;
        if (step.norm() == 0.0) step = grad;  // fully singular Hessian: plain gradient step
        if (step.norm() > opt.max_step) step *= opt.max_step / step.norm();
        sigma += basis * step;
        sigma.normalize();
    }
    return std::nullopt;
}

}  // namespace detail

/// Multi-start Riemannian Newton search for critical points (any index). Starts come in
/// antipodal pairs; results are sorted by (m, f) and deduplicated by angular distance.
inline CriticalPointSearch find_critical_points(const SpikedTensor& y, const CriticalPointOptions& opt = {}) {
    if (opt.n_starts < 1) throw UsageError("need at least one start");
    std::vector<std::optional<CriticalPointRecord>> found(opt.n_starts);
    parallel_for(opt.n_starts, opt.threads, [&](std::size_t s) {
        std::mt19937_64 rng(derive_seed(opt.seed, s / 2));
        Eigen::VectorXd start = random_unit_vector(y.n, rng);
        if (s % 2 == 1) start = -start;
        found[s] = detail::newton_from(y, start, opt);
    });

    CriticalPointSearch out;
    out.n_starts = opt.n_starts;
    std::vector<CriticalPointRecord> all;
    for (auto& f : found) {
        if (f) all.push_back(std::move(*f));
        else ++out.n_failed;
    }
    std::sort(all.begin(), all.end(), [](const CriticalPointRecord& a, const CriticalPointRecord& b) {
        return std::tie(a.m, a.f_value) < std::tie(b.m, b.f_value);
    });
    for (auto& rec : all) {
        const bool duplicate = std::any_of(out.records.begin(), out.records.end(), [&](const CriticalPointRecord& r) {
            return detail::angle_between(r.sigma, rec.sigma) < opt.dedup_angle;
        });
        if (!duplicate) out.records.push_back(std::move(rec));
    }
    return out;
}

/// Counts of local-maximum records over (m, f) bins; records outside the ranges are skipped.
inline Histogram2D landscape_histogram(const std::vector<CriticalPointRecord>& records, std::size_t m_bins,
                                       std::size_t f_bins, Interval m_range, Interval f_range) {
    if (m_bins < 1 || f_bins < 1) throw UsageError("histogram needs at least one bin per axis");
    if (!(m_range.lo < m_range.hi) || !(f_range.lo < f_range.hi)) throw UsageError("histogram ranges must satisfy lo < hi");
    Histogram2D h{m_range, f_range, m_bins, f_bins, std::vector<std::size_t>(m_bins * f_bins, 0)};
    for (const auto& r : records) {
        if (!r.is_local_max() || !m_range.contains(r.m) || !f_range.contains(r.f_value)) continue;
        auto bin = [](double v, Interval iv, std::size_t bins) {
            const auto b = static_cast<std::size_t>((v - iv.lo) / iv.width() * static_cast<double>(bins));
            return std::min(b, bins - 1);
        };
        ++h.counts[bin(r.m, m_range, m_bins) * f_bins + bin(r.f_value, f_range, f_bins)];
    }
    return h;
}

}  // namespace spiked
