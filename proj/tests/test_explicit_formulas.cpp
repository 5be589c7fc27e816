#include "spiked/complexity.hpp"
#include "spiked/explicit_formulas.hpp"

#include <boost/math/tools/minima.hpp>
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace spiked;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double g_direct(double a, double b, double x) {
    double v = a * x * x - b * x;
    if (std::abs(x) > 2.0) v += semicircle_edge_integral(std::abs(x));
    return v;
}

// Dense grid followed by Brent refinement around the best grid point.
std::pair<double, double> brute_min_g(double a, double b) {
    const double hi = b + 6.0;
    const int steps = 40000;
    double best_x = 0.0, best_v = g_direct(a, b, 0.0);
    for (int i = 1; i <= steps; ++i) {
        const double x = -2.0 + (hi + 2.0) * i / steps;
        const double v = g_direct(a, b, x);
        if (v < best_v) best_v = v, best_x = x;
    }
    const double h = (hi + 2.0) / steps;
    auto r = boost::math::tools::brent_find_minima([&](double x) { return g_direct(a, b, x); }, best_x - h,
                                                   best_x + h, 52);
    return {r.first, r.second};
}

// Maximum over x of s_star by Brent on each side of the bulk edges.
double brent_max_over_x(const ModelParams& p, double m) {
    const double edge = 2.0 / t_of_x(p, 1.0);
    const double span = p.lambda() + 3.0;
    double best = -kInf;
    for (auto [lo, hi] : {std::pair{-span, -edge}, std::pair{-edge, edge}, std::pair{edge, span}}) {
        auto r = boost::math::tools::brent_find_minima([&](double x) { return -s_star(p, {m, x}).value(); }, lo, hi,
                                                       52);
        best = std::max(best, -r.second);
    }
    return best;
}

}  // namespace

TEST_CASE("lambda_critical for k = 3 is the square root of two thirds", "[thresholds]") {
    CHECK_THAT(lambda_critical(3), WithinAbs(std::sqrt(2.0 / 3.0), 1e-13));
    CHECK_THAT(lambda_critical(4), WithinRel(std::sqrt(27.0 / 4.0 / 8.0), 1e-14));
    CHECK(std::isfinite(lambda_critical(200)));
    CHECK_THROWS_AS(lambda_critical(2), DomainError);
}

TEST_CASE("m_critical is strictly decreasing in lambda", "[thresholds]") {
    for (int k : {3, 4, 5}) {
        double prev = kInf;
        for (double lambda = 0.05; lambda < 10.0; lambda *= 1.3) {
            const double mc = m_critical(ModelParams(k, lambda));
            CHECK(mc < prev);
            prev = mc;
        }
    }
    CHECK_THROWS_AS(m_critical(ModelParams(3, 0.0)), DomainError);
}

TEST_CASE("m_critical at lambda_c coincides with the tangency point", "[thresholds]") {
    for (int k : {3, 4, 5, 6}) {
        const ModelParams p(k, lambda_critical(k));
        CHECK_THAT(m_critical(p), WithinAbs(std::sqrt((k - 2.0) / (k - 1.0)), 1e-12));
    }
}

TEST_CASE("s_g is never positive", "[s_g]") {
    for (int k : {3, 4, 5})
        for (double lambda : {0.1, 0.5, 1.0, 2.0, 3.0, 5.0})
            for (int i = 0; i < 2000; ++i) {
                const double m = i / 2000.0;
                CHECK(s_g(ModelParams(k, lambda), m) <= 1e-12);
            }
}

TEST_CASE("s_g is f_alpha evaluated at alpha = m squared", "[s_g]") {
    for (int k : {3, 4, 5})
        for (double lambda : {0.1, 0.5, 1.0, 2.0, 3.0, 5.0})
            for (int i = 1; i < 500; ++i) {
                const double m = i / 500.0;
                const ModelParams p(k, lambda);
                const double y = std::sqrt(k / 2.0) * lambda * std::pow(m, k);
                CHECK_THAT(s_g(p, m), WithinAbs(f_alpha(m * m, y), 1e-10));
            }
}

TEST_CASE("f_alpha peaks at zero at its stated maximizer", "[f_alpha]") {
    for (double alpha : {0.01, 0.3, 0.7, 0.99}) {
        const double xs = f_alpha_argmax(alpha);
        CHECK_THAT(f_alpha(alpha, xs), WithinAbs(0.0, 1e-12));
        for (double dx : {-0.1, -1e-3, 1e-3, 0.1}) CHECK(f_alpha(alpha, xs + dx) < 0.0);
    }
    CHECK_THROWS_AS(f_alpha(1.0, 0.1), DomainError);
}

TEST_CASE("minimize_g agrees with brute-force minimization", "[minimize_g][oracle]") {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> ua(1e-3, 0.5 - 1e-3), ub(1e-3, 6.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double a = ua(rng), b = ub(rng);
        const GMinimum got = minimize_g(a, b);
        const auto [bx, bv] = brute_min_g(a, b);
        INFO("a = " << a << ", b = " << b);
        CHECK_THAT(got.min_value, WithinAbs(bv, 1e-8));
        CHECK_THAT(g_direct(a, b, got.argmin), WithinAbs(got.min_value, 1e-10));
        CHECK(got.min_value <= bv + 1e-12);
    }
}

TEST_CASE("minimize_g handles a = 1/2 and the branch boundary", "[minimize_g]") {
    const GMinimum half = minimize_g(0.5, 3.0);
    CHECK(std::isfinite(half.argmin));
    CHECK_THAT(half.min_value, WithinAbs(brute_min_g(0.5, 3.0).second, 1e-8));
    const GMinimum at = minimize_g(0.25, 1.0);
    CHECK_THAT(at.argmin, WithinAbs(2.0, 1e-15));
    const GMinimum above = minimize_g(0.25, 1.0 + 1e-9);
    CHECK_THAT(above.argmin, WithinAbs(2.0, 1e-4));
    CHECK_THROWS_AS(minimize_g(0.0, 1.0), DomainError);
}

TEST_CASE("piecewise projection matches direct maximization over x", "[projection][oracle]") {
    for (int k : {3, 4, 5})
        for (double lambda : {0.0, 0.1, 0.75, 1.5, 3.0})
            for (int i = 0; i <= 95; i += 5) {
                const double m = i / 100.0;
                const ModelParams p(k, lambda);
                INFO("k = " << k << ", lambda = " << lambda << ", m = " << m);
                CHECK_THAT(s_star_projection(p, m), WithinAbs(brent_max_over_x(p, m), 1e-7));
            }
}

TEST_CASE("projection at the equator is half the log of k - 1", "[projection]") {
    for (int k : {3, 4, 5})
        for (double lambda : {0.0, 0.7, 4.0})
            CHECK_THAT(s_star_projection(ModelParams(k, lambda), 0.0), WithinAbs(0.5 * std::log(k - 1.0), 1e-15));
}

TEST_CASE("projection formulas reject the closed pole and negative overlaps", "[projection]") {
    const ModelParams p(3, 1.0);
    CHECK_THROWS_AS(s_u(p, 1.0), DomainError);
    CHECK_THROWS_AS(s_g(p, -0.1), DomainError);
    CHECK_THROWS_AS(s_star_projection(p, 1.0), DomainError);
}

TEST_CASE("good_location_zero for k = 3 and lambda = 3 solves the quadratic", "[good_zero]") {
    const double expected = std::sqrt((1.0 + std::sqrt(1.0 - 4.0 / 54.0)) / 2.0);
    const auto z = good_location_zero(ModelParams(3, 3.0));
    REQUIRE(z.has_value());
    CHECK_THAT(*z, WithinAbs(expected, 1e-10));
    CHECK_THAT(s_g(ModelParams(3, 3.0), *z), WithinAbs(0.0, 1e-8));
}

TEST_CASE("good_location_zero is absent below lambda_c", "[good_zero]") {
    for (int k : {3, 4, 5})
        for (double frac : {0.2, 0.6, 0.98}) CHECK_FALSE(good_location_zero(ModelParams(k, frac * lambda_critical(k))));
}

TEST_CASE("good_location_zero returns the tangency point at lambda_c", "[good_zero]") {
    for (int k : {3, 4, 5}) {
        const auto z = good_location_zero(ModelParams(k, lambda_critical(k)));
        REQUIRE(z.has_value());
        CHECK_THAT(*z, WithinAbs(std::sqrt((k - 2.0) / (k - 1.0)), 1e-12));
    }
}

TEST_CASE("good_location_zero lies at or above m_c and moves toward the pole", "[good_zero]") {
    for (int k : {3, 4, 5}) {
        double prev = 0.0;
        for (double lambda = lambda_critical(k) * 1.01; lambda < 50.0; lambda *= 1.5) {
            const ModelParams p(k, lambda);
            const auto z = good_location_zero(p);
            REQUIRE(z.has_value());
            CHECK(*z >= m_critical(p) - 1e-12);
            CHECK(*z > prev);
            CHECK(*z < 1.0);
            prev = *z;
        }
    }
}

TEST_CASE("s_g vanishes only at good locations", "[good_zero]") {
    for (double lambda : {1.0, 2.0, 3.0}) {
        const ModelParams p(3, lambda);
        const double z = *good_location_zero(p);
        const double mc = m_critical(p);
        for (int i = 0; i < 1000; ++i) {
            const double m = mc + (1.0 - mc) * i / 1000.0;
            if (std::abs(m - z) > 2e-3) CHECK(s_g(p, m) < -1e-6);
        }
    }
}

TEST_CASE("thresholds bundles the three quantities", "[thresholds]") {
    const ThresholdReport r = thresholds(ModelParams(3, 0.5));
    CHECK(r.lambda_c == lambda_critical(3));
    CHECK(r.m_c == m_critical(ModelParams(3, 0.5)));
    CHECK_FALSE(r.good_zero.has_value());
}
