// Randomized invariant checks across modules.
#include "spiked/complexity.hpp"
#include "spiked/explicit_formulas.hpp"
#include "spiked/kac_rice.hpp"
#include "spiked/landscape_scan.hpp"
#include "spiked/parallel.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <random>
#include <set>

using namespace spiked;
using Catch::Generators::random;
using Catch::Generators::take;

TEST_CASE("phi_star is even", "[property]") {
    const double x = GENERATE(take(200, random(-50.0, 50.0)));
    CHECK(phi_star(x) == phi_star(-x));
}

TEST_CASE("phi_star never falls below its minimum at the origin", "[property]") {
    const double x = GENERATE(take(200, random(-50.0, 50.0)));
    CHECK(phi_star(x) >= -0.5);
}

TEST_CASE("ldp_rate is non-negative when finite and infinite only below 2", "[property]") {
    const double theta = GENERATE(take(30, random(-3.0, 6.0)));
    const double t = GENERATE(take(30, random(-1.0, 8.0)));
    const double v = ldp_rate(theta, t);
    CHECK(std::isinf(v) == (t < 2.0));
    if (std::isfinite(v)) CHECK(v >= 0.0);
}

TEST_CASE("local maxima complexity never exceeds critical point complexity", "[property]") {
    const int k = GENERATE(3, 4, 5);
    const double lambda = GENERATE(take(5, random(0.0, 5.0)));
    std::mt19937_64 rng(static_cast<std::uint64_t>(k * 1000 + lambda * 1e6));
    std::uniform_real_distribution<double> um(-1.0, 1.0), ux(-8.0, 8.0);
    const ModelParams p(k, lambda);
    for (int i = 0; i < 200; ++i) {
        const LandscapePoint pt{um(rng), ux(rng)};
        CHECK(s_zero(p, pt) <= s_star(p, pt));
    }
}

TEST_CASE("even k complexities are symmetric in m", "[property]") {
    const int k = GENERATE(4, 6);
    const double lambda = GENERATE(take(4, random(0.0, 4.0)));
    const double m = GENERATE(take(10, random(0.0, 1.0)));
    const double x = GENERATE(take(5, random(-4.0, 6.0)));
    const ModelParams p(k, lambda);
    CHECK(s_star(p, {m, x}) == s_star(p, {-m, x}));
    CHECK(s_zero(p, {m, x}) == s_zero(p, {-m, x}));
}

TEST_CASE("s_g stays non-positive for random parameters", "[property]") {
    const int k = GENERATE(3, 4, 5);
    const double lambda = GENERATE(take(20, random(0.01, 20.0)));
    const double m = GENERATE(take(20, random(0.0, 0.9999)));
    CHECK(s_g(ModelParams(k, lambda), m) <= 1e-12);
}

TEST_CASE("minimize_g value is a lower bound of g", "[property]") {
    const double a = GENERATE(take(20, random(0.01, 0.49)));
    const double b = GENERATE(take(10, random(0.01, 6.0)));
    const GMinimum gm = minimize_g(a, b);
    for (double x = -4.0; x < 14.0; x += 0.37) {
        double g = a * x * x - b * x;
        if (std::abs(x) > 2.0) g += semicircle_edge_integral(std::abs(x));
        CHECK(gm.min_value <= g + 1e-12);
    }
}

TEST_CASE("good location solves its defining equation above lambda_c", "[property]") {
    const int k = GENERATE(3, 4, 5);
    const double factor = GENERATE(take(10, random(1.001, 30.0)));
    const ModelParams p(k, factor * lambda_critical(k));
    const auto z = good_location_zero(p);
    REQUIRE(z.has_value());
    CHECK(std::abs(std::pow(*z, 2 * k - 4) * (1.0 - *z * *z) - 1.0 / (2.0 * k * p.lambda() * p.lambda())) < 1e-11);
    CHECK(std::abs(s_g(p, *z)) < 1e-8);
}

TEST_CASE("restricted log-determinant never exceeds the unrestricted one", "[property]") {
    const std::uint64_t seed = GENERATE(take(20, random<std::uint64_t>(0, 1u << 30)));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(-4.0, 4.0), uth(-3.0, 3.0);
    const Eigen::VectorXd spec = detail::spiked_spectrum(sample_goe(9, rng).entries, uth(rng));
    const double t = ut(rng);
    CHECK(detail::log_abs_det_shifted(spec, t, true) <= detail::log_abs_det_shifted(spec, t, false));
}

TEST_CASE("parallel_for visits every index exactly once", "[property]") {
    const std::size_t count = GENERATE(0u, 1u, 7u, 64u, 1000u);
    const unsigned threads = GENERATE(1u, 2u, 5u, 16u);
    std::vector<std::atomic<int>> hits(count);
    parallel_for(count, threads, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("parallel_for propagates a worker exception", "[property]") {
    const unsigned threads = GENERATE(1u, 3u);
    CHECK_THROWS_AS(parallel_for(10, threads, [](std::size_t i) {
                        if (i == 7) throw NumericalError("boom");
                    }),
                    NumericalError);
}

TEST_CASE("derived seeds do not collide", "[property]") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t base : {0ULL, 1ULL, 42ULL})
        for (std::uint64_t i = 0; i < 2000; ++i) seen.insert(derive_seed(base, i));
    CHECK(seen.size() == 6000);
}
