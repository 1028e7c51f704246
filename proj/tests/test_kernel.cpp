#include <catch2/catch_amalgamated.hpp>

#include "memflow/age_grid.hpp"
#include "memflow/kernel.hpp"

using namespace memflow;

TEST_CASE("single-exponential kernel") {
    const auto k = MemoryKernel::single_exponential();
    CHECK(k.evaluate(0.0) == Catch::Approx(1.0));
    CHECK(k.evaluate(2.0) == Catch::Approx(std::exp(-2.0)));
    CHECK(k.pre_normalization_mass() == Catch::Approx(1.0));
    const auto env = k.decay_envelope();
    REQUIRE(env.has_value());
    CHECK(env->c == Catch::Approx(1.0));
    CHECK(env->alpha == Catch::Approx(1.0));
}

TEST_CASE("multi-mode Maxwell kernel") {
    const auto k = MemoryKernel::multi_mode_maxwell({0.5, 0.5}, {1.0, 2.0});
    // Raw value at 0 is eta1/l1^2 + eta2/l2^2 = 0.625, mass is 0.75.
    CHECK(k.pre_normalization_mass() == Catch::Approx(0.75));
    CHECK(k.evaluate(0.0) == Catch::Approx(0.625 / 0.75));
    const auto env = k.decay_envelope();
    REQUIRE(env.has_value());
    CHECK(env->alpha == Catch::Approx(0.5));  // slowest mode dominates the tail
    // Envelope really bounds the kernel.
    for (double s = 0.0; s < 30.0; s += 0.37)
        CHECK(k.evaluate(s) <= env->c * std::exp(-env->alpha * s) * (1.0 + 1e-12));
}

TEST_CASE("Doi-Edwards kernel") {
    const auto k = MemoryKernel::doi_edwards(1.0, 10000);
    SECTION("truncated series mass is within 1e-4 of 1") {
        CHECK(std::abs(k.pre_normalization_mass() - 1.0) < 1e-4);
    }
    SECTION("singular at the origin") {
        REQUIRE_THROWS_AS(k.evaluate(0.0), SingularPoint);
        CHECK(k.evaluate(1e-6) > 100.0);  // ~ s^{-1/2} blow-up
    }
    SECTION("envelope uses the slowest mode") {
        const auto env = k.decay_envelope();
        REQUIRE(env.has_value());
        CHECK(env->alpha == Catch::Approx(1.0));
    }
}

TEST_CASE("power-law kernel") {
    const auto k = MemoryKernel::power_law({1.0}, {0.5}, {1.0}, 1e-3);
    CHECK_FALSE(k.decay_envelope().has_value());
    REQUIRE_THROWS_AS(k.evaluate(0.0), SingularPoint);
    CHECK(k.evaluate(2e-3) > 0.0);
    SECTION("tail too fat for tight truncation") {
        REQUIRE_THROWS_AS(build_age_grid(k, 1e-8, 1e-4), NoDecay);
    }
    SECTION("usable with a loose tail tolerance") {
        const AgeGrid g = build_age_grid(k, 1e-2, 1e-4);
        CHECK(std::abs(g.mass - 1.0) < 1e-4);
        CHECK(g.s_max < detail::kAgeCap);
    }
}

TEST_CASE("age grid construction") {
    SECTION("exponential truncation age is ln(1/tail_tol)") {
        const auto k = MemoryKernel::single_exponential();
        const AgeGrid g = build_age_grid(k, 1e-8, 1e-6);
        CHECK(g.s_max == Catch::Approx(std::log(1e8)).epsilon(1e-6));
        CHECK(std::abs(g.mass - 1.0) < 1e-6);
        CHECK(g.uniform);
    }
    SECTION("explicit uniform spacing") {
        const auto k = MemoryKernel::single_exponential();
        const AgeGrid g = build_age_grid(k, 1e-8, 1e-5, AgeGridSpacing::uniform(1e-2));
        CHECK(g.nodes[1] - g.nodes[0] == Catch::Approx(1e-2));
        CHECK(std::abs(g.mass - 1.0) < 1e-5);
    }
    SECTION("explicit spacing that misses quad_tol fails hard") {
        const auto k = MemoryKernel::single_exponential();
        REQUIRE_THROWS_AS(build_age_grid(k, 1e-8, 1e-9, AgeGridSpacing::uniform(0.05)),
                          AgeGridTolerance);
    }
    SECTION("Doi-Edwards graded grid reproduces unit mass") {
        const auto k = MemoryKernel::doi_edwards(1.0, 10000);
        const AgeGrid g = build_age_grid(k, 1e-8, 1e-6);
        CHECK(std::abs(g.mass - 1.0) < 1e-6);
        CHECK_FALSE(g.uniform);
        // nodes strictly increasing
        for (std::size_t i = 1; i < g.size(); ++i) REQUIRE(g.nodes[i] > g.nodes[i - 1]);
    }
    SECTION("halving the grading ratio cuts the Doi-Edwards mass error >= 2x") {
        const auto k = MemoryKernel::doi_edwards(1.0, 2000);
        const double s_max = detail::solve_truncation_age(k, 1e-8);
        auto mass_err = [&](double ratio) {
            auto nodes = detail::graded_nodes(0.0, s_max, ratio, 1e-6);
            return std::abs(detail::assemble_grid(k, std::move(nodes), s_max).mass - 1.0);
        };
        const double e1 = mass_err(1.15);
        const double e2 = mass_err(1.075);
        CHECK(e1 >= 2.0 * e2);
    }
}

TEST_CASE("kernel quadrature") {
    const auto k = MemoryKernel::single_exponential();
    const AgeGrid g = build_age_grid(k, 1e-10, 1e-7);
    SECTION("zero samples") {
        std::vector<double> f(g.size(), 0.0);
        CHECK(kernel_integral(k, g, f) == 0.0);
    }
    SECTION("first and second moments of e^{-s}") {
        std::vector<double> f1(g.size()), f2(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            f1[i] = g.nodes[i];
            f2[i] = g.nodes[i] * g.nodes[i];
        }
        CHECK(kernel_integral(k, g, f1) == Catch::Approx(1.0).margin(1e-5));
        CHECK(kernel_integral(k, g, f2) == Catch::Approx(2.0).margin(1e-4));
    }
    SECTION("sample count mismatch") {
        std::vector<double> f(g.size() + 1, 0.0);
        REQUIRE_THROWS_AS(kernel_integral(k, g, f), GridMismatch);
    }
}

TEST_CASE("kernel positivity and monotonicity on grid nodes") {
    const auto kernels = {MemoryKernel::single_exponential(),
                          MemoryKernel::multi_mode_maxwell({0.3, 0.7}, {0.5, 2.0}),
                          MemoryKernel::doi_edwards(1.5, 4000),
                          MemoryKernel::power_law({1.0}, {0.4}, {1.0}, 1e-2)};
    for (const auto& k : kernels) {
        const double tail = k.kind() == MemoryKernel::Kind::PowerLaw ? 1e-2 : 1e-8;
        const AgeGrid g = build_age_grid(k, tail, 1e-4);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (k.singular_at_zero() && i == 0) continue;
            const double m = k.evaluate(std::max(g.nodes[i], k.support_start()));
            REQUIRE(m > 0.0);
            REQUIRE(m <= prev * (1.0 + 1e-12));
            prev = m;
        }
    }
}
