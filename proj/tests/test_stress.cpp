#include <catch2/catch_amalgamated.hpp>

#include "memflow/kinematics.hpp"
#include "memflow/stress.hpp"

using namespace memflow;

namespace {

std::shared_ptr<const AgeGrid> grid_for(const MemoryKernel& k, double tail = 1e-8,
                                        double quad = 1e-6) {
    return std::make_shared<const AgeGrid>(build_age_grid(k, tail, quad));
}

/// Steady simple-shear deformation field G(s) = id + We s gammadot E_21.
DeformationField steady_shear_field(std::shared_ptr<const AgeGrid> grid, double we,
                                    double gamma_dot) {
    DeformationField f(SpatialLayout::homogeneous(), std::move(grid), we);
    f.fill_from_age([&](double s) {
        Tensor2 g = Tensor2::identity(2);
        g(1, 0) = we * s * gamma_dot;
        return g;
    });
    return f;
}

}  // namespace

TEST_CASE("quiescent field assembles zero stress for UCM") {
    auto grid = grid_for(MemoryKernel::single_exponential());
    DeformationField field(SpatialLayout::homogeneous(), grid, 1.0);
    const StressField tau = assemble_tau(field, StrainMeasure::ucm(), 0.5, 1.0);
    CHECK(tau.max_norm() == 0.0);
}

TEST_CASE("steady shear viscometric functions, exponential kernel") {
    const double we = 1.3, om = 0.4, gd = 0.9;
    auto grid = grid_for(MemoryKernel::single_exponential(), 1e-10, 1e-7);
    const auto field = steady_shear_field(grid, we, gd);
    SECTION("UCM") {
        const StressField tau = assemble_tau(field, StrainMeasure::ucm(), om, we);
        CHECK(tau.at(0)(0, 1) == Catch::Approx(om * gd).epsilon(2e-6));
        CHECK(tau.at(0)(0, 0) - tau.at(0)(1, 1) ==
              Catch::Approx(2.0 * om * we * gd * gd).epsilon(2e-5));
    }
    SECTION("LCM") {
        const StressField tau = assemble_tau(field, StrainMeasure::lcm(), om, we);
        CHECK(tau.at(0)(0, 1) == Catch::Approx(om * gd).epsilon(2e-6));
        CHECK(tau.at(0)(0, 0) == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("steady shear with the Doi-Edwards kernel matches the series oracle") {
    // For UCM strain, tau_12 = om * gd * We * (first moment of m); the first
    // moment is (8/pi^2) sum (2k+1)^{-4} / mass = pi^2/12 / mass.
    const double we = 1.0, om = 0.5, gd = 1.0;
    const int K = 10000;
    const auto kernel = MemoryKernel::doi_edwards(1.0, K);
    auto grid = grid_for(kernel, 1e-8, 1e-6);
    const auto field = steady_shear_field(grid, we, gd);
    const StressField tau = assemble_tau(field, StrainMeasure::ucm(), om, we);

    double first_moment = 0.0;  // independent series sum, smallest terms first
    for (int k = K - 1; k >= 0; --k) {
        const double q = 2.0 * k + 1.0;
        first_moment += 1.0 / (q * q * q * q);
    }
    first_moment *= 8.0 / (M_PI * M_PI) / kernel.pre_normalization_mass();
    CHECK(std::abs(first_moment - M_PI * M_PI / 12.0) < 1e-4);
    CHECK(tau.at(0)(0, 1) == Catch::Approx(om * gd * we * first_moment).epsilon(1e-4));
}

TEST_CASE("assembly is linear in omega with an exact factor") {
    auto grid = grid_for(MemoryKernel::single_exponential());
    const auto field = steady_shear_field(grid, 1.0, 1.0);
    const StressField a = assemble_tau(field, StrainMeasure::ucm(), 0.25, 1.0);
    const StressField b = assemble_tau(field, StrainMeasure::ucm(), 0.5, 1.0);
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
            REQUIRE(b.at(0)(p, q) == 2.0 * a.at(0)(p, q));  // bitwise factor 2
}

TEST_CASE("kernel-mass consistency for a constant strain sample") {
    // With S(G(s)) constant away from the boundary node, the assembly reduces
    // to (om/We) * S * (quadrature mass seen by those nodes).
    auto grid = grid_for(MemoryKernel::multi_mode_maxwell({0.2, 0.8}, {0.7, 1.9}), 1e-9, 1e-7);
    DeformationField field(SpatialLayout::homogeneous(), grid, 2.0);
    Tensor2 g0 = Tensor2::identity(2);
    g0(1, 0) = 0.7;
    field.fill_from_age([&](double s) { return s == 0.0 ? Tensor2::identity(2) : g0; });
    const StressField tau = assemble_tau(field, StrainMeasure::ucm(), 0.3, 2.0);
    const Tensor2 expect = StrainMeasure::ucm().evaluate(g0) * (0.3 / 2.0);
    const double mass_away_from_boundary = field.grid().mass - field.grid().wm[0];
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
            CHECK(tau.at(0)(p, q) ==
                  Catch::Approx(expect(p, q) * mass_away_from_boundary).margin(1e-9));
}

TEST_CASE("stress gradient formula against finite differences of the assembly") {
    // Manufactured smooth field on a channel: G(s; x, y) = id + a(x, y) s E_21
    // with a smooth periodic-in-x amplitude.
    const double we = 1.0, om = 0.5;
    auto kernel = MemoryKernel::single_exponential();
    auto grid = std::make_shared<const AgeGrid>(
        build_age_grid(kernel, 1e-9, 1e-4, AgeGridSpacing::uniform(0.02)));
    const SpatialLayout lay = SpatialLayout::channel(16, 16, 1.0, 1.0);
    const auto amp = [](double x, double y) {
        return 0.3 + 0.1 * std::sin(2.0 * M_PI * x) * std::cos(M_PI * y);
    };
    const auto amp_dx = [](double x, double y) {
        return 0.1 * 2.0 * M_PI * std::cos(2.0 * M_PI * x) * std::cos(M_PI * y);
    };
    const auto amp_dy = [](double x, double y) {
        return -0.1 * M_PI * std::sin(2.0 * M_PI * x) * std::sin(M_PI * y);
    };
    auto make_field = [&](double shift_x, double shift_y) {
        DeformationField f(lay, grid, we);
        for (std::size_t a = 0; a < f.ages(); ++a)
            for (int j = 0; j < lay.ny; ++j)
                for (int i = 0; i < lay.nx; ++i) {
                    Tensor2 g = Tensor2::identity(2);
                    g(1, 0) = amp(lay.cell_x(i) + shift_x, lay.cell_y(j) + shift_y) *
                              f.grid().nodes[a];
                    f.at(a, lay.index(i, j)) = g;
                }
        f.reset_boundary();
        return f;
    };

    const auto field = make_field(0.0, 0.0);
    for (const auto& measure : {StrainMeasure::ucm(), StrainMeasure::psm_norm()}) {
        // Analytic gradient of the manufactured G feeds the formula path.
        const auto grads = assemble_grad_tau(
            field, measure, om, we, [&](std::size_t a, std::size_t c) {
                const int i = static_cast<int>(c) % lay.nx;
                const int j = static_cast<int>(c) / lay.nx;
                Tensor3 g3(2);
                Tensor2 gx(2), gy(2);
                gx(1, 0) = amp_dx(lay.cell_x(i), lay.cell_y(j)) * field.grid().nodes[a];
                gy(1, 0) = amp_dy(lay.cell_x(i), lay.cell_y(j)) * field.grid().nodes[a];
                g3.set_slice(0, gx);
                g3.set_slice(1, gy);
                return g3;
            });
        // Mesh-free central differences of the assembled stress.
        const double eps = 1e-5;
        const StressField txp = assemble_tau(make_field(eps, 0.0), measure, om, we);
        const StressField txm = assemble_tau(make_field(-eps, 0.0), measure, om, we);
        const StressField typ = assemble_tau(make_field(0.0, eps), measure, om, we);
        const StressField tym = assemble_tau(make_field(0.0, -eps), measure, om, we);
        double worst = 0.0, scale = 0.0;
        for (std::size_t c = 0; c < field.cells(); ++c) {
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) {
                    const double fdx = (txp.at(c)(p, q) - txm.at(c)(p, q)) / (2 * eps);
                    const double fdy = (typ.at(c)(p, q) - tym.at(c)(p, q)) / (2 * eps);
                    worst = std::max({worst, std::abs(grads[c](0, p, q) - fdx),
                                      std::abs(grads[c](1, p, q) - fdy)});
                    scale = std::max({scale, std::abs(fdx), std::abs(fdy)});
                }
        }
        INFO(measure.describe() << ": worst " << worst << " scale " << scale);
        REQUIRE(worst < 1e-5 * std::max(1.0, scale));
    }
}

TEST_CASE("spatially constant field has zero stress gradient") {
    auto grid = grid_for(MemoryKernel::single_exponential());
    DeformationField field(SpatialLayout::channel(8, 8, 1.0, 1.0), grid, 1.0);
    field.fill_from_age([&](double s) {
        Tensor2 g = Tensor2::identity(2);
        g(1, 0) = 0.5 * s;
        return g;
    });
    const auto grads = assemble_grad_tau(field, StrainMeasure::ucm(), 0.5, 1.0);
    for (const auto& g : grads) REQUIRE(g.norm() < 1e-12);
}

TEST_CASE("stress bound report") {
    auto grid = grid_for(MemoryKernel::single_exponential());
    SECTION("quiescent field: zero bounds hold") {
        DeformationField field(SpatialLayout::homogeneous(), grid, 1.0);
        const StressField tau = assemble_tau(field, StrainMeasure::ucm(), 0.5, 1.0);
        const auto rep = stress_bound_report(tau, StrainMeasure::ucm(), field);
        CHECK(rep.max_tau == 0.0);
        CHECK(rep.s0 == 0.0);
    }
    SECTION("steady shear bound") {
        const double we = 1.0, om = 0.5, gd = 1.0;
        const auto field = steady_shear_field(grid, we, gd);
        const StressField tau = assemble_tau(field, StrainMeasure::ucm(), om, we);
        const auto rep = stress_bound_report(tau, StrainMeasure::ucm(), field);
        CHECK(rep.max_tau <= rep.tau_bound);
        CHECK(rep.s0 >= we * gd);  // the largest shear sample alone reaches We gd
    }
    SECTION("normalized PSM: |tau| <= omega/We on any field") {
        const double we = 2.0, om = 0.7;
        const auto field = steady_shear_field(grid, we, 3.0);
        const StressField tau = assemble_tau(field, StrainMeasure::psm_norm(), om, we);
        const auto rep = stress_bound_report(tau, StrainMeasure::psm_norm(), field);
        CHECK(rep.max_tau <= om / we * (1.0 + 1e-12));
        CHECK(rep.s0 <= 1.0 + 1e-12);
    }
}

TEST_CASE("assembly symmetry for catalog measures") {
    auto grid = grid_for(MemoryKernel::single_exponential());
    const auto field = steady_shear_field(grid, 1.0, 2.0);
    for (const auto& m : {StrainMeasure::ucm(), StrainMeasure::lcm(), StrainMeasure::psm_norm()}) {
        const StressField tau = assemble_tau(field, m, 0.5, 1.0);
        REQUIRE(tau.at(0).symmetric(1e-12));
    }
}
