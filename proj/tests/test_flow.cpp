#include <catch2/catch_amalgamated.hpp>

#include "memflow/flow.hpp"
#include "memflow/oracles.hpp"

using namespace memflow;

namespace {

std::shared_ptr<const AgeGrid> exp_grid_ds(double ds, double tail = 1e-8) {
    const auto k = MemoryKernel::single_exponential();
    return std::make_shared<const AgeGrid>(
        build_age_grid(k, tail, 1e-2, AgeGridSpacing::uniform(ds)));
}

TransportOptions aligned_opts() {
    TransportOptions t;
    t.cfl = 1.0;
    return t;
}

}  // namespace

TEST_CASE("rest state stays bitwise zero") {
    Scenario sc;
    sc.geometry = Scenario::Geometry::Poiseuille;
    sc.nx = 8;
    sc.ny = 8;
    sc.body_force_x = 0.0;
    FluidParams par{1.0, 1.0, 0.3};
    CoupledSolver solver(sc, par, StrainMeasure::ucm(), exp_grid_ds(0.05), aligned_opts());
    FlowState st = solver.make_initial_state();
    for (int n = 0; n < 5; ++n) {
        const auto rep = solver.fixed_point_step(st, 0.05);
        CHECK(rep.iters == 1);  // converges immediately at rest
    }
    for (double x : st.u) REQUIRE(x == 0.0);
    for (double x : st.v) REQUIRE(x == 0.0);
}

TEST_CASE("steady Poiseuille profile of the Stokes operator") {
    // -(1-om) u'' = f in a unit channel: u(y) = f y (1-y) / (2 (1-om)).
    const double om = 0.3, f = 1.0;
    auto worst_err = [&](int ny) {
        MacGrid g(3, ny, 1.0, 1.0);
        ChannelStokes stokes(g, FluidParams{0.0, 1.0, om});
        mac::Vec u(g.nu(), 0.0), v(g.nv(), 0.0), p(g.ncells(), 0.0);
        mac::Vec gu(g.nu(), f), gv(g.nv(), 0.0);
        stokes.step(u, v, p, gu, gv, /*dt=*/1.0, WallVelocity{});
        double worst = 0.0;
        for (int j = 0; j < ny; ++j) {
            const double y = (j + 0.5) / ny;
            const double exact = f * y * (1.0 - y) / (2.0 * (1.0 - om));
            worst = std::max(worst, std::abs(u[g.iu(0, j)] - exact));
        }
        return worst;
    };
    const double e16 = worst_err(16), e32 = worst_err(32);
    CHECK(std::log2(e16 / e32) > 1.8);  // ghost-reflection walls are O(h^2)
    CHECK(worst_err(512) < 1e-6);       // refined-grid agreement
}

TEST_CASE("manufactured steady Stokes solution converges at second order") {
    // u = dpsi/dy, v = -dpsi/dx with psi = sin(2 pi x) eta(y),
    // eta = y^2 (1-y)^2: periodic in x, no-slip at the walls.
    const double om = 0.2, nu = 1.0 - om;
    auto psi_eta = [](double y) { return y * y * (1 - y) * (1 - y); };
    auto eta1 = [](double y) { return 2 * y * (1 - y) * (1 - y) - 2 * y * y * (1 - y); };
    auto eta2 = [](double y) { return 2 * (1 - y) * (1 - y) - 8 * y * (1 - y) + 2 * y * y; };
    auto eta3 = [](double y) { return -12 * (1 - 2 * y); };
    const double k = 2.0 * M_PI;
    auto uex = [&](double x, double y) { return std::sin(k * x) * eta1(y); };
    // g = -nu lap(u) + grad p
    auto gu_ex = [&](double x, double y) {
        return -nu * (-k * k * std::sin(k * x) * eta1(y) + std::sin(k * x) * eta3(y)) -
               k * std::sin(k * x) * std::sin(M_PI * y);
    };
    auto gv_ex = [&](double x, double y) {
        return -nu * (k * k * k * std::cos(k * x) * psi_eta(y) -
                      k * std::cos(k * x) * eta2(y)) +
               M_PI * std::cos(k * x) * std::cos(M_PI * y);
    };
    std::vector<double> errs;
    for (int n : {16, 32}) {
        MacGrid g(n, n, 1.0, 1.0);
        ChannelStokes stokes(g, FluidParams{0.0, 1.0, om});
        mac::Vec u(g.nu(), 0.0), v(g.nv(), 0.0), p(g.ncells(), 0.0);
        mac::Vec gu(g.nu()), gv(g.nv(), 0.0);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                gu[g.iu(i, j)] = gu_ex(i * g.hx(), (j + 0.5) * g.hy());
        for (int j = 1; j < n; ++j)
            for (int i = 0; i < n; ++i)
                gv[g.iv(i, j)] = gv_ex((i + 0.5) * g.hx(), j * g.hy());
        stokes.step(u, v, p, gu, gv, 1.0, WallVelocity{});
        double e2 = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double du = u[g.iu(i, j)] - uex(i * g.hx(), (j + 0.5) * g.hy());
                e2 += du * du;
            }
        errs.push_back(std::sqrt(e2 / (n * n)));
    }
    const double order = std::log2(errs[0] / errs[1]);
    INFO("errors " << errs[0] << " " << errs[1] << ", order " << order);
    CHECK(order > 1.8);
}

TEST_CASE("projection keeps the discrete divergence at the solver tolerance") {
    Scenario sc;
    sc.geometry = Scenario::Geometry::Poiseuille;
    sc.nx = 12;
    sc.ny = 16;
    sc.body_force_x = 0.5;
    sc.perturb_amp = 0.2;
    sc.seed = 7;
    FluidParams par{1.0, 1.0, 0.2};
    CoupledSolver solver(sc, par, StrainMeasure::ucm(), exp_grid_ds(0.05, 1e-6),
                         aligned_opts());
    FlowState st = solver.make_initial_state();
    for (int n = 0; n < 20; ++n) {
        const auto rep = solver.fixed_point_step(st, 0.05);
        REQUIRE(rep.stokes.max_div <= 1e-8);
        REQUIRE(solver.max_divergence(st) <= 1e-8);
    }
}

TEST_CASE("Couette startup with tiny inertia tracks the UCM oracle") {
    // Re = 0 makes the velocity profile instantaneously linear, so the wall
    // stress history equals the homogeneous startup-shear curve.
    const double we = 1.0, om = 0.5, dt = 1e-2;
    Scenario sc;
    sc.geometry = Scenario::Geometry::Couette;
    sc.nx = 3;
    sc.ny = 12;
    sc.wall_speed = 1.0;  // gammadot = 1 across unit height
    FluidParams par{0.0, we, om};
    CoupledSolver solver(sc, par, StrainMeasure::ucm(), exp_grid_ds(dt / we, 1e-6),
                         aligned_opts());
    FlowState st = solver.make_initial_state();
    double worst = 0.0;
    for (int n = 0; n < 200; ++n) {
        solver.fixed_point_step(st, dt);
        const double ref = maxwell_startup_shear_stress(1.0, we, om, st.t);
        worst = std::max(worst, std::abs(probe_stress(st)(0, 1) - ref));
    }
    INFO("max deviation " << worst);
    CHECK(worst < 1e-3 * (om * 1.0));  // relative to the curve scale om*gd
    // Velocity profile is linear to solver accuracy.
    const MacGrid& g = solver.mac_grid();
    for (int j = 0; j < g.ny; ++j) {
        const double y = (j + 0.5) * g.hy();
        CHECK(st.u[g.iu(0, j)] == Catch::Approx(y).margin(1e-8));
    }
}

TEST_CASE("Newtonian limit matches a stress-disabled run bitwise") {
    auto run = [&](bool stress_enabled) {
        Scenario sc;
        sc.geometry = Scenario::Geometry::Poiseuille;
        sc.nx = 8;
        sc.ny = 12;
        sc.body_force_x = 1.0;
        sc.stress_enabled = stress_enabled;
        FluidParams par{1.0, 1.0, 0.0};  // omega = 0
        CoupledSolver solver(sc, par, StrainMeasure::ucm(), exp_grid_ds(0.02, 1e-6),
                             aligned_opts());
        FlowState st = solver.make_initial_state();
        for (int n = 0; n < 50; ++n) solver.fixed_point_step(st, 0.02);
        return st;
    };
    const FlowState a = run(true);
    const FlowState b = run(false);
    REQUIRE(a.u.size() == b.u.size());
    for (std::size_t k = 0; k < a.u.size(); ++k) REQUIRE(a.u[k] == b.u[k]);
    for (std::size_t k = 0; k < a.v.size(); ++k) REQUIRE(a.v[k] == b.v[k]);
    for (const auto& t : a.stress.tau) REQUIRE(t.norm() == 0.0);
}

TEST_CASE("small-data channel run stays bounded") {
    Scenario sc;
    sc.geometry = Scenario::Geometry::Poiseuille;
    sc.nx = 8;
    sc.ny = 12;
    sc.body_force_x = 0.05;
    FluidParams par{1.0, 1.0, 0.1};
    CoupledSolver solver(sc, par, StrainMeasure::ucm(), exp_grid_ds(0.02, 1e-6),
                         aligned_opts());
    FlowState st = solver.make_initial_state();
    TimeAdvancePolicy pol;
    pol.dt = 0.02;
    pol.t_end = 1.0;
    std::vector<StepDiagnostics> diags;
    const auto res =
        time_advance(solver, st, pol, [&](const StepDiagnostics& d) { diags.push_back(d); });
    REQUIRE(res.status == TimeAdvanceResult::Status::Ok);
    CHECK(res.all_picard_converged);
    CHECK_FALSE(res.any_monitor_crossing);
    for (const auto& d : diags) {
        REQUIRE(std::isfinite(d.ke));
        REQUIRE(d.max_tau < 1.0);
    }
}

TEST_CASE("det transport in a perturbed 2D channel run") {
    Scenario sc;
    sc.geometry = Scenario::Geometry::Poiseuille;
    sc.nx = 12;
    sc.ny = 18;
    sc.body_force_x = 0.2;
    sc.perturb_amp = 0.05;
    sc.seed = 3;
    FluidParams par{1.0, 1.0, 0.2};
    const double dt = 0.05;
    CoupledSolver solver(sc, par, StrainMeasure::ucm(), exp_grid_ds(dt, 1e-6),
                         aligned_opts());
    FlowState st = solver.make_initial_state();
    double drift = 0.0;
    for (int n = 0; n < 100; ++n) {
        const auto rep = solver.fixed_point_step(st, dt);
        drift = std::max(drift, rep.transport.max_det_drift);
    }
    INFO("max |det G - 1| = " << drift);
    CHECK(drift <= 1e-5);
}

TEST_CASE("wall stress trace self-converges under refinement") {
    // Couette startup; Richardson self-convergence of the probe stress.
    auto run = [&](int ny, double dt) {
        Scenario sc;
        sc.geometry = Scenario::Geometry::Couette;
        sc.nx = 3;
        sc.ny = ny;
        sc.wall_speed = 1.0;
        FluidParams par{0.0, 1.0, 0.5};
        CoupledSolver solver(sc, par, StrainMeasure::psm_norm(), exp_grid_ds(dt, 1e-6),
                             aligned_opts());
        FlowState st = solver.make_initial_state();
        const int steps = static_cast<int>(std::llround(0.4 / dt));
        for (int n = 0; n < steps; ++n) solver.fixed_point_step(st, dt);
        return probe_stress(st)(0, 1);
    };
    const double c = run(8, 0.02);
    const double m = run(16, 0.01);
    const double f = run(32, 0.005);
    const double order = std::log2(std::abs(c - m) / std::abs(m - f));
    INFO("values " << c << " " << m << " " << f << ", order " << order);
    CHECK(order >= 1.5);
}
