#pragma once

#include <optional>
#include <random>

#include "memflow/mac.hpp"
#include "memflow/monitor.hpp"
#include "memflow/stress.hpp"
#include "memflow/transport.hpp"

namespace memflow {

/// Dimensionless fluid parameters. omega < 1 keeps the solvent viscosity
/// (1 - omega) positive.
struct FluidParams {
    double re = 1.0;
    double we = 1.0;
    double omega = 0.5;

    void validate() const {
        if (re < 0.0) throw InvalidParams("Reynolds number must be >= 0");
        if (we <= 0.0) throw InvalidParams("Weissenberg number must be > 0");
        if (omega < 0.0 || omega >= 1.0)
            throw InvalidParams("retardation must lie in [0, 1): the solvent term needs 1 - omega > 0");
    }
};

struct StokesOptions {
    double div_tol = 1e-9;   ///< post-projection divergence target
    double cg_tol = 1e-13;   ///< relative CG residual
    int cg_max = 200000;
    int uzawa_max = 600;     ///< pressure iterations for the Re = 0 path
};

struct PicardOptions {
    double tol = 1e-8;
    int max_iters = 50;
};

struct StokesReport {
    int cg_iters = 0;
    int pressure_iters = 0;
    double max_div = 0.0;
};

/// One implicit step of the time-dependent Stokes problem
///   Re d_t u + grad p - (1 - omega) lap u = g,  div u = 0,
/// by implicit diffusion + pressure projection. Re = 0 degenerates to the
/// steady Stokes problem and is solved by Uzawa pressure iteration instead.
class ChannelStokes {
  public:
    ChannelStokes(MacGrid grid, FluidParams params, StokesOptions opts = {})
        : g_(grid), par_(params), opts_(opts) {}

    const MacGrid& grid() const { return g_; }

    StokesReport step(mac::Vec& u, mac::Vec& v, mac::Vec& p, const mac::Vec& gu,
                      const mac::Vec& gv, double dt, const WallVelocity& walls) {
        const double nu = 1.0 - par_.omega;
        StokesReport rep;
        if (par_.re > 0.0)
            rep = projection_step(u, v, p, gu, gv, dt, walls, nu);
        else
            rep = uzawa_solve(u, v, p, gu, gv, walls, nu);
        mac::Vec div;
        mac::divergence(g_, u, v, div);
        rep.max_div = mac::max_abs(div);
        return rep;
    }

  private:
    StokesReport projection_step(mac::Vec& u, mac::Vec& v, mac::Vec& p, const mac::Vec& gu,
                                 const mac::Vec& gv, double dt, const WallVelocity& walls,
                                 double nu) {
        StokesReport rep;
        const double a = par_.re / dt;
        mac::Vec rhs_u(g_.nu()), rhs_v(g_.nv(), 0.0);
        for (std::size_t k = 0; k < g_.nu(); ++k) rhs_u[k] = a * u[k] + gu[k];
        mac::laplace_u_wall_rhs(g_, walls, nu, rhs_u);
        for (int j = 1; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i)
                rhs_v[g_.iv(i, j)] = a * v[g_.iv(i, j)] + gv[g_.iv(i, j)];

        rep.cg_iters += solve_helmholtz_u(a, nu, rhs_u, u);
        rep.cg_iters += solve_helmholtz_v(a, nu, rhs_v, v);

        // Project onto the divergence-free space; repeat if roundoff in the
        // Poisson solve leaves divergence above the target.
        for (int pass = 0; pass < 4; ++pass) {
            mac::Vec div;
            mac::divergence(g_, u, v, div);
            if (mac::max_abs(div) <= opts_.div_tol && pass > 0) break;
            // Solve (-lap) phi = -(Re/dt) div u*  (SPD on the zero-mean space).
            mac::Vec rhs(g_.ncells());
            for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = -a * div[k];
            mac::Vec phi;
            rep.cg_iters += mac::conjugate_gradient(
                [&](std::span<const double> x, mac::Vec& out) {
                    mac::laplace_p(g_, x, out);
                    for (double& o : out) o = -o;
                },
                rhs, phi, opts_.cg_tol, opts_.cg_max, /*zero_mean=*/true);
            apply_pressure_correction(u, v, phi, 1.0 / a);
            if (pass == 0)
                p = phi;
            else
                for (std::size_t k = 0; k < p.size(); ++k) p[k] += phi[k];
            ++rep.pressure_iters;
        }
        mac::subtract_mean(p);
        return rep;
    }

    StokesReport uzawa_solve(mac::Vec& u, mac::Vec& v, mac::Vec& p, const mac::Vec& gu,
                             const mac::Vec& gv, const WallVelocity& walls, double nu) {
        StokesReport rep;
        mac::Vec rhs_u(g_.nu()), rhs_v(g_.nv());
        for (int it = 0; it < opts_.uzawa_max; ++it) {
            for (int j = 0; j < g_.ny; ++j)
                for (int i = 0; i < g_.nx; ++i) {
                    const std::size_t k = g_.iu(i, j);
                    rhs_u[k] = gu[k] - (p[g_.ip(i, j)] - p[g_.ip(i - 1, j)]) / g_.hx();
                }
            mac::laplace_u_wall_rhs(g_, walls, nu, rhs_u);
            rhs_v.assign(g_.nv(), 0.0);
            for (int j = 1; j < g_.ny; ++j)
                for (int i = 0; i < g_.nx; ++i) {
                    const std::size_t k = g_.iv(i, j);
                    rhs_v[k] = gv[k] - (p[g_.ip(i, j)] - p[g_.ip(i, j - 1)]) / g_.hy();
                }
            rep.cg_iters += solve_helmholtz_u(0.0, nu, rhs_u, u);
            rep.cg_iters += solve_helmholtz_v(0.0, nu, rhs_v, v);
            mac::Vec div;
            mac::divergence(g_, u, v, div);
            ++rep.pressure_iters;
            if (mac::max_abs(div) <= opts_.div_tol) {
                mac::subtract_mean(p);
                return rep;
            }
            for (int j = 0; j < g_.ny; ++j)
                for (int i = 0; i < g_.nx; ++i) p[g_.ip(i, j)] -= nu * div[g_.ip(i, j)];
        }
        throw LinearSolveFailure("Uzawa iteration did not reach the divergence target");
    }

    int solve_helmholtz_u(double a, double nu, const mac::Vec& rhs, mac::Vec& u) {
        mac::Vec lap;
        return mac::conjugate_gradient(
            [&](std::span<const double> x, mac::Vec& out) {
                mac::laplace_u(g_, x, lap);
                out.resize(x.size());
                for (std::size_t k = 0; k < x.size(); ++k) out[k] = a * x[k] - nu * lap[k];
            },
            rhs, u, opts_.cg_tol, opts_.cg_max);
    }

    int solve_helmholtz_v(double a, double nu, const mac::Vec& rhs, mac::Vec& v) {
        mac::Vec lap;
        return mac::conjugate_gradient(
            [&](std::span<const double> x, mac::Vec& out) {
                mac::laplace_v(g_, x, lap);
                out.resize(x.size());
                for (std::size_t k = 0; k < x.size(); ++k) out[k] = a * x[k] - nu * lap[k];
                for (int i = 0; i < g_.nx; ++i) {  // wall faces: identity rows
                    out[g_.iv(i, 0)] = x[g_.iv(i, 0)];
                    out[g_.iv(i, g_.ny)] = x[g_.iv(i, g_.ny)];
                }
            },
            rhs, v, opts_.cg_tol, opts_.cg_max);
    }

    void apply_pressure_correction(mac::Vec& u, mac::Vec& v, const mac::Vec& phi,
                                   double scale) {
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i)
                u[g_.iu(i, j)] -= scale * (phi[g_.ip(i, j)] - phi[g_.ip(i - 1, j)]) / g_.hx();
        for (int j = 1; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i)
                v[g_.iv(i, j)] -= scale * (phi[g_.ip(i, j)] - phi[g_.ip(i, j - 1)]) / g_.hy();
    }

    MacGrid g_;
    FluidParams par_;
    StokesOptions opts_;
};

// ---------------------------------------------------------------------------

/// Second-order upwind advection term (u . grad) u at the velocity faces;
/// first-order fallback next to the walls.
inline void advection_terms(const MacGrid& g, const mac::Vec& u, const mac::Vec& v,
                            const WallVelocity& walls, mac::Vec& adv_u, mac::Vec& adv_v) {
    const double hx = g.hx(), hy = g.hy();
    adv_u.assign(g.nu(), 0.0);
    adv_v.assign(g.nv(), 0.0);
    auto uat = [&](int i, int j) -> double {
        if (j < 0) return 2.0 * walls.bottom - u[g.iu(i, 0)];
        if (j >= g.ny) return 2.0 * walls.top - u[g.iu(i, g.ny - 1)];
        return u[g.iu(i, j)];
    };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double uc = u[g.iu(i, j)];
            const double vbar = 0.25 * (v[g.iv(i - 1, j)] + v[g.iv(i, j)] +
                                        v[g.iv(i - 1, j + 1)] + v[g.iv(i, j + 1)]);
            double dudx;
            if (uc >= 0.0)
                dudx = (3.0 * uc - 4.0 * u[g.iu(i - 1, j)] + u[g.iu(i - 2, j)]) / (2 * hx);
            else
                dudx = (-3.0 * uc + 4.0 * u[g.iu(i + 1, j)] - u[g.iu(i + 2, j)]) / (2 * hx);
            double dudy;
            if (vbar >= 0.0)
                dudy = (j >= 2)
                           ? (3.0 * uc - 4.0 * uat(i, j - 1) + uat(i, j - 2)) / (2 * hy)
                           : (uc - uat(i, j - 1)) / hy;
            else
                dudy = (j <= g.ny - 3)
                           ? (-3.0 * uc + 4.0 * uat(i, j + 1) - uat(i, j + 2)) / (2 * hy)
                           : (uat(i, j + 1) - uc) / hy;
            adv_u[g.iu(i, j)] = uc * dudx + vbar * dudy;
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double vc = v[g.iv(i, j)];
            const double ubar = 0.25 * (u[g.iu(i, j - 1)] + u[g.iu(i + 1, j - 1)] +
                                        u[g.iu(i, j)] + u[g.iu(i + 1, j)]);
            double dvdx;
            if (ubar >= 0.0)
                dvdx = (3.0 * vc - 4.0 * v[g.iv(i - 1, j)] + v[g.iv(i - 2, j)]) / (2 * hx);
            else
                dvdx = (-3.0 * vc + 4.0 * v[g.iv(i + 1, j)] - v[g.iv(i + 2, j)]) / (2 * hx);
            double dvdy;
            if (vc >= 0.0)
                dvdy = (j >= 2) ? (3.0 * vc - 4.0 * v[g.iv(i, j - 1)] + v[g.iv(i, j - 2)]) /
                                      (2 * hy)
                                : (vc - v[g.iv(i, j - 1)]) / hy;
            else
                dvdy = (j <= g.ny - 2)
                           ? (-3.0 * vc + 4.0 * v[g.iv(i, j + 1)] - v[g.iv(i, j + 2)]) / (2 * hy)
                           : (v[g.iv(i, j + 1)] - vc) / hy;
            adv_v[g.iv(i, j)] = ubar * dvdx + vc * dvdy;
        }
}

/// Divergence of the cell-centered stress at the velocity faces, by centered
/// differences with corner-averaged off-diagonal entries.
inline void stress_divergence(const MacGrid& g, const std::vector<Tensor2>& tau,
                              mac::Vec& div_u, mac::Vec& div_v) {
    const double hx = g.hx(), hy = g.hy();
    div_u.assign(g.nu(), 0.0);
    div_v.assign(g.nv(), 0.0);
    auto corner12 = [&](int i, int j) -> double {
        // tau_12 at the grid corner (i hx, j hy); one-sided at the walls.
        const int jm = std::max(j - 1, 0), jp = std::min(j, g.ny - 1);
        return 0.25 * (tau[g.ip(i - 1, jm)](0, 1) + tau[g.ip(i, jm)](0, 1) +
                       tau[g.ip(i - 1, jp)](0, 1) + tau[g.ip(i, jp)](0, 1));
    };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            div_u[g.iu(i, j)] =
                (tau[g.ip(i, j)](0, 0) - tau[g.ip(i - 1, j)](0, 0)) / hx +
                (corner12(i, j + 1) - corner12(i, j)) / hy;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            div_v[g.iv(i, j)] =
                (tau[g.ip(i, j)](1, 1) - tau[g.ip(i, j - 1)](1, 1)) / hy +
                (corner12(i + 1, j) - corner12(i, j)) / hx;
}

/// Cell-centered velocity components.
inline void center_velocity(const MacGrid& g, const mac::Vec& u, const mac::Vec& v,
                            mac::Vec& uc, mac::Vec& vc) {
    uc.assign(g.ncells(), 0.0);
    vc.assign(g.ncells(), 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            uc[g.ip(i, j)] = 0.5 * (u[g.iu(i, j)] + u[g.iu(i + 1, j)]);
            vc[g.ip(i, j)] = 0.5 * (v[g.iv(i, j)] + v[g.iv(i, j + 1)]);
        }
}

/// Cell-centered velocity gradient in the (grad_u)(i,j) = d u_j / d x_i
/// convention.
inline void velocity_gradient(const MacGrid& g, const mac::Vec& u, const mac::Vec& v,
                              const WallVelocity& walls, std::vector<Tensor2>& kappa) {
    kappa.assign(g.ncells(), Tensor2(2));
    const double hx = g.hx(), hy = g.hy();
    mac::Vec uc, vc;
    center_velocity(g, u, v, uc, vc);
    auto ucat = [&](int i, int j) -> double {
        if (j < 0) return 2.0 * walls.bottom - uc[g.ip(i, 0)];
        if (j >= g.ny) return 2.0 * walls.top - uc[g.ip(i, g.ny - 1)];
        return uc[g.ip(i, j)];
    };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Tensor2 k(2);
            k(0, 0) = (u[g.iu(i + 1, j)] - u[g.iu(i, j)]) / hx;
            k(1, 1) = (v[g.iv(i, j + 1)] - v[g.iv(i, j)]) / hy;
            k(1, 0) = (ucat(i, j + 1) - ucat(i, j - 1)) / (2 * hy);
            k(0, 1) = (vc[g.ip(i + 1, j)] - vc[g.ip(i - 1, j)]) / (2 * hx);
            kappa[g.ip(i, j)] = k;
        }
}

// ---------------------------------------------------------------------------

/// Scenario definition shared by the unsteady and stationary drivers.
struct Scenario {
    enum class Geometry { HomogeneousBox, Channel, Couette, Poiseuille };
    Geometry geometry = Geometry::HomogeneousBox;
    int dim = 2;

    // Homogeneous kinematics (HomogeneousBox only).
    std::optional<HomogeneousKinematics> kinematics;

    // Channel family.
    int nx = 16, ny = 32;
    double lx = 1.0, ly = 1.0;
    double body_force_x = 0.0;
    double wall_speed = 0.0;  ///< top-wall speed (Couette)
    std::vector<std::pair<double, double>> wall_speed_schedule;  ///< (t, speed)
    std::function<double(double)> wall_speed_fn;  ///< smooth override (tests)

    /// Divergence-free perturbation forcing built from a seeded stream
    /// function; drives genuinely 2D fields in channel runs.
    double perturb_amp = 0.0;
    int perturb_kx = 1;
    std::uint64_t seed = 1;

    bool stress_enabled = true;
    double preshear_rate = 0.0;  ///< G_old = exp(We s kappa_shear) when nonzero

    WallVelocity walls_at(double t) const {
        WallVelocity w;
        if (geometry == Geometry::Couette) {
            if (wall_speed_fn) {
                w.top = wall_speed_fn(t);
                return w;
            }
            w.top = wall_speed;
            for (const auto& [ts, speed] : wall_speed_schedule)
                if (t >= ts - 1e-15) w.top = speed;
        }
        return w;
    }

    bool is_spatial() const { return geometry != Geometry::HomogeneousBox; }
};

/// Face forcing sampled once per scenario (body force + seeded perturbation).
struct FaceForcing {
    mac::Vec fu, fv;

    static FaceForcing build(const MacGrid& g, const Scenario& sc) {
        FaceForcing f;
        f.fu.assign(g.nu(), sc.body_force_x);
        f.fv.assign(g.nv(), 0.0);
        if (sc.perturb_amp != 0.0) {
            Rng rng(sc.seed);
            std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
            const double phase = uni(rng);
            const double kx = 2.0 * M_PI * sc.perturb_kx / g.lx;
            // Stream function psi = A sin(kx x + phase) * (y/ly)^2 (1-y/ly)^2:
            // forcing (d_y psi, -d_x psi) is discretely divergence-free up to
            // the mixed-derivative commutator and vanishes on the walls.
            auto eta = [&](double y) {
                const double s = y / g.ly;
                return s * s * (1.0 - s) * (1.0 - s);
            };
            auto deta = [&](double y) {
                const double s = y / g.ly;
                return (2.0 * s * (1.0 - s) * (1.0 - s) - 2.0 * s * s * (1.0 - s)) / g.ly;
            };
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i)
                    f.fu[g.iu(i, j)] += sc.perturb_amp *
                                        std::sin(kx * i * g.hx() + phase) *
                                        deta((j + 0.5) * g.hy());
            for (int j = 1; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i)
                    f.fv[g.iv(i, j)] -= sc.perturb_amp * kx *
                                        std::cos(kx * (i + 0.5) * g.hx() + phase) *
                                        eta(j * g.hy());
        }
        return f;
    }
};

/// Complete unsteady solver state.
struct FlowState {
    mac::Vec u, v, p;
    DeformationField gfield;
    StressField stress;
    double t = 0.0;

    FlowState(const MacGrid& g, DeformationField field)
        : u(g.nu(), 0.0), v(g.nv(), 0.0), p(g.ncells(), 0.0), gfield(std::move(field)) {}
    explicit FlowState(DeformationField field) : gfield(std::move(field)) {}
};

struct FixedPointReport {
    int iters = 0;
    double residual = 0.0;
    bool converged = true;
    StokesReport stokes;
    TransportReport transport;
};

/// Coupled unsteady solver: momentum + transport + integral stress, iterated
/// as a fixed point within each time step. The frozen triple (u, G, tau)
/// feeds the decoupled subproblems; the loop stops when the velocity stops
/// moving (or accepts with a warning at the iteration cap).
class CoupledSolver {
  public:
    CoupledSolver(const Scenario& sc, FluidParams par, const StrainMeasure& measure,
                  std::shared_ptr<const AgeGrid> grid, TransportOptions topt = {},
                  StokesOptions sopt = {}, PicardOptions popt = {})
        : sc_(sc),
          par_(par),
          measure_(measure),
          age_grid_(std::move(grid)),
          stepper_(topt),
          popt_(popt) {
        par_.validate();
        if (sc_.is_spatial()) {
            mac_ = MacGrid(sc_.nx, sc_.ny, sc_.lx, sc_.ly);
            stokes_.emplace(mac_, par_, sopt);
            forcing_ = FaceForcing::build(mac_, sc_);
        }
        if (!sc_.is_spatial() && !sc_.kinematics)
            throw ConfigError("homogeneous scenario needs a kinematics schedule");
    }

    const MacGrid& mac_grid() const { return mac_; }
    const TransportOptions& transport_options() const { return stepper_.options(); }

    FlowState make_initial_state() const {
        const SpatialLayout lay =
            sc_.is_spatial() ? SpatialLayout::channel(sc_.nx, sc_.ny, sc_.lx, sc_.ly)
                             : SpatialLayout::homogeneous();
        DeformationField field(lay, age_grid_, par_.we, sc_.dim);
        if (sc_.preshear_rate != 0.0) {
            const Tensor2 kappa = shear_kappa(sc_.preshear_rate, sc_.dim);
            field.fill_from_age(
                [&](double s) { return tensor_exp(kappa, par_.we * s); });
        }
        FlowState st = sc_.is_spatial() ? FlowState(mac_, std::move(field))
                                        : FlowState(std::move(field));
        st.stress = assemble_stress(st.gfield);
        return st;
    }

    /// One Picard-iterated time step.
    FixedPointReport fixed_point_step(FlowState& st, double dt) {
        if (!sc_.is_spatial()) return homogeneous_step(st, dt);

        FixedPointReport rep;
        // Sample scheduled wall speeds at the step midpoint so piecewise
        // driving matches the time-ordered characteristics solution.
        const WallVelocity walls = sc_.walls_at(st.t + 0.5 * dt);
        mac::Vec ubar = st.u, vbar = st.v;
        StressField taubar = st.stress;
        const DeformationField gbase = st.gfield;

        mac::Vec gu, gv, adv_u, adv_v, tdu, tdv;
        mac::Vec unew, vnew, pnew;
        DeformationField gnew = gbase;
        StressField taunew = taubar;
        for (int k = 0; k < popt_.max_iters; ++k) {
            // Source from the frozen iterate.
            gu.assign(mac_.nu(), 0.0);
            gv.assign(mac_.nv(), 0.0);
            if (par_.re > 0.0) {
                advection_terms(mac_, ubar, vbar, walls, adv_u, adv_v);
                for (std::size_t q = 0; q < gu.size(); ++q) gu[q] -= par_.re * adv_u[q];
                for (std::size_t q = 0; q < gv.size(); ++q) gv[q] -= par_.re * adv_v[q];
            }
            stress_divergence(mac_, taubar.tau, tdu, tdv);
            for (std::size_t q = 0; q < gu.size(); ++q) gu[q] += tdu[q] + forcing_.fu[q];
            for (std::size_t q = 0; q < gv.size(); ++q) gv[q] += tdv[q] + forcing_.fv[q];

            unew = st.u;
            vnew = st.v;
            pnew = st.p;
            rep.stokes = stokes_->step(unew, vnew, pnew, gu, gv, dt, walls);

            // Transport the start-of-step field with the new velocity.
            gnew = gbase;
            mac::Vec uc, vc;
            center_velocity(mac_, unew, vnew, uc, vc);
            std::vector<Tensor2> kappa;
            velocity_gradient(mac_, unew, vnew, walls, kappa);
            rep.transport = stepper_.step_channel(gnew, uc, vc, kappa, dt);
            taunew = assemble_stress(gnew);

            double delta = 0.0;
            for (std::size_t q = 0; q < unew.size(); ++q)
                delta = std::max(delta, std::abs(unew[q] - ubar[q]));
            for (std::size_t q = 0; q < vnew.size(); ++q)
                delta = std::max(delta, std::abs(vnew[q] - vbar[q]));
            ubar = unew;
            vbar = vnew;
            taubar = taunew;
            rep.iters = k + 1;
            rep.residual = delta;
            if (delta < popt_.tol) break;
        }
        rep.converged = rep.residual < popt_.tol;
        st.u = std::move(ubar);
        st.v = std::move(vbar);
        st.p = std::move(pnew);
        st.gfield = std::move(gnew);
        st.stress = std::move(taubar);
        st.t += dt;
        return rep;
    }

    StressField assemble_stress(const DeformationField& field) const {
        if (!sc_.stress_enabled) {
            StressField z;
            z.layout = field.layout();
            z.omega = par_.omega;
            z.we = par_.we;
            z.tau.assign(field.cells(), Tensor2(field.dim()));
            return z;
        }
        return assemble_tau(field, measure_, par_.omega, par_.we,
                            stepper_.options().threads);
    }

    double kinetic_energy(const FlowState& st) const {
        if (!sc_.is_spatial()) return 0.0;
        mac::Vec uc, vc;
        center_velocity(mac_, st.u, st.v, uc, vc);
        double ke = 0.0;
        for (std::size_t c = 0; c < uc.size(); ++c) ke += uc[c] * uc[c] + vc[c] * vc[c];
        return 0.5 * ke * mac_.hx() * mac_.hy();
    }

    double max_divergence(const FlowState& st) const {
        if (!sc_.is_spatial()) return 0.0;
        mac::Vec div;
        mac::divergence(mac_, st.u, st.v, div);
        return mac::max_abs(div);
    }

    /// Max over age nodes of the spatial p-norm of |grad G| (monitor proxy).
    double grad_g_proxy(const FlowState& st, double p) const {
        if (!sc_.is_spatial()) return 0.0;
        const DeformationField& f = st.gfield;
        const double cell_vol = f.layout().area() / static_cast<double>(f.cells());
        double worst = 0.0;
        for (std::size_t a = 0; a < f.ages(); ++a) {
            double acc = 0.0;
            for (std::size_t c = 0; c < f.cells(); ++c)
                acc += std::pow(field_gradient(f, a, c).norm(), p) * cell_vol;
            worst = std::max(worst, std::pow(acc, 1.0 / p));
        }
        return worst;
    }

    /// Discrete W^{1,p}-style norm of the velocity gradient driving the
    /// growth-monitor bound.
    double grad_u_norm(const FlowState& st) const {
        if (!sc_.is_spatial()) {
            return sc_.kinematics->kappa_at(st.t).norm();
        }
        std::vector<Tensor2> kappa;
        velocity_gradient(mac_, st.u, st.v, sc_.walls_at(st.t), kappa);
        double m = 0.0;
        for (const auto& k : kappa) m = std::max(m, k.norm());
        return m;
    }

  private:
    FixedPointReport homogeneous_step(FlowState& st, double dt) {
        FixedPointReport rep;
        rep.iters = 1;
        rep.residual = 0.0;
        rep.transport = stepper_.step_homogeneous(st.gfield, *sc_.kinematics, st.t, dt);
        st.stress = assemble_stress(st.gfield);
        st.t += dt;
        return rep;
    }

    Scenario sc_;
    FluidParams par_;
    StrainMeasure measure_;
    std::shared_ptr<const AgeGrid> age_grid_;
    TransportStepper stepper_;
    PicardOptions popt_;
    MacGrid mac_;
    std::optional<ChannelStokes> stokes_;
    FaceForcing forcing_;
};

// ---------------------------------------------------------------------------

struct StepDiagnostics {
    int step = 0;
    double t = 0.0;
    double ke = 0.0;
    double max_tau = 0.0;
    int picard_iters = 0;
    double picard_residual = 0.0;
    double max_div = 0.0;
    double det_drift = 0.0;
    double monitor_proxy = 0.0;
    double monitor_bound = 0.0;
    bool monitor_crossing = false;
    Tensor2 probe_tau;  ///< stress at the probe cell (homogeneous: the cell)
};

struct TimeAdvancePolicy {
    double dt = 1e-2;
    double t_end = 1.0;
    int checkpoint_every = 0;  ///< 0 disables checkpoints
    double monitor_c0 = 1.0;
    double monitor_p = 2.0;
    double monitor_slack = 0.05;
};

struct TimeAdvanceResult {
    enum class Status { Ok, Aborted } status = Status::Ok;
    std::string abort_reason;
    int steps = 0;
    bool any_monitor_crossing = false;
    bool all_picard_converged = true;
    double max_det_drift = 0.0;
};

/// Stress at the probe cell: the single cell for homogeneous runs, the cell
/// adjacent to the top wall at mid-channel otherwise.
inline Tensor2 probe_stress(const FlowState& st) {
    const SpatialLayout& lay = st.stress.layout;
    if (lay.kind == SpatialLayout::Kind::Homogeneous || st.stress.tau.size() == 1)
        return st.stress.tau.empty() ? Tensor2(2) : st.stress.tau[0];
    return st.stress.tau[lay.index(lay.nx / 2, lay.ny - 1)];
}

/// March the coupled solver to t_end with a fixed dt, recording per-step
/// diagnostics and optional checkpoints through the callbacks.
inline TimeAdvanceResult time_advance(
    CoupledSolver& solver, FlowState& st, TimeAdvancePolicy policy,
    const std::function<void(const StepDiagnostics&)>& on_step = nullptr,
    const std::function<void(const FlowState&, int)>& on_checkpoint = nullptr) {
    TimeAdvanceResult res;
    NormMonitor monitor = NormMonitor::from_field(st.gfield, policy.monitor_c0,
                                                  policy.monitor_p, policy.monitor_slack);
    const auto steps = static_cast<int>(std::llround((policy.t_end - st.t) / policy.dt));
    for (int n = 0; n < steps; ++n) {
        FixedPointReport rep;
        try {
            rep = solver.fixed_point_step(st, policy.dt);
        } catch (const Error& e) {
            res.status = TimeAdvanceResult::Status::Aborted;
            res.abort_reason = e.what();
            return res;
        }
        monitor.update(st.gfield, solver.grad_u_norm(st), policy.dt,
                       solver.grad_g_proxy(st, policy.monitor_p));
        res.steps = n + 1;
        res.all_picard_converged = res.all_picard_converged && rep.converged;
        res.max_det_drift = std::max(res.max_det_drift, rep.transport.max_det_drift);
        if (on_step) {
            StepDiagnostics d;
            d.step = n + 1;
            d.t = st.t;
            d.ke = solver.kinetic_energy(st);
            d.max_tau = st.stress.max_norm();
            d.picard_iters = rep.iters;
            d.picard_residual = rep.residual;
            d.max_div = rep.stokes.max_div;
            d.det_drift = rep.transport.max_det_drift;
            const auto& ms = monitor.series().back();
            d.monitor_proxy = ms.proxy_g;
            d.monitor_bound = ms.bound;
            d.monitor_crossing = ms.crossing;
            d.probe_tau = probe_stress(st);
            on_step(d);
        }
        if (on_checkpoint && policy.checkpoint_every > 0 &&
            (n + 1) % policy.checkpoint_every == 0)
            on_checkpoint(st, n + 1);
    }
    res.any_monitor_crossing = monitor.any_crossing();
    return res;
}

}  // namespace memflow
