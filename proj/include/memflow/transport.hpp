#pragma once

#include <span>
#include <vector>

#include "memflow/field.hpp"
#include "memflow/kinematics.hpp"

namespace memflow {

struct TransportOptions {
    double cfl = 0.9;             ///< bound on dt / min(dx/|u|, We*ds_min)
    double det_warn_tol = 1e-5;   ///< report drift above this
    double det_abort_tol = 1e-2;  ///< hard failure above this
    bool renormalize_det = false; ///< project back onto det = 1 each step
    int threads = 1;
};

struct TransportReport {
    double max_det_drift = 0.0;
    bool det_warning = false;
};

namespace detail {

/// Explicit-midpoint update of dG/dsigma = G * kappa over a step of length h
/// with kappa frozen at the midpoint: G (I + h kappa + h^2/2 kappa^2).
inline Tensor2 midpoint_advance(const Tensor2& g, const Tensor2& kappa, double h) {
    const Tensor2 gk = g.mul(kappa);
    return g + (gk + gk.mul(kappa) * (0.5 * h)) * h;
}

/// Unpacked 2x2 tensor for the d = 2 hot loops.
struct M2 {
    double a, b, c, d;  // row-major: (0,0) (0,1) (1,0) (1,1)

    static M2 load(const Tensor2& t) { return {t(0, 0), t(0, 1), t(1, 0), t(1, 1)}; }
    void store(Tensor2& t) const {
        t(0, 0) = a;
        t(0, 1) = b;
        t(1, 0) = c;
        t(1, 1) = d;
    }
    static M2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
};

inline M2 m2_midpoint_advance(const M2& g, const M2& k, double h) {
    // gk = g * k; result = g + h * gk + (h^2/2) * gk * k
    const double gka = g.a * k.a + g.b * k.c, gkb = g.a * k.b + g.b * k.d;
    const double gkc = g.c * k.a + g.d * k.c, gkd = g.c * k.b + g.d * k.d;
    const double h2 = 0.5 * h * h;
    return {g.a + h * gka + h2 * (gka * k.a + gkb * k.c),
            g.b + h * gkb + h2 * (gka * k.b + gkb * k.d),
            g.c + h * gkc + h2 * (gkc * k.a + gkd * k.c),
            g.d + h * gkd + h2 * (gkc * k.b + gkd * k.d)};
}

/// Locate the age cell containing s (last index k with nodes[k] <= s).
inline std::size_t age_cell(const AgeGrid& grid, double s) {
    const auto& nodes = grid.nodes;
    if (grid.uniform) {
        const double ds = nodes[1] - nodes[0];
        const auto k = static_cast<std::ptrdiff_t>(s / ds);
        return static_cast<std::size_t>(
            std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(nodes.size()) - 2));
    }
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), s);
    const auto k = static_cast<std::size_t>(std::distance(nodes.begin(), it));
    return std::clamp<std::size_t>(k > 0 ? k - 1 : 0, 0, nodes.size() - 2);
}

}  // namespace detail

/// Semi-Lagrangian integrator for the two-time transport of G. The
/// characteristic through (s_i, x_j) is traced back by (dt, dt/We, u dt),
/// G is interpolated at the foot (linear in age, bilinear in space) and the
/// source dG/dsigma = G * grad_u is integrated with the midpoint rule.
/// Characteristics exiting through s = 0 carry the identity boundary value
/// over their actual lifetime. When the age grid is uniform and
/// dt = We * ds the age foot coincides with the previous node and the age
/// interpolation is exact.
class TransportStepper {
  public:
    explicit TransportStepper(TransportOptions opts = {}) : opts_(opts) {}

    const TransportOptions& options() const { return opts_; }

    /// Homogeneous kinematics: no spatial coupling, kappa from the schedule.
    TransportReport step_homogeneous(DeformationField& field,
                                     const HomogeneousKinematics& flow, double t,
                                     double dt) {
        check_age_cfl(field, dt);
        const double we = field.we();
        const AgeGrid& grid = field.grid();
        const std::size_t na = field.ages();
        const std::size_t nc = field.cells();
        scratch_.resize(field.raw().size());

        const bool aligned = age_aligned(grid, dt, we);
        const Tensor2 id = Tensor2::identity(field.dim());
        const Tensor2 kappa_full = flow.kappa_at(t + 0.5 * dt);
        const bool fast2 = field.dim() == 2 && nc == 1;
        const detail::M2 kmid2 = fast2 ? detail::M2::load(kappa_full) : detail::M2{};
        for (std::size_t a = 0; a < na; ++a) {
            const double s = grid.nodes[a];
            double h = dt;
            if (s * we <= dt * (1.0 + 1e-12) && !(aligned && a == 1)) {
                h = we * s;
                const Tensor2& kappa = flow.kappa_at(t + dt - 0.5 * h);
                for (std::size_t c = 0; c < nc; ++c)
                    scratch_[a * nc + c] = detail::midpoint_advance(id, kappa, h);
                continue;
            }
            if (fast2 && aligned) {
                detail::m2_midpoint_advance(detail::M2::load(field.at(a - 1, 0)), kmid2, dt)
                    .store(scratch_[a]);
                continue;
            }
            Tensor2 foot(field.dim());
            if (aligned) {
                foot = field.at(a - 1, 0);
            } else {
                const double s_foot = s - dt / we;
                const std::size_t k = detail::age_cell(grid, s_foot);
                const double th =
                    (s_foot - grid.nodes[k]) / (grid.nodes[k + 1] - grid.nodes[k]);
                foot = field.at(k, 0) * (1.0 - th) + field.at(k + 1, 0) * th;
            }
            for (std::size_t c = 0; c < nc; ++c)
                scratch_[a * nc + c] = detail::midpoint_advance(foot, kappa_full, h);
        }
        field.raw().swap(scratch_);
        field.reset_boundary();
        return finalize(field);
    }

    /// Channel geometry: `ux`, `uy` are cell-centered velocity components and
    /// `kappa` the cell-centered velocity gradient, all indexed like the
    /// field's layout.
    TransportReport step_channel(DeformationField& field, std::span<const double> ux,
                                 std::span<const double> uy,
                                 std::span<const Tensor2> kappa, double dt) {
        const SpatialLayout& lay = field.layout();
        if (lay.kind != SpatialLayout::Kind::Channel2D)
            throw GeometryUnsupported("step_channel needs a Channel2D field");
        if (ux.size() != field.cells() || uy.size() != field.cells() ||
            kappa.size() != field.cells())
            throw GridMismatch("velocity/gradient fields must match the layout");
        check_age_cfl(field, dt);
        double umax = 0.0, vmax = 0.0;
        for (std::size_t c = 0; c < ux.size(); ++c) {
            umax = std::max(umax, std::abs(ux[c]));
            vmax = std::max(vmax, std::abs(uy[c]));
        }
        if (umax * dt > opts_.cfl * lay.hx() * (1.0 + 1e-9) ||
            vmax * dt > opts_.cfl * lay.hy() * (1.0 + 1e-9))
            throw CflViolation("advective CFL exceeded: reduce dt");

        const double we = field.we();
        const AgeGrid& grid = field.grid();
        const std::size_t na = field.ages();
        const std::size_t nc = field.cells();
        scratch_.resize(field.raw().size());
        const bool aligned = age_aligned(grid, dt, we);
        const Tensor2 id = Tensor2::identity(field.dim());

        if (field.dim() != 2)
            throw GeometryUnsupported("channel transport supports d = 2 only");
        const auto& values = field.raw();
        parallel_for(nc, opts_.threads, [&](std::size_t cb, std::size_t ce) {
            for (std::size_t c = cb; c < ce; ++c) {
                const int i = static_cast<int>(c) % lay.nx;
                const int j = static_cast<int>(c) / lay.nx;
                const double x = lay.cell_x(i), y = lay.cell_y(j);
                const Stencil st = stencil(lay, x - ux[c] * dt, y - uy[c] * dt);
                const Stencil st_mid =
                    stencil(lay, x - ux[c] * 0.5 * dt, y - uy[c] * 0.5 * dt);
                const detail::M2 kmid = gather2(kappa.data(), st_mid);
                for (std::size_t a = 1; a < na; ++a) {
                    const double s = grid.nodes[a];
                    if (s * we <= dt * (1.0 + 1e-12) && !(aligned && a == 1)) {
                        // Born on the s = 0 boundary within this step.
                        const double h = we * s;
                        const Stencil stb =
                            stencil(lay, x - ux[c] * 0.5 * h, y - uy[c] * 0.5 * h);
                        detail::m2_midpoint_advance(detail::M2::identity(),
                                                    gather2(kappa.data(), stb), h)
                            .store(scratch_[a * nc + c]);
                        continue;
                    }
                    detail::M2 foot{};
                    if (aligned) {
                        foot = gather2(values.data() + (a - 1) * nc, st);
                    } else {
                        const double s_foot = s - dt / we;
                        const std::size_t k = detail::age_cell(grid, s_foot);
                        const double th =
                            (s_foot - grid.nodes[k]) / (grid.nodes[k + 1] - grid.nodes[k]);
                        const detail::M2 f0 = gather2(values.data() + k * nc, st);
                        const detail::M2 f1 = gather2(values.data() + (k + 1) * nc, st);
                        foot = {f0.a + th * (f1.a - f0.a), f0.b + th * (f1.b - f0.b),
                                f0.c + th * (f1.c - f0.c), f0.d + th * (f1.d - f0.d)};
                    }
                    detail::m2_midpoint_advance(foot, kmid, dt).store(scratch_[a * nc + c]);
                }
                scratch_[c] = id;
            }
        });
        field.raw().swap(scratch_);
        field.reset_boundary();
        return finalize(field);
    }

  private:
    struct Stencil {
        std::size_t c00, c10, c01, c11;
        double wx, wy;
    };

    /// Bilinear stencil over cell centers; periodic in x, clamped at walls.
    static Stencil stencil(const SpatialLayout& lay, double x, double y) {
        const double hx = lay.hx(), hy = lay.hy();
        double gx = x / hx - 0.5;
        const double gy = std::clamp(y / hy - 0.5, 0.0, static_cast<double>(lay.ny - 1));
        const double fx = std::floor(gx);
        int i0 = static_cast<int>(fx);
        double wx = gx - fx;
        int j0 = static_cast<int>(gy);
        if (j0 > lay.ny - 2) j0 = std::max(0, lay.ny - 2);
        const double wy = std::clamp(gy - j0, 0.0, 1.0);
        auto wrap = [&](int i) {
            i %= lay.nx;
            return i < 0 ? i + lay.nx : i;
        };
        const int i1 = wrap(i0 + 1);
        i0 = wrap(i0);
        const int j1 = std::min(j0 + 1, lay.ny - 1);
        Stencil s;
        s.c00 = lay.index(i0, j0);
        s.c10 = lay.index(i1, j0);
        s.c01 = lay.index(i0, j1);
        s.c11 = lay.index(i1, j1);
        s.wx = wx;
        s.wy = wy;
        return s;
    }

    static detail::M2 gather2(const Tensor2* base, const Stencil& s) {
        const double w00 = (1 - s.wx) * (1 - s.wy), w10 = s.wx * (1 - s.wy);
        const double w01 = (1 - s.wx) * s.wy, w11 = s.wx * s.wy;
        const Tensor2 &t00 = base[s.c00], &t10 = base[s.c10];
        const Tensor2 &t01 = base[s.c01], &t11 = base[s.c11];
        return {w00 * t00(0, 0) + w10 * t10(0, 0) + w01 * t01(0, 0) + w11 * t11(0, 0),
                w00 * t00(0, 1) + w10 * t10(0, 1) + w01 * t01(0, 1) + w11 * t11(0, 1),
                w00 * t00(1, 0) + w10 * t10(1, 0) + w01 * t01(1, 0) + w11 * t11(1, 0),
                w00 * t00(1, 1) + w10 * t10(1, 1) + w01 * t01(1, 1) + w11 * t11(1, 1)};
    }

    static bool age_aligned(const AgeGrid& grid, double dt, double we) {
        if (!grid.uniform || grid.size() < 2) return false;
        const double ds = grid.nodes[1] - grid.nodes[0];
        return std::abs(dt / we - ds) <= 1e-12 * ds;
    }

    void check_age_cfl(const DeformationField& field, double dt) const {
        if (dt <= 0.0) throw InvalidParams("transport step needs dt > 0");
        // Accuracy guard for uniform grids: the foot should not skip nodes.
        // Graded grids carry no such limit: feet land in cells whose size
        // controls the local interpolation error, and nodes younger than
        // dt/We take exact boundary-born values.
        const AgeGrid& grid = field.grid();
        if (!grid.uniform) return;
        const double bound = opts_.cfl * field.we() * grid.min_spacing();
        if (dt > bound * (1.0 + 1e-9))
            throw CflViolation("age CFL exceeded: dt " + std::to_string(dt) + " > " +
                               std::to_string(bound));
    }

    TransportReport finalize(DeformationField& field) {
        TransportReport rep;
        rep.max_det_drift = field.max_det_drift();
        if (rep.max_det_drift > opts_.det_abort_tol)
            throw Error("determinant drift " + std::to_string(rep.max_det_drift) +
                        " exceeds the abort tolerance");
        rep.det_warning = rep.max_det_drift > opts_.det_warn_tol;
        if (opts_.renormalize_det) field.renormalize_det();
        return rep;
    }

    TransportOptions opts_;
    std::vector<Tensor2> scratch_;
};

}  // namespace memflow
