#pragma once

#include <span>
#include <vector>

#include "memflow/field.hpp"
#include "memflow/tensor.hpp"

namespace memflow {

/// Staggered (MAC) finite-difference grid on a 2D channel: periodic in x,
/// solid walls at y = 0 and y = ly.
///   u: x-face values, nx * ny      (face i at x = i hx, row j at y = (j+1/2) hy)
///   v: y-face values, nx * (ny+1)  (column i at x = (i+1/2) hx, face j at y = j hy)
///   p, tau, G: cell centers, nx * ny
/// Wall-normal velocity lives on the wall faces and is pinned to zero; the
/// tangential wall condition enters through ghost reflection.
struct MacGrid {
    int nx = 0, ny = 0;
    double lx = 1.0, ly = 1.0;

    MacGrid() = default;
    MacGrid(int nx_, int ny_, double lx_, double ly_) : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
        if (nx < 3 || ny < 3) throw InvalidParams("MAC grid needs at least 3x3 cells");
    }

    double hx() const { return lx / nx; }
    double hy() const { return ly / ny; }
    std::size_t ncells() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t nu() const { return ncells(); }
    std::size_t nv() const { return static_cast<std::size_t>(nx) * (ny + 1); }

    int wrap(int i) const {
        i %= nx;
        return i < 0 ? i + nx : i;
    }
    std::size_t iu(int i, int j) const {
        return static_cast<std::size_t>(j) * nx + wrap(i);
    }
    std::size_t iv(int i, int j) const {
        return static_cast<std::size_t>(j) * nx + wrap(i);
    }
    std::size_t ip(int i, int j) const {
        return static_cast<std::size_t>(j) * nx + wrap(i);
    }
};

/// Tangential wall velocities (bottom, top); the top value drives Couette flow.
struct WallVelocity {
    double bottom = 0.0;
    double top = 0.0;
};

namespace mac {

using Vec = std::vector<double>;

inline double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double a : x) m = std::max(m, std::abs(a));
    return m;
}

/// Discrete divergence at cell centers.
inline void divergence(const MacGrid& g, std::span<const double> u,
                       std::span<const double> v, Vec& out) {
    out.assign(g.ncells(), 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out[g.ip(i, j)] = (u[g.iu(i + 1, j)] - u[g.iu(i, j)]) / g.hx() +
                              (v[g.iv(i, j + 1)] - v[g.iv(i, j)]) / g.hy();
}

/// 5-point Laplacian on the u-grid with ghost reflection at the walls
/// (homogeneous part; the wall velocity enters the right-hand side).
inline void laplace_u(const MacGrid& g, std::span<const double> u, Vec& out) {
    const double ax = 1.0 / (g.hx() * g.hx()), ay = 1.0 / (g.hy() * g.hy());
    out.assign(g.nu(), 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double c = u[g.iu(i, j)];
            double lap = ax * (u[g.iu(i + 1, j)] - 2.0 * c + u[g.iu(i - 1, j)]);
            const double up = (j + 1 < g.ny) ? u[g.iu(i, j + 1)] : -c;  // ghost = 2*u_wall - c
            const double dn = (j > 0) ? u[g.iu(i, j - 1)] : -c;
            lap += ay * (up - 2.0 * c + dn);
            out[g.iu(i, j)] = lap;
        }
}

/// Wall-velocity contribution to the u-Laplacian right-hand side.
inline void laplace_u_wall_rhs(const MacGrid& g, const WallVelocity& wall, double coeff,
                               Vec& rhs) {
    const double ay = 1.0 / (g.hy() * g.hy());
    for (int i = 0; i < g.nx; ++i) {
        rhs[g.iu(i, 0)] += coeff * ay * 2.0 * wall.bottom;
        rhs[g.iu(i, g.ny - 1)] += coeff * ay * 2.0 * wall.top;
    }
}

/// 5-point Laplacian on the v-grid; wall faces are Dirichlet dofs (v = 0) and
/// are skipped (their rows act as identity).
inline void laplace_v(const MacGrid& g, std::span<const double> v, Vec& out) {
    const double ax = 1.0 / (g.hx() * g.hx()), ay = 1.0 / (g.hy() * g.hy());
    out.assign(g.nv(), 0.0);
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double c = v[g.iv(i, j)];
            out[g.iv(i, j)] = ax * (v[g.iv(i + 1, j)] - 2.0 * c + v[g.iv(i - 1, j)]) +
                              ay * (v[g.iv(i, j + 1)] - 2.0 * c + v[g.iv(i, j - 1)]);
        }
}

/// 5-point Laplacian at cell centers with periodic x and Neumann walls
/// (pressure-Poisson operator).
inline void laplace_p(const MacGrid& g, std::span<const double> p, Vec& out) {
    const double ax = 1.0 / (g.hx() * g.hx()), ay = 1.0 / (g.hy() * g.hy());
    out.assign(g.ncells(), 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double c = p[g.ip(i, j)];
            double lap = ax * (p[g.ip(i + 1, j)] - 2.0 * c + p[g.ip(i - 1, j)]);
            const double up = (j + 1 < g.ny) ? p[g.ip(i, j + 1)] : c;
            const double dn = (j > 0) ? p[g.ip(i, j - 1)] : c;
            lap += ay * (up - 2.0 * c + dn);
            out[g.ip(i, j)] = lap;
        }
}

inline void subtract_mean(Vec& x) {
    double mean = 0.0;
    for (double a : x) mean += a;
    mean /= static_cast<double>(x.size());
    for (double& a : x) a -= mean;
}

/// Matrix-free conjugate gradient for SPD operators; returns iterations used.
/// A correctly sized `x` is taken as the initial guess (warm start), anything
/// else starts from zero. Throws LinearSolveFailure past the iteration cap.
template <typename Op>
int conjugate_gradient(const Op& apply, std::span<const double> rhs, Vec& x, double tol,
                       int max_iters, bool zero_mean = false) {
    const std::size_t n = rhs.size();
    Vec r(rhs.begin(), rhs.end());
    if (x.size() == n) {
        Vec ax(n, 0.0);
        apply(x, ax);
        for (std::size_t k = 0; k < n; ++k) r[k] -= ax[k];
    } else {
        x.assign(n, 0.0);
    }
    if (zero_mean) subtract_mean(r);
    Vec p(r), ap(n, 0.0);
    double rr = 0.0;
    for (double a : r) rr += a * a;
    double rhs2 = 0.0;
    for (double a : rhs) rhs2 += a * a;
    const double stop = std::max(tol * tol * std::max(rr, rhs2), 1e-300);
    if (rr <= stop) return 0;
    for (int it = 1; it <= max_iters; ++it) {
        apply(p, ap);
        if (zero_mean) subtract_mean(ap);
        double pap = 0.0;
        for (std::size_t k = 0; k < n; ++k) pap += p[k] * ap[k];
        if (!(pap > 0.0)) throw LinearSolveFailure("CG breakdown: non-positive curvature");
        const double alpha = rr / pap;
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        double rr_new = 0.0;
        for (double a : r) rr_new += a * a;
        if (rr_new <= stop) {
            if (zero_mean) subtract_mean(x);
            return it;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
    }
    throw LinearSolveFailure("CG exceeded the iteration cap");
}

}  // namespace mac

}  // namespace memflow
