#pragma once

#include <functional>
#include <vector>

#include "memflow/age_grid.hpp"
#include "memflow/kinematics.hpp"

namespace memflow {

/// Independent differential oracle for the Finger tensor: integrates
///   dB/dsigma = B * kappa + kappa^T * B
/// with RK4 along the characteristic arriving at each age node at t_end,
/// starting from B = id at the s = 0 boundary (or from finger(g_old) on the
/// initial slice). Matches finger(exact_homogeneous(...)) to O(dt^4).
inline std::vector<Tensor2> finger_evolution_oracle(
    const HomogeneousKinematics& flow, double we, double dt, int steps,
    std::span<const double> ages,
    const std::function<Tensor2(double)>& g_old = nullptr) {
    const int d = flow.dim();
    const double t_end = dt * steps;
    auto rhs = [&](const Tensor2& b, double sigma) {
        const Tensor2& k = flow.kappa_at(sigma);
        return b.mul(k) + k.transpose().mul(b);
    };
    std::vector<Tensor2> out;
    out.reserve(ages.size());
    for (const double s : ages) {
        const double birth = t_end - we * s;
        double sigma = std::max(birth, 0.0);
        Tensor2 b = (birth >= 0.0)
                        ? Tensor2::identity(d)
                        : finger(g_old ? g_old(s - t_end / we) : Tensor2::identity(d));
        while (sigma < t_end - 1e-15) {
            const double h = std::min(dt, t_end - sigma);
            const Tensor2 k1 = rhs(b, sigma);
            const Tensor2 k2 = rhs(b + k1 * (0.5 * h), sigma + 0.5 * h);
            const Tensor2 k3 = rhs(b + k2 * (0.5 * h), sigma + 0.5 * h);
            const Tensor2 k4 = rhs(b + k3 * h, sigma + h);
            b += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
            sigma += h;
        }
        out.push_back(b);
    }
    return out;
}

namespace detail {

template <typename Rhs>
Tensor2 rk4_integrate(Tensor2 y, double t0, double t1, double dt, const Rhs& rhs) {
    double t = t0;
    while (t < t1 - 1e-15) {
        const double h = std::min(dt, t1 - t);
        const Tensor2 k1 = rhs(y, t);
        const Tensor2 k2 = rhs(y + k1 * (0.5 * h), t + 0.5 * h);
        const Tensor2 k3 = rhs(y + k2 * (0.5 * h), t + 0.5 * h);
        const Tensor2 k4 = rhs(y + k3 * h, t + h);
        y += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        t += h;
    }
    return y;
}

}  // namespace detail

/// Differential UCM oracle for startup of steady simple shear from rest:
///   We (d_t tau - grad_u^T tau - tau grad_u) + tau = 2 omega D(u).
/// Closed form of the shear component: tau_12(t) = omega gammadot (1 - e^{-t/We}).
inline Tensor2 ucm_stress_oracle(double gamma_dot, double we, double omega, double t,
                                 double dt = 1e-4) {
    const Tensor2 kappa = shear_kappa(gamma_dot, 2);
    const Tensor2 two_omega_d = sym(kappa) * (2.0 * omega);
    auto rhs = [&](const Tensor2& tau, double) {
        return (two_omega_d - tau) * (1.0 / we) + kappa.transpose().mul(tau) +
               tau.mul(kappa);
    };
    return detail::rk4_integrate(Tensor2(2), 0.0, t, dt, rhs);
}

/// Differential LCM oracle for startup shear:
///   We (d_t tau + tau grad_u^T + grad_u tau) + tau = 2 omega D(u).
inline Tensor2 lcm_stress_oracle(double gamma_dot, double we, double omega, double t,
                                 double dt = 1e-4) {
    const Tensor2 kappa = shear_kappa(gamma_dot, 2);
    const Tensor2 two_omega_d = sym(kappa) * (2.0 * omega);
    auto rhs = [&](const Tensor2& tau, double) {
        return (two_omega_d - tau) * (1.0 / we) - tau.mul(kappa.transpose()) -
               kappa.mul(tau);
    };
    return detail::rk4_integrate(Tensor2(2), 0.0, t, dt, rhs);
}

/// Closed-form startup curve tau_12(t) for both Maxwell measures.
inline double maxwell_startup_shear_stress(double gamma_dot, double we, double omega,
                                           double t) {
    return omega * gamma_dot * (1.0 - std::exp(-t / we));
}

// ---------------------------------------------------------------------------

/// (s, t) mesh for the Gronwall validator; the time step is the node-aligned
/// We * ds so characteristics pass exactly through age nodes.
struct GronwallMesh {
    double ds = 1e-3;
    double s_max = 2.0;
    double t_end = 1.0;
};

struct GronwallReport {
    /// Largest relative excess of the numeric solution over the bound
    /// zeta(s,t) exp(int_0^t f); nonpositive when the bound holds everywhere.
    double max_bound_excess = -1.0;
    /// Largest relative deviation from the bound on the equality region
    /// t <= We s, where characteristics start on the initial slice and the
    /// bound is attained.
    double max_equality_error = 0.0;
    bool bound_holds = false;
};

/// Numeric validator of the two-variable Gronwall bound: integrates the
/// equality case d_t y + (1/We) d_s y = f(t) y along characteristics on a
/// node-aligned (s, t) mesh (dt = We ds) and compares with
/// zeta(s,t) exp(int_0^t f). Throws BoundViolated when the bound is exceeded
/// beyond `tol` (the bound is a theorem; an excess flags a setup bug).
inline GronwallReport gronwall_validate(const std::function<double(double)>& f,
                                        const std::function<double(double)>& y0_age,
                                        const std::function<double(double)>& y0_time,
                                        double we, GronwallMesh mesh, double tol = 1e-9) {
    const auto na = static_cast<std::size_t>(std::llround(mesh.s_max / mesh.ds)) + 1;
    const double dt = we * mesh.ds;  // node-aligned characteristics
    const auto nt = static_cast<std::size_t>(std::llround(mesh.t_end / dt));
    std::vector<double> y(na), ynext(na);
    for (std::size_t a = 0; a < na; ++a) y[a] = y0_age(a * mesh.ds);
    y[0] = y0_time(0.0);

    // Midpoint quadrature of int_0^t f, matching the source integrator.
    std::vector<double> intf(nt + 1, 0.0);
    for (std::size_t n = 0; n < nt; ++n)
        intf[n + 1] = intf[n] + dt * f((n + 0.5) * dt);

    GronwallReport rep;
    for (std::size_t n = 0; n < nt; ++n) {
        const double t_new = (n + 1) * dt;
        const double growth = std::exp(dt * f((n + 0.5) * dt));
        for (std::size_t a = 1; a < na; ++a) ynext[a] = y[a - 1] * growth;
        ynext[0] = y0_time(t_new);
        y.swap(ynext);
        for (std::size_t a = 0; a < na; ++a) {
            const double s = a * mesh.ds;
            const double zeta =
                (t_new <= we * s) ? y0_age(s - t_new / we) : y0_time(t_new - we * s);
            const double bound = zeta * std::exp(intf[n + 1]);
            const double scale = std::max(std::abs(bound), 1e-300);
            rep.max_bound_excess =
                std::max(rep.max_bound_excess, (y[a] - bound) / scale);
            if (t_new <= we * s)
                rep.max_equality_error =
                    std::max(rep.max_equality_error, std::abs(y[a] - bound) / scale);
        }
    }
    rep.bound_holds = rep.max_bound_excess <= tol;
    if (!rep.bound_holds)
        throw BoundViolated("Gronwall bound exceeded by relative " +
                            std::to_string(rep.max_bound_excess));
    return rep;
}

}  // namespace memflow
