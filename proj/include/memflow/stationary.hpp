#pragma once

#include <optional>
#include <vector>

#include "memflow/flow.hpp"

namespace memflow {

/// Constants standing in for the implicit embedding/smallness constants of
/// the stationary theory; configurable, reported with every result.
struct AdmissibilityConstants {
    double c0 = 0.2;       ///< embedding-constant stand-in
    double sobolev_p = 4.0;
    double r1 = 0.1;       ///< velocity-ball radius analogue
    double f_cap = 0.1;    ///< forcing-norm cap
    bool enforce = true;   ///< fail on violation (otherwise report only)
};

/// Stationary problem on geometries where the age equation closes: either a
/// single homogeneous cell with imposed kappa, or an x-independent parallel
/// shear profile v(y) between walls (u . grad G vanishes for both).
struct StationaryProblem {
    FluidParams params;
    MemoryKernel kernel = MemoryKernel::single_exponential();
    std::shared_ptr<const AgeGrid> grid;
    StrainMeasure measure = StrainMeasure::ucm();

    enum class Geometry { Homogeneous, ParallelShear } geometry = Geometry::ParallelShear;
    std::optional<Tensor2> kappa;  ///< Homogeneous: imposed velocity gradient
    int ny = 64;                   ///< ParallelShear: profile resolution
    double height = 1.0;
    double body_force_x = 0.0;

    AdmissibilityConstants admissibility;
    int threads = 1;
};

struct AdmissibilityReport {
    bool has_envelope = false;
    double alpha = 0.0;
    double growth_c = 0.0;      ///< max(a, b+1) of the declared growth
    double threshold = 0.0;     ///< 3 C0 We c p R1
    double margin = 0.0;        ///< alpha - threshold
    bool admissible = false;
    bool growth_declared = false;
};

/// Check the exponential-envelope smallness condition for the stationary
/// fixed point. Measures without declared growth are treated with the
/// conservative Maxwell-like exponent max(a, b+1) = 2.
inline AdmissibilityReport check_admissibility(const StationaryProblem& prob) {
    AdmissibilityReport rep;
    const auto growth = prob.measure.growth();
    rep.growth_declared = growth.has_value();
    rep.growth_c = growth ? std::max(growth->a, growth->b + 1.0) : 2.0;
    const auto env = prob.kernel.decay_envelope();
    rep.has_envelope = env.has_value();
    rep.alpha = env ? env->alpha : 0.0;
    const auto& ac = prob.admissibility;
    rep.threshold = 3.0 * ac.c0 * prob.params.we * rep.growth_c * ac.sobolev_p * ac.r1;
    if (rep.growth_c <= 0.0) {
        // Bounded strain measures need no decay envelope at all.
        rep.admissible = true;
        rep.margin = rep.has_envelope ? rep.alpha : 0.0;
        return rep;
    }
    rep.admissible = rep.has_envelope && rep.alpha > rep.threshold;
    rep.margin = rep.alpha - rep.threshold;
    return rep;
}

/// Age-only solve of the stationary transport (ParallelShear and Homogeneous
/// close with u . grad G = 0): G(s) = exp(We s kappa) per location, by exact
/// matrix exponentials.
inline DeformationField stationary_age_solve(std::span<const Tensor2> kappa_profile,
                                             double we,
                                             std::shared_ptr<const AgeGrid> grid,
                                             const SpatialLayout& layout) {
    if (kappa_profile.size() != layout.cells())
        throw GeometryUnsupported(
            "stationary age solve needs one kappa per location (x-independent G)");
    const int d = kappa_profile.empty() ? 2 : kappa_profile.front().dim();
    DeformationField field(layout, std::move(grid), we, d);
    for (std::size_t c = 0; c < layout.cells(); ++c) {
        for (std::size_t a = 0; a < field.ages(); ++a)
            field.at(a, c) = tensor_exp(kappa_profile[c], we * field.grid().nodes[a]);
    }
    field.reset_boundary();
    return field;
}

/// Growth diagnosis of the stress integrand m(s) |S(G(s))|: when the tail
/// contributions grow along the last age decade the truncated integral is
/// meaningless and the problem is reported Divergent instead of returning
/// numbers.
struct IntegrandReport {
    bool divergent = false;
    double tail_growth = 0.0;  ///< mean contribution ratio, last vs previous decile
};

inline IntegrandReport stationary_integrand_report(const DeformationField& field,
                                                   const StrainMeasure& measure) {
    IntegrandReport rep;
    const AgeGrid& grid = field.grid();
    const std::size_t n = grid.size();
    if (n < 20) return rep;
    const std::size_t dec = n / 10;
    for (std::size_t c = 0; c < field.cells(); ++c) {
        double last = 0.0, prev = 0.0;
        for (std::size_t a = n - dec; a < n; ++a)
            last += grid.wm[a] * measure.evaluate(field.at(a, c)).norm();
        for (std::size_t a = n - 2 * dec; a < n - dec; ++a)
            prev += grid.wm[a] * measure.evaluate(field.at(a, c)).norm();
        const double ratio = (prev > 0.0) ? last / prev : 0.0;
        rep.tail_growth = std::max(rep.tail_growth, ratio);
    }
    rep.divergent = rep.tail_growth > 1.0;
    return rep;
}

struct StationaryResult {
    enum class Status { Converged, NotConverged, Divergent } status = Status::Converged;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> contraction_history;
    AdmissibilityReport admissibility;
    IntegrandReport integrand;

    // Profiles on cell centers (ParallelShear) or the single cell.
    std::vector<double> y, v, dv_dy, tau12, n1;
    std::vector<Tensor2> tau;
    DeformationField field{SpatialLayout::homogeneous(),
                           std::make_shared<const AgeGrid>(), 1.0};
};

namespace detail {

/// d v / d y at cell centers; 3-point one-sided stencils at the walls keep
/// the derivative exact on parabolic profiles.
inline std::vector<double> profile_derivative(const std::vector<double>& v, double h) {
    const std::size_t n = v.size();
    std::vector<double> dv(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (j == 0)
            dv[j] = n >= 3 ? (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
                           : (v[1] - v[0]) / h;
        else if (j == n - 1)
            dv[j] = n >= 3 ? (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
                           : (v[n - 1] - v[n - 2]) / h;
        else
            dv[j] = (v[j + 1] - v[j - 1]) / (2.0 * h);
    }
    return dv;
}

/// Solve -(1-omega) v'' = rhs with v = 0 on both walls (ghost reflection),
/// by the Thomas algorithm.
inline std::vector<double> solve_wall_poisson(const std::vector<double>& rhs, double h,
                                              double nu) {
    const std::size_t n = rhs.size();
    std::vector<double> a(n, -nu / (h * h)), b(n, 2.0 * nu / (h * h)),
        c(n, -nu / (h * h)), d(rhs), v(n, 0.0);
    b[0] = 3.0 * nu / (h * h);      // ghost = -v0
    b[n - 1] = 3.0 * nu / (h * h);
    for (std::size_t j = 1; j < n; ++j) {
        const double m = a[j] / b[j - 1];
        b[j] -= m * c[j - 1];
        d[j] -= m * d[j - 1];
    }
    v[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t j = n - 1; j-- > 0;) v[j] = (d[j] - c[j] * v[j + 1]) / b[j];
    return v;
}

}  // namespace detail

/// Wall-ghost-corrected profile derivative used both to build the age solve's
/// kappa and to evaluate the converged stress against omega * v'.
inline std::vector<double> stationary_profile_derivative(const std::vector<double>& v,
                                                         double h) {
    return detail::profile_derivative(v, h);
}

/// Stationary fixed point: velocity solve from the frozen stress, exact age
/// solve from the new velocity, stress quadrature, repeated until the
/// velocity stops moving. Reports the empirical contraction factor; failure
/// to contract is an expected outcome outside the small-omega regime and is
/// returned as NotConverged rather than thrown.
inline StationaryResult stationary_fixed_point(const StationaryProblem& prob, double tol = 1e-8,
                                               int max_iters = 100,
                                               const std::vector<double>& v_init = {}) {
    prob.params.validate();
    StationaryResult res;
    res.admissibility = check_admissibility(prob);
    if (prob.admissibility.enforce && !res.admissibility.admissible)
        throw InvalidParams(
            "stationary problem inadmissible: envelope alpha " +
            std::to_string(res.admissibility.alpha) + " vs threshold " +
            std::to_string(res.admissibility.threshold) +
            " (set admissibility.enforce = false to probe anyway)");
    const double we = prob.params.we;
    const double omega = prob.params.omega;

    if (prob.geometry == StationaryProblem::Geometry::Homogeneous) {
        if (!prob.kappa) throw ConfigError("homogeneous stationary problem needs kappa");
        std::vector<Tensor2> kprof{*prob.kappa};
        res.field = stationary_age_solve(kprof, we, prob.grid, SpatialLayout::homogeneous());
        res.integrand = stationary_integrand_report(res.field, prob.measure);
        if (res.integrand.divergent) {
            res.status = StationaryResult::Status::Divergent;
            return res;
        }
        const StressField tau = assemble_tau(res.field, prob.measure, omega, we, prob.threads);
        res.tau = tau.tau;
        res.iterations = 1;
        res.y = {0.0};
        res.v = {0.0};
        res.dv_dy = {(*prob.kappa)(1, 0)};
        res.tau12 = {tau.at(0)(0, 1)};
        res.n1 = {tau.at(0)(0, 0) - tau.at(0)(1, 1)};
        return res;
    }

    // Parallel shear profile.
    const int ny = prob.ny;
    const double h = prob.height / ny;
    const SpatialLayout lay = SpatialLayout::channel(1, ny, 1.0, prob.height);
    std::vector<double> v(ny, 0.0);
    if (!v_init.empty()) {
        if (v_init.size() != static_cast<std::size_t>(ny))
            throw GridMismatch("initial profile size mismatch");
        v = v_init;
    }
    std::vector<double> tau12(ny, 0.0), n1(ny, 0.0);
    std::vector<Tensor2> tau_profile(ny, Tensor2(2));

    auto stress_from = [&](const std::vector<double>& vel) {
        const auto dv = detail::profile_derivative(vel, h);
        std::vector<Tensor2> kprof(ny);
        for (int j = 0; j < ny; ++j) kprof[j] = shear_kappa(dv[j], 2);
        res.field = stationary_age_solve(kprof, we, prob.grid, lay);
        res.integrand = stationary_integrand_report(res.field, prob.measure);
        const StressField tau = assemble_tau(res.field, prob.measure, omega, we, prob.threads);
        return tau.tau;
    };

    tau_profile = stress_from(v);
    double prev_delta = 0.0;
    for (int k = 1; k <= max_iters; ++k) {
        for (int j = 0; j < ny; ++j) tau12[j] = tau_profile[j](0, 1);
        // rhs = f + d tau12 / dy, centered with one-sided wall stencils.
        const auto dtau = detail::profile_derivative(tau12, h);
        std::vector<double> rhs(ny);
        for (int j = 0; j < ny; ++j) rhs[j] = prob.body_force_x + dtau[j];
        const auto v_new = detail::solve_wall_poisson(rhs, h, 1.0 - omega);
        double delta = 0.0;
        for (int j = 0; j < ny; ++j) delta = std::max(delta, std::abs(v_new[j] - v[j]));
        if (prev_delta > 0.0) res.contraction_history.push_back(delta / prev_delta);
        prev_delta = delta;
        v = v_new;
        tau_profile = stress_from(v);
        res.iterations = k;
        res.residual = delta;
        if (res.integrand.divergent) {
            res.status = StationaryResult::Status::Divergent;
            return res;
        }
        if (delta < tol) break;
    }
    res.status = res.residual < tol ? StationaryResult::Status::Converged
                                    : StationaryResult::Status::NotConverged;
    res.y.resize(ny);
    for (int j = 0; j < ny; ++j) res.y[j] = (j + 0.5) * h;
    res.v = v;
    res.dv_dy = detail::profile_derivative(v, h);
    res.tau = tau_profile;
    res.tau12.resize(ny);
    res.n1.resize(ny);
    for (int j = 0; j < ny; ++j) {
        res.tau12[j] = tau_profile[j](0, 1);
        res.n1[j] = tau_profile[j](0, 0) - tau_profile[j](1, 1);
    }
    return res;
}

}  // namespace memflow
