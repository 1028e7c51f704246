#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "memflow/kernel.hpp"

namespace memflow {

/// Discretization of the age half-line for the stress integral
/// int_0^inf m(s) f(s) ds ~= sum_i w_i m(s_i) f(s_i).
///
/// Nodes are strictly increasing with s_0 = 0. For kernels singular at the
/// origin the node s_0 carries zero weight and the analytically known mass of
/// the first cell [0, s_1] is folded into w_1, so the weighted sum keeps its
/// plain composite-trapezoid form while still resolving the integrable
/// singularity.
struct AgeGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    /// Cached products w_i * m(s_i) (with the fold-in applied); these are the
    /// effective quadrature weights of the stress integral.
    std::vector<double> wm;
    double s_max = 0.0;
    double mass = 0.0;      ///< sum_i w_i m(s_i); must be within quad_tol of 1
    double tail_tol = 0.0;
    double quad_tol = 0.0;
    std::string grading;    ///< human-readable node-distribution description

    std::size_t size() const { return nodes.size(); }
    /// True when spacing is uniform (semi-Lagrangian age advection can then be
    /// node-aligned by choosing dt = We * ds).
    bool uniform = false;
    double min_spacing() const {
        double h = nodes.size() > 1 ? nodes[1] - nodes[0] : 0.0;
        for (std::size_t i = 2; i < nodes.size(); ++i)
            h = std::min(h, nodes[i] - nodes[i - 1]);
        return h;
    }
};

/// Requested node distribution for build_age_grid.
struct AgeGridSpacing {
    enum class Mode { Auto, Uniform, Graded } mode = Mode::Auto;
    double ds = 0.0;           ///< explicit uniform spacing (Uniform mode)
    double ratio = 1.15;       ///< geometric growth factor (Graded mode)
    double first_frac = 1e-6;  ///< first interval as a fraction of s_max
    static AgeGridSpacing automatic() { return {}; }
    static AgeGridSpacing uniform(double ds) {
        AgeGridSpacing s;
        s.mode = Mode::Uniform;
        s.ds = ds;
        return s;
    }
    static AgeGridSpacing graded(double ratio, double first_frac = 1e-6) {
        AgeGridSpacing s;
        s.mode = Mode::Graded;
        s.ratio = ratio;
        s.first_frac = first_frac;
        return s;
    }
};

namespace detail {

constexpr double kAgeCap = 1e3;  ///< hard cap on the truncation age

inline double solve_truncation_age(const MemoryKernel& kernel, double tail_tol) {
    const double lo0 = kernel.support_start();
    if (kernel.tail_mass(kAgeCap) > tail_tol)
        throw NoDecay("kernel tail exceeds tail_tol at the age cap " +
                      std::to_string(kAgeCap) + "; kernel unsuitable for truncation");
    double lo = lo0, hi = kAgeCap;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (kernel.tail_mass(mid) > tail_tol ? lo : hi) = mid;
    }
    return hi;
}

inline AgeGrid assemble_grid(const MemoryKernel& kernel, std::vector<double> nodes,
                             double s_max) {
    AgeGrid g;
    g.nodes = std::move(nodes);
    g.s_max = s_max;
    const std::size_t n = g.nodes.size();
    g.weights.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = g.nodes[i + 1] - g.nodes[i];
        g.weights[i] += 0.5 * h;
        g.weights[i + 1] += 0.5 * h;
    }
    g.wm.assign(n, 0.0);
    std::size_t first = 0;
    if (kernel.singular_at_zero() && n < 3)
        throw AgeGridTolerance("singular kernel needs at least 3 age nodes");
    if (kernel.singular_at_zero()) {
        // Zero-weight singular node; assign the first cell its exact mass.
        g.weights[0] = 0.0;
        const double s1 = g.nodes[1];
        const double head = kernel.head_mass(s1);
        g.weights[1] = 0.5 * (g.nodes[2] - s1) + head / kernel.evaluate(s1);
        first = 1;
    }
    // Fold the closed-form tail mass beyond s_max into the last node, so the
    // weighted node sum carries the kernel's full unit mass.
    g.weights[n - 1] += kernel.tail_mass(g.nodes[n - 1]) / kernel.evaluate(g.nodes[n - 1]);
    double mass = 0.0;
    for (std::size_t i = first; i < n; ++i) {
        g.wm[i] = g.weights[i] * kernel.evaluate(std::max(g.nodes[i], kernel.support_start()));
        mass += g.wm[i];
    }
    g.mass = mass;
    return g;
}

inline std::vector<double> uniform_nodes(double ds, double s_max_min) {
    const std::size_t n = static_cast<std::size_t>(std::ceil(s_max_min / ds - 1e-12));
    std::vector<double> nodes(n + 1);
    for (std::size_t i = 0; i <= n; ++i) nodes[i] = static_cast<double>(i) * ds;
    return nodes;
}

inline std::vector<double> graded_nodes(double start, double s_max, double ratio,
                                        double first_frac) {
    if (!(ratio > 1.0)) throw InvalidParams("graded age grid needs ratio > 1");
    std::vector<double> nodes{0.0};
    double s = start > 0.0 ? start : first_frac * s_max;
    while (s < s_max * (1.0 - 1e-12)) {
        nodes.push_back(s);
        s *= ratio;
        if (nodes.size() > 4'000'000)
            throw AgeGridTolerance("graded age grid exceeded the node cap");
    }
    // Merge a too-thin final cell into the endpoint.
    if (nodes.size() > 2 && nodes.back() > s_max / std::sqrt(ratio)) nodes.pop_back();
    nodes.push_back(s_max);
    return nodes;
}

}  // namespace detail

/// Build an age grid for a kernel: the truncation age s_max satisfies
/// int_{s_max}^inf m < tail_tol (closed-form tails), nodes are geometrically
/// graded toward 0 for singular kernels and uniform otherwise, weights are
/// composite trapezoid. The unit-mass invariant |sum w_i m(s_i) - 1| <=
/// quad_tol is verified; automatic spacings are refined until it holds, an
/// explicit uniform spacing fails hard instead (refining would break
/// node-alignment chosen by the caller).
inline AgeGrid build_age_grid(const MemoryKernel& kernel, double tail_tol,
                              double quad_tol,
                              AgeGridSpacing spacing = AgeGridSpacing::automatic()) {
    if (!(tail_tol > 0.0 && tail_tol < 1.0) || !(quad_tol > 0.0 && quad_tol < 1.0))
        throw InvalidParams("age grid tolerances must lie in (0, 1)");
    const double s_max = detail::solve_truncation_age(kernel, tail_tol);

    using Mode = AgeGridSpacing::Mode;
    Mode mode = spacing.mode;
    if (mode == Mode::Auto)
        mode = kernel.singular_at_zero() ? Mode::Graded : Mode::Uniform;

    auto finish = [&](AgeGrid g, std::string grading, bool uniform) {
        g.tail_tol = tail_tol;
        g.quad_tol = quad_tol;
        g.grading = std::move(grading);
        g.uniform = uniform;
        return g;
    };

    if (mode == Mode::Uniform) {
        const bool explicit_ds = spacing.mode == Mode::Uniform && spacing.ds > 0.0;
        double ds = explicit_ds ? spacing.ds
                                : std::min(0.05, std::sqrt(quad_tol) * 2.0);
        for (int pass = 0;; ++pass) {
            const double start = kernel.support_start();
            auto nodes = detail::uniform_nodes(ds, std::max(s_max, start + 2 * ds));
            if (start > 0.0)
                for (auto& s : nodes) s = (s == 0.0) ? 0.0 : s + start;
            AgeGrid g = detail::assemble_grid(kernel, std::move(nodes), s_max);
            if (std::abs(g.mass - 1.0) <= quad_tol)
                // A positive support start shifts the interior nodes, so the
                // grid is not equispaced from zero and must not advertise the
                // uniform fast path.
                return finish(std::move(g), "uniform(ds=" + std::to_string(ds) + ")",
                              start == 0.0);
            if (explicit_ds)
                throw AgeGridTolerance(
                    "explicit uniform spacing ds=" + std::to_string(ds) +
                    " misses quad_tol (mass error " + std::to_string(g.mass - 1.0) + ")");
            if (pass > 24) throw AgeGridTolerance("uniform age grid failed to reach quad_tol");
            ds *= 0.5;
        }
    }

    // Graded toward the origin; the requested ratio is a starting point and
    // is halved (in ratio - 1) until the mass invariant holds.
    double ratio = spacing.ratio;
    for (int pass = 0;; ++pass) {
        auto nodes = detail::graded_nodes(kernel.support_start(), s_max, ratio,
                                          spacing.first_frac);
        AgeGrid g = detail::assemble_grid(kernel, std::move(nodes), s_max);
        if (std::abs(g.mass - 1.0) <= quad_tol)
            return finish(std::move(g), "graded(ratio=" + std::to_string(ratio) + ")", false);
        if (pass > 24)
            throw AgeGridTolerance("graded age grid failed to reach quad_tol (mass error " +
                                   std::to_string(g.mass - 1.0) + ")");
        ratio = 1.0 + 0.5 * (ratio - 1.0);
    }
}

/// Quadrature of the kernel-weighted samples: sum_i w_i m(s_i) f(s_i).
/// Linear in the samples.
inline double kernel_integral(const MemoryKernel& kernel, const AgeGrid& grid,
                              std::span<const double> samples) {
    (void)kernel;
    if (samples.size() != grid.size())
        throw GridMismatch("kernel_integral: " + std::to_string(samples.size()) +
                           " samples for " + std::to_string(grid.size()) + " nodes");
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) acc += grid.wm[i] * samples[i];
    return acc;
}

}  // namespace memflow
