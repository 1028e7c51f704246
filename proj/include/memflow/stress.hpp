#pragma once

#include <functional>
#include <vector>

#include "memflow/field.hpp"
#include "memflow/measure.hpp"

namespace memflow {

/// Elastic stress field tau = (omega/We) sum_i w_i m(s_i) S(G(s_i, .)),
/// one tensor per spatial cell of the deformation field's layout.
struct StressField {
    SpatialLayout layout;
    double omega = 0.0;
    double we = 1.0;
    std::vector<Tensor2> tau;

    const Tensor2& at(std::size_t cell) const { return tau[cell]; }
    double max_norm() const {
        double m = 0.0;
        for (const auto& t : tau) m = std::max(m, t.norm());
        return m;
    }
};

/// Quadrature of the constitutive integral on the field's own age grid (no
/// re-interpolation; the discrete stress bounds below are then exact
/// inequalities of the quadrature). Linear in the strain samples.
inline StressField assemble_tau(const DeformationField& field, const StrainMeasure& measure,
                                double omega, double we, int threads = 1) {
    StressField out;
    out.layout = field.layout();
    out.omega = omega;
    out.we = we;
    const std::size_t nc = field.cells();
    const std::size_t na = field.ages();
    out.tau.assign(nc, Tensor2(field.dim()));
    const AgeGrid& grid = field.grid();
    const double pref = omega / we;
    parallel_for(nc, threads, [&](std::size_t cb, std::size_t ce) {
        for (std::size_t c = cb; c < ce; ++c) {
            Tensor2 acc(field.dim());
            for (std::size_t a = 0; a < na; ++a) {
                const double w = grid.wm[a];
                if (w == 0.0) continue;
                try {
                    acc += measure.evaluate(field.at(a, c)) * w;
                } catch (const SingularTensor& e) {
                    throw SingularTensor(std::string(e.what()) + " at age node " +
                                         std::to_string(a) + ", cell " + std::to_string(c));
                }
            }
            out.tau[c] = acc * pref;
        }
    });
    return out;
}

/// Spatial gradient of G at one (age, cell) by central differences on the
/// channel layout (periodic in x, one-sided at the walls).
inline Tensor3 field_gradient(const DeformationField& field, std::size_t age,
                              std::size_t cell) {
    const SpatialLayout& lay = field.layout();
    const int d = field.dim();
    Tensor3 g(d);
    if (lay.kind == SpatialLayout::Kind::Homogeneous) return g;
    const int i = static_cast<int>(cell) % lay.nx;
    const int j = static_cast<int>(cell) / lay.nx;
    const auto at = [&](int ii, int jj) -> const Tensor2& {
        ii = (ii % lay.nx + lay.nx) % lay.nx;
        return field.at(age, lay.index(ii, jj));
    };
    const Tensor2 dx = (at(i + 1, j) - at(i - 1, j)) * (0.5 / lay.hx());
    g.set_slice(0, dx);
    Tensor2 dy(d);
    if (j == 0)
        dy = (at(i, 1) - at(i, 0)) * (1.0 / lay.hy());
    else if (j == lay.ny - 1)
        dy = (at(i, j) - at(i, j - 1)) * (1.0 / lay.hy());
    else
        dy = (at(i, j + 1) - at(i, j - 1)) * (0.5 / lay.hy());
    g.set_slice(1, dy);
    return g;
}

/// Gradient of the assembled stress from the chain rule,
///   d_i tau_jk = (omega/We) sum_a w_a m(s_a) sum_lm d_i G_lm dS_lm,jk,
/// with the per-(age, cell) gradient of G supplied by `grad_g` (finite
/// differences of the field by default, analytic for manufactured tests).
inline std::vector<Tensor3> assemble_grad_tau(
    const DeformationField& field, const StrainMeasure& measure, double omega, double we,
    const std::function<Tensor3(std::size_t age, std::size_t cell)>& grad_g,
    int threads = 1) {
    const std::size_t nc = field.cells();
    const std::size_t na = field.ages();
    const int d = field.dim();
    std::vector<Tensor3> out(nc, Tensor3(d));
    const AgeGrid& grid = field.grid();
    const double pref = omega / we;
    parallel_for(nc, threads, [&](std::size_t cb, std::size_t ce) {
        for (std::size_t c = cb; c < ce; ++c) {
            Tensor3 acc(d);
            for (std::size_t a = 0; a < na; ++a) {
                const double w = grid.wm[a];
                if (w == 0.0) continue;
                const Tensor4 ds = measure.derivative(field.at(a, c));
                const Tensor3 gg = grad_g(a, c);
                for (int i = 0; i < d; ++i) {
                    const Tensor2 contr = ds.contract_left(gg.slice(i));
                    for (int jj = 0; jj < d; ++jj)
                        for (int k = 0; k < d; ++k)
                            acc(i, jj, k) += w * contr(jj, k);
                }
            }
            for (int i = 0; i < d; ++i)
                for (int jj = 0; jj < d; ++jj)
                    for (int k = 0; k < d; ++k) out[c](i, jj, k) = pref * acc(i, jj, k);
        }
    });
    return out;
}

inline std::vector<Tensor3> assemble_grad_tau(const DeformationField& field,
                                              const StrainMeasure& measure, double omega,
                                              double we, int threads = 1) {
    return assemble_grad_tau(
        field, measure, omega, we,
        [&](std::size_t a, std::size_t c) { return field_gradient(field, a, c); }, threads);
}

/// Discrete stress bounds: with S0 = max |S(G)| and S1 = max |S'(G)| over the
/// field's sampled range, the quadrature satisfies
///   |tau| <= (omega/We) S0 sum(w m)   and   |grad tau| <= (omega/We) S1 max|grad G| sum(w m)
/// cellwise, with no tolerance beyond roundoff. A violation indicates an
/// implementation bug and throws BoundViolated.
struct StressBoundReport {
    double s0 = 0.0;               ///< max |S(G)| over (age, cell)
    double s1 = 0.0;               ///< max |S'(G)| over (age, cell)
    double max_tau = 0.0;
    double tau_bound = 0.0;
    double max_grad_tau = 0.0;
    double grad_tau_bound = 0.0;
    bool grad_checked = false;
};

inline StressBoundReport stress_bound_report(const StressField& stress,
                                             const StrainMeasure& measure,
                                             const DeformationField& field,
                                             bool check_gradient = true) {
    StressBoundReport rep;
    const AgeGrid& grid = field.grid();
    double max_grad_g = 0.0;
    for (std::size_t a = 0; a < field.ages(); ++a)
        for (std::size_t c = 0; c < field.cells(); ++c) {
            if (grid.wm[a] == 0.0 && a == 0 && field.grid().nodes[0] == 0.0 &&
                grid.weights[0] == 0.0)
                continue;  // singular node carries no quadrature weight
            rep.s0 = std::max(rep.s0, measure.evaluate(field.at(a, c)).norm());
            rep.s1 = std::max(rep.s1, norm4(measure.derivative(field.at(a, c))));
            if (check_gradient)
                max_grad_g = std::max(max_grad_g, field_gradient(field, a, c).norm());
        }
    const double pref = stress.omega / stress.we;
    rep.max_tau = stress.max_norm();
    rep.tau_bound = pref * rep.s0 * grid.mass;
    const double slack = 1e-13;
    if (rep.max_tau > rep.tau_bound * (1.0 + slack) + 1e-300)
        throw BoundViolated("stress magnitude " + std::to_string(rep.max_tau) +
                            " exceeds the quadrature bound " + std::to_string(rep.tau_bound));
    if (check_gradient && field.layout().kind == SpatialLayout::Kind::Channel2D) {
        const auto grads = assemble_grad_tau(field, measure, stress.omega, stress.we);
        for (const auto& g : grads) rep.max_grad_tau = std::max(rep.max_grad_tau, g.norm());
        rep.grad_tau_bound = pref * rep.s1 * max_grad_g * grid.mass;
        rep.grad_checked = true;
        if (rep.max_grad_tau > rep.grad_tau_bound * (1.0 + slack) + 1e-300)
            throw BoundViolated("stress gradient exceeds the quadrature bound");
    }
    return rep;
}

}  // namespace memflow
