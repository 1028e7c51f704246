#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "memflow/tensor.hpp"

namespace memflow {

/// Spatially constant velocity gradient, possibly time-dependent as a step
/// schedule. Each piece must be traceless (incompressibility).
class HomogeneousKinematics {
  public:
    explicit HomogeneousKinematics(Tensor2 kappa) { add_piece(0.0, kappa); }
    HomogeneousKinematics(int d) { add_piece(0.0, Tensor2(d)); }

    void add_piece(double t_start, const Tensor2& kappa) {
        if (std::abs(kappa.trace()) > 1e-12 * std::max(1.0, kappa.norm()))
            throw InvalidParams("homogeneous velocity gradient must be traceless");
        if (!pieces_.empty() && t_start <= pieces_.back().t_start)
            throw InvalidParams("kinematics schedule must have increasing start times");
        pieces_.push_back({t_start, kappa});
    }

    int dim() const { return pieces_.front().kappa.dim(); }

    const Tensor2& kappa_at(double t) const {
        for (std::size_t i = pieces_.size(); i-- > 0;)
            if (t >= pieces_[i].t_start - 1e-15) return pieces_[i].kappa;
        return pieces_.front().kappa;
    }

    /// Time-ordered product of piecewise exponentials: the deformation
    /// accumulated by a fluid element between t0 and t1,
    ///   G(t1) = G(t0) * P(t0, t1),   dG/dt = G * kappa(t).
    Tensor2 propagator(double t0, double t1) const {
        const int d = dim();
        Tensor2 p = Tensor2::identity(d);
        if (t1 <= t0) return p;
        double t = t0;
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            const double seg_end =
                (i + 1 < pieces_.size()) ? std::min(pieces_[i + 1].t_start, t1) : t1;
            if (seg_end <= t) continue;
            const double seg_start = std::max(t, pieces_[i].t_start);
            if (seg_end > seg_start)
                p = p.mul(tensor_exp(pieces_[i].kappa, seg_end - seg_start));
            t = seg_end;
            if (t >= t1) break;
        }
        return p;
    }

  private:
    struct Piece {
        double t_start;
        Tensor2 kappa;
    };
    std::vector<Piece> pieces_;
};

/// Velocity gradient of simple shear with flow u_1 = rate * x_2: under the
/// convention (grad_u)(i,j) = d u_j / d x_i this puts the rate in entry (2,1).
inline Tensor2 shear_kappa(double rate, int d = 2) {
    Tensor2 k(d);
    k(1, 0) = rate;
    return k;
}

/// Planar elongation diag(rate, -rate).
inline Tensor2 elongation_kappa(double rate, int d = 2) {
    Tensor2 k(d);
    k(0, 0) = rate;
    k(1, 1) = -rate;
    return k;
}

/// Exact solution of the homogeneous age-transport problem
///   d_t G + (1/We) d_s G = G * kappa(t),  G|_{s=0} = id,  G|_{t=0} = g_old:
/// characteristics born on the s = 0 boundary carry the identity forward,
/// older ones carry the initial data.
inline Tensor2 exact_homogeneous(const HomogeneousKinematics& flow,
                                 const std::function<Tensor2(double)>& g_old, double we,
                                 double t, double s) {
    const double birth = t - we * s;
    if (birth >= 0.0) return flow.propagator(birth, t);
    return g_old(s - t / we).mul(flow.propagator(0.0, t));
}

/// Convenience overload: quiescent history (g_old = identity).
inline Tensor2 exact_homogeneous(const HomogeneousKinematics& flow, double we, double t,
                                 double s) {
    const int d = flow.dim();
    return exact_homogeneous(
        flow, [d](double) { return Tensor2::identity(d); }, we, t, s);
}

}  // namespace memflow
