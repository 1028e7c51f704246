#pragma once

#include <vector>

#include "memflow/field.hpp"

namespace memflow {

/// Discrete counterpart of the transport growth estimate: tracks proxies for
/// ||G|| and ||grad G|| (max over age nodes of spatial p-norms) against the
/// bound trajectory zeta * exp(3 C0 int ||grad_u||). C0 stands in for the
/// embedding constant, which the theory leaves implicit; crossings are
/// reported, not fatal.
class NormMonitor {
  public:
    struct Sample {
        double t = 0.0;
        double proxy_g = 0.0;
        double proxy_grad_g = 0.0;
        double bound = 0.0;
        bool crossing = false;
    };

    NormMonitor(double c0, double p, double slack, double zeta_inf)
        : c0_(c0), p_(p), slack_(slack), bound_(zeta_inf) {}

    /// Default setup from the field's initial data: zeta_inf is the larger of
    /// the initial ||G|| proxy and sqrt(d) |Omega|^{1/p}.
    static NormMonitor from_field(const DeformationField& field, double c0 = 1.0,
                                  double p = 2.0, double slack = 0.05) {
        const double zeta =
            std::max(field_proxy(field, p),
                     std::sqrt(static_cast<double>(field.dim())) *
                         std::pow(field.layout().area(), 1.0 / p));
        NormMonitor m(c0, p, slack, zeta);
        m.record(0.0, field_proxy(field, p), 0.0);
        return m;
    }

    /// Max over age nodes of the spatial p-norm of |G|.
    static double field_proxy(const DeformationField& field, double p) {
        const double cell_vol = field.layout().area() / static_cast<double>(field.cells());
        double worst = 0.0;
        for (std::size_t a = 0; a < field.ages(); ++a) {
            double acc = 0.0;
            for (std::size_t c = 0; c < field.cells(); ++c)
                acc += std::pow(field.at(a, c).norm(), p) * cell_vol;
            worst = std::max(worst, std::pow(acc, 1.0 / p));
        }
        return worst;
    }

    /// Advance the bound by one step with the computed velocity-gradient norm
    /// and record the field's actual proxies.
    void update(const DeformationField& field, double grad_u_norm, double dt,
                double grad_g_proxy = 0.0) {
        bound_ *= std::exp(3.0 * c0_ * grad_u_norm * dt);
        t_ += dt;
        record(t_, field_proxy(field, p_), grad_g_proxy);
    }

    const std::vector<Sample>& series() const { return series_; }
    bool any_crossing() const {
        for (const auto& s : series_)
            if (s.crossing) return true;
        return false;
    }
    double bound() const { return bound_; }

  private:
    void record(double t, double proxy_g, double proxy_grad) {
        Sample s;
        s.t = t;
        s.proxy_g = proxy_g;
        s.proxy_grad_g = proxy_grad;
        s.bound = bound_;
        // Discrete W^{1,p}-style proxy against the bound trajectory.
        s.crossing = proxy_g + proxy_grad > bound_ * (1.0 + slack_);
        series_.push_back(s);
    }

    double c0_, p_, slack_;
    double bound_;
    double t_ = 0.0;
    std::vector<Sample> series_;
};

}  // namespace memflow
