#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>

#include "memflow/config.hpp"
#include "memflow/csv.hpp"
#include "memflow/oracles.hpp"

namespace memflow {

/// Deviation summary between two matched series. The headline metric is the
/// deviation relative to the reference curve's scale (its max magnitude):
/// pointwise relative error is ill-posed where the reference passes through
/// zero, e.g. at stress startup.
struct CompareReport {
    std::size_t points = 0;
    double max_abs = 0.0;
    double l2 = 0.0;
    double ref_scale = 0.0;
    double rel_to_scale = 0.0;
    bool pass = false;
};

inline CompareReport compare_series(std::span<const double> got,
                                    std::span<const double> ref, double tol) {
    if (got.size() != ref.size() || got.empty())
        throw SchemaMismatch("series length mismatch: " + std::to_string(got.size()) +
                             " vs " + std::to_string(ref.size()));
    CompareReport rep;
    rep.points = got.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double d = got[i] - ref[i];
        rep.max_abs = std::max(rep.max_abs, std::abs(d));
        acc += d * d;
        rep.ref_scale = std::max(rep.ref_scale, std::abs(ref[i]));
    }
    rep.l2 = std::sqrt(acc / static_cast<double>(got.size()));
    rep.rel_to_scale = rep.max_abs / std::max(rep.ref_scale, 1e-300);
    rep.pass = rep.rel_to_scale <= tol;
    return rep;
}

namespace detail {

inline RunConfig load_run_config(const std::filesystem::path& run_dir) {
    std::ifstream in(run_dir / "config_snapshot.cfg");
    if (!in) throw Error("no config snapshot in " + run_dir.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

/// Effective shear rate of a run: homogeneous kinematics rate, or wall speed
/// over channel height for Couette.
inline double effective_shear_rate(const RunConfig& rc) {
    if (rc.scenario.geometry == Scenario::Geometry::HomogeneousBox)
        return rc.scenario.kinematics->kappa_at(1e9)(1, 0);
    if (rc.scenario.geometry == Scenario::Geometry::Couette)
        return rc.scenario.wall_speed / rc.scenario.ly;
    throw SchemaMismatch("run has no viscometric shear rate to compare against");
}

}  // namespace detail

/// Compare a run's shear-stress series against a named oracle:
///   startup_shear  closed form omega gd (1 - exp(-t/We))
///   ucm_ode        RK4 integration of the differential UCM model
///   lcm_ode        RK4 integration of the differential LCM model
inline CompareReport compare_with_oracle(const std::filesystem::path& run_dir,
                                         const std::string& oracle, double tol) {
    const RunConfig rc = detail::load_run_config(run_dir);
    const CsvTable series = read_csv(run_dir / "series.csv");
    const auto t = series.column("t");
    const auto tau12 = series.column("tau_xy");
    const double gd = detail::effective_shear_rate(rc);
    std::vector<double> ref(t.size());
    if (oracle == "startup_shear") {
        for (std::size_t i = 0; i < t.size(); ++i)
            ref[i] = maxwell_startup_shear_stress(gd, rc.fluid.we, rc.fluid.omega, t[i]);
    } else if (oracle == "ucm_ode" || oracle == "lcm_ode") {
        // RK4 trajectory sampled at the series times.
        Tensor2 tau(2);
        const Tensor2 kappa = shear_kappa(gd, 2);
        const Tensor2 two_om_d = sym(kappa) * (2.0 * rc.fluid.omega);
        const bool ucm = oracle == "ucm_ode";
        auto rhs = [&](const Tensor2& x, double) {
            return ucm ? (two_om_d - x) * (1.0 / rc.fluid.we) + kappa.transpose().mul(x) +
                             x.mul(kappa)
                       : (two_om_d - x) * (1.0 / rc.fluid.we) - x.mul(kappa.transpose()) -
                             kappa.mul(x);
        };
        double tcur = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            tau = detail::rk4_integrate(tau, tcur, t[i], 1e-3, rhs);
            tcur = t[i];
            ref[i] = tau(0, 1);
        }
    } else {
        throw SchemaMismatch("unknown oracle '" + oracle + "'");
    }
    return compare_series(tau12, ref, tol);
}

/// Compare two runs' series column-by-column (schema and length must match).
inline CompareReport compare_runs(const std::filesystem::path& run_a,
                                  const std::filesystem::path& run_b, double tol) {
    const CsvTable a = read_csv(run_a / "series.csv");
    const CsvTable b = read_csv(run_b / "series.csv");
    if (a.columns != b.columns) throw SchemaMismatch("series schemas differ");
    CompareReport worst;
    worst.pass = true;
    for (const auto& col : a.columns) {
        const auto rep = compare_series(a.column(col), b.column(col), tol);
        if (rep.rel_to_scale >= worst.rel_to_scale || worst.points == 0) {
            const bool pass = worst.pass && rep.pass;
            worst = rep;
            worst.pass = pass;
        } else {
            worst.pass = worst.pass && rep.pass;
        }
    }
    return worst;
}

/// Verify the exact factor-two stress scaling between a run at omega and a
/// run at 2*omega with frozen kinematics.
inline CompareReport compare_omega_ratio(const std::filesystem::path& run_a,
                                         const std::filesystem::path& run_b, double tol) {
    const RunConfig ca = detail::load_run_config(run_a);
    const RunConfig cb = detail::load_run_config(run_b);
    const double factor = cb.fluid.omega / ca.fluid.omega;
    const CsvTable a = read_csv(run_a / "series.csv");
    const CsvTable b = read_csv(run_b / "series.csv");
    if (a.columns != b.columns) throw SchemaMismatch("series schemas differ");
    CompareReport rep;
    rep.pass = true;
    for (const auto& col : a.columns) {
        if (col == "t") continue;
        const auto va = a.column(col);
        const auto vb = b.column(col);
        if (va.size() != vb.size()) throw SchemaMismatch("series lengths differ");
        for (std::size_t i = 0; i < va.size(); ++i) {
            const double want = factor * va[i];
            const double scale = std::max({std::abs(want), std::abs(vb[i]), 1e-300});
            rep.max_abs = std::max(rep.max_abs, std::abs(vb[i] - want));
            rep.rel_to_scale = std::max(rep.rel_to_scale, std::abs(vb[i] - want) / scale);
            rep.ref_scale = std::max(rep.ref_scale, scale);
            ++rep.points;
        }
    }
    rep.pass = rep.rel_to_scale <= tol;
    return rep;
}

}  // namespace memflow
