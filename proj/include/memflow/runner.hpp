#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "memflow/config.hpp"
#include "memflow/csv.hpp"
#include "memflow/scenarios.hpp"

namespace memflow {

constexpr const char* kToolVersion = "memflow 0.1.0";

/// Outcome of a run, mapped onto process exit codes by the CLI:
/// 0 ok, 2 config error, 3 solver abort, 4 not converged.
enum class RunStatus { Ok = 0, ConfigProblem = 2, Aborted = 3, NotConverged = 4 };

struct RunArtifact {
    std::filesystem::path dir;
    RunStatus status = RunStatus::Ok;
    std::string message;
    std::vector<std::filesystem::path> files;
};

namespace detail {

inline void write_checkpoint(const std::filesystem::path& path, const FlowState& st,
                             int step) {
    const DeformationField& f = st.gfield;
    const int d = f.dim();
    std::vector<std::string> cols{"s", "x", "y"};
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q)
            cols.push_back("g" + std::to_string(p + 1) + std::to_string(q + 1));
    CsvWriter w(path, cols);
    w.comment("we = " + format_g17(f.we()));
    w.comment("step = " + std::to_string(step));
    w.comment("t = " + format_g17(st.t));
    w.comment("ages = " + std::to_string(f.ages()));
    const SpatialLayout& lay = f.layout();
    w.comment("cells = " + std::to_string(lay.nx) + " x " + std::to_string(lay.ny));
    for (std::size_t a = 0; a < f.ages(); ++a)
        for (std::size_t c = 0; c < f.cells(); ++c) {
            const int i = static_cast<int>(c) % lay.nx;
            const int j = static_cast<int>(c) / lay.nx;
            std::vector<double> row{f.grid().nodes[a],
                                    lay.kind == SpatialLayout::Kind::Homogeneous
                                        ? 0.0
                                        : lay.cell_x(i),
                                    lay.kind == SpatialLayout::Kind::Homogeneous
                                        ? 0.0
                                        : lay.cell_y(j)};
            for (int p = 0; p < d; ++p)
                for (int q = 0; q < d; ++q) row.push_back(f.at(a, c)(p, q));
            w.row(row);
        }
}

inline void write_stress_field(const std::filesystem::path& path, const FlowState& st) {
    CsvWriter w(path, {"x", "y", "tau_xx", "tau_xy", "tau_yy"});
    w.comment("t = " + format_g17(st.t));
    const SpatialLayout& lay = st.stress.layout;
    for (std::size_t c = 0; c < st.stress.tau.size(); ++c) {
        const int i = static_cast<int>(c) % lay.nx;
        const int j = static_cast<int>(c) / lay.nx;
        const bool homog = lay.kind == SpatialLayout::Kind::Homogeneous;
        const Tensor2& t = st.stress.tau[c];
        w.row({homog ? 0.0 : lay.cell_x(i), homog ? 0.0 : lay.cell_y(j), t(0, 0), t(0, 1),
               t(1, 1)});
    }
}

inline void write_manifest(const std::filesystem::path& dir,
                           const std::vector<std::filesystem::path>& files,
                           const RunConfig& rc, RunStatus status,
                           const std::string& message, double wall_seconds) {
    nlohmann::json m;
    m["tool"] = kToolVersion;
    m["scenario"] = rc.scenario_name;
    m["mode"] = rc.mode == RunConfig::Mode::Unsteady ? "unsteady" : "stationary";
    m["kernel"] = rc.kernel_desc;
    m["measure"] = rc.measure_desc;
    m["seed"] = rc.seed;
    m["status"] = static_cast<int>(status);
    m["message"] = message;
    m["wall_seconds"] = wall_seconds;
    m["checksum_algorithm"] = "fnv1a64";
    nlohmann::json fl = nlohmann::json::array();
    for (const auto& f : files) {
        nlohmann::json e;
        e["path"] = f.filename().string();
        e["bytes"] = static_cast<std::uint64_t>(std::filesystem::file_size(f));
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(file_checksum(f)));
        e["fnv1a64"] = hex;
        fl.push_back(e);
    }
    m["files"] = fl;
    std::ofstream out(dir / "manifest.json");
    out << m.dump(2) << "\n";
}

}  // namespace detail

/// Execute a parsed configuration into a run directory: config snapshot,
/// diagnostics and stress-series CSVs (profiles for stationary runs),
/// optional checkpoints, and a checksummed manifest.
inline RunArtifact run_config(const RunConfig& rc, const std::filesystem::path& out_dir,
                              bool emit_checkpoints = false, bool emit_stress = false) {
    const auto t_start = std::chrono::steady_clock::now();
    RunArtifact art;
    art.dir = out_dir;
    std::filesystem::create_directories(out_dir);

    {
        std::ofstream snap(out_dir / "config_snapshot.cfg");
        snap << rc.normalized_text;
    }
    art.files.push_back(out_dir / "config_snapshot.cfg");

    auto grid = std::make_shared<const AgeGrid>(
        build_age_grid(rc.kernel, rc.tail_tol, rc.quad_tol, rc.spacing));

    if (rc.mode == RunConfig::Mode::Unsteady) {
        CoupledSolver solver(rc.scenario, rc.fluid, rc.measure, grid, rc.transport, {},
                             rc.picard);
        FlowState st = solver.make_initial_state();

        CsvWriter diag(out_dir / "diagnostics.csv",
                       {"step", "t", "ke", "max_tau", "picard_iters", "picard_residual",
                        "max_div", "det_drift", "monitor_proxy", "monitor_bound",
                        "monitor_crossing"});
        CsvWriter series(out_dir / "series.csv", {"t", "tau_xx", "tau_xy", "tau_yy", "n1"});
        {
            const Tensor2 tau0 = probe_stress(st);
            series.row({0.0, tau0(0, 0), tau0(0, 1), tau0(1, 1), tau0(0, 0) - tau0(1, 1)});
        }
        int n_checkpoints = 0;
        const auto res = time_advance(
            solver, st, rc.policy,
            [&](const StepDiagnostics& d) {
                diag.row({static_cast<double>(d.step), d.t, d.ke, d.max_tau,
                          static_cast<double>(d.picard_iters), d.picard_residual, d.max_div,
                          d.det_drift, d.monitor_proxy, d.monitor_bound,
                          d.monitor_crossing ? 1.0 : 0.0});
                series.row({d.t, d.probe_tau(0, 0), d.probe_tau(0, 1), d.probe_tau(1, 1),
                            d.probe_tau(0, 0) - d.probe_tau(1, 1)});
                if (emit_stress) {
                    char name[40];
                    std::snprintf(name, sizeof(name), "stress_%06d.csv", d.step);
                    detail::write_stress_field(out_dir / name, st);
                    art.files.push_back(out_dir / name);
                }
            },
            [&](const FlowState& state, int step) {
                if (!emit_checkpoints) return;
                char name[48];
                std::snprintf(name, sizeof(name), "checkpoint_%06d.csv", step);
                detail::write_checkpoint(out_dir / name, state, step);
                art.files.push_back(out_dir / name);
                ++n_checkpoints;
            });
        diag.close();
        series.close();
        art.files.push_back(out_dir / "diagnostics.csv");
        art.files.push_back(out_dir / "series.csv");
        if (res.status == TimeAdvanceResult::Status::Aborted) {
            art.status = RunStatus::Aborted;
            art.message = res.abort_reason;
        } else if (!res.all_picard_converged) {
            art.status = RunStatus::NotConverged;
            art.message = "Picard iteration hit its cap in at least one step";
        }
    } else {
        StationaryProblem prob;
        prob.params = rc.fluid;
        prob.kernel = rc.kernel;
        prob.grid = grid;
        prob.measure = rc.measure;
        prob.admissibility = rc.admissibility;
        prob.threads = rc.threads;
        if (rc.scenario.geometry == Scenario::Geometry::HomogeneousBox) {
            prob.geometry = StationaryProblem::Geometry::Homogeneous;
            prob.kappa = rc.stat_kappa;
        } else {
            prob.geometry = StationaryProblem::Geometry::ParallelShear;
            prob.ny = rc.stat_ny;
            prob.height = rc.stat_height;
            prob.body_force_x = rc.stat_fx;
        }
        StationaryResult res;
        try {
            res = stationary_fixed_point(prob, rc.stat_tol, rc.stat_max_iters);
        } catch (const InvalidParams& e) {
            art.status = RunStatus::ConfigProblem;
            art.message = e.what();
            detail::write_manifest(out_dir, art.files, rc, art.status, art.message, 0.0);
            art.files.push_back(out_dir / "manifest.json");
            return art;
        }

        CsvWriter prof(out_dir / "profiles.csv", {"y", "v", "dv_dy", "tau_xy", "n1"});
        for (std::size_t j = 0; j < res.y.size(); ++j)
            prof.row({res.y[j], res.v[j], res.dv_dy[j], res.tau12[j], res.n1[j]});
        prof.close();
        art.files.push_back(out_dir / "profiles.csv");

        std::ofstream rep(out_dir / "convergence_report.txt");
        rep << "status: "
            << (res.status == StationaryResult::Status::Converged      ? "converged"
                : res.status == StationaryResult::Status::NotConverged ? "not-converged"
                                                                       : "divergent")
            << "\n";
        rep << "iterations: " << res.iterations << "\n";
        rep << "residual: " << format_g17(res.residual) << "\n";
        rep << "admissibility: alpha = " << format_g17(res.admissibility.alpha)
            << ", threshold = " << format_g17(res.admissibility.threshold)
            << ", margin = " << format_g17(res.admissibility.margin)
            << (res.admissibility.admissible ? " (admissible)" : " (violated)") << "\n";
        rep << "integrand tail growth: " << format_g17(res.integrand.tail_growth) << "\n";
        rep << "contraction history:";
        for (double cph : res.contraction_history) rep << " " << format_g17(cph);
        rep << "\n";
        rep.close();
        art.files.push_back(out_dir / "convergence_report.txt");

        if (res.status == StationaryResult::Status::NotConverged) {
            art.status = RunStatus::NotConverged;
            art.message = "stationary fixed point not converged";
        } else if (res.status == StationaryResult::Status::Divergent) {
            art.status = RunStatus::Aborted;
            art.message = "stress integral divergent for this kinematics";
        }
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    detail::write_manifest(out_dir, art.files, rc, art.status, art.message, wall);
    art.files.push_back(out_dir / "manifest.json");
    return art;
}

/// Parse + run, with optional CLI overrides.
inline RunArtifact run_from_text(std::string text, const std::filesystem::path& out_dir,
                                 bool emit_checkpoints = false,
                                 std::optional<std::uint64_t> seed_override = {},
                                 bool emit_stress = false) {
    if (seed_override) {
        ConfigText c = ConfigText::parse(text);
        c.set("run.seed", std::to_string(*seed_override));
        text = c.serialize();
    }
    const RunConfig rc = parse_run_config(text);
    return run_config(rc, out_dir, emit_checkpoints, emit_stress);
}

}  // namespace memflow
