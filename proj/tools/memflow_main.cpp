#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "memflow/compare.hpp"
#include "memflow/runner.hpp"

namespace {

std::string load_text(const std::string& config_path, const std::string& scenario) {
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw memflow::ConfigError("cannot open config file " + config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    const auto& table = memflow::bundled_scenarios();
    const auto it = table.find(scenario);
    if (it == table.end())
        throw memflow::ConfigError("unknown bundled scenario '" + scenario +
                                   "' (see list-scenarios)");
    return it->second.text;
}

void print_report(const memflow::CompareReport& rep, double tol) {
    std::cout << (rep.pass ? "PASS" : "FAIL") << ": max_abs=" << memflow::format_g17(rep.max_abs)
              << " l2=" << memflow::format_g17(rep.l2)
              << " rel_to_scale=" << memflow::format_g17(rep.rel_to_scale)
              << " tol=" << memflow::format_g17(tol) << " points=" << rep.points << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memflow: integral-law viscoelastic flow solver"};
    app.set_version_flag("--version", memflow::kToolVersion);
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "execute one or more scenario configs");
    std::vector<std::string> config_paths;
    std::string scenario_name, out_dir = "runs/out";
    bool emit_checkpoints = false, emit_stress = false;
    std::int64_t seed_override = -1;
    run->add_option("--config", config_paths, "config file(s); repeat for a batch");
    run->add_option("--scenario", scenario_name, "bundled scenario name");
    run->add_option("--out-dir", out_dir, "output directory (suffixed per config in batch mode)");
    run->add_option("--seed", seed_override, "override run.seed");
    run->add_flag("--emit-checkpoints", emit_checkpoints, "write deformation-field checkpoints");
    run->add_flag("--emit-stress", emit_stress, "write the full stress field per step");

    // compare
    auto* cmp = app.add_subcommand("compare", "compare a run against an oracle or another run");
    std::string cmp_run, cmp_oracle, cmp_against;
    double cmp_tol = 1e-3;
    bool omega_ratio = false;
    cmp->add_option("--run", cmp_run, "run directory")->required();
    cmp->add_option("--oracle", cmp_oracle, "startup_shear | ucm_ode | lcm_ode");
    cmp->add_option("--against", cmp_against, "second run directory");
    cmp->add_flag("--omega-ratio", omega_ratio, "check the exact omega scaling between runs");
    cmp->add_option("--tol", cmp_tol, "pass/fail tolerance on the scale-relative deviation");

    // validate-config
    auto* val = app.add_subcommand("validate-config", "parse and validate a config");
    std::string val_config, val_scenario;
    val->add_option("--config", val_config, "config file");
    val->add_option("--scenario", val_scenario, "bundled scenario name");

    // list-scenarios
    app.add_subcommand("list-scenarios", "list bundled scenario configs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            std::vector<std::string> texts;
            std::vector<std::string> names;
            if (!scenario_name.empty()) {
                texts.push_back(load_text("", scenario_name));
                names.push_back(scenario_name);
            }
            for (const auto& p : config_paths) {
                texts.push_back(load_text(p, ""));
                names.push_back(std::filesystem::path(p).stem().string());
            }
            if (texts.empty())
                throw memflow::ConfigError("run needs --config or --scenario");
            int worst = 0;
            for (std::size_t i = 0; i < texts.size(); ++i) {
                const std::filesystem::path dir =
                    texts.size() == 1 ? std::filesystem::path(out_dir)
                                      : std::filesystem::path(out_dir + "_" + names[i]);
                const auto art = memflow::run_from_text(
                    texts[i], dir, emit_checkpoints,
                    seed_override >= 0
                        ? std::optional<std::uint64_t>(static_cast<std::uint64_t>(seed_override))
                        : std::nullopt,
                    emit_stress);
                std::cout << names[i] << ": "
                          << (art.status == memflow::RunStatus::Ok ? "ok" : art.message)
                          << " -> " << dir.string() << "\n";
                worst = std::max(worst, static_cast<int>(art.status));
            }
            return worst;
        }
        if (cmp->parsed()) {
            memflow::CompareReport rep;
            if (omega_ratio) {
                if (cmp_against.empty())
                    throw memflow::ConfigError("--omega-ratio needs --against");
                rep = memflow::compare_omega_ratio(cmp_run, cmp_against, cmp_tol);
            } else if (!cmp_oracle.empty()) {
                rep = memflow::compare_with_oracle(cmp_run, cmp_oracle, cmp_tol);
            } else if (!cmp_against.empty()) {
                rep = memflow::compare_runs(cmp_run, cmp_against, cmp_tol);
            } else {
                throw memflow::ConfigError("compare needs --oracle or --against");
            }
            print_report(rep, cmp_tol);
            return rep.pass ? 0 : 1;
        }
        if (val->parsed()) {
            const std::string text = load_text(val_config, val_scenario);
            const auto rc = memflow::parse_run_config(text);
            const auto grid = memflow::build_age_grid(rc.kernel, rc.tail_tol, rc.quad_tol,
                                                      rc.spacing);
            std::cout << "ok: scenario '" << rc.scenario_name << "' ("
                      << (rc.mode == memflow::RunConfig::Mode::Unsteady ? "unsteady"
                                                                        : "stationary")
                      << ")\n"
                      << "  kernel: " << rc.kernel_desc
                      << " (pre-normalization mass " << rc.kernel.pre_normalization_mass()
                      << ")\n"
                      << "  measure: " << rc.measure_desc << "\n"
                      << "  age grid: " << grid.size() << " nodes, s_max=" << grid.s_max
                      << ", mass=" << memflow::format_g17(grid.mass) << " (" << grid.grading
                      << ")\n";
            return 0;
        }
        if (app.got_subcommand("list-scenarios")) {
            for (const auto& [name, sc] : memflow::bundled_scenarios())
                std::cout << name << " - " << sc.description << "\n";
            return 0;
        }
    } catch (const memflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const memflow::SchemaMismatch& e) {
        std::cerr << "schema mismatch: " << e.what() << "\n";
        return 2;
    } catch (const memflow::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
