#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "memflow/csv.hpp"
#include "memflow/flow.hpp"
#include "memflow/stationary.hpp"

namespace memflow {

/// Parsed key-value config: flat typed keys inside [section] headers,
/// '#' comments, strict unknown-key rejection at validation.
class ConfigText {
  public:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool consumed = false;
    };

    static ConfigText parse(const std::string& text) {
        ConfigText cfg;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError("line " + std::to_string(lineno) +
                                      ": malformed section header '" + line + "'");
                section = trim(line.substr(1, line.size() - 2));
                cfg.sections_.insert(section);
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + line + "'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (section.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": key '" + key +
                                  "' outside any [section]");
            const std::string full = section + "." + key;
            if (cfg.entries_.count(full))
                throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" +
                                  full + "'");
            cfg.entries_[full] = Entry{value, lineno, false};
        }
        return cfg;
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string get_string(const std::string& key, std::optional<std::string> def = {}) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            if (def) return *def;
            throw ConfigError("missing required key '" + key + "'");
        }
        it->second.consumed = true;
        return it->second.value;
    }

    double get_double(const std::string& key, std::optional<double> def = {}) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            if (def) return *def;
            throw ConfigError("missing required key '" + key + "'");
        }
        it->second.consumed = true;
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second.value, &used);
            if (used != it->second.value.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("line " + std::to_string(it->second.line) + ": key '" + key +
                              "' needs a number, got '" + it->second.value + "'");
        }
    }

    long get_int(const std::string& key, std::optional<long> def = {}) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            if (def) return *def;
            throw ConfigError("missing required key '" + key + "'");
        }
        it->second.consumed = true;
        try {
            std::size_t used = 0;
            const long v = std::stol(it->second.value, &used);
            if (used != it->second.value.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("line " + std::to_string(it->second.line) + ": key '" + key +
                              "' needs an integer, got '" + it->second.value + "'");
        }
    }

    bool get_bool(const std::string& key, std::optional<bool> def = {}) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            if (def) return *def;
            throw ConfigError("missing required key '" + key + "'");
        }
        it->second.consumed = true;
        if (it->second.value == "true") return true;
        if (it->second.value == "false") return false;
        throw ConfigError("line " + std::to_string(it->second.line) + ": key '" + key +
                          "' needs true/false");
    }

    std::vector<double> get_doubles(const std::string& key,
                                    std::optional<std::vector<double>> def = {}) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            if (def) return *def;
            throw ConfigError("missing required key '" + key + "'");
        }
        it->second.consumed = true;
        std::vector<double> out;
        std::istringstream is(it->second.value);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            try {
                out.push_back(std::stod(trim(tok)));
            } catch (const std::exception&) {
                throw ConfigError("line " + std::to_string(it->second.line) + ": key '" +
                                  key + "': bad number '" + trim(tok) + "'");
            }
        }
        return out;
    }

    /// (t, value) schedule: "t0:v0, t1:v1, ...".
    std::vector<std::pair<double, double>> get_schedule(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return {};
        it->second.consumed = true;
        std::vector<std::pair<double, double>> out;
        std::istringstream is(it->second.value);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw ConfigError("line " + std::to_string(it->second.line) + ": key '" +
                                  key + "' needs 't:value' pairs");
            out.emplace_back(std::stod(trim(tok.substr(0, colon))),
                             std::stod(trim(tok.substr(colon + 1))));
        }
        return out;
    }

    /// Strict schema enforcement: every present key must have been consumed.
    void reject_unknown_keys() const {
        for (const auto& [key, entry] : entries_)
            if (!entry.consumed)
                throw ConfigError("line " + std::to_string(entry.line) +
                                  ": unknown key '" + key + "'");
    }

    /// Insert or overwrite a key ("section.key" form); used for CLI overrides.
    void set(const std::string& key, const std::string& value) {
        entries_[key] = Entry{value, 0, false};
        const auto dot = key.find('.');
        if (dot != std::string::npos) sections_.insert(key.substr(0, dot));
    }

    /// Deterministic re-emission: sections and keys in sorted order, values
    /// verbatim. Re-parsing the output reproduces the same configuration.
    std::string serialize() const {
        std::map<std::string, std::map<std::string, std::string>> by_section;
        for (const auto& [key, entry] : entries_) {
            const auto dot = key.find('.');
            by_section[key.substr(0, dot)][key.substr(dot + 1)] = entry.value;
        }
        std::ostringstream out;
        for (const auto& [section, keys] : by_section) {
            out << "[" << section << "]\n";
            for (const auto& [k, v] : keys) out << k << " = " << v << "\n";
            out << "\n";
        }
        return out.str();
    }

  private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, Entry> entries_;
    std::set<std::string> sections_;
};

/// Fully resolved run configuration.
struct RunConfig {
    std::string scenario_name = "unnamed";
    enum class Mode { Unsteady, Stationary } mode = Mode::Unsteady;
    std::uint64_t seed = 1;
    int threads = 1;

    FluidParams fluid;
    MemoryKernel kernel = MemoryKernel::single_exponential();
    StrainMeasure measure = StrainMeasure::ucm();
    std::string kernel_desc, measure_desc;

    double tail_tol = 1e-8;
    double quad_tol = 1e-6;
    AgeGridSpacing spacing;

    Scenario scenario;

    // Unsteady controls.
    TimeAdvancePolicy policy;
    TransportOptions transport;
    PicardOptions picard;

    // Stationary controls.
    int stat_ny = 64;
    double stat_height = 1.0;
    double stat_fx = 0.0;
    double stat_tol = 1e-8;
    int stat_max_iters = 100;
    std::optional<Tensor2> stat_kappa;
    AdmissibilityConstants admissibility;

    std::string normalized_text;  ///< full round-trippable snapshot
};

namespace detail {

inline MemoryKernel kernel_from(const ConfigText& c) {
    const std::string variant = c.get_string("kernel.variant", std::string("single_exponential"));
    if (variant == "single_exponential") return MemoryKernel::single_exponential();
    if (variant == "multi_mode_maxwell")
        return MemoryKernel::multi_mode_maxwell(c.get_doubles("kernel.eta"),
                                                c.get_doubles("kernel.lambda"));
    if (variant == "doi_edwards")
        return MemoryKernel::doi_edwards(c.get_double("kernel.lambda", 1.0),
                                         static_cast<int>(c.get_int("kernel.truncation", 10000)));
    if (variant == "power_law")
        return MemoryKernel::power_law(c.get_doubles("kernel.eta"), c.get_doubles("kernel.beta"),
                                       c.get_doubles("kernel.lambda"),
                                       c.get_double("kernel.s_min"));
    throw ConfigError("kernel.variant: unknown variant '" + variant + "'");
}

inline StrainMeasure measure_from(const ConfigText& c, int d) {
    const std::string variant = c.get_string("measure.variant", std::string("ucm"));
    if (variant == "ucm") return StrainMeasure::ucm();
    if (variant == "lcm") return StrainMeasure::lcm();
    if (variant == "psm")
        return StrainMeasure::psm(c.get_double("measure.alpha"), c.get_double("measure.beta"));
    if (variant == "psm_norm") return StrainMeasure::psm_norm(d);
    if (variant == "wagner")
        return StrainMeasure::wagner(c.get_double("measure.alpha"),
                                     c.get_double("measure.beta"));
    if (variant == "currie") return StrainMeasure::currie();
    if (variant == "kbkz")
        return StrainMeasure::kbkz(make_invariant_fn(c.get_string("measure.phi1")),
                                   make_invariant_fn(c.get_string("measure.phi2")), "kbkz");
    throw ConfigError("measure.variant: unknown variant '" + variant + "'");
}

inline Tensor2 kappa_from(const std::string& type, double rate, int d) {
    if (type == "shear") return shear_kappa(rate, d);
    if (type == "elongation") return elongation_kappa(rate, d);
    throw ConfigError("kinematics.type: unknown type '" + type + "'");
}

}  // namespace detail

/// Parse and validate a full run configuration. Unknown keys, missing
/// required keys and incompatible combinations are reported with the field
/// name (and line where applicable).
inline RunConfig parse_run_config(const std::string& text) {
    const ConfigText c = ConfigText::parse(text);
    RunConfig rc;

    rc.scenario_name = c.get_string("run.scenario", std::string("unnamed"));
    const std::string mode = c.get_string("run.mode", std::string("unsteady"));
    if (mode == "unsteady")
        rc.mode = RunConfig::Mode::Unsteady;
    else if (mode == "stationary")
        rc.mode = RunConfig::Mode::Stationary;
    else
        throw ConfigError("run.mode: must be 'unsteady' or 'stationary'");
    rc.seed = static_cast<std::uint64_t>(c.get_int("run.seed", 1));
    rc.threads = static_cast<int>(c.get_int("run.threads", 1));

    rc.fluid.re = c.get_double("fluid.re", 1.0);
    rc.fluid.we = c.get_double("fluid.we", 1.0);
    rc.fluid.omega = c.get_double("fluid.omega", 0.5);
    rc.fluid.validate();

    rc.kernel = detail::kernel_from(c);
    rc.kernel_desc = rc.kernel.describe();

    rc.tail_tol = c.get_double("age_grid.tail_tol", 1e-8);
    rc.quad_tol = c.get_double("age_grid.quad_tol", 1e-6);
    const std::string spacing = c.get_string("age_grid.spacing", std::string("auto"));
    if (spacing == "auto")
        rc.spacing = AgeGridSpacing::automatic();
    else if (spacing == "uniform")
        rc.spacing = AgeGridSpacing::uniform(c.get_double("age_grid.ds"));
    else if (spacing == "graded")
        rc.spacing = AgeGridSpacing::graded(c.get_double("age_grid.ratio", 1.15),
                                            c.get_double("age_grid.first_frac", 1e-6));
    else
        throw ConfigError("age_grid.spacing: unknown spacing '" + spacing + "'");

    Scenario& sc = rc.scenario;
    const std::string kind = c.get_string("geometry.kind", std::string("homogeneous"));
    sc.dim = static_cast<int>(c.get_int("geometry.d", 2));
    Tensor2::check_dim(sc.dim);
    rc.measure = detail::measure_from(c, sc.dim);
    rc.measure_desc = rc.measure.describe();

    if (kind == "homogeneous") {
        sc.geometry = Scenario::Geometry::HomogeneousBox;
        const std::string ktype = c.get_string("kinematics.type", std::string("shear"));
        const double rate = c.get_double("kinematics.rate", 0.0);
        HomogeneousKinematics flow(detail::kappa_from(ktype, rate, sc.dim));
        for (const auto& [t0, r] : c.get_schedule("kinematics.schedule"))
            if (t0 > 0.0) flow.add_piece(t0, detail::kappa_from(ktype, r, sc.dim));
        sc.kinematics = flow;
    } else {
        if (sc.dim != 2) throw ConfigError("geometry.d: spatial solving supports d = 2 only");
        if (kind == "channel")
            sc.geometry = Scenario::Geometry::Channel;
        else if (kind == "couette")
            sc.geometry = Scenario::Geometry::Couette;
        else if (kind == "poiseuille")
            sc.geometry = Scenario::Geometry::Poiseuille;
        else
            throw ConfigError("geometry.kind: unknown kind '" + kind + "'");
        sc.nx = static_cast<int>(c.get_int("geometry.nx", 16));
        sc.ny = static_cast<int>(c.get_int("geometry.ny", 32));
        sc.lx = c.get_double("geometry.lx", 1.0);
        sc.ly = c.get_double("geometry.ly", 1.0);
        sc.body_force_x = c.get_double("forcing.fx", 0.0);
        sc.perturb_amp = c.get_double("forcing.perturb_amp", 0.0);
        sc.perturb_kx = static_cast<int>(c.get_int("forcing.perturb_kx", 1));
        sc.wall_speed = c.get_double("forcing.wall_speed", 0.0);
        sc.wall_speed_schedule = c.get_schedule("forcing.wall_speed_schedule");
        if (sc.geometry == Scenario::Geometry::Couette && sc.wall_speed == 0.0 &&
            sc.wall_speed_schedule.empty())
            throw ConfigError("forcing.wall_speed: Couette geometry needs a wall speed");
    }
    sc.seed = rc.seed;
    sc.stress_enabled = c.get_bool("time.stress_enabled", true);
    sc.preshear_rate = c.get_double("initial.preshear_rate", 0.0);

    rc.policy.dt = c.get_double("time.dt", 1e-2);
    rc.policy.t_end = c.get_double("time.t_end", 1.0);
    rc.policy.checkpoint_every = static_cast<int>(c.get_int("time.checkpoint_every", 0));
    rc.policy.monitor_c0 = c.get_double("monitor.c0", 1.0);
    rc.policy.monitor_p = c.get_double("monitor.p", 2.0);
    rc.policy.monitor_slack = c.get_double("monitor.slack", 0.05);

    rc.transport.cfl = c.get_double("time.cfl", 0.9);
    rc.transport.det_warn_tol = c.get_double("time.det_warn_tol", 1e-5);
    rc.transport.det_abort_tol = c.get_double("time.det_abort_tol", 1e-2);
    rc.transport.renormalize_det = c.get_bool("time.renormalize_det", false);
    rc.transport.threads = rc.threads;

    rc.picard.tol = c.get_double("time.picard_tol", 1e-8);
    rc.picard.max_iters = static_cast<int>(c.get_int("time.picard_max", 50));

    if (rc.mode == RunConfig::Mode::Stationary) {
        rc.stat_ny = static_cast<int>(c.get_int("stationary.ny", 64));
        rc.stat_height = c.get_double("stationary.height", 1.0);
        rc.stat_fx = c.get_double("stationary.fx", 0.0);
        rc.stat_tol = c.get_double("stationary.tol", 1e-8);
        rc.stat_max_iters = static_cast<int>(c.get_int("stationary.max_iters", 100));
        rc.admissibility.c0 = c.get_double("stationary.c0", 0.2);
        rc.admissibility.sobolev_p = c.get_double("stationary.sobolev_p", 4.0);
        rc.admissibility.r1 = c.get_double("stationary.r1", 0.1);
        rc.admissibility.f_cap = c.get_double("stationary.f_cap", 0.1);
        rc.admissibility.enforce = c.get_bool("stationary.enforce_admissibility", true);
        if (kind == "homogeneous") {
            const std::string ktype = c.get_string("kinematics.type", std::string("shear"));
            rc.stat_kappa =
                detail::kappa_from(ktype, c.get_double("kinematics.rate", 0.0), sc.dim);
        }
        if (std::abs(rc.stat_fx) > rc.admissibility.f_cap + 1e-15)
            throw ConfigError("stationary.fx: forcing exceeds the smallness cap f_cap");
    }

    c.reject_unknown_keys();
    rc.normalized_text = c.serialize();
    return rc;
}

}  // namespace memflow
