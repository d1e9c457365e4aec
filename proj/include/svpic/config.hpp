#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "svpic/collision.hpp"
#include "svpic/ensemble.hpp"
#include "svpic/fields.hpp"
#include "svpic/sde.hpp"

namespace svpic {

struct OutputPlan {
    std::string directory = ".";
    long snapshot_stride = 0;    // 0 disables snapshots
    long diagnostics_stride = 1; // 0 disables the ledger CSV
    bool record_trajectory = false;
    long trajectory_stride = 1;
    bool track_momentum = false;
};

struct SimConfig {
    std::size_t n_particles = 1000;
    std::optional<std::uint64_t> seed; // absent: derived from the config hash
    SpeciesParams species;
    InitialDistribution initial = MaxwellianInit{};
    CollisionModel collision;
    FieldModel fields;
    IntegratorSpec integrator;
    OutputPlan output;

    std::uint64_t effective_seed(std::uint64_t config_hash) const {
        return seed ? *seed : config_hash;
    }
};

/// Carries every validation problem found, not just the first.
struct ConfigError : std::runtime_error {
    std::vector<std::string> errors;

    explicit ConfigError(std::vector<std::string> errs)
        : std::runtime_error(join(errs)), errors(std::move(errs)) {}

  private:
    static std::string join(const std::vector<std::string>& errs) {
        std::ostringstream os;
        os << "invalid config (" << errs.size() << " error" << (errs.size() == 1 ? "" : "s")
           << "):";
        for (const auto& e : errs) os << "\n  - " << e;
        return os.str();
    }
};

namespace detail {

using json = nlohmann::json;

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// Accumulates errors while pulling typed values out of one JSON object.
class Section {
  public:
    Section(const json& obj, std::string path, std::vector<std::string>& errors)
        : obj_(&obj), path_(std::move(path)), errors_(&errors) {}

    /// Rejects keys that were never consumed, suggesting the closest known one.
    void finish(std::initializer_list<const char*> known) {
        if (!obj_->is_object()) return;
        for (const auto& [key, value] : obj_->items()) {
            (void)value;
            if (std::find(consumed_.begin(), consumed_.end(), key) != consumed_.end())
                continue;
            std::string best;
            std::size_t best_d = 3; // suggest within edit distance 2
            for (const char* k : known) {
                const std::size_t d = edit_distance(key, k);
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            std::string msg = path_ + ": unknown key '" + key + "'";
            if (!best.empty()) msg += " (did you mean '" + best + "'?)";
            errors_->push_back(msg);
        }
    }

    bool has(const char* key) const { return obj_->contains(key); }

    template <class T>
    bool get(const char* key, T& out, bool required = false) {
        consumed_.push_back(key);
        if (!obj_->contains(key)) {
            if (required) errors_->push_back(path_ + ": missing required key '" + key + "'");
            return false;
        }
        try {
            out = obj_->at(key).get<T>();
            return true;
        } catch (const json::exception&) {
            errors_->push_back(path_ + "." + key + ": wrong type");
            return false;
        }
    }

    bool get_vec3(const char* key, Vec3& out) {
        std::vector<double> v;
        if (!get(key, v)) return false;
        if (v.size() != 3) {
            errors_->push_back(path_ + "." + key + ": expected 3 numbers");
            return false;
        }
        out = {v[0], v[1], v[2]};
        return true;
    }

    const json& raw(const char* key) {
        consumed_.push_back(key);
        return obj_->at(key);
    }

    void error(const std::string& msg) { errors_->push_back(path_ + ": " + msg); }

  private:
    const json* obj_;
    std::string path_;
    std::vector<std::string>* errors_;
    std::vector<std::string> consumed_;
};

inline void parse_initial(const json& j, SimConfig& cfg, std::vector<std::string>& errors) {
    Section s(j, "initial", errors);
    std::string type;
    if (!s.get("type", type, true)) return;
    if (type == "maxwellian") {
        MaxwellianInit init;
        s.get("sigma_v", init.sigma_v);
        s.get_vec3("mean_velocity", init.mean_velocity);
        s.get_vec3("position", init.position);
        s.finish({"type", "sigma_v", "mean_velocity", "position"});
        if (!(init.sigma_v > 0.0)) s.error("sigma_v must be positive");
        cfg.initial = init;
    } else if (type == "uniform_box_maxwellian") {
        UniformBoxMaxwellianInit init;
        s.get_vec3("box_min", init.box_min);
        s.get_vec3("box_max", init.box_max);
        s.get("sigma_v", init.sigma_v);
        s.get_vec3("mean_velocity", init.mean_velocity);
        s.finish({"type", "box_min", "box_max", "sigma_v", "mean_velocity"});
        if (!(init.sigma_v > 0.0)) s.error("sigma_v must be positive");
        cfg.initial = init;
    } else if (type == "two_stream") {
        TwoStreamInit init;
        s.get("drift_speed", init.drift_speed);
        s.get("sigma_v", init.sigma_v);
        s.get_vec3("box_min", init.box_min);
        s.get_vec3("box_max", init.box_max);
        s.finish({"type", "drift_speed", "sigma_v", "box_min", "box_max"});
        if (!(init.sigma_v > 0.0)) s.error("sigma_v must be positive");
        cfg.initial = init;
    } else if (type == "cold_beam") {
        ColdBeamInit init;
        s.get_vec3("position", init.position);
        s.get_vec3("velocity", init.velocity);
        s.finish({"type", "position", "velocity"});
        cfg.initial = init;
    } else {
        s.error("unknown sampler '" + type +
                "' (expected maxwellian, uniform_box_maxwellian, two_stream, cold_beam)");
    }
}

inline void parse_collision(const json& j, SimConfig& cfg, std::vector<std::string>& errors) {
    Section s(j, "collision", errors);
    std::string type;
    if (!s.get("type", type, true)) return;
    if (type == "none") {
        s.finish({"type"});
        cfg.collision.kind = CollisionModel::Kind::None;
    } else if (type == "lenard_bernstein") {
        cfg.collision.kind = CollisionModel::Kind::LenardBernstein;
        s.get("nu_c", cfg.collision.lb.nu_c);
        s.get("mu", cfg.collision.lb.mu);
        s.get("gamma", cfg.collision.lb.gamma);
        s.finish({"type", "nu_c", "mu", "gamma"});
        try {
            cfg.collision.lb.validate();
        } catch (const std::exception& ex) {
            s.error(ex.what());
        }
    } else if (type == "lorentz") {
        cfg.collision.kind = CollisionModel::Kind::Lorentz;
        std::string freq = "constant";
        s.get("frequency", freq);
        s.get("nu0", cfg.collision.lorentz.nu0);
        s.get("v_min", cfg.collision.lorentz.v_min);
        s.finish({"type", "frequency", "nu0", "v_min"});
        if (freq == "constant")
            cfg.collision.lorentz.kind = LorentzFrequency::Kind::Constant;
        else if (freq == "power_law")
            cfg.collision.lorentz.kind = LorentzFrequency::Kind::PowerLaw;
        else
            s.error("unknown frequency '" + freq + "' (expected constant, power_law)");
        try {
            cfg.collision.lorentz.validate();
        } catch (const std::exception& ex) {
            s.error(ex.what());
        }
    } else if (type == "coulomb") {
        cfg.collision.kind = CollisionModel::Kind::Coulomb;
        s.get("gamma", cfg.collision.coulomb.gamma);
        s.get("softening", cfg.collision.coulomb.softening);
        std::string locality = "homogeneous";
        s.get("locality", locality);
        if (locality == "homogeneous") {
            cfg.collision.coulomb.locality.mode = LocalitySpec::Mode::Homogeneous;
        } else if (locality == "cell_local") {
            cfg.collision.coulomb.locality.mode = LocalitySpec::Mode::CellLocal;
            auto& g = cfg.collision.coulomb.locality.grid;
            s.get_vec3("grid_min", g.lo);
            s.get_vec3("grid_max", g.hi);
            std::vector<std::size_t> cells;
            if (s.get("grid_cells", cells)) {
                if (cells.size() == 3)
                    g.cells = {cells[0], cells[1], cells[2]};
                else
                    s.error("grid_cells: expected 3 positive integers");
            }
        } else {
            s.error("unknown locality '" + locality + "' (expected homogeneous, cell_local)");
        }
        s.finish({"type", "gamma", "softening", "locality", "grid_min", "grid_max",
                  "grid_cells"});
        try {
            cfg.collision.coulomb.validate();
        } catch (const std::exception& ex) {
            s.error(ex.what());
        }
    } else {
        s.error("unknown collision type '" + type +
                "' (expected none, lenard_bernstein, lorentz, coulomb)");
    }
}

inline void parse_fields(const json& j, SimConfig& cfg, std::vector<std::string>& errors) {
    Section s(j, "fields", errors);
    std::string type;
    if (!s.get("type", type, true)) return;
    if (type == "vacuum") {
        s.finish({"type"});
        cfg.fields.kind = FieldModel::Kind::Vacuum;
    } else if (type == "external") {
        cfg.fields.kind = FieldModel::Kind::ExternalAnalytic;
        std::string name;
        if (s.get("name", name, true)) {
            if (name == "uniform_e")
                cfg.fields.external.kind = ExternalField::Kind::UniformE;
            else if (name == "uniform_b")
                cfg.fields.external.kind = ExternalField::Kind::UniformB;
            else if (name == "uniform_eb")
                cfg.fields.external.kind = ExternalField::Kind::UniformEB;
            else if (name == "harmonic_trap")
                cfg.fields.external.kind = ExternalField::Kind::HarmonicTrap;
            else
                s.error("unknown field name '" + name +
                        "' (expected uniform_e, uniform_b, uniform_eb, harmonic_trap)");
        }
        s.get_vec3("e0", cfg.fields.external.e0);
        s.get_vec3("b0", cfg.fields.external.b0);
        s.get("trap_k", cfg.fields.external.trap_k);
        s.finish({"type", "name", "e0", "b0", "trap_k"});
    } else if (type == "self_consistent") {
        cfg.fields.kind = FieldModel::Kind::SelfConsistentCoulomb;
        s.get("softening", cfg.fields.softening);
        s.get("exclude_self", cfg.fields.exclude_self);
        s.finish({"type", "softening", "exclude_self"});
        if (!(cfg.fields.softening > 0.0)) s.error("softening must be positive");
    } else {
        s.error("unknown fields type '" + type +
                "' (expected vacuum, external, self_consistent)");
    }
}

inline void parse_integrator(const json& j, SimConfig& cfg, std::vector<std::string>& errors) {
    Section s(j, "integrator", errors);
    std::string scheme = "ito_euler";
    s.get("scheme", scheme);
    s.get("dt", cfg.integrator.dt);
    s.get("n_steps", cfg.integrator.n_steps);
    s.finish({"scheme", "dt", "n_steps"});
    if (scheme == "ito_euler")
        cfg.integrator.scheme = Scheme::ItoEuler;
    else if (scheme == "stratonovich_heun")
        cfg.integrator.scheme = Scheme::StratonovichHeun;
    else if (scheme == "lorentz_rotation")
        cfg.integrator.scheme = Scheme::LorentzRotation;
    else
        s.error("unknown scheme '" + scheme +
                "' (expected ito_euler, stratonovich_heun, lorentz_rotation)");
    if (!(cfg.integrator.dt > 0.0)) s.error("dt must be positive");
    if (cfg.integrator.n_steps < 0) s.error("n_steps must be >= 0");
}

inline void parse_output(const json& j, SimConfig& cfg, std::vector<std::string>& errors) {
    Section s(j, "output", errors);
    s.get("directory", cfg.output.directory);
    s.get("snapshot_stride", cfg.output.snapshot_stride);
    s.get("diagnostics_stride", cfg.output.diagnostics_stride);
    s.get("record_trajectory", cfg.output.record_trajectory);
    s.get("trajectory_stride", cfg.output.trajectory_stride);
    s.get("track_momentum", cfg.output.track_momentum);
    s.finish({"directory", "snapshot_stride", "diagnostics_stride", "record_trajectory",
              "trajectory_stride", "track_momentum"});
    if (cfg.output.snapshot_stride < 0) s.error("snapshot_stride must be >= 0");
    if (cfg.output.diagnostics_stride < 0) s.error("diagnostics_stride must be >= 0");
    if (cfg.output.trajectory_stride < 1) s.error("trajectory_stride must be >= 1");
}

} // namespace detail

/// FNV-1a hash of the canonical (sorted-key, compact) config text; used as
/// the provenance hash and the fallback seed.
inline std::uint64_t config_hash(const std::string& text) {
    const std::string canon = nlohmann::json::parse(text).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Strict parse: unknown keys, type mismatches, and cross-field constraint
/// violations are all collected and reported together.
inline SimConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError({std::string("syntax: ") + ex.what()});
    }
    if (!j.is_object()) throw ConfigError({"top level must be an object"});

    std::vector<std::string> errors;
    SimConfig cfg;
    detail::Section top(j, "config", errors);
    long n_particles = static_cast<long>(cfg.n_particles);
    top.get("n_particles", n_particles);
    if (n_particles < 1)
        errors.push_back("config.n_particles: must be >= 1");
    else
        cfg.n_particles = static_cast<std::size_t>(n_particles);
    std::uint64_t seed = 0;
    if (top.get("seed", seed)) cfg.seed = seed;

    if (top.has("species")) {
        detail::Section s(top.raw("species"), "species", errors);
        s.get("charge", cfg.species.charge);
        s.get("mass", cfg.species.mass);
        s.get("n_total", cfg.species.n_total);
        s.finish({"charge", "mass", "n_total"});
        try {
            cfg.species.validate();
        } catch (const std::exception& ex) {
            s.error(ex.what());
        }
    }
    if (top.has("initial")) detail::parse_initial(top.raw("initial"), cfg, errors);
    if (top.has("collision")) detail::parse_collision(top.raw("collision"), cfg, errors);
    if (top.has("fields")) detail::parse_fields(top.raw("fields"), cfg, errors);
    if (top.has("integrator")) detail::parse_integrator(top.raw("integrator"), cfg, errors);
    if (top.has("output")) detail::parse_output(top.raw("output"), cfg, errors);
    top.finish({"n_particles", "seed", "species", "initial", "collision", "fields",
                "integrator", "output"});

    // cross-field constraints
    if (cfg.integrator.scheme == Scheme::LorentzRotation &&
        cfg.collision.kind != CollisionModel::Kind::Lorentz)
        errors.push_back("integrator.scheme = lorentz_rotation requires collision.type = "
                         "lorentz (both keys involved)");
    if (cfg.output.track_momentum && cfg.fields.kind != FieldModel::Kind::ExternalAnalytic)
        errors.push_back("output.track_momentum requires fields.type = external (the vector "
                         "potential must be available)");
    if (cfg.output.track_momentum && !cfg.output.record_trajectory)
        errors.push_back("output.track_momentum requires output.record_trajectory = true");

    if (!errors.empty()) throw ConfigError(std::move(errors));
    return cfg;
}

} // namespace svpic
