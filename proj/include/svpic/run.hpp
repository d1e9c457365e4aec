#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "svpic/config.hpp"
#include "svpic/diagnostics.hpp"
#include "svpic/sde.hpp"
#include "svpic/snapshot.hpp"

namespace svpic {

inline constexpr const char* kCodeVersion = "1.0.0";

/// Resolved (defaults filled) config as JSON; written to the run manifest.
inline nlohmann::json serialize_config(const SimConfig& cfg) {
    nlohmann::json j;
    j["n_particles"] = cfg.n_particles;
    if (cfg.seed) j["seed"] = *cfg.seed;
    j["species"] = {{"charge", cfg.species.charge},
                    {"mass", cfg.species.mass},
                    {"n_total", cfg.species.n_total}};

    std::visit(
        [&](const auto& init) {
            using T = std::decay_t<decltype(init)>;
            auto vec = [](const Vec3& v) { return std::vector<double>{v.x, v.y, v.z}; };
            if constexpr (std::is_same_v<T, MaxwellianInit>) {
                j["initial"] = {{"type", "maxwellian"},
                                {"sigma_v", init.sigma_v},
                                {"mean_velocity", vec(init.mean_velocity)},
                                {"position", vec(init.position)}};
            } else if constexpr (std::is_same_v<T, UniformBoxMaxwellianInit>) {
                j["initial"] = {{"type", "uniform_box_maxwellian"},
                                {"box_min", vec(init.box_min)},
                                {"box_max", vec(init.box_max)},
                                {"sigma_v", init.sigma_v},
                                {"mean_velocity", vec(init.mean_velocity)}};
            } else if constexpr (std::is_same_v<T, TwoStreamInit>) {
                j["initial"] = {{"type", "two_stream"},
                                {"drift_speed", init.drift_speed},
                                {"sigma_v", init.sigma_v},
                                {"box_min", vec(init.box_min)},
                                {"box_max", vec(init.box_max)}};
            } else if constexpr (std::is_same_v<T, ColdBeamInit>) {
                j["initial"] = {{"type", "cold_beam"},
                                {"position", vec(init.position)},
                                {"velocity", vec(init.velocity)}};
            }
        },
        cfg.initial);

    switch (cfg.collision.kind) {
    case CollisionModel::Kind::None: j["collision"] = {{"type", "none"}}; break;
    case CollisionModel::Kind::LenardBernstein:
        j["collision"] = {{"type", "lenard_bernstein"},
                          {"nu_c", cfg.collision.lb.nu_c},
                          {"mu", cfg.collision.lb.mu},
                          {"gamma", cfg.collision.lb.gamma}};
        break;
    case CollisionModel::Kind::Lorentz:
        j["collision"] = {{"type", "lorentz"},
                          {"frequency", cfg.collision.lorentz.kind ==
                                                LorentzFrequency::Kind::PowerLaw
                                            ? "power_law"
                                            : "constant"},
                          {"nu0", cfg.collision.lorentz.nu0},
                          {"v_min", cfg.collision.lorentz.v_min}};
        break;
    case CollisionModel::Kind::Coulomb:
        j["collision"] = {{"type", "coulomb"},
                          {"gamma", cfg.collision.coulomb.gamma},
                          {"softening", cfg.collision.coulomb.softening},
                          {"locality", cfg.collision.coulomb.locality.mode ==
                                               LocalitySpec::Mode::CellLocal
                                           ? "cell_local"
                                           : "homogeneous"}};
        break;
    case CollisionModel::Kind::CustomDK: j["collision"] = {{"type", "custom"}}; break;
    }

    switch (cfg.fields.kind) {
    case FieldModel::Kind::Vacuum: j["fields"] = {{"type", "vacuum"}}; break;
    case FieldModel::Kind::ExternalAnalytic: {
        const char* name = "uniform_e";
        switch (cfg.fields.external.kind) {
        case ExternalField::Kind::UniformE: name = "uniform_e"; break;
        case ExternalField::Kind::UniformB: name = "uniform_b"; break;
        case ExternalField::Kind::UniformEB: name = "uniform_eb"; break;
        case ExternalField::Kind::HarmonicTrap: name = "harmonic_trap"; break;
        }
        auto vec = [](const Vec3& v) { return std::vector<double>{v.x, v.y, v.z}; };
        j["fields"] = {{"type", "external"},
                       {"name", name},
                       {"e0", vec(cfg.fields.external.e0)},
                       {"b0", vec(cfg.fields.external.b0)},
                       {"trap_k", cfg.fields.external.trap_k}};
        break;
    }
    case FieldModel::Kind::SelfConsistentCoulomb:
        j["fields"] = {{"type", "self_consistent"},
                       {"softening", cfg.fields.softening},
                       {"exclude_self", cfg.fields.exclude_self}};
        break;
    }

    const char* scheme = "ito_euler";
    if (cfg.integrator.scheme == Scheme::StratonovichHeun) scheme = "stratonovich_heun";
    if (cfg.integrator.scheme == Scheme::LorentzRotation) scheme = "lorentz_rotation";
    j["integrator"] = {{"scheme", scheme},
                       {"dt", cfg.integrator.dt},
                       {"n_steps", cfg.integrator.n_steps}};
    j["output"] = {{"directory", cfg.output.directory},
                   {"snapshot_stride", cfg.output.snapshot_stride},
                   {"diagnostics_stride", cfg.output.diagnostics_stride},
                   {"record_trajectory", cfg.output.record_trajectory},
                   {"trajectory_stride", cfg.output.trajectory_stride},
                   {"track_momentum", cfg.output.track_momentum}};
    return j;
}

struct RunResult {
    MomentReport initial_moments;
    MomentReport final_moments;
    ConservationLedger ledger;
    std::optional<Trajectory> trajectory;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    double wall_seconds = 0.0;
    std::vector<std::string> files_written;
};

namespace detail {

inline std::string csv_path(const SimConfig& cfg) {
    return (std::filesystem::path(cfg.output.directory) / "diagnostics.csv").string();
}

inline void write_csv_header(std::ofstream& os) {
    os << "t,ke,fe,px,py,pz,mean_speed,min_speed,max_speed\n";
}

inline void write_csv_row(std::ofstream& os, const LedgerRow& r) {
    os << std::setprecision(17) << r.t << ',' << r.kinetic_energy << ','
       << r.field_energy_estimate << ',' << r.total_momentum.x << ',' << r.total_momentum.y
       << ',' << r.total_momentum.z << ',' << r.mean_speed << ',' << r.min_speed << ','
       << r.max_speed << '\n';
}

} // namespace detail

/// Executes the configured run: initializes the ensemble, steps the SDE,
/// appends ledger rows, and emits snapshots, a diagnostics CSV, and a
/// manifest JSON into the output directory. Numerical failures propagate as
/// NumericalAbort with the offending step and particle.
inline RunResult run(const SimConfig& cfg, std::uint64_t config_hash = 0) {
    const auto t_start = std::chrono::steady_clock::now();
    cfg.integrator.validate();
    cfg.species.validate();
    std::filesystem::create_directories(cfg.output.directory);

    RunResult result;
    result.config_hash = config_hash;
    result.seed = cfg.effective_seed(config_hash);

    std::function<Vec3(const Vec3&)> a_of_x;
    if (cfg.output.track_momentum && cfg.fields.kind == FieldModel::Kind::ExternalAnalytic)
        a_of_x = [&cfg](const Vec3& x) { return cfg.fields.external.a_at(x, 0.0); };

    ParticleEnsemble e = init_ensemble(cfg.n_particles, cfg.initial, result.seed,
                                       cfg.species, a_of_x);
    result.initial_moments = moments(e, cfg.species);

    std::ofstream csv;
    if (cfg.output.diagnostics_stride > 0) {
        csv.open(detail::csv_path(cfg), std::ios::trunc);
        detail::write_csv_header(csv);
        result.files_written.push_back(detail::csv_path(cfg));
    }
    auto emit_diag = [&](double t) {
        result.ledger.append(t, e, cfg.species);
        if (csv.is_open()) detail::write_csv_row(csv, result.ledger.rows().back());
    };
    auto emit_snapshot = [&](double t, long s) {
        std::ostringstream name;
        name << "snapshot_" << std::setw(6) << std::setfill('0') << s << ".svpm";
        const std::string path =
            (std::filesystem::path(cfg.output.directory) / name.str()).string();
        SnapshotMeta meta;
        meta.time = t;
        meta.step_index = s;
        meta.config_hash = config_hash;
        meta.species = cfg.species;
        write_snapshot(path, e, meta);
        result.files_written.push_back(path);
    };

    if (cfg.output.record_trajectory) result.trajectory.emplace();
    const bool noisy = cfg.collision.kind != CollisionModel::Kind::None;
    WienerBatch noise;
    if (!noisy) {
        noise.dt = cfg.integrator.dt;
        noise.n_particles = e.size();
        noise.m_channels = kDiffusionChannels;
        noise.increments.assign(e.size() * kDiffusionChannels, 0.0);
    }

    emit_diag(0.0);
    if (cfg.output.snapshot_stride > 0) emit_snapshot(0.0, 0);

    for (long s = 0; s < cfg.integrator.n_steps; ++s) {
        const double t = double(s) * cfg.integrator.dt;
        if (noisy)
            wiener_increments_into(noise, result.seed, static_cast<std::uint64_t>(s),
                                   e.size(), kDiffusionChannels, cfg.integrator.dt);
        if (result.trajectory && s % cfg.output.trajectory_stride == 0) {
            result.trajectory->frames.push_back(snapshot_frame(e, t, s));
            result.trajectory->frames.back().noise = noise;
        }
        step(cfg.integrator.scheme, e, cfg.species, cfg.collision, cfg.fields, t,
             cfg.integrator.dt, noise, s);
        const double t_next = double(s + 1) * cfg.integrator.dt;
        const long sn = s + 1;
        if (cfg.output.diagnostics_stride > 0 &&
            (sn % cfg.output.diagnostics_stride == 0 || sn == cfg.integrator.n_steps))
            emit_diag(t_next);
        if (cfg.output.snapshot_stride > 0 &&
            (sn % cfg.output.snapshot_stride == 0 || sn == cfg.integrator.n_steps))
            emit_snapshot(t_next, sn);
    }
    if (result.trajectory)
        result.trajectory->frames.push_back(snapshot_frame(
            e, double(cfg.integrator.n_steps) * cfg.integrator.dt, cfg.integrator.n_steps));

    result.final_moments = moments(e, cfg.species);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    // reproducibility manifest
    nlohmann::json manifest;
    manifest["code_version"] = kCodeVersion;
    manifest["config"] = serialize_config(cfg);
    manifest["config_hash"] = config_hash;
    manifest["seed"] = result.seed;
    manifest["wall_seconds"] = result.wall_seconds;
    manifest["warnings"] = nlohmann::json::array();
    const std::string manifest_path =
        (std::filesystem::path(cfg.output.directory) / "manifest.json").string();
    manifest["files"] = result.files_written;
    std::ofstream mf(manifest_path, std::ios::trunc);
    mf << manifest.dump(2) << '\n';
    result.files_written.push_back(manifest_path);
    return result;
}

} // namespace svpic
