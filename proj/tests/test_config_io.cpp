#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "svpic/config.hpp"
#include "svpic/run.hpp"
#include "svpic/snapshot.hpp"

using namespace svpic;

namespace {

std::string tmp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

bool has_error_containing(const ConfigError& ex, const std::string& needle) {
    for (const auto& e : ex.errors)
        if (e.find(needle) != std::string::npos) return true;
    return false;
}

} // namespace

TEST_CASE("minimal config fills documented defaults") {
    const std::string text = R"({
        "collision": {"type": "lenard_bernstein"},
        "integrator": {"dt": 0.01, "n_steps": 5}
    })";
    const SimConfig cfg = parse_config(text);
    CHECK(cfg.n_particles == 1000);
    CHECK(!cfg.seed.has_value());
    CHECK(cfg.species.charge == -1.0);
    CHECK(cfg.species.mass == 1.0);
    CHECK(cfg.collision.kind == CollisionModel::Kind::LenardBernstein);
    CHECK(cfg.collision.lb.nu_c == 1.0);
    CHECK(cfg.collision.lb.mu == 1.0);
    CHECK(cfg.collision.lb.gamma == 1.0);
    CHECK(cfg.fields.kind == FieldModel::Kind::Vacuum);
    CHECK(cfg.integrator.scheme == Scheme::ItoEuler);
    CHECK(cfg.integrator.dt == 0.01);
    CHECK(cfg.integrator.n_steps == 5);
    CHECK(cfg.output.snapshot_stride == 0);
    CHECK(cfg.output.diagnostics_stride == 1);
    CHECK(std::holds_alternative<MaxwellianInit>(cfg.initial));

    // the fallback seed is the config hash, stable under reformatting
    const std::uint64_t h = config_hash(text);
    CHECK(cfg.effective_seed(h) == h);
    CHECK(config_hash("{\"a\": 1, \"b\": 2}") == config_hash("{ \"b\":2,\n \"a\": 1 }"));
    CHECK(config_hash("{\"a\": 1}") != config_hash("{\"a\": 2}"));
}

TEST_CASE("full config round-trips every section") {
    const std::string text = R"({
        "n_particles": 64,
        "seed": 99,
        "species": {"charge": 2.0, "mass": 3.0, "n_total": 50.0},
        "initial": {"type": "uniform_box_maxwellian",
                    "box_min": [-1, -1, -1], "box_max": [1, 1, 1],
                    "sigma_v": 0.5, "mean_velocity": [1, 0, 0]},
        "collision": {"type": "lorentz", "frequency": "power_law",
                      "nu0": 2.0, "v_min": 0.1},
        "fields": {"type": "external", "name": "uniform_b", "b0": [0, 0, 1.5]},
        "integrator": {"scheme": "lorentz_rotation", "dt": 0.001, "n_steps": 10},
        "output": {"directory": "out", "snapshot_stride": 5,
                   "record_trajectory": true}
    })";
    const SimConfig cfg = parse_config(text);
    CHECK(cfg.n_particles == 64);
    CHECK(cfg.seed == 99);
    CHECK(cfg.species.n_total == 50.0);
    CHECK(cfg.effective_seed(config_hash(text)) == 99);
    CHECK(std::holds_alternative<UniformBoxMaxwellianInit>(cfg.initial));
    CHECK(cfg.collision.lorentz.kind == LorentzFrequency::Kind::PowerLaw);
    CHECK(cfg.collision.lorentz.nu0 == 2.0);
    CHECK(cfg.fields.external.kind == ExternalField::Kind::UniformB);
    CHECK(cfg.fields.external.b0.z == 1.5);
    CHECK(cfg.integrator.scheme == Scheme::LorentzRotation);
    CHECK(cfg.output.directory == "out");
    CHECK(cfg.output.snapshot_stride == 5);
    CHECK(cfg.output.record_trajectory);

    // the manifest serialization preserves what the parser resolved
    const auto j = serialize_config(cfg);
    CHECK(j.at("seed") == 99);
    CHECK(j.at("collision").at("frequency") == "power_law");
    CHECK(j.at("fields").at("name") == "uniform_b");
    CHECK(j.at("integrator").at("scheme") == "lorentz_rotation");
}

TEST_CASE("unknown keys are rejected with suggestions") {
    try {
        parse_config(R"({"colision": {"type": "none"}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& ex) {
        REQUIRE(ex.errors.size() == 1);
        CHECK(has_error_containing(ex, "unknown key 'colision'"));
        CHECK(has_error_containing(ex, "did you mean 'collision'"));
    }

    try {
        parse_config(R"({"collision": {"type": "lenard_bernstein", "nuc": 2.0}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& ex) {
        CHECK(has_error_containing(ex, "did you mean 'nu_c'"));
    }
}

TEST_CASE("all validation errors are reported together") {
    try {
        parse_config(R"({
            "n_particles": 0,
            "collision": {"type": "lenard_bernstein", "nu_c": -1.0},
            "integrator": {"scheme": "euler", "dt": -0.5}
        })");
        FAIL("expected ConfigError");
    } catch (const ConfigError& ex) {
        CHECK(ex.errors.size() >= 4);
        CHECK(has_error_containing(ex, "n_particles"));
        CHECK(has_error_containing(ex, "nu_c"));
        CHECK(has_error_containing(ex, "unknown scheme 'euler'"));
        CHECK(has_error_containing(ex, "dt must be positive"));
    }
}

TEST_CASE("cross-field constraints name both keys") {
    try {
        parse_config(R"({
            "collision": {"type": "lenard_bernstein"},
            "integrator": {"scheme": "lorentz_rotation"}
        })");
        FAIL("expected ConfigError");
    } catch (const ConfigError& ex) {
        REQUIRE(ex.errors.size() == 1);
        CHECK(ex.errors[0].find("lorentz_rotation") != std::string::npos);
        CHECK(ex.errors[0].find("collision.type") != std::string::npos);
        CHECK(ex.errors[0].find("lorentz") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_config(R"({
        "fields": {"type": "vacuum"},
        "output": {"track_momentum": true, "record_trajectory": true}
    })"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({
        "fields": {"type": "external", "name": "uniform_b", "b0": [0, 0, 1]},
        "output": {"track_momentum": true}
    })"),
                    ConfigError);
    // satisfied constraints parse cleanly
    CHECK_NOTHROW(parse_config(R"({
        "fields": {"type": "external", "name": "uniform_b", "b0": [0, 0, 1]},
        "output": {"track_momentum": true, "record_trajectory": true}
    })"));
}

TEST_CASE("syntax errors and wrong types") {
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config("[1, 2, 3]"), ConfigError);
    try {
        parse_config(R"({"n_particles": "many", "seed": true})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& ex) {
        CHECK(ex.errors.size() == 2);
        CHECK(has_error_containing(ex, "wrong type"));
    }
}

TEST_CASE("snapshot round-trip is bit-exact") {
    auto e = init_ensemble(257, MaxwellianInit{1.7, {0.1, -0.2, 0.3}, {}}, 404);
    SnapshotMeta meta;
    meta.time = 1.25;
    meta.step_index = 40;
    meta.config_hash = 0xdeadbeefcafef00dULL;
    meta.species.charge = 2.0;
    meta.species.mass = 5.0;
    meta.species.n_total = 1e6;

    const std::string path = tmp_path("svpic_roundtrip.svpm");
    write_snapshot(path, e, meta);
    auto [e2, meta2] = read_snapshot(path);

    CHECK(e2.size() == e.size());
    CHECK(e2.positions == e.positions);   // bitwise: Vec3 equality is exact
    CHECK(e2.velocities == e.velocities);
    CHECK(!e2.momenta.has_value());
    CHECK(meta2.time == 1.25);
    CHECK(meta2.step_index == 40);
    CHECK(meta2.config_hash == meta.config_hash);
    CHECK(meta2.species.charge == 2.0);
    CHECK(meta2.species.mass == 5.0);
    CHECK(meta2.species.n_total == 1e6);

    SUBCASE("momenta column round-trips when present") {
        SpeciesParams sp;
        sp.mass = 2.0;
        auto em = init_ensemble(31, ColdBeamInit{{0, 0, 0}, {1, 2, 3}}, 1, sp,
                                [](const Vec3&) { return Vec3{0.5, 0, 0}; });
        write_snapshot(path, em, meta);
        auto [em2, m2] = read_snapshot(path);
        REQUIRE(em2.momenta.has_value());
        CHECK(*em2.momenta == *em.momenta);
    }
    std::remove(path.c_str());
}

TEST_CASE("snapshot error paths") {
    const std::string path = tmp_path("svpic_badfile.svpm");
    auto e = init_ensemble(10, MaxwellianInit{}, 3);
    SnapshotMeta meta;
    write_snapshot(path, e, meta);
    const auto full_size = std::filesystem::file_size(path);

    auto rewrite_prefix = [&](std::uintmax_t keep) {
        std::ifstream is(path, std::ios::binary);
        std::string bytes(keep, '\0');
        is.read(bytes.data(), static_cast<std::streamsize>(keep));
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write(bytes.data(), static_cast<std::streamsize>(keep));
    };

    SUBCASE("truncated particle data") {
        rewrite_prefix(full_size - 8);
        CHECK_THROWS_WITH_AS(read_snapshot(path), "snapshot: truncated particle data",
                             std::runtime_error);
    }
    SUBCASE("truncated metadata") {
        rewrite_prefix(20);
        CHECK_THROWS_WITH_AS(read_snapshot(path), "snapshot: truncated metadata",
                             std::runtime_error);
    }
    SUBCASE("truncated header") {
        rewrite_prefix(6);
        CHECK_THROWS_WITH_AS(read_snapshot(path), "snapshot: truncated header",
                             std::runtime_error);
    }
    SUBCASE("bad magic") {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os << "NOPE0000";
        os.close();
        CHECK_THROWS_WITH_AS(read_snapshot(path), "snapshot: bad magic bytes",
                             std::runtime_error);
    }
    SUBCASE("unsupported version") {
        std::ofstream os(path, std::ios::binary | std::ios::in | std::ios::out);
        os.seekp(4);
        const std::uint32_t v = 7;
        os.write(reinterpret_cast<const char*>(&v), 4);
        os.close();
        CHECK_THROWS_WITH_AS(read_snapshot(path), "snapshot: unsupported format version 7",
                             std::runtime_error);
    }
    SUBCASE("missing file") { CHECK_THROWS(read_snapshot(tmp_path("no_such.svpm"))); }
    std::remove(path.c_str());
}

TEST_CASE("restart provenance check") {
    SnapshotMeta meta;
    meta.config_hash = 111;
    CHECK(!check_restart_compatibility(meta, 111).has_value());
    const auto warn = check_restart_compatibility(meta, 222);
    REQUIRE(warn.has_value());
    CHECK(warn->find("111") != std::string::npos);
    CHECK(warn->find("222") != std::string::npos);
}

TEST_CASE("run driver writes manifest, CSV, and snapshots") {
    const std::string dir = tmp_path("svpic_run_out");
    std::filesystem::remove_all(dir);
    const std::string text = std::string(R"({
        "n_particles": 50,
        "seed": 8,
        "collision": {"type": "lenard_bernstein"},
        "integrator": {"dt": 0.01, "n_steps": 10},
        "output": {"directory": ")") + dir + R"(", "snapshot_stride": 5,
                   "diagnostics_stride": 2}
    })";
    const SimConfig cfg = parse_config(text);
    const RunResult r = run(cfg, config_hash(text));

    CHECK(r.seed == 8);
    CHECK(r.ledger.rows().size() == 6); // t = 0, .02, .04, .06, .08, .10
    CHECK(r.ledger.rows().back().t == doctest::Approx(0.1));
    CHECK(std::filesystem::exists(dir + "/manifest.json"));
    CHECK(std::filesystem::exists(dir + "/diagnostics.csv"));
    CHECK(std::filesystem::exists(dir + "/snapshot_000000.svpm"));
    CHECK(std::filesystem::exists(dir + "/snapshot_000005.svpm"));
    CHECK(std::filesystem::exists(dir + "/snapshot_000010.svpm"));

    // the final snapshot matches the in-memory final state bit-for-bit
    auto [es, ms] = read_snapshot(dir + "/snapshot_000010.svpm");
    CHECK(ms.time == doctest::Approx(0.1));
    CHECK(ms.config_hash == config_hash(text));
    const auto mom = moments(es, cfg.species);
    CHECK(mom.kinetic_energy == r.final_moments.kinetic_energy);

    // CSV: header + one row per ledger entry, 17-significant-digit values
    std::ifstream csv(dir + "/diagnostics.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "t,ke,fe,px,py,pz,mean_speed,min_speed,max_speed");
    std::size_t rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 6);

    // manifest carries the resolved config and the file inventory
    nlohmann::json manifest;
    std::ifstream(dir + "/manifest.json") >> manifest;
    CHECK(manifest.at("seed") == 8);
    CHECK(manifest.at("config_hash") == config_hash(text));
    CHECK(manifest.at("config").at("collision").at("type") == "lenard_bernstein");
    CHECK(manifest.at("files").size() == 4); // csv + 3 snapshots

    SUBCASE("repeat run is deterministic") {
        const RunResult r2 = run(cfg, config_hash(text));
        CHECK(r2.final_moments.mean_velocity == r.final_moments.mean_velocity);
        CHECK(r2.final_moments.kinetic_energy == r.final_moments.kinetic_energy);
    }
    SUBCASE("n_steps = 0 echoes the initial moments") {
        SimConfig cfg0 = cfg;
        cfg0.integrator.n_steps = 0;
        cfg0.output.snapshot_stride = 0;
        const RunResult r0 = run(cfg0, config_hash(text));
        CHECK(r0.initial_moments.kinetic_energy == r0.final_moments.kinetic_energy);
        CHECK(r0.ledger.rows().size() == 1);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("run can record a trajectory for identity checks") {
    const std::string dir = tmp_path("svpic_run_traj");
    std::filesystem::remove_all(dir);
    SimConfig cfg;
    cfg.n_particles = 20;
    cfg.seed = 5;
    cfg.fields.kind = FieldModel::Kind::ExternalAnalytic;
    cfg.fields.external.kind = ExternalField::Kind::UniformB;
    cfg.fields.external.b0 = {0, 0, 1};
    cfg.integrator = {Scheme::ItoEuler, 0.01, 8};
    cfg.output.directory = dir;
    cfg.output.record_trajectory = true;
    cfg.output.track_momentum = true;

    const RunResult r = run(cfg);
    REQUIRE(r.trajectory.has_value());
    CHECK(r.trajectory->frames.size() == 9);
    REQUIRE(r.trajectory->frames.front().momenta.has_value());
    // Euler with a linear vector potential satisfies the momentum identity exactly
    const auto rep = track_conjugate_momentum(*r.trajectory, cfg.species, cfg.fields.external);
    CHECK(rep.max_residual < 1e-14);
    std::filesystem::remove_all(dir);
}
