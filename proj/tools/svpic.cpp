// Command-line front end: run simulations, execute verification suites,
// measure weak convergence, and inspect snapshot files.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "svpic/config.hpp"
#include "svpic/run.hpp"
#include "svpic/snapshot.hpp"
#include "svpic/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCriterionFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumericalAbort = 3;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<long> steps;
    std::optional<std::string> scheme;
    std::optional<std::string> out_dir;
};

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw svpic::ConfigError({"cannot open config file '" + path + "'"});
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

svpic::Scheme parse_scheme(const std::string& name) {
    if (name == "ito_euler") return svpic::Scheme::ItoEuler;
    if (name == "stratonovich_heun") return svpic::Scheme::StratonovichHeun;
    if (name == "lorentz_rotation") return svpic::Scheme::LorentzRotation;
    throw svpic::ConfigError({"unknown scheme '" + name +
                              "' (expected ito_euler, stratonovich_heun, lorentz_rotation)"});
}

svpic::SimConfig load_config(const std::string& path, const Overrides& o,
                             std::uint64_t& hash_out) {
    const std::string text = read_file(path);
    hash_out = svpic::config_hash(text);
    svpic::SimConfig cfg = svpic::parse_config(text);
    if (o.seed) cfg.seed = *o.seed;
    if (o.dt) cfg.integrator.dt = *o.dt;
    if (o.steps) cfg.integrator.n_steps = *o.steps;
    if (o.scheme) cfg.integrator.scheme = parse_scheme(*o.scheme);
    if (o.out_dir)
        cfg.output.directory = *o.out_dir;
    else if (const char* env = std::getenv("SVPIC_OUT"); env && cfg.output.directory == ".")
        cfg.output.directory = env;
    cfg.integrator.validate();
    return cfg;
}

int cmd_run(const std::string& config_path, const Overrides& o) {
    std::uint64_t hash = 0;
    const svpic::SimConfig cfg = load_config(config_path, o, hash);
    const svpic::RunResult r = svpic::run(cfg, hash);
    nlohmann::json summary{
        {"seed", r.seed},
        {"config_hash", r.config_hash},
        {"wall_seconds", r.wall_seconds},
        {"final_kinetic_energy", r.final_moments.kinetic_energy},
        {"final_mean_speed", r.final_moments.mean_speed},
        {"files", r.files_written}};
    std::cout << summary.dump() << '\n';
    return kExitOk;
}

int cmd_verify(const std::string& suite) {
    const auto results = svpic::run_verification_suite(suite);
    bool all_pass = true;
    for (const auto& r : results) {
        std::cout << svpic::criterion_line(r) << '\n';
        all_pass = all_pass && r.pass;
    }
    return all_pass ? kExitOk : kExitCriterionFailed;
}

int cmd_convergence(const std::string& config_path, unsigned levels, const Overrides& o) {
    if (levels < 2) throw svpic::ConfigError({"convergence: levels must be >= 2"});
    std::uint64_t hash = 0;
    const svpic::SimConfig cfg = load_config(config_path, o, hash);
    const auto rep = svpic::weak_convergence(cfg, levels, cfg.effective_seed(hash));
    nlohmann::json j{{"observable", "mean squared speed at final time"},
                     {"dts", rep.dts},
                     {"values", rep.observable},
                     {"coupled_differences", rep.differences},
                     {"fitted_order", rep.fitted_order}};
    std::cout << j.dump() << '\n';
    return kExitOk;
}

int cmd_inspect(const std::string& snapshot_path) {
    const auto [e, meta] = svpic::read_snapshot(snapshot_path);
    const auto m = svpic::moments(e, meta.species);
    nlohmann::json j{
        {"time", meta.time},
        {"step_index", meta.step_index},
        {"config_hash", meta.config_hash},
        {"n_particles", e.size()},
        {"has_momenta", e.momenta.has_value()},
        {"species",
         {{"charge", meta.species.charge},
          {"mass", meta.species.mass},
          {"n_total", meta.species.n_total}}},
        {"mean_velocity", {m.mean_velocity.x, m.mean_velocity.y, m.mean_velocity.z}},
        {"velocity_variance",
         {m.velocity_variance.x, m.velocity_variance.y, m.velocity_variance.z}},
        {"kinetic_energy", m.kinetic_energy},
        {"mean_speed", m.mean_speed}};
    std::cout << j.dump() << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic particle kinetics: runs, verification, convergence, inspection"};
    app.require_subcommand(1);

    Overrides o;
    unsigned threads = 0;

    std::string run_config;
    auto* run = app.add_subcommand("run", "execute a configured simulation");
    run->add_option("--config", run_config, "config file (JSON)")->required();
    run->add_option("--seed", o.seed, "override the RNG seed");
    run->add_option("--dt", o.dt, "override the time step");
    run->add_option("--steps", o.steps, "override the step count");
    run->add_option("--scheme", o.scheme,
                    "override the scheme (ito_euler | stratonovich_heun | lorentz_rotation)");
    run->add_option("--out-dir", o.out_dir, "output directory (or env SVPIC_OUT)");
    run->add_option("--threads", threads, "worker thread cap (0 = hardware)");

    std::string suite = "all";
    auto* verify = app.add_subcommand("verify", "run a verification suite");
    verify->add_option("suite", suite, "lb | lorentz | coulomb | fields | momentum | all");
    verify->add_option("--threads", threads, "worker thread cap (0 = hardware)");

    std::string conv_config;
    unsigned levels = 3;
    auto* conv = app.add_subcommand("convergence", "coupled-path weak-order measurement");
    conv->add_option("--config", conv_config, "config file (JSON)")->required();
    conv->add_option("--levels", levels, "number of dt-halving levels (>= 2)");
    conv->add_option("--seed", o.seed, "override the RNG seed");
    conv->add_option("--threads", threads, "worker thread cap (0 = hardware)");

    std::string snapshot_path;
    auto* inspect = app.add_subcommand("inspect", "print snapshot metadata and moments");
    inspect->add_option("snapshot", snapshot_path, "snapshot file")->required();

    CLI11_PARSE(app, argc, argv);
    svpic::thread_cap() = threads;

    try {
        if (run->parsed()) return cmd_run(run_config, o);
        if (verify->parsed()) return cmd_verify(suite);
        if (conv->parsed()) return cmd_convergence(conv_config, levels, o);
        if (inspect->parsed()) return cmd_inspect(snapshot_path);
    } catch (const svpic::NumericalAbort& ex) {
        std::cerr << "numerical abort: " << ex.what() << '\n';
        return kExitNumericalAbort;
    } catch (const svpic::ConfigError& ex) {
        std::cerr << ex.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitValidation;
    }
    return kExitValidation;
}
