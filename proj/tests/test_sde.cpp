#include <doctest.h>

#include <cmath>

#include "svpic/oracle.hpp"
#include "svpic/sde.hpp"

using namespace svpic;

namespace {

WienerBatch zero_noise(std::size_t n, double dt) {
    WienerBatch b;
    b.dt = dt;
    b.n_particles = n;
    b.m_channels = kDiffusionChannels;
    b.increments.assign(n * kDiffusionChannels, 0.0);
    return b;
}

CollisionModel lb_model(double nu, double mu, double gamma) {
    CollisionModel m;
    m.kind = CollisionModel::Kind::LenardBernstein;
    m.lb = {nu, mu, gamma};
    return m;
}

} // namespace

TEST_CASE("deterministic limit is explicit Euler") {
    ParticleEnsemble e;
    e.positions = {{0, 0, 0}};
    e.velocities = {{1, 0, 0}};
    SpeciesParams sp; // q = -1, m = 1
    FieldModel fields;
    fields.kind = FieldModel::Kind::ExternalAnalytic;
    fields.external.kind = ExternalField::Kind::UniformE;
    fields.external.e0 = {0, 2, 0};
    CollisionModel none;

    const double dt = 0.1;
    step_ito_euler(e, sp, none, fields, 0.0, dt, zero_noise(1, dt));
    CHECK(e.velocities[0].x == 1.0);
    CHECK(e.velocities[0].y == doctest::Approx(-0.2).epsilon(1e-15)); // (q/m) E dt
    CHECK(e.positions[0].x == doctest::Approx(0.1).epsilon(1e-15));   // pre-step V dt
    CHECK(e.positions[0].y == 0.0);
}

TEST_CASE("single linear-drag Euler step") {
    ParticleEnsemble e;
    e.positions = {{0, 0, 0}};
    e.velocities = {{1, 0, 0}};
    SpeciesParams sp;
    FieldModel vacuum;
    auto lb = lb_model(1.0, 1.0, 1.0);
    step_ito_euler(e, sp, lb, vacuum, 0.0, 0.1, zero_noise(1, 0.1));
    CHECK(e.velocities[0].x == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("linear-drag ensemble relaxes to the OU law") {
    const std::size_t n = 20000;
    auto e = init_ensemble(n, MaxwellianInit{0.3, {1, 0, 0}, {}}, 101);
    SpeciesParams sp;
    FieldModel vacuum;
    auto lb = lb_model(1.0, 1.0, 1.0);
    IntegratorSpec spec{Scheme::ItoEuler, 1e-3, 1000}; // T = 1
    integrate(Scheme::ItoEuler, e, sp, lb, vacuum, spec, 55);

    auto m = moments(e);
    auto ref = ou_moments(1.0, 1.0, 1.0, {1, 0, 0}, 1.0);
    const double var_ref = 0.09 * std::exp(-2.0) + ref.variance_per_component;
    CHECK(m.mean_velocity.x == doctest::Approx(ref.mean.x).epsilon(0.03));
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(m.velocity_variance[c] == doctest::Approx(var_ref).epsilon(0.05));
}

TEST_CASE("additive noise makes the two generic schemes agree") {
    // constant D, zero K: no drift, state-independent diffusion
    CollisionModel custom;
    custom.kind = CollisionModel::Kind::CustomDK;
    custom.custom.d = [](const Vec3&, const Vec3&) { return 0.25 * Mat3::identity(); };
    custom.custom.k = [](const Vec3&, const Vec3&) { return Vec3{}; };

    auto e1 = init_ensemble(100, MaxwellianInit{1.0, {}, {}}, 7);
    auto e2 = e1;
    SpeciesParams sp;
    FieldModel vacuum;
    auto noise = wiener_increments(3, 0, 100, kDiffusionChannels, 0.01);
    step_ito_euler(e1, sp, custom, vacuum, 0.0, 0.01, noise);
    step_stratonovich_heun(e2, sp, custom, vacuum, 0.0, 0.01, noise);
    for (std::size_t a = 0; a < e1.size(); ++a)
        CHECK(norm(e1.velocities[a] - e2.velocities[a]) < 1e-15);
}

TEST_CASE("matched-seed distributional agreement of the two schemes") {
    const std::size_t n = 20000;
    SpeciesParams sp;
    FieldModel vacuum;
    auto lb = lb_model(1.0, 1.0, 1.0);
    IntegratorSpec spec{Scheme::ItoEuler, 1e-3, 200};
    auto e1 = init_ensemble(n, MaxwellianInit{0.5, {}, {}}, 5);
    auto e2 = e1;
    integrate(Scheme::ItoEuler, e1, sp, lb, vacuum, spec, 77);
    integrate(Scheme::StratonovichHeun, e2, sp, lb, vacuum, spec, 77);
    auto m1 = moments(e1), m2 = moments(e2);
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(std::abs(m1.velocity_variance[c] - m2.velocity_variance[c]) <
              4.0 * m1.velocity_variance[c] / std::sqrt(double(n)));
}

TEST_CASE("rotation push") {
    CollisionModel lorentz;
    lorentz.kind = CollisionModel::Kind::Lorentz;
    SpeciesParams sp;
    FieldModel vacuum;

    SUBCASE("zero noise is the identity") {
        ParticleEnsemble e;
        e.positions = {{0, 0, 0}};
        e.velocities = {{0.3, -0.4, 1.2}};
        step_lorentz_rotation(e, sp, lorentz, vacuum, 0.0, 0.01, zero_noise(1, 0.01));
        CHECK(e.velocities[0].x == 0.3);
        CHECK(e.velocities[0].y == -0.4);
        CHECK(e.velocities[0].z == 1.2);
    }

    SUBCASE("speed is conserved for any draw") {
        auto e = init_ensemble(500, MaxwellianInit{1.0, {}, {}}, 61);
        std::vector<double> s0(e.size());
        for (std::size_t a = 0; a < e.size(); ++a) s0[a] = norm(e.velocities[a]);
        IntegratorSpec spec{Scheme::LorentzRotation, 1e-2, 200};
        integrate(Scheme::LorentzRotation, e, sp, lorentz, vacuum, spec, 9);
        for (std::size_t a = 0; a < e.size(); ++a)
            CHECK(std::abs(norm(e.velocities[a]) - s0[a]) <= 1e-13 * s0[a]);
    }

    SUBCASE("agrees with the Heun push to O(|dW|^2)") {
        double prev = 0.0;
        for (int level = 0; level < 3; ++level) {
            const double dt = 0.01 / std::pow(2.0, level);
            ParticleEnsemble e1, e2;
            e1.positions = e2.positions = {{0, 0, 0}};
            e1.velocities = e2.velocities = {{1.0, 0.5, -0.2}};
            auto noise = wiener_increments(13, 0, 1, kDiffusionChannels, dt);
            step_lorentz_rotation(e1, sp, lorentz, vacuum, 0.0, dt, noise);
            step_stratonovich_heun(e2, sp, lorentz, vacuum, 0.0, dt, noise);
            const double diff = norm(e1.velocities[0] - e2.velocities[0]);
            if (level > 0) CHECK(diff < prev); // shrinks with |dW|
            prev = diff;
        }
    }

    SUBCASE("requires the pitch-angle operator") {
        ParticleEnsemble e;
        e.positions = {{0, 0, 0}};
        e.velocities = {{1, 0, 0}};
        auto lb = lb_model(1, 1, 1);
        CHECK_THROWS(
            step_lorentz_rotation(e, sp, lb, vacuum, 0.0, 0.01, zero_noise(1, 0.01)));
    }
}

TEST_CASE("collisionless gyration matches the analytic orbit") {
    ParticleEnsemble e;
    e.positions = {{0, 0, 0}};
    e.velocities = {{1, 0, 0}};
    SpeciesParams sp; // q = -1, m = 1
    FieldModel fields;
    fields.kind = FieldModel::Kind::ExternalAnalytic;
    fields.external.kind = ExternalField::Kind::UniformB;
    fields.external.b0 = {0, 0, 1};
    CollisionModel none;

    const double dt = 1e-3;
    const long steps = long(2.0 * 3.14159265358979323846 / dt);
    IntegratorSpec spec{Scheme::StratonovichHeun, dt, steps};
    integrate(Scheme::StratonovichHeun, e, sp, none, fields, spec, 1);
    // gyroradius m v / (q b) = 1: one full circle returns to the origin
    CHECK(norm(e.positions[0]) < 0.02);
    CHECK(norm(e.velocities[0]) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("noise shape mismatch and non-finite states are rejected") {
    ParticleEnsemble e;
    e.positions = {{0, 0, 0}, {1, 0, 0}};
    e.velocities = {{1, 0, 0}, {0, 1, 0}};
    SpeciesParams sp;
    FieldModel vacuum;
    CollisionModel none;
    CHECK_THROWS(step_ito_euler(e, sp, none, vacuum, 0.0, 0.1, zero_noise(1, 0.1)));

    CollisionModel bad;
    bad.kind = CollisionModel::Kind::CustomDK;
    bad.custom.d = [](const Vec3&, const Vec3&) { return Mat3::identity(); };
    bad.custom.k = [](const Vec3&, const Vec3&) {
        return Vec3{std::numeric_limits<double>::quiet_NaN(), 0, 0};
    };
    try {
        step_ito_euler(e, sp, bad, vacuum, 0.0, 0.1, zero_noise(2, 0.1), 17);
        CHECK(false);
    } catch (const NumericalAbort& abort) {
        CHECK(abort.step_index == 17);
        CHECK(abort.particle_index == 0);
    }
}

TEST_CASE("integration is deterministic and thread-invariant") {
    SpeciesParams sp;
    FieldModel vacuum;
    auto lb = lb_model(1.0, 1.0, 1.0);
    IntegratorSpec spec{Scheme::ItoEuler, 1e-2, 50};

    auto run_once = [&](unsigned threads) {
        const unsigned saved = thread_cap();
        thread_cap() = threads;
        auto e = init_ensemble(10000, MaxwellianInit{1.0, {}, {}}, 21);
        integrate(Scheme::ItoEuler, e, sp, lb, vacuum, spec, 33);
        thread_cap() = saved;
        return e;
    };
    auto a = run_once(1);
    auto b = run_once(1);
    auto c = run_once(8);
    for (std::size_t i = 0; i < a.size(); i += 997) {
        CHECK(a.velocities[i].x == b.velocities[i].x);
        CHECK(a.velocities[i].x == c.velocities[i].x);
    }
}

TEST_CASE("trajectory recording keeps states and noise") {
    auto e = init_ensemble(16, MaxwellianInit{1.0, {}, {}}, 4);
    SpeciesParams sp;
    FieldModel vacuum;
    auto lb = lb_model(1.0, 1.0, 1.0);
    IntegratorSpec spec{Scheme::ItoEuler, 0.05, 10};
    Trajectory traj;
    integrate(Scheme::ItoEuler, e, sp, lb, vacuum, spec, 8, 0.0, &traj, 2);
    REQUIRE(traj.frames.size() == 6); // steps 0,2,4,6,8 plus the final state
    CHECK(traj.frames.back().t == doctest::Approx(0.5));
    CHECK(traj.frames[0].noise.n_particles == 16);
    // recorded noise matches the counter stream for that step
    auto expect = wiener_increments(8, 2, 16, kDiffusionChannels, 0.05);
    CHECK(traj.frames[1].noise.increments == expect.increments);
    CHECK(traj.frames[1].step_index == 2);
}

TEST_CASE("n_steps = 0 leaves the state untouched") {
    auto e = init_ensemble(10, MaxwellianInit{1.0, {}, {}}, 6);
    auto before = e.velocities;
    SpeciesParams sp;
    FieldModel vacuum;
    auto lb = lb_model(1, 1, 1);
    IntegratorSpec spec{Scheme::ItoEuler, 0.1, 0};
    integrate(Scheme::ItoEuler, e, sp, lb, vacuum, spec, 2);
    CHECK(e.velocities == before);
    IntegratorSpec bad{Scheme::ItoEuler, -0.1, 1};
    CHECK_THROWS(integrate(Scheme::ItoEuler, e, sp, lb, vacuum, bad, 2));
}
