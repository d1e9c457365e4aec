#include <doctest.h>

#include <cmath>

#include "svpic/diagnostics.hpp"
#include "svpic/oracle.hpp"

using namespace svpic;

TEST_CASE("ledger rows and monotone timestamps") {
    ConservationLedger ledger;
    SpeciesParams sp;
    sp.n_total = 100.0;
    auto e = init_ensemble(100, ColdBeamInit{{0, 0, 0}, {1, 0, 0}}, 1);
    ledger.append(0.0, e, sp);
    ledger.append(0.5, e, sp, 2.5);
    CHECK(ledger.rows().size() == 2);
    CHECK(ledger.rows()[0].kinetic_energy == doctest::Approx(50.0));
    CHECK(ledger.rows()[0].total_momentum.x == doctest::Approx(100.0));
    CHECK(ledger.rows()[1].field_energy_estimate == 2.5);
    CHECK_THROWS(ledger.append(0.5, e, sp));
    CHECK_THROWS(ledger.append(0.2, e, sp));
}

TEST_CASE("momentum identity on recorded trajectories") {
    SpeciesParams sp; // q = -1, m = 1

    SUBCASE("A = 0: the check reduces to Newton's law, exact for Euler") {
        FieldModel fm;
        fm.kind = FieldModel::Kind::ExternalAnalytic;
        fm.external.kind = ExternalField::Kind::UniformE;
        fm.external.e0 = {0.3, -0.1, 0.8};
        auto e = init_ensemble(50, MaxwellianInit{1.0, {}, {}}, 3);
        Trajectory traj;
        IntegratorSpec spec{Scheme::ItoEuler, 0.05, 20};
        integrate(Scheme::ItoEuler, e, sp, CollisionModel{}, fm, spec, 5, 0.0, &traj);
        auto rep = track_conjugate_momentum(traj, sp, fm.external);
        CHECK(rep.max_residual < 1e-14);
        CHECK(rep.a_gradient_term == 0.0);
        CHECK(rep.scalar_potential_term > 0.0);
    }

    SUBCASE("linear-drag collisions with A = 0: drift and noise cancel exactly") {
        FieldModel vacuum;
        vacuum.kind = FieldModel::Kind::ExternalAnalytic;
        vacuum.external.kind = ExternalField::Kind::UniformE;
        vacuum.external.e0 = {};
        CollisionModel lb;
        lb.kind = CollisionModel::Kind::LenardBernstein;
        auto e = init_ensemble(50, MaxwellianInit{1.0, {}, {}}, 13);
        Trajectory traj;
        IntegratorSpec spec{Scheme::ItoEuler, 0.01, 20};
        integrate(Scheme::ItoEuler, e, sp, lb, vacuum, spec, 19, 0.0, &traj);
        auto rep = track_conjugate_momentum(traj, sp, vacuum.external, lb);
        CHECK(rep.max_residual < 1e-14);
        CHECK(rep.noise_term > 0.0);
    }

    SUBCASE("uniform B: per-step residual scales at the local truncation order") {
        FieldModel fm;
        fm.kind = FieldModel::Kind::ExternalAnalytic;
        fm.external.kind = ExternalField::Kind::UniformB;
        fm.external.b0 = {0, 0, 1};
        double prev = 0.0;
        for (int level = 0; level < 3; ++level) {
            const double dt = 0.04 / std::pow(2.0, level);
            auto e = init_ensemble(20, MaxwellianInit{1.0, {}, {}}, 7);
            Trajectory traj;
            IntegratorSpec spec{Scheme::StratonovichHeun, dt, 4L << level};
            integrate(Scheme::StratonovichHeun, e, sp, CollisionModel{}, fm, spec, 11, 0.0,
                      &traj);
            auto rep = track_conjugate_momentum(traj, sp, fm.external);
            if (level > 0) {
                const double order = std::log2(prev / rep.max_residual);
                CHECK(order > 1.7);
                CHECK(order < 2.3);
            }
            prev = rep.max_residual;
        }
    }

    SUBCASE("strided trajectories are rejected") {
        FieldModel vacuum;
        auto e = init_ensemble(10, MaxwellianInit{1.0, {}, {}}, 2);
        Trajectory traj;
        IntegratorSpec spec{Scheme::ItoEuler, 0.05, 10};
        integrate(Scheme::ItoEuler, e, sp, CollisionModel{}, vacuum, spec, 5, 0.0, &traj, 2);
        CHECK_THROWS(track_conjugate_momentum(traj, sp, ExternalField{}));
    }
}

TEST_CASE("gauss residual") {
    SpeciesParams sp;
    sp.charge = -1.0;
    sp.n_total = 1000.0;
    auto e = init_ensemble(1000, MaxwellianInit{1.0, {}, {}}, 77);
    for (std::size_t a = 0; a < e.size(); ++a) e.positions[a] = e.velocities[a];
    DepositionGrid g;
    g.lo = {-4, -4, -4};
    g.hi = {4, 4, 4};

    SUBCASE("decreases under joint grid and softening refinement") {
        double prev = 1e30;
        const std::size_t cells[] = {4, 6, 8};
        const double eps[] = {1.5, 1.0, 0.75};
        for (int lvl = 0; lvl < 3; ++lvl) {
            g.cells = {cells[lvl], cells[lvl], cells[lvl]};
            const double r = gauss_residual(e, sp, g, eps[lvl]);
            CHECK(r < prev);
            prev = r;
        }
        CHECK(prev < 0.3);
    }

    SUBCASE("zero charge guards the 0/0 case") {
        SpeciesParams neutral;
        neutral.charge = 0.0;
        g.cells = {4, 4, 4};
        CHECK(gauss_residual(e, neutral, g, 0.5) == 0.0);
    }
}

TEST_CASE("maxwellian goodness of fit") {
    SUBCASE("exact samples pass at the 1% level") {
        auto e = init_ensemble(50000, MaxwellianInit{std::sqrt(0.5), {}, {}}, 123);
        auto rep = compare_to_maxwellian(e, 0.5);
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(rep.ks_statistic[c] < rep.ks_critical_1pct);
            CHECK(std::abs(rep.variance_delta[c]) < 0.02);
            CHECK(std::abs(rep.kurtosis_delta[c]) < 0.1);
        }
    }

    SUBCASE("a cold beam is maximally mismatched") {
        auto e = init_ensemble(100, ColdBeamInit{{0, 0, 0}, {1, 0, 0}}, 1);
        auto rep = compare_to_maxwellian(e, 1.0);
        CHECK(rep.ks_statistic.x > 0.5);
        CHECK(rep.ks_statistic.y == doctest::Approx(0.5).epsilon(1e-12));
    }

    SUBCASE("wrong temperature is detected") {
        auto e = init_ensemble(50000, MaxwellianInit{1.0, {}, {}}, 9);
        auto rep = compare_to_maxwellian(e, 0.8);
        for (std::size_t c = 0; c < 3; ++c) CHECK(rep.ks_statistic[c] > rep.ks_critical_1pct);
    }

    CHECK_THROWS(compare_to_maxwellian(ParticleEnsemble{}, -1.0));
}

TEST_CASE("speed conservation report") {
    SpeciesParams sp;
    FieldModel vacuum;
    CollisionModel lorentz;
    lorentz.kind = CollisionModel::Kind::Lorentz;

    auto e = init_ensemble(200, MaxwellianInit{1.0, {}, {}}, 31);
    e.velocities[0] = {0, 0, 0}; // excluded, not divided by
    Trajectory traj;
    IntegratorSpec spec{Scheme::LorentzRotation, 1e-2, 100};
    integrate(Scheme::LorentzRotation, e, sp, lorentz, vacuum, spec, 41, 0.0, &traj);
    auto rep = speed_conservation_report(traj);
    CHECK(rep.max_rel_drift <= 1e-11);
    CHECK(rep.n_zero_speed_excluded == 1);
    CHECK(rep.per_frame_max.size() == traj.frames.size() - 1);

    // the generic Heun push drifts at first order in dt
    auto e2 = init_ensemble(200, MaxwellianInit{1.0, {}, {}}, 31);
    Trajectory t2;
    integrate(Scheme::StratonovichHeun, e2, sp, lorentz, vacuum, spec, 41, 0.0, &t2);
    auto rep2 = speed_conservation_report(t2);
    CHECK(rep2.max_rel_drift > rep.max_rel_drift);

    CHECK_THROWS(speed_conservation_report(Trajectory{}));
}
