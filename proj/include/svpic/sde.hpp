#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "svpic/collision.hpp"
#include "svpic/ensemble.hpp"
#include "svpic/fields.hpp"
#include "svpic/parallel.hpp"
#include "svpic/rng.hpp"
#include "svpic/vec3.hpp"

namespace svpic {

enum class Scheme { ItoEuler, StratonovichHeun, LorentzRotation };

struct IntegratorSpec {
    Scheme scheme = Scheme::ItoEuler;
    double dt = 1e-3;
    long n_steps = 1;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("integrator: dt must be positive");
        if (n_steps < 0) throw std::invalid_argument("integrator: n_steps must be >= 0");
    }
};

/// Raised when a step produces a non-finite state; carries the location.
struct NumericalAbort : std::runtime_error {
    long step_index;
    std::size_t particle_index;
    NumericalAbort(long step, std::size_t particle)
        : std::runtime_error("non-finite state at step " + std::to_string(step) +
                             ", particle " + std::to_string(particle)),
          step_index(step), particle_index(particle) {}
};

/// Collision forcing frozen against the pre-step ensemble. Closed-form
/// operators are stateless; the Coulomb operator snapshots the ensemble so
/// every particle in the step sees the same empirical (D, K).
class CollisionEvaluator {
  public:
    CollisionEvaluator(const CollisionModel& model, const ParticleEnsemble& ensemble,
                       const SpeciesParams& species)
        : model_(&model) {
        if (model.kind == CollisionModel::Kind::Coulomb)
            coulomb_.emplace(ensemble, species, model.coulomb);
    }

    bool active() const { return model_->kind != CollisionModel::Kind::None; }

    ForcingEval eval(const Vec3& x, const Vec3& v) const {
        switch (model_->kind) {
        case CollisionModel::Kind::None: return {};
        case CollisionModel::Kind::LenardBernstein:
            return eval_lenard_bernstein(model_->lb, x, v);
        case CollisionModel::Kind::Lorentz: return eval_lorentz(model_->lorentz, x, v);
        case CollisionModel::Kind::Coulomb: return coulomb_->eval(x, v);
        case CollisionModel::Kind::CustomDK: return eval_custom(x, v);
        }
        return {};
    }

  private:
    // kept out of line so its std::function plumbing does not bloat the
    // closed-form fast paths above
    [[gnu::noinline]] ForcingEval eval_custom(const Vec3& x, const Vec3& v) const {
        auto d_of_v = [&](const Vec3& u) { return model_->custom.d(x, u); };
        return decompose_dk(d_of_v, model_->custom.k(x, v), v, default_fd_step(v));
    }

    const CollisionModel* model_;
    std::optional<CoulombContext> coulomb_;
};

namespace detail {

/// Per-particle electric field frozen at the pre-step state. External fields
/// stay callable (cheap); the pairwise field is precomputed once.
struct FrozenFields {
    const FieldModel* model;
    std::vector<Vec3> self_e; // SelfConsistentCoulomb only

    FrozenFields(const FieldModel& m, const ParticleEnsemble& e, const SpeciesParams& sp)
        : model(&m) {
        if (m.kind == FieldModel::Kind::SelfConsistentCoulomb)
            self_e = self_field_batch(e, sp, m.softening, m.exclude_self);
    }

    Vec3 e_at(std::size_t a, const Vec3& x, double t) const {
        switch (model->kind) {
        case FieldModel::Kind::Vacuum: return {};
        case FieldModel::Kind::ExternalAnalytic: return model->external.e_at(x, t);
        case FieldModel::Kind::SelfConsistentCoulomb: return self_e[a];
        }
        return {};
    }

    Vec3 b_at(const Vec3& x, double t) const {
        return model->kind == FieldModel::Kind::ExternalAnalytic ? model->external.b_at(x, t)
                                                                 : Vec3{};
    }
};

inline void refresh_momenta(ParticleEnsemble& e, const SpeciesParams& sp,
                            const FieldModel& fields, double t) {
    if (!e.momenta) return;
    const bool has_a = fields.kind == FieldModel::Kind::ExternalAnalytic;
    for (std::size_t a = 0; a < e.size(); ++a) {
        Vec3 va = has_a ? fields.external.a_at(e.positions[a], t) : Vec3{};
        (*e.momenta)[a] = sp.mass * e.velocities[a] + sp.charge * va;
    }
}

inline void check_noise(const ParticleEnsemble& e, const WienerBatch& noise) {
    if (noise.n_particles != e.size() || noise.m_channels != kDiffusionChannels)
        throw std::invalid_argument("step: noise shape does not match the ensemble");
}

inline void check_finite(const ParticleEnsemble& e, long step) {
    for (std::size_t a = 0; a < e.size(); ++a)
        if (!is_finite(e.positions[a]) || !is_finite(e.velocities[a]))
            throw NumericalAbort(step, a);
}

} // namespace detail

/// Explicit Euler-Maruyama step with the Ito drift K:
///   X += V dt;  V += [(q/m)(E + V x B) + K] dt + sum_nu g_nu dW^nu,
/// with fields and collision forcing evaluated at the pre-step state.
inline void step_ito_euler(ParticleEnsemble& e, const SpeciesParams& species,
                           const CollisionModel& collision, const FieldModel& fields,
                           double t, double dt, const WienerBatch& noise,
                           long step_index = -1) {
    detail::check_noise(e, noise);
    const CollisionEvaluator coll(collision, e, species);
    const detail::FrozenFields ff(fields, e, species);
    const double qm = species.charge / species.mass;

    parallel_for(e.size(), [&](std::size_t a) {
        const Vec3 x = e.positions[a];
        const Vec3 v = e.velocities[a];
        Vec3 dv = qm * (ff.e_at(a, x, t) + cross(v, ff.b_at(x, t))) * dt;
        if (coll.active()) {
            const ForcingEval f = coll.eval(x, v);
            dv += f.ito_drift_k * dt;
            for (std::size_t nu = 0; nu < kDiffusionChannels; ++nu)
                dv += f.diffusion_g[nu] * noise.at(a, nu);
        }
        e.positions[a] = x + v * dt;
        e.velocities[a] = v + dv;
    });
    detail::check_finite(e, step_index);
    detail::refresh_momenta(e, species, fields, t + dt);
}

/// Euler-Heun predictor-corrector step for the Stratonovich form: the
/// predictor uses drift G and diffusion at the current state; the corrector
/// averages drift and diffusion between current and predictor states. The
/// Lorentz-force and E terms ride along as ordinary drift.
inline void step_stratonovich_heun(ParticleEnsemble& e, const SpeciesParams& species,
                                   const CollisionModel& collision, const FieldModel& fields,
                                   double t, double dt, const WienerBatch& noise,
                                   long step_index = -1) {
    detail::check_noise(e, noise);
    const CollisionEvaluator coll(collision, e, species);
    const detail::FrozenFields ff(fields, e, species);
    const double qm = species.charge / species.mass;

    parallel_for(e.size(), [&](std::size_t a) {
        const Vec3 x = e.positions[a];
        const Vec3 v = e.velocities[a];

        Vec3 drift0 = qm * (ff.e_at(a, x, t) + cross(v, ff.b_at(x, t)));
        Vec3 diff0{};
        ForcingEval f0;
        if (coll.active()) {
            f0 = coll.eval(x, v);
            drift0 += f0.drift_g;
            for (std::size_t nu = 0; nu < kDiffusionChannels; ++nu)
                diff0 += f0.diffusion_g[nu] * noise.at(a, nu);
        }
        const Vec3 x_pred = x + v * dt;
        const Vec3 v_pred = v + drift0 * dt + diff0;

        Vec3 drift1 = qm * (ff.e_at(a, x_pred, t + dt) + cross(v_pred, ff.b_at(x_pred, t + dt)));
        Vec3 diff1{};
        if (coll.active()) {
            const ForcingEval f1 = coll.eval(x_pred, v_pred);
            drift1 += f1.drift_g;
            for (std::size_t nu = 0; nu < kDiffusionChannels; ++nu)
                diff1 += f1.diffusion_g[nu] * noise.at(a, nu);
        }

        e.positions[a] = x + 0.5 * (v + v_pred) * dt;
        e.velocities[a] = v + 0.5 * (drift0 + drift1) * dt + 0.5 * (diff0 + diff1);
    });
    detail::check_finite(e, step_index);
    detail::refresh_momenta(e, species, fields, t + dt);
}

/// Structure-preserving pitch-angle push: half-step field kick, exact
/// velocity rotation by omega = sqrt(nu_c(|v|)) dW (the Stratonovich flow of
/// the pitch-angle generators), half-step kick. The rotation conserves the
/// speed to round-off.
inline void step_lorentz_rotation(ParticleEnsemble& e, const SpeciesParams& species,
                                  const CollisionModel& collision, const FieldModel& fields,
                                  double t, double dt, const WienerBatch& noise,
                                  long step_index = -1) {
    if (collision.kind != CollisionModel::Kind::Lorentz)
        throw std::invalid_argument("step_lorentz_rotation: collision kind must be Lorentz");
    detail::check_noise(e, noise);
    const detail::FrozenFields ff(fields, e, species);
    const double qm = species.charge / species.mass;

    parallel_for(e.size(), [&](std::size_t a) {
        const Vec3 x = e.positions[a];
        Vec3 v = e.velocities[a];
        v += 0.5 * dt * qm * (ff.e_at(a, x, t) + cross(v, ff.b_at(x, t)));
        const double s = std::sqrt(collision.lorentz(norm(v)));
        const Vec3 omega =
            s * Vec3{noise.at(a, 0), noise.at(a, 1), noise.at(a, 2)};
        v = rotate(v, omega);
        v += 0.5 * dt * qm * (ff.e_at(a, x, t) + cross(v, ff.b_at(x, t)));
        e.positions[a] = x + e.velocities[a] * dt;
        e.velocities[a] = v;
    });
    detail::check_finite(e, step_index);
    detail::refresh_momenta(e, species, fields, t + dt);
}

/// Dispatch on the configured scheme.
inline void step(Scheme scheme, ParticleEnsemble& e, const SpeciesParams& species,
                 const CollisionModel& collision, const FieldModel& fields, double t,
                 double dt, const WienerBatch& noise, long step_index = -1) {
    switch (scheme) {
    case Scheme::ItoEuler:
        step_ito_euler(e, species, collision, fields, t, dt, noise, step_index);
        break;
    case Scheme::StratonovichHeun:
        step_stratonovich_heun(e, species, collision, fields, t, dt, noise, step_index);
        break;
    case Scheme::LorentzRotation:
        step_lorentz_rotation(e, species, collision, fields, t, dt, noise, step_index);
        break;
    }
}

/// Optional per-step state recording (storage heavy; stride-subsampled).
/// Noise is retained for the recorded steps so identity checks can replay
/// the increments that produced each transition.
struct TrajectoryFrame {
    double t = 0.0;
    long step_index = 0;
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;
    std::optional<std::vector<Vec3>> momenta;
    WienerBatch noise; // increments consumed by the step leaving this frame
};

struct Trajectory {
    std::vector<TrajectoryFrame> frames;
};

inline TrajectoryFrame snapshot_frame(const ParticleEnsemble& e, double t, long step_index) {
    TrajectoryFrame f;
    f.t = t;
    f.step_index = step_index;
    f.positions = e.positions;
    f.velocities = e.velocities;
    f.momenta = e.momenta;
    return f;
}

/// Integrates n_steps with counter-addressed noise; optionally records every
/// `record_stride`-th frame (plus the final state) into `traj`.
inline void integrate(Scheme scheme, ParticleEnsemble& e, const SpeciesParams& species,
                      const CollisionModel& collision, const FieldModel& fields,
                      const IntegratorSpec& spec, std::uint64_t seed, double t0 = 0.0,
                      Trajectory* traj = nullptr, long record_stride = 1) {
    spec.validate();
    const bool noisy = collision.kind != CollisionModel::Kind::None;
    WienerBatch noise;
    if (!noisy) { // zero increments keep the step interfaces uniform
        noise.dt = spec.dt;
        noise.n_particles = e.size();
        noise.m_channels = kDiffusionChannels;
        noise.increments.assign(e.size() * kDiffusionChannels, 0.0);
    }
    for (long s = 0; s < spec.n_steps; ++s) {
        const double t = t0 + double(s) * spec.dt;
        if (noisy)
            wiener_increments_into(noise, seed, static_cast<std::uint64_t>(s), e.size(),
                                   kDiffusionChannels, spec.dt);
        if (traj && s % record_stride == 0) {
            traj->frames.push_back(snapshot_frame(e, t, s));
            traj->frames.back().noise = noise;
        }
        step(scheme, e, species, collision, fields, t, spec.dt, noise, s);
    }
    if (traj)
        traj->frames.push_back(
            snapshot_frame(e, t0 + double(spec.n_steps) * spec.dt, spec.n_steps));
}

} // namespace svpic
