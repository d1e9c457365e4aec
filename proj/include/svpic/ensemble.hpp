#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "svpic/parallel.hpp"
#include "svpic/rng.hpp"
#include "svpic/vec3.hpp"

namespace svpic {

struct SpeciesParams {
    double charge = -1.0;
    double mass = 1.0;
    double n_total = 1.0; // physical particle count behind the unit-mass density

    void validate() const {
        if (!(mass > 0.0)) throw std::invalid_argument("species: mass must be positive");
        if (!(n_total > 0.0)) throw std::invalid_argument("species: n_total must be positive");
    }
};

/// Particle state: positions X_a, velocities V_a, and (when momentum
/// diagnostics are on) conjugate momenta P_a, with uniform weight 1/N.
struct ParticleEnsemble {
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;
    std::optional<std::vector<Vec3>> momenta;

    std::size_t size() const { return positions.size(); }
    double weight() const { return 1.0 / static_cast<double>(positions.size()); }

    bool all_finite() const {
        for (const auto& p : positions)
            if (!is_finite(p)) return false;
        for (const auto& v : velocities)
            if (!is_finite(v)) return false;
        if (momenta)
            for (const auto& p : *momenta)
                if (!is_finite(p)) return false;
        return true;
    }
};

// --- initial distributions ---------------------------------------------

struct MaxwellianInit {
    double sigma_v = 1.0;
    Vec3 mean_velocity{};
    Vec3 position{};
};

struct UniformBoxMaxwellianInit {
    Vec3 box_min{-1.0, -1.0, -1.0};
    Vec3 box_max{1.0, 1.0, 1.0};
    double sigma_v = 1.0;
    Vec3 mean_velocity{};
};

/// Two counter-streaming Maxwellian beams of equal population, drifting
/// along +x and -x.
struct TwoStreamInit {
    double drift_speed = 1.0;
    double sigma_v = 0.1;
    Vec3 box_min{-1.0, -1.0, -1.0};
    Vec3 box_max{1.0, 1.0, 1.0};
};

struct ColdBeamInit {
    Vec3 position{};
    Vec3 velocity{};
};

using InitialDistribution =
    std::variant<MaxwellianInit, UniformBoxMaxwellianInit, TwoStreamInit, ColdBeamInit>;

namespace detail {

inline void check_sigma(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sampler: thermal speed must be positive");
}

// Channel layout inside the init stream: 0-2 velocity, 3-5 position.
inline Vec3 init_normal3(std::uint64_t base, std::size_t a, std::size_t first_channel) {
    Vec3 r;
    for (std::size_t c = 0; c < 3; ++c) {
        CounterStream s(stream_key(base, a, first_channel + c));
        r[c] = s.normal();
    }
    return r;
}

inline Vec3 init_uniform3(std::uint64_t base, std::size_t a, std::size_t first_channel,
                          const Vec3& lo, const Vec3& hi) {
    Vec3 r;
    for (std::size_t c = 0; c < 3; ++c) {
        CounterStream s(stream_key(base, a, first_channel + c));
        r[c] = lo[c] + (hi[c] - lo[c]) * s.u01();
    }
    return r;
}

} // namespace detail

/// Draws positions and velocities i.i.d. from the sampler; deterministic
/// given rng_seed. When `vector_potential_at_t0` is supplied, conjugate
/// momenta are initialized to m v + q A(x, t0).
inline ParticleEnsemble
init_ensemble(std::size_t n_particles, const InitialDistribution& sampler,
              std::uint64_t rng_seed, const SpeciesParams& species = {},
              const std::function<Vec3(const Vec3&)>& vector_potential_at_t0 = nullptr) {
    if (n_particles < 1) throw std::invalid_argument("init_ensemble: n_particles must be >= 1");
    ParticleEnsemble e;
    e.positions.resize(n_particles);
    e.velocities.resize(n_particles);
    const std::uint64_t base = detail::stream_base(rng_seed, detail::kSaltInit, 0);

    std::visit(
        [&](const auto& init) {
            using T = std::decay_t<decltype(init)>;
            if constexpr (std::is_same_v<T, MaxwellianInit>) {
                detail::check_sigma(init.sigma_v);
                parallel_for(n_particles, [&](std::size_t a) {
                    e.positions[a] = init.position;
                    e.velocities[a] =
                        init.mean_velocity + init.sigma_v * detail::init_normal3(base, a, 0);
                });
            } else if constexpr (std::is_same_v<T, UniformBoxMaxwellianInit>) {
                detail::check_sigma(init.sigma_v);
                parallel_for(n_particles, [&](std::size_t a) {
                    e.positions[a] =
                        detail::init_uniform3(base, a, 3, init.box_min, init.box_max);
                    e.velocities[a] =
                        init.mean_velocity + init.sigma_v * detail::init_normal3(base, a, 0);
                });
            } else if constexpr (std::is_same_v<T, TwoStreamInit>) {
                detail::check_sigma(init.sigma_v);
                parallel_for(n_particles, [&](std::size_t a) {
                    const double vd = (a % 2 == 0) ? init.drift_speed : -init.drift_speed;
                    e.positions[a] =
                        detail::init_uniform3(base, a, 3, init.box_min, init.box_max);
                    e.velocities[a] =
                        Vec3{vd, 0.0, 0.0} + init.sigma_v * detail::init_normal3(base, a, 0);
                });
            } else if constexpr (std::is_same_v<T, ColdBeamInit>) {
                for (std::size_t a = 0; a < n_particles; ++a) {
                    e.positions[a] = init.position;
                    e.velocities[a] = init.velocity;
                }
            }
        },
        sampler);

    if (vector_potential_at_t0) {
        e.momenta.emplace(n_particles);
        for (std::size_t a = 0; a < n_particles; ++a)
            (*e.momenta)[a] = species.mass * e.velocities[a] +
                              species.charge * vector_potential_at_t0(e.positions[a]);
    }
    return e;
}

// --- moments -------------------------------------------------------------

struct MomentReport {
    Vec3 mean_velocity{};
    Vec3 velocity_variance{}; // per component, about the mean
    double kinetic_energy = 0.0; // (N_tot/N) sum m |V_a|^2 / 2
    double mean_speed = 0.0;
    double min_speed = 0.0;
    double max_speed = 0.0;
    std::optional<Vec3> mean_momentum;
};

inline MomentReport moments(const ParticleEnsemble& e, const SpeciesParams& species = {}) {
    MomentReport r;
    const std::size_t n = e.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t c = 0; c < 3; ++c) {
        r.mean_velocity[c] =
            inv_n * pairwise_sum(0, n, [&](std::size_t a) { return e.velocities[a][c]; });
    }
    for (std::size_t c = 0; c < 3; ++c) {
        const double mu = r.mean_velocity[c];
        r.velocity_variance[c] = inv_n * pairwise_sum(0, n, [&](std::size_t a) {
                                     const double d = e.velocities[a][c] - mu;
                                     return d * d;
                                 });
    }
    r.kinetic_energy = (species.n_total * inv_n) * 0.5 * species.mass *
                       pairwise_sum(0, n, [&](std::size_t a) { return norm2(e.velocities[a]); });
    r.mean_speed = inv_n * pairwise_sum(0, n, [&](std::size_t a) { return norm(e.velocities[a]); });
    r.min_speed = norm(e.velocities[0]);
    r.max_speed = r.min_speed;
    for (std::size_t a = 1; a < n; ++a) {
        const double s = norm(e.velocities[a]);
        r.min_speed = std::min(r.min_speed, s);
        r.max_speed = std::max(r.max_speed, s);
    }
    if (e.momenta) {
        Vec3 mp;
        for (std::size_t c = 0; c < 3; ++c)
            mp[c] = inv_n * pairwise_sum(0, n, [&](std::size_t a) { return (*e.momenta)[a][c]; });
        r.mean_momentum = mp;
    }
    return r;
}

} // namespace svpic
