#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "svpic/ensemble.hpp"
#include "svpic/parallel.hpp"
#include "svpic/vec3.hpp"

namespace svpic {

namespace detail {

/// Kahan-compensated Vec3 accumulator with a fixed traversal order supplied
/// by the caller; keeps pairwise antisymmetry residuals at the ulp level.
struct CompensatedVec3 {
    Vec3 sum{}, c{};

    void add(const Vec3& term) {
        for (std::size_t i = 0; i < 3; ++i) {
            const double y = term[i] - c[i];
            const double t = sum[i] + y;
            c[i] = (t - sum[i]) - y;
            sum[i] = t;
        }
    }
};

} // namespace detail

/// Closed-form external fields with their potentials. The potentials are
/// what momentum diagnostics differentiate, so every built-in carries a
/// consistent (phi, A) pair: E = -grad phi - dA/dt, B = curl A.
struct ExternalField {
    enum class Kind { UniformE, UniformB, UniformEB, HarmonicTrap };
    Kind kind = Kind::UniformE;
    Vec3 e0{}, b0{};
    double trap_k = 0.0;

    Vec3 e_at(const Vec3& x, double /*t*/) const {
        switch (kind) {
        case Kind::UniformE:
        case Kind::UniformEB: return e0;
        case Kind::UniformB: return {};
        case Kind::HarmonicTrap: return -trap_k * x;
        }
        return {};
    }

    Vec3 b_at(const Vec3& /*x*/, double /*t*/) const {
        return (kind == Kind::UniformB || kind == Kind::UniformEB) ? b0 : Vec3{};
    }

    double phi_at(const Vec3& x, double /*t*/) const {
        switch (kind) {
        case Kind::UniformE:
        case Kind::UniformEB: return -dot(e0, x);
        case Kind::UniformB: return 0.0;
        case Kind::HarmonicTrap: return 0.5 * trap_k * norm2(x);
        }
        return 0.0;
    }

    /// A = (1/2) B x x for the uniform-B kinds, zero otherwise.
    Vec3 a_at(const Vec3& x, double /*t*/) const {
        return (kind == Kind::UniformB || kind == Kind::UniformEB) ? 0.5 * cross(b0, x)
                                                                   : Vec3{};
    }

    Vec3 da_dt(const Vec3& /*x*/, double /*t*/) const { return {}; }

    /// grad_a(i, j) = dA^i / dx^j
    Mat3 grad_a(const Vec3& /*x*/, double /*t*/) const {
        Mat3 g;
        if (kind == Kind::UniformB || kind == Kind::UniformEB) {
            g(0, 1) = -0.5 * b0.z;
            g(0, 2) = 0.5 * b0.y;
            g(1, 0) = 0.5 * b0.z;
            g(1, 2) = -0.5 * b0.x;
            g(2, 0) = -0.5 * b0.y;
            g(2, 1) = 0.5 * b0.x;
        }
        return g;
    }

    bool has_potentials() const { return true; }
};

struct FieldModel {
    enum class Kind { Vacuum, ExternalAnalytic, SelfConsistentCoulomb };
    Kind kind = Kind::Vacuum;
    ExternalField external;
    double softening = 0.05; // Plummer epsilon for the pairwise kernel
    bool exclude_self = true;
};

inline std::pair<Vec3, Vec3> external_field_at(const FieldModel& model, const Vec3& x,
                                               double t) {
    if (model.kind == FieldModel::Kind::Vacuum) return {Vec3{}, Vec3{}};
    if (model.kind != FieldModel::Kind::ExternalAnalytic)
        throw std::invalid_argument("external_field_at: model is not external-analytic");
    return {model.external.e_at(x, t), model.external.b_at(x, t)};
}

// --- empirical Green's-function electrostatics -----------------------------

/// phi(x) = (q N_tot / 4 pi N) sum_a (|x - X_a|^2 + eps^2)^(-1/2)
inline double potential_at(const Vec3& x, double /*t*/, const ParticleEnsemble& ensemble,
                           const SpeciesParams& species, double softening) {
    if (ensemble.size() == 0) throw std::invalid_argument("potential_at: empty ensemble");
    if (!(softening >= 0.0)) throw std::invalid_argument("potential_at: softening must be >= 0");
    const double eps2 = softening * softening;
    const std::size_t n = ensemble.size();
    double c = 0.0, sum = 0.0; // Kahan, fixed order
    for (std::size_t a = 0; a < n; ++a) {
        const double r2 = norm2(x - ensemble.positions[a]) + eps2;
        if (r2 == 0.0)
            throw std::runtime_error("potential_at: singular evaluation at a particle position");
        const double y = 1.0 / std::sqrt(r2) - c;
        const double t2 = sum + y;
        c = (t2 - sum) - y;
        sum = t2;
    }
    const double prefactor =
        species.charge * species.n_total / (4.0 * std::numbers::pi * static_cast<double>(n));
    return prefactor * sum;
}

/// E(x) = (q N_tot / 4 pi N) sum_a (x - X_a) (|x - X_a|^2 + eps^2)^(-3/2)
inline Vec3 efield_at(const Vec3& x, double /*t*/, const ParticleEnsemble& ensemble,
                      const SpeciesParams& species, double softening,
                      std::size_t exclude_index = static_cast<std::size_t>(-1)) {
    if (ensemble.size() == 0) throw std::invalid_argument("efield_at: empty ensemble");
    if (!(softening >= 0.0)) throw std::invalid_argument("efield_at: softening must be >= 0");
    const double eps2 = softening * softening;
    const std::size_t n = ensemble.size();
    detail::CompensatedVec3 acc;
    for (std::size_t a = 0; a < n; ++a) {
        if (a == exclude_index) continue;
        const Vec3 d = x - ensemble.positions[a];
        const double r2 = norm2(d) + eps2;
        if (r2 == 0.0)
            throw std::runtime_error("efield_at: singular evaluation at a particle position");
        acc.add(d * (1.0 / (r2 * std::sqrt(r2))));
    }
    const double prefactor =
        species.charge * species.n_total / (4.0 * std::numbers::pi * static_cast<double>(n));
    return prefactor * acc.sum;
}

/// E at every particle position, O(N^2) direct summation. Deterministic:
/// the inner loop order is fixed and each target is independent, so the
/// result does not depend on the thread count.
inline std::vector<Vec3> self_field_batch(const ParticleEnsemble& ensemble,
                                          const SpeciesParams& species, double softening,
                                          bool exclude_self = true) {
    const std::size_t n = ensemble.size();
    std::vector<Vec3> e(n);
    parallel_for(n, [&](std::size_t a) {
        e[a] = efield_at(ensemble.positions[a], 0.0, ensemble, species, softening,
                         exclude_self ? a : static_cast<std::size_t>(-1));
    });
    return e;
}

/// Default Plummer softening: a fraction of the mean interparticle spacing
/// estimated from the ensemble's bounding box.
inline double default_softening(const ParticleEnsemble& ensemble, double fraction = 0.05) {
    Vec3 lo = ensemble.positions[0], hi = ensemble.positions[0];
    for (const auto& p : ensemble.positions)
        for (std::size_t c = 0; c < 3; ++c) {
            lo[c] = std::min(lo[c], p[c]);
            hi[c] = std::max(hi[c], p[c]);
        }
    const double vol = std::max((hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z), 1e-300);
    return fraction * std::cbrt(vol / static_cast<double>(ensemble.size()));
}

/// Finite-difference residuals of the potential/field consistency relations
/// |E + grad phi + dA/dt| and |B - curl A| at one point.
inline std::pair<double, double> potential_consistency_residual(const ExternalField& f,
                                                                const Vec3& x, double t,
                                                                double h = 1e-6) {
    Vec3 grad_phi;
    Mat3 grad_a;
    for (std::size_t j = 0; j < 3; ++j) {
        Vec3 xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        grad_phi[j] = (f.phi_at(xp, t) - f.phi_at(xm, t)) / (2.0 * h);
        const Vec3 ap = f.a_at(xp, t), am = f.a_at(xm, t);
        for (std::size_t i = 0; i < 3; ++i) grad_a(i, j) = (ap[i] - am[i]) / (2.0 * h);
    }
    const Vec3 curl_a{grad_a(2, 1) - grad_a(1, 2), grad_a(0, 2) - grad_a(2, 0),
                      grad_a(1, 0) - grad_a(0, 1)};
    const double res_e = norm(f.e_at(x, t) + grad_phi + f.da_dt(x, t));
    const double res_b = norm(f.b_at(x, t) - curl_a);
    return {res_e, res_b};
}

} // namespace svpic
