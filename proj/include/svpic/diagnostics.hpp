#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "svpic/deposition.hpp"
#include "svpic/ensemble.hpp"
#include "svpic/fields.hpp"
#include "svpic/sde.hpp"
#include "svpic/vec3.hpp"

namespace svpic {

// --- conservation ledger ---------------------------------------------------

struct LedgerRow {
    double t = 0.0;
    double kinetic_energy = 0.0;
    double field_energy_estimate = 0.0; // grid-based, 0 when no grid configured
    Vec3 total_momentum{};              // (N_tot/N) sum m V_a
    double mean_speed = 0.0;
    double min_speed = 0.0;
    double max_speed = 0.0;
};

class ConservationLedger {
  public:
    void append(double t, const ParticleEnsemble& e, const SpeciesParams& species,
                double field_energy_estimate = 0.0) {
        if (!rows_.empty() && !(t > rows_.back().t))
            throw std::invalid_argument("ledger: timestamps must be strictly increasing");
        const MomentReport m = moments(e, species);
        LedgerRow r;
        r.t = t;
        r.kinetic_energy = m.kinetic_energy;
        r.field_energy_estimate = field_energy_estimate;
        r.total_momentum = species.n_total * species.mass * m.mean_velocity;
        r.mean_speed = m.mean_speed;
        r.min_speed = m.min_speed;
        r.max_speed = m.max_speed;
        rows_.push_back(r);
    }

    const std::vector<LedgerRow>& rows() const { return rows_; }

  private:
    std::vector<LedgerRow> rows_;
};

/// Field-energy estimate (1/2) sum_cells |E|^2 cellvol with E from the
/// softened pairwise sum at cell centers. An estimate: the pairwise field
/// is not grid-native.
inline double field_energy_estimate(const ParticleEnsemble& e, const SpeciesParams& species,
                                    const DepositionGrid& grid, double softening) {
    grid.validate();
    double total = 0.0;
    for (std::size_t i = 0; i < grid.cells[0]; ++i)
        for (std::size_t j = 0; j < grid.cells[1]; ++j)
            for (std::size_t k = 0; k < grid.cells[2]; ++k)
                total += norm2(efield_at(grid.cell_center(i, j, k), 0.0, e, species, softening));
    return 0.5 * total * grid.cell_volume();
}

// --- conjugate-momentum identity --------------------------------------------

struct MomentumCheckReport {
    double max_residual = 0.0;       // max over steps/particles/components
    double max_mean_residual = 0.0;  // max over steps of |ensemble-mean residual|
    // per-term magnitude maxima of the right-hand side
    double scalar_potential_term = 0.0;
    double a_gradient_term = 0.0;
    double collision_drift_term = 0.0;
    double noise_term = 0.0;
};

/// Discrete check of the conjugate-momentum identity on a recorded
/// trajectory: with P = m V + q A(X, t), each step must satisfy
///   dP = (-q grad(phi) + q (grad A)^T V + m G) dt + m sum_nu g_nu dW^nu
/// up to the integrator's local truncation order. The right-hand side is
/// evaluated at the step's start state.
inline MomentumCheckReport track_conjugate_momentum(const Trajectory& traj,
                                                    const SpeciesParams& species,
                                                    const ExternalField& field,
                                                    const CollisionModel& collision = {}) {
    if (traj.frames.size() < 2)
        throw std::invalid_argument("momentum check: trajectory needs at least two frames");
    MomentumCheckReport rep;
    const double q = species.charge, m = species.mass;

    for (std::size_t k = 0; k + 1 < traj.frames.size(); ++k) {
        const TrajectoryFrame& f0 = traj.frames[k];
        const TrajectoryFrame& f1 = traj.frames[k + 1];
        if (f1.step_index != f0.step_index + 1)
            throw std::invalid_argument("momentum check: trajectory must record every step");
        const double dt = f1.t - f0.t;
        const std::size_t n = f0.positions.size();
        detail::CompensatedVec3 mean_res;

        ParticleEnsemble snap; // pre-step state the forcing was frozen against
        snap.positions = f0.positions;
        snap.velocities = f0.velocities;
        const CollisionEvaluator coll(collision, snap, species);

        for (std::size_t a = 0; a < n; ++a) {
            const Vec3 x = f0.positions[a];
            const Vec3 v = f0.velocities[a];
            const Vec3 p0 = m * v + q * field.a_at(x, f0.t);
            const Vec3 p1 =
                m * f1.velocities[a] + q * field.a_at(f1.positions[a], f1.t);

            // -q grad(phi) = q (E + dA/dt)
            const Vec3 phi_force = q * (field.e_at(x, f0.t) + field.da_dt(x, f0.t));
            const Mat3 ga = field.grad_a(x, f0.t); // ga(i,j) = dA^i/dx^j
            Vec3 a_grad; // q sum_j V^j dA^j/dx^i
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) a_grad[i] += q * ga(j, i) * v[j];

            Vec3 rhs = (phi_force + a_grad) * dt;
            Vec3 coll_drift{}, noise_sum{};
            if (coll.active()) {
                const ForcingEval fe = coll.eval(x, v);
                coll_drift = m * fe.drift_g;
                for (std::size_t nu = 0; nu < kDiffusionChannels; ++nu)
                    noise_sum += m * fe.diffusion_g[nu] * f0.noise.at(a, nu);
                rhs += coll_drift * dt + noise_sum;
            }

            const Vec3 res = (p1 - p0) - rhs;
            mean_res.add(res);
            for (std::size_t i = 0; i < 3; ++i)
                rep.max_residual = std::max(rep.max_residual, std::abs(res[i]));
            rep.scalar_potential_term =
                std::max(rep.scalar_potential_term, norm(phi_force) * dt);
            rep.a_gradient_term = std::max(rep.a_gradient_term, norm(a_grad) * dt);
            rep.collision_drift_term =
                std::max(rep.collision_drift_term, norm(coll_drift) * dt);
            rep.noise_term = std::max(rep.noise_term, norm(noise_sum));
        }
        rep.max_mean_residual =
            std::max(rep.max_mean_residual, norm(mean_res.sum) / static_cast<double>(n));
    }
    return rep;
}

// --- Gauss's law residual ----------------------------------------------------

/// Relative L2 residual of the conservative discrete divergence of the
/// pairwise field against the deposited charge density. The field is sampled
/// at cell-face centers, so cell sums telescope to surface fluxes. Returns 0
/// for an uncharged ensemble.
inline double gauss_residual(const ParticleEnsemble& e, const SpeciesParams& species,
                             const DepositionGrid& grid, double softening) {
    grid.validate();
    if (species.charge == 0.0) return 0.0;
    auto rho = detail::deposit(e, grid, DepositionKernel::CloudInCell,
                               DepositionSpace::Position,
                               [&](std::size_t) { return species.charge * species.n_total; });
    const Vec3 h = grid.spacing();

    double num = 0.0, den = 0.0;
    std::vector<double> div(grid.n_cells(), 0.0);
    // flux divergence: (E . n) sampled at face centers
    parallel_for(grid.cells[0], [&](std::size_t i) {
        for (std::size_t j = 0; j < grid.cells[1]; ++j)
            for (std::size_t k = 0; k < grid.cells[2]; ++k) {
                const Vec3 c = grid.cell_center(i, j, k);
                double d = 0.0;
                for (std::size_t axis = 0; axis < 3; ++axis) {
                    Vec3 fp = c, fm = c;
                    fp[axis] += 0.5 * h[axis];
                    fm[axis] -= 0.5 * h[axis];
                    const double ep = efield_at(fp, 0.0, e, species, softening)[axis];
                    const double em = efield_at(fm, 0.0, e, species, softening)[axis];
                    d += (ep - em) / h[axis];
                }
                div[grid.index(i, j, k)] = d;
            }
    });
    for (std::size_t c = 0; c < grid.n_cells(); ++c) {
        const double r = div[c] - rho.values[c];
        num += r * r;
        den += rho.values[c] * rho.values[c];
    }
    if (den == 0.0) return 0.0;
    return std::sqrt(num / den);
}

// --- distribution comparison -------------------------------------------------

struct GoodnessReport {
    Vec3 ks_statistic{};     // per velocity component
    double ks_critical_1pct = 0.0;
    double ks_critical_5pct = 0.0;
    Vec3 mean_delta{};
    Vec3 variance_delta{};
    Vec3 kurtosis_delta{};   // excess over 3
};

/// Asymptotic Kolmogorov critical value c(alpha)/sqrt(n).
inline double ks_critical(double alpha, std::size_t n) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

/// Per-component Kolmogorov-Smirnov distance of the velocity marginals
/// against the zero-mean normal with variance = temperature.
inline GoodnessReport compare_to_maxwellian(const ParticleEnsemble& e, double temperature) {
    if (!(temperature > 0.0))
        throw std::invalid_argument("compare_to_maxwellian: temperature must be positive");
    GoodnessReport rep;
    const std::size_t n = e.size();
    rep.ks_critical_1pct = ks_critical(0.01, n);
    rep.ks_critical_5pct = ks_critical(0.05, n);
    const double sigma = std::sqrt(temperature);
    std::vector<double> comp(n);
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t a = 0; a < n; ++a) comp[a] = e.velocities[a][c];
        std::sort(comp.begin(), comp.end());
        double d = 0.0, mean = 0.0, m2 = 0.0, m4 = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            const double cdf = 0.5 * std::erfc(-comp[a] / (sigma * std::sqrt(2.0)));
            d = std::max(d, std::abs(cdf - static_cast<double>(a) / double(n)));
            d = std::max(d, std::abs(static_cast<double>(a + 1) / double(n) - cdf));
            mean += comp[a];
        }
        mean /= double(n);
        for (std::size_t a = 0; a < n; ++a) {
            const double dv = comp[a] - mean;
            m2 += dv * dv;
            m4 += dv * dv * dv * dv;
        }
        m2 /= double(n);
        m4 /= double(n);
        rep.ks_statistic[c] = d;
        rep.mean_delta[c] = mean;
        rep.variance_delta[c] = m2 - temperature;
        rep.kurtosis_delta[c] = m4 / (m2 * m2) - 3.0;
    }
    return rep;
}

// --- speed conservation --------------------------------------------------------

struct SpeedDriftReport {
    double max_rel_drift = 0.0;
    std::size_t n_zero_speed_excluded = 0;
    std::vector<double> per_frame_max; // max relative drift at each later frame
};

/// Max over particles and frames of | |v(t)| - |v(0)| | / |v(0)|.
inline SpeedDriftReport speed_conservation_report(const Trajectory& traj) {
    if (traj.frames.empty())
        throw std::invalid_argument("speed report: empty trajectory");
    SpeedDriftReport rep;
    const auto& v0 = traj.frames.front().velocities;
    std::vector<double> s0(v0.size());
    for (std::size_t a = 0; a < v0.size(); ++a) {
        s0[a] = norm(v0[a]);
        if (s0[a] == 0.0) ++rep.n_zero_speed_excluded;
    }
    for (std::size_t k = 1; k < traj.frames.size(); ++k) {
        double frame_max = 0.0;
        const auto& v = traj.frames[k].velocities;
        for (std::size_t a = 0; a < v.size(); ++a) {
            if (s0[a] == 0.0) continue;
            frame_max = std::max(frame_max, std::abs(norm(v[a]) - s0[a]) / s0[a]);
        }
        rep.per_frame_max.push_back(frame_max);
        rep.max_rel_drift = std::max(rep.max_rel_drift, frame_max);
    }
    return rep;
}

} // namespace svpic
