#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "svpic/ensemble.hpp"
#include "svpic/vec3.hpp"

namespace svpic {

enum class DepositionKernel { NearestCell, CloudInCell };
enum class DepositionSpace { Position, Velocity };

/// Cell-centered 3D grid. `values` holds a density (per unit cell volume);
/// the deposited mass of a cell is value * cell_volume().
struct DepositionGrid {
    Vec3 lo{}, hi{};
    std::array<std::size_t, 3> cells{1, 1, 1};
    bool periodic = false;
    std::vector<double> values;
    std::size_t n_out_of_bounds = 0;

    void validate() const {
        for (std::size_t c = 0; c < 3; ++c) {
            if (cells[c] < 1) throw std::invalid_argument("grid: empty cell axis");
            if (!(hi[c] > lo[c])) throw std::invalid_argument("grid: zero-volume cells");
        }
    }

    std::size_t n_cells() const { return cells[0] * cells[1] * cells[2]; }

    Vec3 spacing() const {
        return {(hi.x - lo.x) / static_cast<double>(cells[0]),
                (hi.y - lo.y) / static_cast<double>(cells[1]),
                (hi.z - lo.z) / static_cast<double>(cells[2])};
    }

    double cell_volume() const {
        const Vec3 h = spacing();
        return h.x * h.y * h.z;
    }

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return (i * cells[1] + j) * cells[2] + k;
    }

    Vec3 cell_center(std::size_t i, std::size_t j, std::size_t k) const {
        const Vec3 h = spacing();
        return {lo.x + (static_cast<double>(i) + 0.5) * h.x,
                lo.y + (static_cast<double>(j) + 0.5) * h.y,
                lo.z + (static_cast<double>(k) + 0.5) * h.z};
    }

    /// Sum of value * cell_volume over all cells (in-bounds deposited mass).
    double total_mass() const {
        return cell_volume() * pairwise_sum(0, values.size(), [&](std::size_t i) {
                   return values[i];
               });
    }
};

namespace detail {

struct CicWeights {
    // base cell index and per-axis fraction toward base+1
    std::array<long, 3> base{};
    std::array<double, 3> frac{};
    bool in_bounds = true;
};

inline long wrap_index(long i, long n) {
    i %= n;
    return i < 0 ? i + n : i;
}

inline CicWeights cic_locate(const DepositionGrid& g, const Vec3& p) {
    const Vec3 h = g.spacing();
    CicWeights w;
    for (std::size_t c = 0; c < 3; ++c) {
        const double u = (p[c] - g.lo[c]) / h[c] - 0.5;
        const double fl = std::floor(u);
        w.base[c] = static_cast<long>(fl);
        w.frac[c] = u - fl;
        if (!g.periodic &&
            (w.base[c] < 0 || w.base[c] + 1 > static_cast<long>(g.cells[c]) - 1))
            w.in_bounds = false;
    }
    return w;
}

/// Scatter `amount` into the 8 CIC cells around p. Returns false if the
/// particle's support leaves a non-periodic grid (nothing deposited).
template <class Sink>
bool cic_scatter(const DepositionGrid& g, const Vec3& p, const Sink& sink) {
    const CicWeights w = cic_locate(g, p);
    if (!w.in_bounds) return false;
    for (int di = 0; di < 2; ++di) {
        const double wx = di ? w.frac[0] : 1.0 - w.frac[0];
        for (int dj = 0; dj < 2; ++dj) {
            const double wy = dj ? w.frac[1] : 1.0 - w.frac[1];
            for (int dk = 0; dk < 2; ++dk) {
                const double wz = dk ? w.frac[2] : 1.0 - w.frac[2];
                long i = w.base[0] + di, j = w.base[1] + dj, k = w.base[2] + dk;
                if (g.periodic) {
                    i = wrap_index(i, static_cast<long>(g.cells[0]));
                    j = wrap_index(j, static_cast<long>(g.cells[1]));
                    k = wrap_index(k, static_cast<long>(g.cells[2]));
                }
                sink(g.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                             static_cast<std::size_t>(k)),
                     wx * wy * wz);
            }
        }
    }
    return true;
}

template <class Sink>
bool ngp_scatter(const DepositionGrid& g, const Vec3& p, const Sink& sink) {
    const Vec3 h = g.spacing();
    std::array<long, 3> idx{};
    for (std::size_t c = 0; c < 3; ++c) {
        idx[c] = static_cast<long>(std::floor((p[c] - g.lo[c]) / h[c]));
        if (g.periodic) {
            idx[c] = wrap_index(idx[c], static_cast<long>(g.cells[c]));
        } else if (idx[c] < 0 || idx[c] >= static_cast<long>(g.cells[c])) {
            return false;
        }
    }
    sink(g.index(static_cast<std::size_t>(idx[0]), static_cast<std::size_t>(idx[1]),
                 static_cast<std::size_t>(idx[2])),
         1.0);
    return true;
}

/// Generic weighted deposition; `value(a)` is the per-particle amount
/// (1 for density, v-component for current). Particles are traversed in
/// index order, so the result is independent of threading.
template <class ValueFn>
DepositionGrid deposit(const ParticleEnsemble& e, DepositionGrid grid, DepositionKernel kernel,
                       DepositionSpace space, const ValueFn& value) {
    grid.validate();
    grid.values.assign(grid.n_cells(), 0.0);
    grid.n_out_of_bounds = 0;
    const double w = e.weight();
    const auto& coords = (space == DepositionSpace::Position) ? e.positions : e.velocities;
    for (std::size_t a = 0; a < e.size(); ++a) {
        bool ok;
        const double amount = value(a);
        auto weighted_sink = [&](std::size_t cell, double frac) {
            grid.values[cell] += frac * amount;
        };
        if (kernel == DepositionKernel::CloudInCell)
            ok = cic_scatter(grid, coords[a], weighted_sink);
        else
            ok = ngp_scatter(grid, coords[a], weighted_sink);
        if (!ok) ++grid.n_out_of_bounds;
    }
    const double scale = w / grid.cell_volume();
    for (double& v : grid.values) v *= scale;
    return grid;
}

} // namespace detail

/// Empirical-measure density on a grid: the deposited probability density
/// of positions or velocities. Total deposited mass equals
/// (in-bounds count) / N up to round-off.
inline DepositionGrid deposit_density(const ParticleEnsemble& e, DepositionGrid grid,
                                      DepositionKernel kernel,
                                      DepositionSpace space = DepositionSpace::Position) {
    return detail::deposit(e, std::move(grid), kernel, space, [](std::size_t) { return 1.0; });
}

struct ChargeCurrentGrids {
    DepositionGrid rho;
    std::array<DepositionGrid, 3> j;
};

/// Charge density q N_tot f and current density q N_tot v f, deposited with
/// the same kernel on the same grid.
inline ChargeCurrentGrids deposit_charge_current(const ParticleEnsemble& e,
                                                 const SpeciesParams& species,
                                                 const DepositionGrid& grid,
                                                 DepositionKernel kernel =
                                                     DepositionKernel::CloudInCell) {
    const double qn = species.charge * species.n_total;
    ChargeCurrentGrids out;
    out.rho = detail::deposit(e, grid, kernel, DepositionSpace::Position,
                              [&](std::size_t) { return qn; });
    for (std::size_t c = 0; c < 3; ++c) {
        out.j[c] = detail::deposit(e, grid, kernel, DepositionSpace::Position,
                                   [&](std::size_t a) { return qn * e.velocities[a][c]; });
    }
    return out;
}

} // namespace svpic
