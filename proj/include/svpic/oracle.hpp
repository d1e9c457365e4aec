#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "svpic/vec3.hpp"

namespace svpic {

/// Closed-form Ornstein-Uhlenbeck moments for linear drag with isotropic
/// velocity diffusion: dV = -nu*mu*V dt + sqrt(nu)*gamma dW.
struct OuMoments {
    Vec3 mean;
    double variance_per_component = 0.0;
};

inline OuMoments ou_moments(double nu, double mu, double gamma, const Vec3& v0, double t) {
    if (t < 0.0) throw std::invalid_argument("ou_moments: t must be >= 0");
    const double decay = std::exp(-nu * mu * t);
    OuMoments m;
    m.mean = v0 * decay;
    m.variance_per_component = (gamma * gamma / (2.0 * mu)) * (1.0 - decay * decay);
    return m;
}

/// Cell-centered 1D velocity grid carrying a probability density.
struct FokkerPlanckGrid1D {
    double v_lo = 0.0;
    double v_hi = 0.0;
    std::size_t n_cells = 0;
    double dt = 0.0;
    std::vector<double> values; // density per cell

    double spacing() const { return (v_hi - v_lo) / static_cast<double>(n_cells); }
    double cell_center(std::size_t i) const {
        return v_lo + (static_cast<double>(i) + 0.5) * spacing();
    }
    double mass() const {
        double s = 0.0;
        for (double f : values) s += f;
        return s * spacing();
    }
    double mean() const {
        double s = 0.0;
        for (std::size_t i = 0; i < n_cells; ++i) s += cell_center(i) * values[i];
        const double m = mass();
        return m > 0.0 ? s * spacing() / m : 0.0;
    }
    double variance() const {
        const double mu = mean();
        double s = 0.0;
        for (std::size_t i = 0; i < n_cells; ++i) {
            const double d = cell_center(i) - mu;
            s += d * d * values[i];
        }
        const double m = mass();
        return m > 0.0 ? s * spacing() / m : 0.0;
    }

    void validate() const {
        if (n_cells < 2) throw std::invalid_argument("fp grid: n_cells must be >= 2");
        if (!(v_hi > v_lo)) throw std::invalid_argument("fp grid: empty velocity interval");
        if (values.size() != n_cells) throw std::invalid_argument("fp grid: values size mismatch");
        if (!(dt > 0.0)) throw std::invalid_argument("fp grid: dt must be positive");
    }
};

/// Fills a grid with a normalized Gaussian density.
inline FokkerPlanckGrid1D fp_gaussian_grid(double v_lo, double v_hi, std::size_t n_cells,
                                           double dt, double mean, double sigma) {
    FokkerPlanckGrid1D g;
    g.v_lo = v_lo;
    g.v_hi = v_hi;
    g.n_cells = n_cells;
    g.dt = dt;
    g.values.resize(n_cells);
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * 3.14159265358979323846));
    for (std::size_t i = 0; i < n_cells; ++i) {
        const double z = (g.cell_center(i) - mean) / sigma;
        g.values[i] = norm * std::exp(-0.5 * z * z);
    }
    // renormalize so the discrete mass is exactly 1
    const double m = g.mass();
    for (double& f : g.values) f /= m;
    return g;
}

/// Conservative explicit evolution of df/dt = -d/dv [K f - 1/2 d/dv (D f)]
/// with zero-flux boundaries. Mass is conserved to round-off because the
/// update is in flux form. Throws when dt violates the explicit CFL bound.
inline FokkerPlanckGrid1D fp_solve_1d(const std::function<double(double)>& d_of_v,
                                      const std::function<double(double)>& k_of_v,
                                      FokkerPlanckGrid1D grid, double horizon) {
    grid.validate();
    if (horizon < 0.0) throw std::invalid_argument("fp_solve_1d: horizon must be >= 0");
    const double h = grid.spacing();
    const std::size_t n = grid.n_cells;

    double d_max = 0.0, k_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d_max = std::max(d_max, std::abs(d_of_v(grid.cell_center(i))));
        k_max = std::max(k_max, std::abs(k_of_v(grid.cell_center(i))));
    }
    const double cfl = 0.5 * grid.dt * (d_max / (h * h) + k_max / h);
    if (cfl > 0.45)
        throw std::invalid_argument("fp_solve_1d: dt violates the explicit CFL bound");

    std::vector<double> df(n); // D(v_i) * f_i, rebuilt each step
    std::vector<double> flux(n + 1);
    const long n_steps = static_cast<long>(std::ceil(horizon / grid.dt - 1e-12));
    for (long s = 0; s < n_steps; ++s) {
        for (std::size_t i = 0; i < n; ++i) df[i] = d_of_v(grid.cell_center(i)) * grid.values[i];
        flux[0] = flux[n] = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const double v_face = grid.v_lo + static_cast<double>(i) * h;
            const double f_face = 0.5 * (grid.values[i - 1] + grid.values[i]);
            flux[i] = k_of_v(v_face) * f_face - 0.5 * (df[i] - df[i - 1]) / h;
        }
        for (std::size_t i = 0; i < n; ++i)
            grid.values[i] -= grid.dt * (flux[i + 1] - flux[i]) / h;
    }
    return grid;
}

/// fp_solve_1d specialized to the linear drag + isotropic diffusion operator
/// (one velocity component): D = nu*gamma^2, K = -nu*mu*v.
inline FokkerPlanckGrid1D fp_solve_lb_1d(double nu, double mu, double gamma,
                                         FokkerPlanckGrid1D grid, double horizon) {
    const double d_const = nu * gamma * gamma;
    return fp_solve_1d([d_const](double) { return d_const; },
                       [nu, mu](double v) { return -nu * mu * v; }, std::move(grid), horizon);
}

/// Central finite-difference evaluation of the Stratonovich drift correction
/// 1/2 sum_nu sum_j (dg_nu^i/dv^j) g_nu^j for a set of diffusion channels.
/// `g_field(v)` returns one vector per channel.
inline Vec3 fd_strat_correction(const std::function<std::vector<Vec3>(const Vec3&)>& g_field,
                                const Vec3& v, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("fd_strat_correction: h must be positive");
    const std::vector<Vec3> g0 = g_field(v);
    Vec3 out{};
    for (int j = 0; j < 3; ++j) {
        Vec3 vp = v, vm = v;
        vp[j] += h;
        vm[j] -= h;
        const std::vector<Vec3> gp = g_field(vp);
        const std::vector<Vec3> gm = g_field(vm);
        for (std::size_t nu = 0; nu < g0.size(); ++nu) {
            const Vec3 dg = (gp[nu] - gm[nu]) * (1.0 / (2.0 * h));
            out += dg * (0.5 * g0[nu][j]);
        }
    }
    return out;
}

} // namespace svpic
