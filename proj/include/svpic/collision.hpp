#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "svpic/ensemble.hpp"
#include "svpic/vec3.hpp"

namespace svpic {

/// A collision operator at one phase-space point, decomposed into the
/// Stratonovich drift G, the diffusion directions g_nu, and the Ito drift
/// K = G + (1/2) sum_nu (dg_nu/dv) g_nu.
struct ForcingEval {
    Vec3 drift_g{};
    std::array<Vec3, 3> diffusion_g{}; // rows g_nu, nu = 0..2
    Vec3 ito_drift_k{};

    Mat3 reconstruct_d() const {
        Mat3 d;
        for (const auto& g : diffusion_g) d += outer(g, g);
        return d;
    }
};

inline constexpr std::size_t kDiffusionChannels = 3; // M is fixed to 3 (symmetric root)

// --- operator parameter blocks -------------------------------------------

struct LenardBernsteinParams {
    double nu_c = 1.0; // collision frequency
    double mu = 1.0;   // drag coefficient
    double gamma = 1.0; // diffusion amplitude

    void validate() const {
        if (!(nu_c > 0.0 && mu > 0.0 && gamma > 0.0))
            throw std::invalid_argument("lenard_bernstein: nu_c, mu, gamma must be positive");
    }
};

/// Collision frequency profile nu_c(|v|) for pitch-angle scattering.
struct LorentzFrequency {
    enum class Kind { Constant, PowerLaw, Custom };
    Kind kind = Kind::Constant;
    double nu0 = 1.0;
    double v_min = 1e-6; // low-speed cutoff for the |v|^-3 profile
    std::function<double(double)> custom;

    double operator()(double speed) const {
        switch (kind) {
        case Kind::Constant: return nu0;
        case Kind::PowerLaw: {
            const double s = std::max(speed, v_min);
            return nu0 / (s * s * s);
        }
        case Kind::Custom: return custom(speed);
        }
        return nu0;
    }

    void validate() const {
        if (!(nu0 >= 0.0)) throw std::invalid_argument("lorentz: nu0 must be nonnegative");
        if (kind == Kind::PowerLaw && !(v_min > 0.0))
            throw std::invalid_argument("lorentz: v_min must be positive");
        if (kind == Kind::Custom && !custom)
            throw std::invalid_argument("lorentz: custom frequency not set");
    }
};

struct LocalityGrid {
    Vec3 lo{}, hi{};
    std::array<std::size_t, 3> cells{1, 1, 1};
};

struct LocalitySpec {
    enum class Mode { Homogeneous, CellLocal };
    Mode mode = Mode::Homogeneous;
    LocalityGrid grid; // used in CellLocal mode
};

struct CoulombParams {
    double gamma = 1.0;      // Gamma = (4 pi q^4 / m^2) ln Lambda
    double softening = 1e-3; // delta_v, regularizes |v - u|^-3
    LocalitySpec locality;

    void validate() const {
        if (!(gamma > 0.0)) throw std::invalid_argument("coulomb: gamma must be positive");
        if (!(softening >= 0.0)) throw std::invalid_argument("coulomb: softening must be >= 0");
    }
};

struct CustomDK {
    std::function<Mat3(const Vec3&, const Vec3&)> d;
    std::function<Vec3(const Vec3&, const Vec3&)> k;
};

struct CollisionModel {
    enum class Kind { None, LenardBernstein, Lorentz, Coulomb, CustomDK };
    Kind kind = Kind::None;
    LenardBernsteinParams lb;
    LorentzFrequency lorentz;
    CoulombParams coulomb;
    CustomDK custom;
};

// --- closed-form operators -----------------------------------------------

/// Drag toward the origin with isotropic constant diffusion; the velocity
/// marginal is an Ornstein-Uhlenbeck process per component.
inline ForcingEval eval_lenard_bernstein(const LenardBernsteinParams& p, const Vec3& /*x*/,
                                         const Vec3& v) {
    ForcingEval f;
    f.drift_g = -(p.nu_c * p.mu) * v;
    const double amp = std::sqrt(p.nu_c) * p.gamma;
    f.diffusion_g[0] = {amp, 0.0, 0.0};
    f.diffusion_g[1] = {0.0, amp, 0.0};
    f.diffusion_g[2] = {0.0, 0.0, amp};
    f.ito_drift_k = f.drift_g; // additive noise: no Stratonovich correction
    return f;
}

/// Pitch-angle scattering: diffusion generators e_nu x v, each orthogonal
/// to v, so the Stratonovich dynamics preserves speed exactly. The Ito
/// drift is the inward correction -nu_c(|v|) v; the v.(e_nu x v) = 0
/// orthogonality makes this exact for any speed-dependent nu_c.
inline ForcingEval eval_lorentz(const LorentzFrequency& freq, const Vec3& /*x*/, const Vec3& v) {
    ForcingEval f;
    const double nu = freq(norm(v));
    const double s = std::sqrt(nu);
    f.diffusion_g[0] = s * Vec3{0.0, -v.z, v.y};
    f.diffusion_g[1] = s * Vec3{v.z, 0.0, -v.x};
    f.diffusion_g[2] = s * Vec3{-v.y, v.x, 0.0};
    f.drift_g = {};
    f.ito_drift_k = -nu * v;
    return f;
}

// --- generic (D, K) decomposition ----------------------------------------

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kEigenFloor = -1e-12;

inline double default_fd_step(const Vec3& v) { return std::max(1e-5, 1e-5 * norm(v)); }

namespace detail {

inline Mat3 checked_sym_sqrt(const Mat3& d) {
    const double scale = std::max(1.0, max_abs(d));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j)
            if (std::abs(d(i, j) - d(j, i)) > kSymmetryTol * scale)
                throw std::invalid_argument("decompose_dk: D is not symmetric");
    Vec3 eval;
    Mat3 evec;
    sym_eigen(d, eval, evec);
    for (std::size_t i = 0; i < 3; ++i) {
        if (eval[i] < kEigenFloor * scale)
            throw std::invalid_argument("decompose_dk: D has a negative eigenvalue");
        if (eval[i] < 0.0) eval[i] = 0.0;
    }
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i) {
        const double s = std::sqrt(eval[i]);
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 3; ++k) r(j, k) += s * evec(j, i) * evec(k, i);
    }
    return r;
}

/// correction_i = (1/2) sum_j [(d_j g) g]_{ij} for symmetric g.
inline Vec3 strat_correction_from_dg(const std::array<Mat3, 3>& dg_dv, const Mat3& g) {
    Vec3 corr;
    for (std::size_t j = 0; j < 3; ++j) {
        const Mat3 prod = matmul(dg_dv[j], g);
        for (std::size_t i = 0; i < 3; ++i) corr[i] += 0.5 * prod(i, j);
    }
    return corr;
}

inline ForcingEval assemble(const Mat3& g, const Vec3& k, const Vec3& correction) {
    ForcingEval f;
    for (std::size_t nu = 0; nu < 3; ++nu) f.diffusion_g[nu] = g.row(nu);
    f.ito_drift_k = k;
    f.drift_g = k - correction;
    return f;
}

} // namespace detail

/// Decomposition of (D, K) with the canonical symmetric PSD square root,
/// M = 3. `dD_dv[j]` is dD/dv_j; when provided, dg/dv_j is obtained by a
/// central difference of the square root along that matrix direction.
/// Without derivative information D is treated as velocity-independent.
inline ForcingEval decompose_dk(const Mat3& d, const Vec3& k,
                                const std::array<Mat3, 3>* dd_dv = nullptr,
                                double h_fd = 1e-5) {
    const Mat3 g = detail::checked_sym_sqrt(d);
    Vec3 correction{};
    if (dd_dv) {
        std::array<Mat3, 3> dg{};
        for (std::size_t j = 0; j < 3; ++j) {
            const Mat3 plus = detail::checked_sym_sqrt(d + h_fd * (*dd_dv)[j]);
            const Mat3 minus = detail::checked_sym_sqrt(d - h_fd * (*dd_dv)[j]);
            dg[j] = (plus - minus) * (0.5 / h_fd);
        }
        correction = detail::strat_correction_from_dg(dg, g);
    }
    return detail::assemble(g, k, correction);
}

/// Decomposition with D supplied as a function of v; the square root's
/// velocity derivative is taken by central differences at step h_fd.
inline ForcingEval decompose_dk(const std::function<Mat3(const Vec3&)>& d_of_v, const Vec3& k,
                                const Vec3& v, double h_fd) {
    const Mat3 g = detail::checked_sym_sqrt(d_of_v(v));
    std::array<Mat3, 3> dg{};
    for (std::size_t j = 0; j < 3; ++j) {
        Vec3 vp = v, vm = v;
        vp[j] += h_fd;
        vm[j] -= h_fd;
        dg[j] = (detail::checked_sym_sqrt(d_of_v(vp)) - detail::checked_sym_sqrt(d_of_v(vm))) *
                (0.5 / h_fd);
    }
    return detail::assemble(g, k, detail::strat_correction_from_dg(dg, g));
}

// --- Coulomb operator ------------------------------------------------------

/// Empirical Coulomb (D, K) against a set of field-particle velocities:
///   D = N_tot Gamma <(|w|^2 I - w w^T) / (|w|^2 + dv^2)^(3/2)>,
///   K = -2 N_tot Gamma <w / (|w|^2 + dv^2)^(3/2)>,  w = v - u_b.
/// Only the norm is softened, which keeps K_i = sum_j dD_ij/dv_j exact.
/// With zero softening, exactly coincident field particles are skipped.
inline std::pair<Mat3, Vec3> coulomb_dk(double gamma, double softening, const Vec3& v,
                                        std::span<const Vec3> field_velocities,
                                        double n_total, double count_scale = -1.0) {
    Mat3 d;
    Vec3 k;
    std::size_t used = 0;
    const double soft2 = softening * softening;
    for (const Vec3& u : field_velocities) {
        const Vec3 w = v - u;
        const double w2 = norm2(w);
        if (soft2 == 0.0 && w2 == 0.0) continue; // singular self-term
        ++used;
        const double r2 = w2 + soft2;
        const double inv_r3 = 1.0 / (r2 * std::sqrt(r2));
        d += inv_r3 * (w2 * Mat3::identity() - outer(w, w));
        k -= (2.0 * inv_r3) * w;
    }
    if (used == 0)
        throw std::runtime_error("coulomb_dk: all field particles coincide with v at zero softening");
    // count_scale < 0: plain mean over the used field particles (homogeneous).
    // Cell-local callers pass 1/N so the cell-count fraction carries through.
    const double scale =
        n_total * gamma * (count_scale < 0.0 ? 1.0 / static_cast<double>(used) : count_scale);
    return {d * scale, k * scale};
}

/// Frozen field-particle selection for one step: either the whole ensemble
/// or per-spatial-cell index lists.
class CoulombContext {
  public:
    CoulombContext(const ParticleEnsemble& ensemble, const SpeciesParams& species,
                   const CoulombParams& params)
        : species_(species), params_(params), velocities_(ensemble.velocities) {
        if (ensemble.size() == 0)
            throw std::invalid_argument("coulomb: ensemble must be nonempty");
        if (params_.locality.mode == LocalitySpec::Mode::CellLocal) {
            const auto& g = params_.locality.grid;
            const std::size_t nc = g.cells[0] * g.cells[1] * g.cells[2];
            cell_members_.resize(nc);
            for (std::size_t a = 0; a < ensemble.size(); ++a) {
                const long c = cell_of(ensemble.positions[a]);
                if (c >= 0) cell_members_[static_cast<std::size_t>(c)].push_back(a);
            }
        }
    }

    std::pair<Mat3, Vec3> dk_at(const Vec3& x, const Vec3& v) const {
        if (params_.locality.mode == LocalitySpec::Mode::Homogeneous)
            return coulomb_dk(params_.gamma, params_.softening, v, velocities_,
                              species_.n_total);
        const long c = cell_of(x);
        if (c < 0)
            throw std::runtime_error("coulomb: evaluation point outside the locality grid");
        const auto& members = cell_members_[static_cast<std::size_t>(c)];
        scratch_.clear();
        scratch_.reserve(members.size());
        for (std::size_t a : members) scratch_.push_back(velocities_[a]);
        return coulomb_dk(params_.gamma, params_.softening, v, scratch_, species_.n_total,
                          1.0 / static_cast<double>(velocities_.size()));
    }

    ForcingEval eval(const Vec3& x, const Vec3& v) const {
        auto d_of_v = [&](const Vec3& vv) { return dk_at(x, vv).first; };
        return decompose_dk(d_of_v, dk_at(x, v).second, v, default_fd_step(v));
    }

  private:
    long cell_of(const Vec3& p) const {
        const auto& g = params_.locality.grid;
        std::array<long, 3> idx{};
        for (std::size_t c = 0; c < 3; ++c) {
            const double h = (g.hi[c] - g.lo[c]) / static_cast<double>(g.cells[c]);
            idx[c] = static_cast<long>(std::floor((p[c] - g.lo[c]) / h));
            if (idx[c] < 0 || idx[c] >= static_cast<long>(g.cells[c])) return -1;
        }
        return (idx[0] * static_cast<long>(g.cells[1]) + idx[1]) *
                   static_cast<long>(g.cells[2]) +
               idx[2];
    }

    SpeciesParams species_;
    CoulombParams params_;
    std::vector<Vec3> velocities_;
    std::vector<std::vector<std::size_t>> cell_members_;
    mutable std::vector<Vec3> scratch_;
};

/// One-shot Coulomb forcing evaluation against an ensemble snapshot.
inline ForcingEval eval_coulomb(double gamma, double softening, const Vec3& x, const Vec3& v,
                                const ParticleEnsemble& ensemble, const SpeciesParams& species,
                                const LocalitySpec& locality = {}) {
    CoulombParams p;
    p.gamma = gamma;
    p.softening = softening;
    p.locality = locality;
    p.validate();
    return CoulombContext(ensemble, species, p).eval(x, v);
}

} // namespace svpic
