#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "svpic/parallel.hpp"

namespace svpic {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// splitmix64 finalizer; full avalanche on 64 bits.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t stream_base(std::uint64_t seed, std::uint64_t salt,
                                           std::uint64_t step) {
    return mix64(mix64(seed + kGolden * salt) ^ (step + kGolden));
}

inline constexpr std::uint64_t stream_key(std::uint64_t base, std::uint64_t particle,
                                          std::uint64_t channel) {
    return mix64(base ^ ((particle << 16) | (channel & 0xffffULL)));
}

/// Sequential generator seeded from a counter address. Each (seed, salt,
/// step, particle, channel) tuple owns its own stream, so generation order
/// and thread scheduling cannot change any value.
class CounterStream {
  public:
    explicit CounterStream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() {
        state_ += kGolden;
        return mix64(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1p-53; }

    /// Standard normal deviate via a 128-layer ziggurat.
    double normal() {
        for (;;) {
            const std::uint64_t bits = next_u64();
            const unsigned layer = static_cast<unsigned>(bits & 127u);
            const double u = 2.0 * (static_cast<double>(bits >> 11) * 0x1p-53) - 1.0;
            const auto& t = zig_tables();
            if (std::abs(u) < t.ratio[layer]) return u * t.x[layer];
            if (layer == 0) return tail(u < 0.0);
            const double x = u * t.x[layer];
            const double f0 = std::exp(-0.5 * (t.x[layer] * t.x[layer] - x * x));
            const double f1 = std::exp(-0.5 * (t.x[layer + 1] * t.x[layer + 1] - x * x));
            if (f1 + u01() * (f0 - f1) < 1.0) return x;
        }
    }

  private:
    struct ZigTables {
        std::array<double, 129> x{};
        std::array<double, 128> ratio{};
    };

    static const ZigTables& zig_tables() {
        static const ZigTables t = [] {
            // 128-layer normal ziggurat constants (Marsaglia & Tsang).
            constexpr double r = 3.442619855899;
            constexpr double v = 9.91256303526217e-3;
            ZigTables t;
            double f = std::exp(-0.5 * r * r);
            t.x[0] = v / f;
            t.x[1] = r;
            t.x[128] = 0.0;
            for (int i = 2; i < 128; ++i) {
                t.x[i] = std::sqrt(-2.0 * std::log(v / t.x[i - 1] + f));
                f = std::exp(-0.5 * t.x[i] * t.x[i]);
            }
            for (int i = 0; i < 128; ++i) t.ratio[i] = t.x[i + 1] / t.x[i];
            return t;
        }();
        return t;
    }

    double tail(bool negative) {
        constexpr double r = 3.442619855899;
        double x, y;
        do {
            x = std::log1p(-u01()) / r;
            y = std::log1p(-u01());
        } while (-2.0 * y < x * x);
        return negative ? x - r : r - x;
    }

    std::uint64_t state_;
};

// Address-space salts keeping unrelated draws on disjoint streams.
inline constexpr std::uint64_t kSaltWiener = 0x11;
inline constexpr std::uint64_t kSaltBridge = 0x22;
inline constexpr std::uint64_t kSaltInit = 0x33;

} // namespace detail

/// One standard normal deviate addressed by (seed, salt, step, particle, channel).
inline double counter_normal(std::uint64_t seed, std::uint64_t salt, std::uint64_t step,
                             std::uint64_t particle, std::uint64_t channel) {
    detail::CounterStream s(
        detail::stream_key(detail::stream_base(seed, salt, step), particle, channel));
    return s.normal();
}

/// Per-particle, per-channel Brownian increments for one step.
/// `level` tracks dyadic bridge refinement: level 0 holds the increments
/// produced by wiener_increments; refine_increments halves dt and doubles
/// the step index.
struct WienerBatch {
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    unsigned level = 0;
    double dt = 0.0;
    std::size_t n_particles = 0;
    std::size_t m_channels = 0;
    std::vector<double> increments; // row-major N x M

    double& at(std::size_t a, std::size_t nu) { return increments[a * m_channels + nu]; }
    double at(std::size_t a, std::size_t nu) const { return increments[a * m_channels + nu]; }
};

/// Stateless generation of N(0, dt) increments; entry (a, nu) depends only
/// on (seed, step_index, a, nu). Reuses the batch's storage when possible.
inline void wiener_increments_into(WienerBatch& b, std::uint64_t seed,
                                   std::uint64_t step_index, std::size_t n_particles,
                                   std::size_t m_channels, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("wiener_increments: dt must be positive");
    if (m_channels < 1) throw std::invalid_argument("wiener_increments: m_channels must be >= 1");
    b.seed = seed;
    b.step = step_index;
    b.level = 0;
    b.dt = dt;
    b.n_particles = n_particles;
    b.m_channels = m_channels;
    b.increments.resize(n_particles * m_channels);
    const double scale = std::sqrt(dt);
    const std::uint64_t base = detail::stream_base(seed, detail::kSaltWiener, step_index);
    parallel_for(n_particles, [&](std::size_t a) {
        for (std::size_t nu = 0; nu < m_channels; ++nu) {
            detail::CounterStream s(detail::stream_key(base, a, nu));
            b.increments[a * m_channels + nu] = scale * s.normal();
        }
    });
}

inline WienerBatch wiener_increments(std::uint64_t seed, std::uint64_t step_index,
                                     std::size_t n_particles, std::size_t m_channels,
                                     double dt) {
    WienerBatch b;
    wiener_increments_into(b, seed, step_index, n_particles, m_channels, dt);
    return b;
}

/// Brownian-bridge halving: splits one step into two half-steps whose sum
/// equals the parent increment exactly. `bridge_noise_scale` is a test hook;
/// 1.0 is the bridge law, 0.0 makes both children half the parent.
inline std::pair<WienerBatch, WienerBatch> refine_increments(const WienerBatch& batch,
                                                             double bridge_noise_scale = 1.0) {
    WienerBatch c0 = batch, c1 = batch;
    c0.level = c1.level = batch.level + 1;
    c0.step = 2 * batch.step;
    c1.step = 2 * batch.step + 1;
    c0.dt = c1.dt = 0.5 * batch.dt;
    // Bridge midpoint deviation: xi ~ N(0, dt/4), keyed by the first child's
    // address so every node of the dyadic tree draws independent noise.
    const double xi_scale = bridge_noise_scale * 0.5 * std::sqrt(batch.dt);
    const std::uint64_t base =
        detail::stream_base(batch.seed, detail::kSaltBridge + c0.level, c0.step);
    for (std::size_t a = 0; a < batch.n_particles; ++a) {
        for (std::size_t nu = 0; nu < batch.m_channels; ++nu) {
            detail::CounterStream s(detail::stream_key(base, a, nu));
            const double xi = xi_scale * s.normal();
            const double half = 0.5 * batch.at(a, nu);
            c0.at(a, nu) = half + xi;
            c1.at(a, nu) = half - xi;
        }
    }
    return {std::move(c0), std::move(c1)};
}

/// All 2^level sub-increments of base step `step_index` on the same Brownian
/// path, ordered in time. Level 0 returns the single base batch.
inline std::vector<WienerBatch> wiener_refined_path(std::uint64_t seed,
                                                    std::uint64_t step_index,
                                                    std::size_t n_particles,
                                                    std::size_t m_channels, double dt,
                                                    unsigned level) {
    std::vector<WienerBatch> current;
    current.push_back(wiener_increments(seed, step_index, n_particles, m_channels, dt));
    for (unsigned l = 0; l < level; ++l) {
        std::vector<WienerBatch> next;
        next.reserve(current.size() * 2);
        for (const auto& b : current) {
            auto [c0, c1] = refine_increments(b);
            next.push_back(std::move(c0));
            next.push_back(std::move(c1));
        }
        current = std::move(next);
    }
    return current;
}

} // namespace svpic
