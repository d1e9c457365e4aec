#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "svpic/ensemble.hpp"

namespace svpic {

inline constexpr std::uint32_t kSnapshotVersion = 1;

struct SnapshotMeta {
    double time = 0.0;
    long step_index = 0;
    std::uint64_t config_hash = 0;
    SpeciesParams species;
};

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

inline void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw std::runtime_error("snapshot: truncated header");
    return v;
}

inline void put_column(std::ostream& os, const std::vector<Vec3>& data, std::size_t comp) {
    std::vector<double> col(data.size());
    for (std::size_t a = 0; a < data.size(); ++a) col[a] = data[a][comp];
    os.write(reinterpret_cast<const char*>(col.data()),
             static_cast<std::streamsize>(col.size() * sizeof(double)));
}

inline void get_column(std::istream& is, std::vector<Vec3>& data, std::size_t comp) {
    std::vector<double> col(data.size());
    is.read(reinterpret_cast<char*>(col.data()),
            static_cast<std::streamsize>(col.size() * sizeof(double)));
    if (!is) throw std::runtime_error("snapshot: truncated particle data");
    for (std::size_t a = 0; a < data.size(); ++a) data[a][comp] = col[a];
}

} // namespace detail

/// Binary layout: magic "SVPM", u32 version, u32 JSON length, JSON metadata,
/// then columnar float64 arrays x1,x2,x3,v1,v2,v3[,p1,p2,p3]. All numbers
/// little-endian; float64 payloads round-trip bit-exactly.
inline void write_snapshot(const std::string& path, const ParticleEnsemble& e,
                           const SnapshotMeta& meta) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("snapshot: cannot open '" + path + "' for writing");

    nlohmann::json j{{"time", meta.time},
                     {"step_index", meta.step_index},
                     {"config_hash", meta.config_hash},
                     {"n_particles", e.size()},
                     {"has_momenta", e.momenta.has_value()},
                     {"species",
                      {{"charge", meta.species.charge},
                       {"mass", meta.species.mass},
                       {"n_total", meta.species.n_total}}}};
    const std::string header = j.dump();

    os.write("SVPM", 4);
    detail::put_u32(os, kSnapshotVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(header.size()));
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (std::size_t c = 0; c < 3; ++c) detail::put_column(os, e.positions, c);
    for (std::size_t c = 0; c < 3; ++c) detail::put_column(os, e.velocities, c);
    if (e.momenta)
        for (std::size_t c = 0; c < 3; ++c) detail::put_column(os, *e.momenta, c);
    if (!os) throw std::runtime_error("snapshot: write failed on '" + path + "'");
}

inline std::pair<ParticleEnsemble, SnapshotMeta> read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("snapshot: cannot open '" + path + "'");

    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SVPM", 4) != 0)
        throw std::runtime_error("snapshot: bad magic bytes");
    const std::uint32_t version = detail::get_u32(is);
    if (version != kSnapshotVersion)
        throw std::runtime_error("snapshot: unsupported format version " +
                                 std::to_string(version));
    const std::uint32_t header_len = detail::get_u32(is);
    std::string header(header_len, '\0');
    is.read(header.data(), header_len);
    if (!is) throw std::runtime_error("snapshot: truncated metadata");

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception&) {
        throw std::runtime_error("snapshot: corrupt metadata header");
    }

    SnapshotMeta meta;
    meta.time = j.at("time").get<double>();
    meta.step_index = j.at("step_index").get<long>();
    meta.config_hash = j.at("config_hash").get<std::uint64_t>();
    meta.species.charge = j.at("species").at("charge").get<double>();
    meta.species.mass = j.at("species").at("mass").get<double>();
    meta.species.n_total = j.at("species").at("n_total").get<double>();
    const std::size_t n = j.at("n_particles").get<std::size_t>();
    const bool has_momenta = j.at("has_momenta").get<bool>();

    ParticleEnsemble e;
    e.positions.resize(n);
    e.velocities.resize(n);
    for (std::size_t c = 0; c < 3; ++c) detail::get_column(is, e.positions, c);
    for (std::size_t c = 0; c < 3; ++c) detail::get_column(is, e.velocities, c);
    if (has_momenta) {
        e.momenta.emplace(n);
        for (std::size_t c = 0; c < 3; ++c) detail::get_column(is, *e.momenta, c);
    }
    return {std::move(e), meta};
}

/// Provenance check when restarting from a snapshot: a mismatched config hash
/// is allowed but returns a warning to record in the run manifest.
inline std::optional<std::string> check_restart_compatibility(const SnapshotMeta& meta,
                                                              std::uint64_t config_hash) {
    if (meta.config_hash == config_hash) return std::nullopt;
    std::ostringstream os;
    os << "restart snapshot was produced by a different config (hash " << meta.config_hash
       << ", current " << config_hash << "); results are not a continuation of one run";
    return os.str();
}

} // namespace svpic
