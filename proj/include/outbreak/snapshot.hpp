#pragma once

// Bundled data snapshots: a manifest with row counts and CRC32 checksums that
// is verified before any file is read.

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "outbreak/data_model.hpp"

namespace outbreak {

struct SnapshotFile {
    std::string path;
    std::size_t rows = 0;  ///< data rows, header excluded
    std::uint32_t crc32 = 0;
};

struct SnapshotManifest {
    std::string name;
    bool faithful = false;  ///< true only for a verified export of the original data
    std::string provenance;
    std::string month_rule;
    std::size_t districts = 0;
    std::size_t states = 0;
    std::int64_t count_total = 0;
    std::size_t event_count = 0;
    std::vector<std::string> cluster_regions;
    std::vector<SnapshotFile> files;

    [[nodiscard]] const SnapshotFile& file(const std::string& path) const {
        for (const auto& f : files) {
            if (f.path == path) return f;
        }
        throw DataError("manifest lists no file '" + path + "'");
    }
};

[[nodiscard]] inline std::filesystem::path data_dir() {
#ifdef OUTBREAK_DATA_DIR
    return OUTBREAK_DATA_DIR;
#else
    return "data";
#endif
}

[[nodiscard]] inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open '" + p.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

[[nodiscard]] inline std::uint32_t crc32_of(std::string_view bytes) {
    uLong c = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks.
    for (std::size_t off = 0; off < bytes.size(); off += 1u << 30) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
        c = crc32(c, reinterpret_cast<const Bytef*>(bytes.data() + off), n);
    }
    return static_cast<std::uint32_t>(c);
}

[[nodiscard]] inline SnapshotManifest read_manifest(const std::filesystem::path& dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_bytes(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest in '" + dir.string() + "': " + e.what());
    }
    SnapshotManifest m;
    try {
        m.name = j.at("name").get<std::string>();
        m.faithful = j.value("faithful", false);
        m.provenance = j.value("provenance", "");
        m.month_rule = j.value("month_rule", "");
        m.districts = j.value("districts", std::size_t{0});
        m.states = j.value("states", std::size_t{0});
        m.count_total = j.value("count_total", std::int64_t{0});
        m.event_count = j.value("event_count", std::size_t{0});
        m.cluster_regions = j.value("cluster_regions", std::vector<std::string>{});
        for (const auto& f : j.at("files")) {
            SnapshotFile sf;
            sf.path = f.at("path").get<std::string>();
            sf.rows = f.at("rows").get<std::size_t>();
            sf.crc32 = static_cast<std::uint32_t>(std::stoul(f.at("crc32").get<std::string>(), nullptr, 16));
            m.files.push_back(sf);
        }
    } catch (const std::exception& e) {
        throw DataError("incomplete manifest in '" + dir.string() + "': " + e.what());
    }
    return m;
}

/// Checks every listed file's CRC32 and data-row count; throws DataError on the first mismatch.
inline void verify_snapshot(const std::filesystem::path& dir, const SnapshotManifest& m) {
    for (const auto& f : m.files) {
        const auto bytes = read_bytes(dir / f.path);
        const auto crc = crc32_of(bytes);
        if (crc != f.crc32) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%08x, manifest says %08x", crc, f.crc32);
            throw DataError("checksum mismatch for '" + f.path + "': " + buf);
        }
        std::size_t lines = 0;
        for (char c : bytes) lines += c == '\n';
        if (!bytes.empty() && bytes.back() != '\n') ++lines;
        if (lines == 0 || lines - 1 != f.rows) throw DataError("row count mismatch for '" + f.path + "'");
    }
}

struct Snapshot {
    SnapshotManifest manifest;
    CountPanel counts;           ///< district x month
    StudyGeometry geometry;      ///< aligned to counts
    RegionPartition states;      ///< district -> state
    EventStream events;          ///< finetype B, days since 1970-01-01, km about the event centroid
};

/// Loads a snapshot by directory name under data/ (or by path). Checksums are
/// verified first, totals afterwards.
[[nodiscard]] inline Snapshot load_snapshot(const std::string& name) {
    std::filesystem::path dir = name;
    if (!std::filesystem::exists(dir / "manifest.json")) dir = data_dir() / name;
    Snapshot s;
    s.manifest = read_manifest(dir);
    verify_snapshot(dir, s.manifest);
    s.counts = ingest_count_panel((dir / "counts.csv").string());
    s.geometry = ingest_geometry((dir / "geometry.csv").string()).aligned_to(s.counts);
    {
        std::ifstream in(dir / "states.csv");
        s.states = RegionPartition::from_csv(in, s.counts);
    }
    s.events = ingest_events((dir / "events_b.csv").string(), Projection::kLonLat);
    if (s.counts.total() != s.manifest.count_total) throw DataError("snapshot count total differs from manifest");
    if (s.events.size() != s.manifest.event_count) throw DataError("snapshot event count differs from manifest");
    if (s.geometry.size() != s.manifest.districts) throw DataError("snapshot district count differs from manifest");
    if (s.states.group_ids.size() != s.manifest.states) throw DataError("snapshot state count differs from manifest");
    return s;
}

}  // namespace outbreak
