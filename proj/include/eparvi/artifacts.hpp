#pragma once

#include "eparvi/sampler.hpp"
#include "eparvi/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace eparvi {

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path &path);

/// Header: iteration,particle_id,x0,...,x{d-1}.
std::string positions_header(Index dimension);

void write_positions_csv(const std::filesystem::path &path,
                         const std::vector<Snapshot> &snapshots);

struct PositionTable {
  Index dimension = 0;
  std::vector<Snapshot> snapshots;

  /// Positions of the highest iteration present.
  const PointSet &final_positions() const;
};

/// Parses a position CSV. Throws DataError if the header does not match the
/// frozen layout or particle ids are not 0..n-1 within a snapshot.
PositionTable read_positions_csv(const std::filesystem::path &path);

/// Writes each object on its own line.
void write_jsonl(const std::filesystem::path &path,
                 const std::vector<nlohmann::json> &records);

/// manifest.json: status, notes and a {file: {sha256, bytes}} map for every
/// listed artifact present in `dir`.
void write_manifest(const std::filesystem::path &dir,
                    const std::vector<std::string> &files,
                    const nlohmann::json &extra);

/// Files whose current hash differs from the manifest (or that are missing).
std::vector<std::string> verify_manifest(const std::filesystem::path &dir);

} // namespace eparvi
