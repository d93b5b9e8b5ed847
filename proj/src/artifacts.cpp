#include "eparvi/artifacts.hpp"

#include "eparvi/csv.hpp"
#include "eparvi/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>

namespace eparvi {

std::string sha256_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = in.gcount();
    if (got > 0) {
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got));
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string positions_header(Index dimension) {
  std::string h = "iteration,particle_id";
  for (Index k = 0; k < dimension; ++k) {
    h += ",x" + std::to_string(k);
  }
  return h;
}

void write_positions_csv(const std::filesystem::path &path,
                         const std::vector<Snapshot> &snapshots) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  const Index d = snapshots.empty() ? 0 : snapshots.front().positions.cols();
  out << positions_header(d) << "\n";
  for (const auto &snap : snapshots) {
    for (Index j = 0; j < snap.positions.rows(); ++j) {
      out << snap.iteration << "," << j;
      for (Index k = 0; k < d; ++k) {
        out << "," << format_double(snap.positions(j, k));
      }
      out << "\n";
    }
  }
}

const PointSet &PositionTable::final_positions() const {
  if (snapshots.empty()) {
    throw DataError("position table is empty");
  }
  return snapshots.back().positions;
}

PositionTable read_positions_csv(const std::filesystem::path &path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() < 3) {
    throw DataError(path.string() + ": expected columns " + positions_header(1) +
                    "...");
  }
  PositionTable out;
  out.dimension = static_cast<Index>(table.header.size() - 2);
  const std::string expected = positions_header(out.dimension);
  std::string actual = table.header[0];
  for (std::size_t i = 1; i < table.header.size(); ++i) {
    actual += "," + table.header[i];
  }
  if (actual != expected) {
    throw DataError(path.string() + ": header '" + actual + "', expected '" +
                    expected + "'");
  }
  std::map<long, std::vector<const std::vector<double> *>> by_iter;
  for (const auto &row : table.rows) {
    if (row[0] != std::floor(row[0]) || row[1] != std::floor(row[1])) {
      throw DataError(path.string() + ": iteration and particle_id must be integers");
    }
    by_iter[static_cast<long>(row[0])].push_back(&row);
  }
  for (const auto &[iter, rows] : by_iter) {
    Snapshot snap;
    snap.iteration = iter;
    snap.positions.resize(static_cast<Index>(rows.size()), out.dimension);
    std::vector<bool> seen(rows.size(), false);
    for (const auto *row : rows) {
      const auto id = static_cast<long>((*row)[1]);
      if (id < 0 || id >= static_cast<long>(rows.size()) ||
          seen[static_cast<std::size_t>(id)]) {
        throw DataError(path.string() + ": particle ids at iteration " +
                        std::to_string(iter) + " are not 0..n-1");
      }
      seen[static_cast<std::size_t>(id)] = true;
      for (Index k = 0; k < out.dimension; ++k) {
        snap.positions(id, k) = (*row)[static_cast<std::size_t>(k) + 2];
      }
    }
    out.snapshots.push_back(std::move(snap));
  }
  return out;
}

void write_jsonl(const std::filesystem::path &path,
                 const std::vector<nlohmann::json> &records) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  for (const auto &r : records) {
    out << r.dump() << "\n";
  }
}

void write_manifest(const std::filesystem::path &dir,
                    const std::vector<std::string> &files,
                    const nlohmann::json &extra) {
  nlohmann::json manifest = extra;
  nlohmann::json listed = nlohmann::json::object();
  for (const auto &name : files) {
    const auto p = dir / name;
    if (std::filesystem::exists(p)) {
      listed[name] = {{"sha256", sha256_file(p)},
                      {"bytes", std::filesystem::file_size(p)}};
    }
  }
  manifest["files"] = listed;
  std::ofstream out(dir / "manifest.json");
  if (!out) {
    throw DataError("cannot write manifest in " + dir.string());
  }
  out << manifest.dump(2) << "\n";
}

std::vector<std::string> verify_manifest(const std::filesystem::path &dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) {
    throw DataError("no manifest.json in " + dir.string());
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw DataError("manifest.json is not valid JSON: " + std::string(e.what()));
  }
  std::vector<std::string> bad;
  const nlohmann::json files = manifest.value("files", nlohmann::json::object());
  for (const auto &[name, entry] : files.items()) {
    const auto p = dir / name;
    if (!std::filesystem::exists(p) ||
        sha256_file(p) != entry.at("sha256").get<std::string>()) {
      bad.push_back(name);
    }
  }
  return bad;
}

} // namespace eparvi
