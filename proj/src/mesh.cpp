#include "eparvi/mesh.hpp"

#include "eparvi/error.hpp"
#include "eparvi/parallel.hpp"
#include "eparvi/targets.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

namespace eparvi {

std::string to_string(MagnitudeMode mode) {
  switch (mode) {
  case MagnitudeMode::Density:
    return "density";
  case MagnitudeMode::NormalizedDensity:
    return "normalized_density";
  case MagnitudeMode::LogDensityOffset:
    return "log_density_offset";
  }
  return "density";
}

MagnitudeMode magnitude_mode_from_string(const std::string &name) {
  if (name == "density") {
    return MagnitudeMode::Density;
  }
  if (name == "normalized_density") {
    return MagnitudeMode::NormalizedDensity;
  }
  if (name == "log_density_offset") {
    return MagnitudeMode::LogDensityOffset;
  }
  throw ConfigError("mesh.mode", "unknown magnitude mode '" + name + "'");
}

ChargeMesh ChargeMesh::build(Box bounds, std::vector<std::size_t> counts) {
  if (bounds.empty() || bounds.size() != counts.size()) {
    throw MeshError("need one (low, high) pair and one count per dimension");
  }
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    if (counts[k] < 2) {
      throw MeshError("axis " + std::to_string(k) + ": count must be >= 2");
    }
    if (!(bounds[k].low < bounds[k].high) || !std::isfinite(bounds[k].low) ||
        !std::isfinite(bounds[k].high)) {
      throw MeshError("axis " + std::to_string(k) + ": degenerate bounds");
    }
  }

  ChargeMesh mesh;
  mesh.bounds_ = std::move(bounds);
  mesh.counts_ = std::move(counts);
  const std::size_t d = mesh.counts_.size();
  mesh.strides_.assign(d, 1);
  for (std::size_t k = d - 1; k > 0; --k) {
    mesh.strides_[k - 1] = mesh.strides_[k] * mesh.counts_[k];
  }
  const std::size_t total = mesh.strides_[0] * mesh.counts_[0];

  std::vector<std::vector<double>> axes(d);
  for (std::size_t k = 0; k < d; ++k) {
    const auto m = mesh.counts_[k];
    const double lo = mesh.bounds_[k].low;
    const double step = mesh.bounds_[k].width() / static_cast<double>(m - 1);
    axes[k].resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      axes[k][i] = lo + step * static_cast<double>(i);
    }
    axes[k][m - 1] = mesh.bounds_[k].high;
  }

  mesh.points_.resize(static_cast<Index>(total), static_cast<Index>(d));
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t i = rest / mesh.strides_[k];
      rest %= mesh.strides_[k];
      mesh.points_(static_cast<Index>(flat), static_cast<Index>(k)) = axes[k][i];
    }
  }
  return mesh;
}

double ChargeMesh::spacing(std::size_t axis) const {
  return bounds_.at(axis).width() / static_cast<double>(counts_.at(axis) - 1);
}

double ChargeMesh::cell_diagonal() const {
  double sq = 0.0;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    sq += spacing(k) * spacing(k);
  }
  return std::sqrt(sq);
}

std::size_t ChargeMesh::flat_index(std::span<const std::size_t> grid_index) const {
  if (grid_index.size() != counts_.size()) {
    throw MeshError("grid index has wrong dimension");
  }
  std::size_t flat = 0;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    if (grid_index[k] >= counts_[k]) {
      throw MeshError("grid index out of range on axis " + std::to_string(k));
    }
    flat += grid_index[k] * strides_[k];
  }
  return flat;
}

std::vector<std::size_t> ChargeMesh::grid_index(std::size_t flat) const {
  if (flat >= size()) {
    throw MeshError("flat index out of range");
  }
  std::vector<std::size_t> out(counts_.size());
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    out[k] = flat / strides_[k];
    flat %= strides_[k];
  }
  return out;
}

std::size_t ChargeMesh::nearest_axis_index(std::size_t axis, double value) const {
  const double pos = (value - bounds_.at(axis).low) / spacing(axis);
  const double clamped =
      std::clamp(std::round(pos), 0.0, static_cast<double>(counts_[axis] - 1));
  return static_cast<std::size_t>(clamped);
}

double ChargeMesh::total_charge() const {
  return std::accumulate(magnitudes_.begin(), magnitudes_.end(), 0.0);
}

std::size_t ChargeMesh::argmax_magnitude() const {
  if (magnitudes_.empty()) {
    throw MeshError("magnitudes not assigned");
  }
  return static_cast<std::size_t>(
      std::max_element(magnitudes_.begin(), magnitudes_.end()) -
      magnitudes_.begin());
}

void ChargeMesh::set_magnitudes(std::vector<double> magnitudes,
                                MagnitudeMode mode, double q_scale) {
  if (magnitudes.size() != size()) {
    throw MeshError("expected " + std::to_string(size()) + " magnitudes, got " +
                    std::to_string(magnitudes.size()));
  }
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    if (!(magnitudes[i] >= 0.0) || !std::isfinite(magnitudes[i])) {
      throw PositivityError("charge magnitude at grid point " +
                            std::to_string(i) + " is " +
                            std::to_string(magnitudes[i]) +
                            "; magnitudes must be finite and >= 0");
    }
  }
  magnitudes_ = std::move(magnitudes);
  mode_ = mode;
  q_scale_ = q_scale;
}

void assign_magnitudes(ChargeMesh &mesh, const TargetDensity &target,
                       const MagnitudeSpec &spec) {
  if (target.dimension() != mesh.dimension()) {
    throw MeshError("target dimension " + std::to_string(target.dimension()) +
                    " does not match mesh dimension " +
                    std::to_string(mesh.dimension()));
  }
  if (!(spec.q_max > 0.0)) {
    throw MeshError("q_max must be > 0");
  }
  const std::size_t n = mesh.size();
  const bool use_log = spec.mode == MagnitudeMode::LogDensityOffset;
  constexpr double kInvalid = std::numeric_limits<double>::quiet_NaN();

  // Raw per-point values: log p for the offset mode, p otherwise. NaN marks an
  // invalid point.
  std::vector<double> raw(n);
  const PointSet &points = mesh.points();
  parallel_for(n, spec.workers, [&](std::size_t i) {
    const auto x = points.row(static_cast<Index>(i)).transpose();
    const auto value = target.evaluate(x);
    if (!value) {
      raw[i] = kInvalid;
      return;
    }
    if (use_log) {
      const double lp = target.kind() == DensityKind::LogDensity
                            ? *value
                            : (*value > 0.0 ? std::log(*value) : -INFINITY);
      raw[i] = std::isfinite(lp) ? lp : kInvalid;
    } else if (target.kind() == DensityKind::Density && *value < 0.0) {
      raw[i] = *value;
    } else {
      raw[i] = target.density(x);
    }
  });

  std::size_t valid = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : raw) {
    if (std::isnan(v)) {
      continue;
    }
    ++valid;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (valid == 0) {
    throw MeshError("target '" + target.id() +
                    "' is invalid at every grid point");
  }

  std::vector<double> magnitudes(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = raw[i];
    if (std::isnan(v)) {
      continue;
    }
    switch (spec.mode) {
    case MagnitudeMode::Density:
      magnitudes[i] = spec.q_max * v;
      break;
    case MagnitudeMode::NormalizedDensity:
      magnitudes[i] = hi > 0.0 ? spec.q_max * v / hi : 0.0;
      break;
    case MagnitudeMode::LogDensityOffset:
      magnitudes[i] = spec.q_max * (v - lo);
      break;
    }
  }

  double q_scale = spec.q_max;
  if (spec.total_charge) {
    const double total = std::accumulate(magnitudes.begin(), magnitudes.end(), 0.0);
    if (!(total > 0.0)) {
      throw MeshError("cannot neutralise: total positive charge is zero");
    }
    const double factor = *spec.total_charge / total;
    for (double &m : magnitudes) {
      m *= factor;
    }
    q_scale *= factor;
  }
  mesh.set_magnitudes(std::move(magnitudes), spec.mode, q_scale);
}

// --- Annealing ----------------------------------------------------------------

AnnealingSchedule AnnealingSchedule::geometric(double gamma, double floor) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ConfigError("annealing.gamma", "must lie in (0, 1]");
  }
  if (!(floor > 0.0 && floor <= 1.0)) {
    throw ConfigError("annealing.floor", "must lie in (0, 1]");
  }
  AnnealingSchedule s;
  s.kind_ = Kind::Geometric;
  s.gamma_ = gamma;
  s.floor_ = floor;
  return s;
}

AnnealingSchedule AnnealingSchedule::explicit_values(std::vector<double> multipliers) {
  if (multipliers.empty()) {
    throw ConfigError("annealing.values", "must not be empty");
  }
  for (double m : multipliers) {
    if (!(m > 0.0 && m <= 1.0)) {
      throw ConfigError("annealing.values", "every multiplier must lie in (0, 1]");
    }
  }
  AnnealingSchedule s;
  s.kind_ = Kind::Explicit;
  s.values_ = std::move(multipliers);
  return s;
}

double AnnealingSchedule::multiplier(long t) const {
  switch (kind_) {
  case Kind::Constant:
    return 1.0;
  case Kind::Geometric:
    return std::max(floor_, std::pow(gamma_, static_cast<double>(t)));
  case Kind::Explicit: {
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(std::max(t, 0L)),
                                         values_.size() - 1);
    return values_[i];
  }
  }
  return 1.0;
}

std::vector<double> annealed_magnitudes(const ChargeMesh &mesh,
                                        const AnnealingSchedule &schedule,
                                        long t) {
  const auto base = mesh.magnitudes();
  std::vector<double> out(base.begin(), base.end());
  const double m = schedule.multiplier(t);
  if (m != 1.0) {
    for (double &v : out) {
      v *= m;
    }
  }
  return out;
}

// --- Cache --------------------------------------------------------------------

namespace {

constexpr char kCacheMagic[8] = {'E', 'P', 'V', 'M', 'E', 'S', 'H', '1'};

template <typename T> void write_pod(std::ostream &out, const T &value) {
  out.write(reinterpret_cast<const char *>(&value), sizeof(T));
}

template <typename T> bool read_pod(std::istream &in, T &value) {
  return static_cast<bool>(in.read(reinterpret_cast<char *>(&value), sizeof(T)));
}

} // namespace

std::string MeshCacheKey::serialize() const {
  nlohmann::json j;
  j["target_id"] = target_id;
  auto &b = j["bounds"] = nlohmann::json::array();
  for (const auto &axis : bounds) {
    b.push_back({axis.low, axis.high});
  }
  j["counts"] = counts;
  j["mode"] = to_string(mode);
  j["q_max"] = q_max;
  j["total_charge"] = total_charge ? nlohmann::json(*total_charge) : nlohmann::json();
  return j.dump();
}

void save_mesh_cache(const std::filesystem::path &path, const MeshCacheKey &key,
                     const ChargeMesh &mesh) {
  if (!mesh.has_magnitudes()) {
    throw MeshError("cannot cache a mesh without magnitudes");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw MeshError("cannot open mesh cache for writing: " + path.string());
  }
  const std::string k = key.serialize();
  out.write(kCacheMagic, sizeof(kCacheMagic));
  write_pod(out, static_cast<std::uint64_t>(k.size()));
  out.write(k.data(), static_cast<std::streamsize>(k.size()));
  write_pod(out, static_cast<std::uint32_t>(mesh.mode()));
  write_pod(out, mesh.q_scale());
  const auto mags = mesh.magnitudes();
  write_pod(out, static_cast<std::uint64_t>(mags.size()));
  out.write(reinterpret_cast<const char *>(mags.data()),
            static_cast<std::streamsize>(mags.size() * sizeof(double)));
  if (!out) {
    throw MeshError("failed writing mesh cache: " + path.string());
  }
}

std::optional<ChargeMesh> load_mesh_cache(const std::filesystem::path &path,
                                          const MeshCacheKey &key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return std::nullopt;
  }
  char magic[sizeof(kCacheMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) {
    return std::nullopt;
  }
  std::uint64_t key_size = 0;
  if (!read_pod(in, key_size) || key_size > (1u << 20)) {
    return std::nullopt;
  }
  std::string stored(key_size, '\0');
  if (!in.read(stored.data(), static_cast<std::streamsize>(key_size)) ||
      stored != key.serialize()) {
    return std::nullopt;
  }
  std::uint32_t mode = 0;
  double q_scale = 0.0;
  std::uint64_t count = 0;
  if (!read_pod(in, mode) || !read_pod(in, q_scale) || !read_pod(in, count)) {
    return std::nullopt;
  }
  ChargeMesh mesh = ChargeMesh::build(key.bounds, key.counts);
  if (count != mesh.size()) {
    return std::nullopt;
  }
  std::vector<double> mags(count);
  if (!in.read(reinterpret_cast<char *>(mags.data()),
               static_cast<std::streamsize>(count * sizeof(double)))) {
    return std::nullopt;
  }
  mesh.set_magnitudes(std::move(mags), static_cast<MagnitudeMode>(mode), q_scale);
  return mesh;
}

} // namespace eparvi
