#include "agcoop/radio_map.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "agcoop/parallel.hpp"

namespace agcoop {

namespace {

constexpr char kMagic[4] = {'A', 'G', 'R', 'M'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 3 * 8 + 8 + 3 * 4 + 4 + 4;

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  static_assert(sizeof(T) == sizeof(U));
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

// splitmix64 finalizer; used to derive per-voxel shadowing draws that do not
// depend on evaluation order or thread count.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double unit_uniform(std::uint64_t bits) {
  // 53 random mantissa bits in (0, 1).
  return (static_cast<double>(bits >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double shadowing_normal(std::uint64_t seed, std::size_t n, std::size_t t, std::size_t voxel) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ (n * 0x100000001B3ULL));
  h = mix64(h ^ (t * 0xC2B2AE3D27D4EB4FULL));
  h = mix64(h ^ voxel);
  const double u1 = unit_uniform(h);
  const double u2 = unit_uniform(mix64(h));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

void VoxelGrid::validate() const {
  if (!(cube_side > 0.0) || !std::isfinite(cube_side)) throw ValidationError("cube_side", "must be > 0");
  for (int i = 0; i < 3; ++i) {
    if (dims[i] < 1) throw ValidationError("dims", "every voxel count must be >= 1");
  }
}

Vec3 VoxelGrid::upper() const {
  return {origin.x + dims[0] * cube_side, origin.y + dims[1] * cube_side, origin.z + dims[2] * cube_side};
}

bool VoxelGrid::contains(const Vec3& pos) const {
  const Vec3 hi = upper();
  return pos.x >= origin.x && pos.x <= hi.x && pos.y >= origin.y && pos.y <= hi.y && pos.z >= origin.z &&
         pos.z <= hi.z;
}

Vec3 VoxelGrid::center(const VoxelIndex& v) const {
  return {origin.x + (v.x - 0.5) * cube_side, origin.y + (v.y - 0.5) * cube_side,
          origin.z + (v.z - 0.5) * cube_side};
}

VoxelIndex position_to_index(const Vec3& pos, const VoxelGrid& grid) {
  const double coords[3] = {pos.x, pos.y, pos.z};
  const double lows[3] = {grid.origin.x, grid.origin.y, grid.origin.z};
  constexpr char axes[3] = {'x', 'y', 'z'};
  int idx[3];
  for (int i = 0; i < 3; ++i) {
    const double hi = lows[i] + grid.dims[i] * grid.cube_side;
    if (!(coords[i] >= lows[i] && coords[i] <= hi)) throw BoundsError(axes[i], coords[i], lows[i], hi);
    const int k = static_cast<int>(std::floor((coords[i] - lows[i]) / grid.cube_side)) + 1;
    idx[i] = std::min(k, grid.dims[i]);
  }
  return {idx[0], idx[1], idx[2]};
}

bool segment_hits_prism(const Vec3& a, const Vec3& b, const Building& prism) {
  // Slab test against the open box; a hit needs an overlap of positive length.
  const double origin[3] = {a.x, a.y, a.z};
  const double dir[3] = {b.x - a.x, b.y - a.y, b.z - a.z};
  const double lo[3] = {prism.x0, prism.y0, 0.0};
  const double hi[3] = {prism.x1, prism.y1, prism.height};
  double t_enter = 0.0;
  double t_exit = 1.0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dir[i]) < 1e-15) {
      if (!(origin[i] > lo[i] && origin[i] < hi[i])) return false;
      continue;
    }
    double t1 = (lo[i] - origin[i]) / dir[i];
    double t2 = (hi[i] - origin[i]) / dir[i];
    if (t1 > t2) std::swap(t1, t2);
    t_enter = std::max(t_enter, t1);
    t_exit = std::min(t_exit, t2);
    if (t_exit - t_enter <= 1e-12) return false;
  }
  return t_exit - t_enter > 1e-12;
}

int BuildingSet::containing(const Vec3& p) const {
  for (std::size_t i = 0; i < prisms_.size(); ++i) {
    if (prisms_[i].contains(p)) return static_cast<int>(i);
  }
  return -1;
}

bool BuildingSet::blocks(const Vec3& a, const Vec3& b) const {
  return std::any_of(prisms_.begin(), prisms_.end(), [&](const Building& p) { return segment_hits_prism(a, b, p); });
}

void BuildingSet::validate(const VoxelGrid& grid) const {
  const Vec3 hi = grid.upper();
  for (std::size_t i = 0; i < prisms_.size(); ++i) {
    const Building& b = prisms_[i];
    const std::string field = "buildings[" + std::to_string(i) + "]";
    if (!(b.height > 0.0)) throw ValidationError(field + ".height", "must be > 0");
    if (!(b.x1 > b.x0) || !(b.y1 > b.y0)) throw ValidationError(field, "footprint must have positive area");
    if (b.x0 < grid.origin.x || b.x1 > hi.x || b.y0 < grid.origin.y || b.y1 > hi.y) {
      throw ValidationError(field, "footprint outside the grid's horizontal extent");
    }
  }
}

RadioMap::RadioMap(VoxelGrid grid, int transmitters, int slots)
    : grid_(grid), transmitters_(transmitters), slots_(slots) {
  grid_.validate();
  if (transmitters < 1 || slots < 1) throw ValidationError("layers", "need at least one transmitter and slot");
  gains_.assign(static_cast<std::size_t>(transmitters) * slots * grid_.voxel_count(),
                static_cast<float>(kGainFloor));
}

void RadioMap::check_layer(int n, int t) const {
  if (n < 0 || n >= transmitters_ || t < 0 || t >= slots_) {
    throw LookupError("no radio map layer for transmitter " + std::to_string(n) + ", slot " + std::to_string(t));
  }
}

double RadioMap::gain_at(int n, int t, const Vec3& pos) const {
  check_layer(n, t);
  return gain(n, t, position_to_index(pos, grid_));
}

std::span<float> RadioMap::layer(int n, int t) {
  check_layer(n, t);
  return std::span<float>(gains_).subspan(layer_offset(n, t), grid_.voxel_count());
}

std::span<const float> RadioMap::layer(int n, int t) const {
  check_layer(n, t);
  return std::span<const float>(gains_).subspan(layer_offset(n, t), grid_.voxel_count());
}

void PropagationModel::validate() const {
  if (!(los_exponent > 0.0)) throw ValidationError("propagation.los_exponent", "must be > 0");
  if (!(nlos_exponent > 0.0)) throw ValidationError("propagation.nlos_exponent", "must be > 0");
  if (!(nlos_penalty_db > 0.0)) throw ValidationError("propagation.nlos_penalty_db", "must be > 0");
  if (!(shadowing_sigma_db >= 0.0)) throw ValidationError("propagation.shadowing_sigma_db", "must be >= 0");
}

double deterministic_gain(const Vec3& tx, const Vec3& rx, const BuildingSet& buildings,
                          const PropagationModel& model) {
  const double d = std::max(1.0, (rx - tx).norm());
  const double l0 = model.ref_gain();
  if (!buildings.blocks(tx, rx)) return l0 / std::pow(d, model.los_exponent);
  return l0 / std::pow(d, model.nlos_exponent) * db_to_linear(-model.nlos_penalty_db);
}

RadioMap generate_synthetic_map(const VoxelGrid& grid, const BuildingSet& buildings,
                                const std::vector<std::vector<Vec3>>& transmitter_positions,
                                const PropagationModel& model, std::uint64_t seed) {
  model.validate();
  if (transmitter_positions.empty() || transmitter_positions.front().empty()) {
    throw ValidationError("transmitters", "need at least one transmitter position");
  }
  const int n_tx = static_cast<int>(transmitter_positions.size());
  const int n_slots = static_cast<int>(transmitter_positions.front().size());
  for (const auto& path : transmitter_positions) {
    if (static_cast<int>(path.size()) != n_slots) throw ValidationError("transmitters", "ragged slot counts");
  }
  RadioMap map(grid, n_tx, n_slots);
  const double floor_gain = RadioMap::kGainFloor;

  parallel_for(static_cast<std::size_t>(n_tx) * n_slots, [&](std::size_t layer_id) {
    const int n = static_cast<int>(layer_id / n_slots);
    const int t = static_cast<int>(layer_id % n_slots);
    const Vec3 tx = transmitter_positions[n][t];
    std::span<float> out = map.layer(n, t);
    for (int x = 1; x <= grid.dims[0]; ++x) {
      for (int y = 1; y <= grid.dims[1]; ++y) {
        for (int z = 1; z <= grid.dims[2]; ++z) {
          const VoxelIndex v{x, y, z};
          const std::size_t off = grid.offset(v);
          double g = deterministic_gain(tx, grid.center(v), buildings, model);
          if (model.shadowing_sigma_db > 0.0) {
            g *= db_to_linear(model.shadowing_sigma_db * shadowing_normal(seed, n, t, off));
          }
          out[off] = static_cast<float>(std::max(g, floor_gain));
        }
      }
    }
  });
  return map;
}

void save_map(const RadioMap& map, const std::filesystem::path& path) {
  std::vector<unsigned char> bytes;
  const auto payload = map.payload();
  bytes.reserve(kHeaderBytes + payload.size() * 4);
  bytes.insert(bytes.end(), std::begin(kMagic), std::end(kMagic));
  put_le(bytes, kMapFormatVersion);
  const VoxelGrid& g = map.grid();
  put_le(bytes, g.origin.x);
  put_le(bytes, g.origin.y);
  put_le(bytes, g.origin.z);
  put_le(bytes, g.cube_side);
  for (int d : g.dims) put_le(bytes, static_cast<std::int32_t>(d));
  put_le(bytes, static_cast<std::int32_t>(map.transmitters()));
  put_le(bytes, static_cast<std::int32_t>(map.slots()));
  for (float v : payload) put_le(bytes, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

RadioMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderBytes) throw FormatError("radio map header truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad radio map magic bytes");
  const unsigned char* p = bytes.data() + 4;
  const auto version = get_le<std::uint32_t>(p);
  p += 4;
  if (version != kMapFormatVersion) {
    throw VersionError("radio map version " + std::to_string(version) + ", expected " +
                       std::to_string(kMapFormatVersion));
  }
  VoxelGrid grid;
  grid.origin.x = get_le<double>(p);
  grid.origin.y = get_le<double>(p + 8);
  grid.origin.z = get_le<double>(p + 16);
  grid.cube_side = get_le<double>(p + 24);
  p += 32;
  for (int i = 0; i < 3; ++i, p += 4) grid.dims[i] = get_le<std::int32_t>(p);
  const auto n_tx = get_le<std::int32_t>(p);
  const auto n_slots = get_le<std::int32_t>(p + 4);
  if (!(grid.cube_side > 0.0) || grid.dims[0] < 1 || grid.dims[1] < 1 || grid.dims[2] < 1 || n_tx < 1 ||
      n_slots < 1) {
    throw FormatError("corrupt radio map header");
  }
  RadioMap map(grid, n_tx, n_slots);
  const std::size_t expected = map.payload().size() * 4;
  if (bytes.size() - kHeaderBytes != expected) {
    throw PayloadError("radio map payload has " + std::to_string(bytes.size() - kHeaderBytes) +
                       " bytes, expected " + std::to_string(expected));
  }
  const unsigned char* q = bytes.data() + kHeaderBytes;
  for (int n = 0; n < n_tx; ++n) {
    for (int t = 0; t < n_slots; ++t) {
      for (float& v : map.layer(n, t)) {
        v = get_le<float>(q);
        q += 4;
      }
    }
  }
  return map;
}

void write_map_sidecar(const RadioMap& map, const std::filesystem::path& path) {
  const VoxelGrid& g = map.grid();
  nlohmann::json j = {
      {"magic", "AGRM"},
      {"version", kMapFormatVersion},
      {"origin", {g.origin.x, g.origin.y, g.origin.z}},
      {"cube_side", g.cube_side},
      {"dims", {g.dims[0], g.dims[1], g.dims[2]}},
      {"transmitters", map.transmitters()},
      {"slots", map.slots()},
      {"payload", "float32 little-endian, (n, t, x, y, z) row-major, linear gain"},
  };
  std::filesystem::path sidecar = path;
  sidecar += ".json";
  std::ofstream out(sidecar, std::ios::trunc);
  if (!out) throw Error("cannot open '" + sidecar.string() + "' for writing");
  out << j.dump(2) << '\n';
}

}  // namespace agcoop
