#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "agcoop/types.hpp"

namespace agcoop {

// 1-based voxel coordinates, as produced by the floor mapping
// x = floor((pos.x - X_min) / delta) + 1 (likewise y, z).
struct VoxelIndex {
  int x{1};
  int y{1};
  int z{1};
  friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
};

// Axis-aligned voxel partition of [origin, origin + dims * cube_side].
// The extent is closed: a position on an upper face belongs to the last voxel
// along that axis.
struct VoxelGrid {
  Vec3 origin{};
  double cube_side{5.0};
  std::array<int, 3> dims{1, 1, 1};

  void validate() const;

  [[nodiscard]] Vec3 upper() const;
  [[nodiscard]] bool contains(const Vec3& pos) const;
  [[nodiscard]] std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  // Row-major offset of a 1-based index, x slowest.
  [[nodiscard]] std::size_t offset(const VoxelIndex& v) const {
    return (static_cast<std::size_t>(v.x - 1) * dims[1] + (v.y - 1)) * dims[2] + (v.z - 1);
  }
  [[nodiscard]] Vec3 center(const VoxelIndex& v) const;

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;
};

// Throws BoundsError naming the first offending axis.
VoxelIndex position_to_index(const Vec3& pos, const VoxelGrid& grid);

struct Building {
  double x0{0.0};
  double y0{0.0};
  double x1{0.0};
  double y1{0.0};
  double height{0.0};

  [[nodiscard]] bool footprint_contains(double x, double y) const {
    return x > x0 && x < x1 && y > y0 && y < y1;
  }
  // Open-prism membership; touching a face is not "inside".
  [[nodiscard]] bool contains(const Vec3& p) const {
    return footprint_contains(p.x, p.y) && p.z > 0.0 && p.z < height;
  }
  friend bool operator==(const Building&, const Building&) = default;
};

class BuildingSet {
 public:
  BuildingSet() = default;
  explicit BuildingSet(std::vector<Building> prisms) : prisms_(std::move(prisms)) {}

  [[nodiscard]] std::span<const Building> prisms() const { return prisms_; }
  [[nodiscard]] std::size_t size() const { return prisms_.size(); }
  [[nodiscard]] bool empty() const { return prisms_.empty(); }

  // Index of the prism containing p (open interior), or -1.
  [[nodiscard]] int containing(const Vec3& p) const;
  // True when segment [a, b] passes through the interior of any prism.
  [[nodiscard]] bool blocks(const Vec3& a, const Vec3& b) const;

  void validate(const VoxelGrid& grid) const;

  friend bool operator==(const BuildingSet&, const BuildingSet&) = default;

 private:
  std::vector<Building> prisms_;
};

bool segment_hits_prism(const Vec3& a, const Vec3& b, const Building& prism);

// Linear-scale channel power gains h_{n,t}(voxel), one dense layer per
// (transmitter, slot) pair. Immutable once built; safe for concurrent reads.
class RadioMap {
 public:
  static constexpr double kGainFloor = 1e-15;

  RadioMap() = default;
  RadioMap(VoxelGrid grid, int transmitters, int slots);

  [[nodiscard]] const VoxelGrid& grid() const { return grid_; }
  [[nodiscard]] int transmitters() const { return transmitters_; }
  [[nodiscard]] int slots() const { return slots_; }

  [[nodiscard]] double gain(int n, int t, const VoxelIndex& v) const {
    return gains_[layer_offset(n, t) + grid_.offset(v)];
  }
  // Throws LookupError for a missing (n, t) layer, BoundsError outside the grid.
  [[nodiscard]] double gain_at(int n, int t, const Vec3& pos) const;

  [[nodiscard]] std::span<float> layer(int n, int t);
  [[nodiscard]] std::span<const float> layer(int n, int t) const;
  [[nodiscard]] std::span<const float> payload() const { return gains_; }

  friend bool operator==(const RadioMap&, const RadioMap&) = default;

 private:
  void check_layer(int n, int t) const;
  [[nodiscard]] std::size_t layer_offset(int n, int t) const {
    return (static_cast<std::size_t>(n) * slots_ + t) * grid_.voxel_count();
  }

  VoxelGrid grid_{};
  int transmitters_{0};
  int slots_{0};
  std::vector<float> gains_;
};

struct PropagationModel {
  double ref_loss_db{30.0};       // L_0 as a loss at 1 m
  double los_exponent{2.0};
  double nlos_exponent{2.8};
  double nlos_penalty_db{20.0};
  double shadowing_sigma_db{0.0};

  [[nodiscard]] double ref_gain() const { return db_to_linear(-ref_loss_db); }
  void validate() const;
  friend bool operator==(const PropagationModel&, const PropagationModel&) = default;
};

// Gain from a transmitter at `tx` to a receiver at `rx`, before shadowing.
double deterministic_gain(const Vec3& tx, const Vec3& rx, const BuildingSet& buildings,
                          const PropagationModel& model);

// transmitter_positions[n][t] is the ground position of transmitter n in slot t.
RadioMap generate_synthetic_map(const VoxelGrid& grid, const BuildingSet& buildings,
                                const std::vector<std::vector<Vec3>>& transmitter_positions,
                                const PropagationModel& model, std::uint64_t seed);

// Binary format: "AGRM" magic, u32 version, f64 origin[3], f64 cube side,
// i32 dims[3], i32 N, i32 T, then N*T*X*Y*Z little-endian f32 gains in
// (n, t, x, y, z) row-major order.
inline constexpr std::uint32_t kMapFormatVersion = 1;

void save_map(const RadioMap& map, const std::filesystem::path& path);
RadioMap load_map(const std::filesystem::path& path);
// JSON mirror of the binary header, written next to the map as <path>.json.
void write_map_sidecar(const RadioMap& map, const std::filesystem::path& path);

}  // namespace agcoop
