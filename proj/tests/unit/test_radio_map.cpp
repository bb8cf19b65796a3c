#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "agcoop/radio_map.hpp"
#include "agcoop/scenario.hpp"

namespace agcoop {
namespace {

namespace fs = std::filesystem;

VoxelGrid grid_at(double h_min) {
  VoxelGrid g;
  g.origin = {0.0, 0.0, h_min};
  g.cube_side = 5.0;
  g.dims = {10, 10, 4};
  return g;
}

TEST(PositionToIndex, AnchorIsFirstVoxel) {
  EXPECT_EQ(position_to_index({0.0, 0.0, 10.0}, grid_at(10.0)), (VoxelIndex{1, 1, 1}));
}

TEST(PositionToIndex, FloorFormula) {
  EXPECT_EQ(position_to_index({12.3, 5.0, 19.9}, grid_at(10.0)), (VoxelIndex{3, 2, 2}));
}

TEST(PositionToIndex, BelowAnchorNamesAxis) {
  try {
    (void)position_to_index({-1.0, 0.0, 10.0}, grid_at(10.0));
    FAIL() << "expected BoundsError";
  } catch (const BoundsError& e) {
    EXPECT_EQ(e.axis(), 'x');
  }
  try {
    (void)position_to_index({1.0, 1.0, 9.0}, grid_at(10.0));
    FAIL() << "expected BoundsError";
  } catch (const BoundsError& e) {
    EXPECT_EQ(e.axis(), 'z');
  }
}

TEST(PositionToIndex, UpperFaceBelongsToLastVoxel) {
  const VoxelGrid g = grid_at(10.0);
  EXPECT_EQ(position_to_index(g.upper(), g), (VoxelIndex{10, 10, 4}));
  EXPECT_THROW((void)position_to_index(g.upper() + Vec3{1e-6, 0.0, 0.0}, g), BoundsError);
}

TEST(GainAt, PiecewiseConstantAndLookups) {
  RadioMap map(grid_at(10.0), 2, 3);
  auto layer = map.layer(1, 2);
  const VoxelIndex v{3, 4, 2};
  layer[map.grid().offset(v)] = static_cast<float>(db_to_linear(-60.0));
  EXPECT_FLOAT_EQ(static_cast<float>(map.gain_at(1, 2, {10.1, 15.2, 15.3})), 1e-6f);
  EXPECT_EQ(map.gain_at(1, 2, {10.1, 15.2, 15.3}), map.gain_at(1, 2, {14.9, 19.9, 19.9}));
  EXPECT_THROW((void)map.gain_at(1, 2, {51.0, 1.0, 11.0}), BoundsError);
  EXPECT_THROW((void)map.gain_at(2, 0, {1.0, 1.0, 11.0}), LookupError);
  EXPECT_THROW((void)map.gain_at(0, 3, {1.0, 1.0, 11.0}), LookupError);
}

TEST(DeterministicGain, ReferenceDistanceIsL0) {
  PropagationModel model;
  const double g = deterministic_gain({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, BuildingSet{}, model);
  EXPECT_DOUBLE_EQ(g, model.ref_gain());
  // zero distance is clamped to the reference distance
  EXPECT_DOUBLE_EQ(deterministic_gain({3.0, 3.0, 0.0}, {3.0, 3.0, 0.0}, BuildingSet{}, model), model.ref_gain());
}

TEST(DeterministicGain, BuildingShadowsAndDistanceDecays) {
  PropagationModel model;
  const BuildingSet city({Building{10.0, -5.0, 20.0, 5.0, 30.0}});
  const Vec3 tx{0.0, 0.0, 0.0};
  const Vec3 behind{40.0, 0.0, 12.0};
  EXPECT_LT(deterministic_gain(tx, behind, city, model), deterministic_gain(tx, behind, BuildingSet{}, model));
  double prev = deterministic_gain(tx, {1.0, 1.0, 1.0}, BuildingSet{}, model);
  for (double s = 2.0; s < 100.0; s += 1.0) {
    const double g = deterministic_gain(tx, {s, s, s}, BuildingSet{}, model);
    EXPECT_LE(g, prev);
    prev = g;
  }
}

TEST(SegmentHitsPrism, GrazingIsNotBlocking) {
  const Building b{0.0, 0.0, 10.0, 10.0, 20.0};
  EXPECT_TRUE(segment_hits_prism({-5.0, 5.0, 5.0}, {15.0, 5.0, 5.0}, b));
  EXPECT_FALSE(segment_hits_prism({-5.0, 5.0, 25.0}, {15.0, 5.0, 25.0}, b));
  EXPECT_FALSE(segment_hits_prism({-5.0, 10.0, 5.0}, {15.0, 10.0, 5.0}, b));
}

TEST(SyntheticMap, SameSeedBitIdentical) {
  SystemParams p;
  p.num_slots = 3;
  const Scenario s = make_synthetic_scenario(5, p);
  PropagationModel model = s.propagation;
  model.shadowing_sigma_db = 4.0;
  const RadioMap a = generate_synthetic_map(s, model, 9);
  const RadioMap b = generate_synthetic_map(s, model, 9);
  const RadioMap c = generate_synthetic_map(s, model, 10);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  for (float g : a.payload()) {
    ASSERT_TRUE(std::isfinite(g));
    ASSERT_GT(g, 0.0f);
  }
}

class MapFile : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("agcoop_map_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    map = RadioMap(grid_at(10.0), 2, 2);
    float k = 1.0f;
    for (int n = 0; n < 2; ++n)
      for (int t = 0; t < 2; ++t)
        for (float& g : map.layer(n, t)) g = (k += 1.0f) * 1e-9f;
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
  RadioMap map;
};

TEST_F(MapFile, RoundTripIsExact) {
  save_map(map, dir / "m.bin");
  EXPECT_TRUE(load_map(dir / "m.bin") == map);
  write_map_sidecar(map, dir / "m.bin");
  EXPECT_TRUE(fs::exists(dir / "m.bin.json"));
}

TEST_F(MapFile, TruncatedPayload) {
  save_map(map, dir / "m.bin");
  fs::resize_file(dir / "m.bin", fs::file_size(dir / "m.bin") - 4);
  EXPECT_THROW((void)load_map(dir / "m.bin"), PayloadError);
}

TEST_F(MapFile, WrongMagicAndVersion) {
  save_map(map, dir / "m.bin");
  {
    std::fstream f(dir / "m.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  EXPECT_THROW((void)load_map(dir / "m.bin"), FormatError);
  save_map(map, dir / "m.bin");
  {
    std::fstream f(dir / "m.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const char v[4] = {9, 0, 0, 0};
    f.write(v, 4);
  }
  EXPECT_THROW((void)load_map(dir / "m.bin"), VersionError);
}

}  // namespace
}  // namespace agcoop
