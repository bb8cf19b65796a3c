#pragma once

#include <initializer_list>
#include <vector>

#include "agcoop/link_model.hpp"
#include "agcoop/radio_map.hpp"
#include "agcoop/scenario.hpp"

namespace agcoop::test {

// Map whose layer (n, t) holds gains[n][voxel] for every t, voxels along x.
inline RadioMap line_map(const std::vector<std::vector<double>>& gains, int slots, double cube = 5.0,
                         double z0 = 10.0) {
  VoxelGrid g;
  g.origin = {0.0, 0.0, z0};
  g.cube_side = cube;
  g.dims = {static_cast<int>(gains.front().size()), 1, 1};
  RadioMap map(g, static_cast<int>(gains.size()), slots);
  for (int n = 0; n < static_cast<int>(gains.size()); ++n)
    for (int t = 0; t < slots; ++t) {
      auto layer = map.layer(n, t);
      for (std::size_t v = 0; v < gains[n].size(); ++v) layer[v] = static_cast<float>(gains[n][v]);
    }
  return map;
}

// Center of voxel v (0-based) of a line_map.
inline Vec3 line_center(const RadioMap& map, int v) {
  return map.grid().center({v + 1, 1, 1});
}

inline TrajectorySet place(std::initializer_list<std::initializer_list<Vec3>> per_uav) {
  const int M = static_cast<int>(per_uav.size());
  const int T = static_cast<int>(per_uav.begin()->size());
  TrajectorySet q(M, T);
  int m = 0;
  for (const auto& row : per_uav) {
    int t = 0;
    for (const Vec3& p : row) q.set_point(m, t++, p);
    ++m;
  }
  return q;
}

}  // namespace agcoop::test
