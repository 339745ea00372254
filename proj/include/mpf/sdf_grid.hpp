#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "mpf/core.hpp"

namespace mpf {

// Axis-aligned workspace box. `dimension` is 2 or 3; in 2D the z axis is
// inert and every z coordinate is ignored.
struct WorkspaceBounds {
  Vec3 min_corner = Vec3::Zero();
  Vec3 max_corner = Vec3::Zero();
  int dimension = 3;

  bool contains(const Vec3& p) const {
    for (int d = 0; d < dimension; ++d) {
      if (p[d] < min_corner[d] || p[d] > max_corner[d]) return false;
    }
    return true;
  }
  // Length of the box diagonal over active axes. Used as the saturation
  // value for distances in degenerate grids (all free / all occupied).
  double diagonal() const {
    double s = 0.0;
    for (int d = 0; d < dimension; ++d) {
      const double e = max_corner[d] - min_corner[d];
      s += e * e;
    }
    return std::sqrt(s);
  }
};

struct SpherePrimitive {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

struct BoxPrimitive {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Zero();
};

// Occupies exactly the voxel containing the point.
struct PointPrimitive {
  Vec3 center = Vec3::Zero();
};

// Occupies { x : dot(normal, x) <= offset }. `normal` must be unit length.
struct HalfSpacePrimitive {
  Vec3 normal = Vec3::UnitX();
  double offset = 0.0;
};

// Row-major cell mask anchored at `origin` (2D scenarios only). Cell (r, c)
// covers [origin + (c, r) * cell_size, origin + (c + 1, r + 1) * cell_size).
struct BitmapPrimitive {
  std::vector<std::uint8_t> mask;
  int rows = 0;
  int cols = 0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double cell_size = 0.0;
};

using Primitive =
    std::variant<SpherePrimitive, BoxPrimitive, PointPrimitive, HalfSpacePrimitive, BitmapPrimitive>;

// Dense voxelization of a primitive set. Cells are stored x-fastest, then y,
// then z. A cell is occupied when its center lies inside some primitive
// (point primitives instead mark their containing voxel).
struct OccupancyGrid {
  WorkspaceBounds bounds;
  double resolution = 0.0;
  Eigen::Vector3i dims = Eigen::Vector3i::Ones();
  std::vector<std::uint8_t> cells;

  std::int64_t cell_count() const {
    return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
  }
  std::int64_t index(int x, int y, int z) const {
    return (static_cast<std::int64_t>(z) * dims[1] + y) * dims[0] + x;
  }
  Vec3 voxel_center(int x, int y, int z) const {
    Vec3 c = bounds.min_corner + Vec3((x + 0.5) * resolution, (y + 0.5) * resolution,
                                      (z + 0.5) * resolution);
    if (bounds.dimension == 2) c[2] = 0.0;
    return c;
  }
};

// Signed distance sampled at voxel centers, negative inside obstacles.
// Adjacent free/occupied centers carry +resolution/-resolution, so the zero
// iso-surface sits halfway between them.
struct SdfGrid {
  WorkspaceBounds bounds;
  double resolution = 0.0;
  Eigen::Vector3i dims = Eigen::Vector3i::Ones();
  std::vector<double> values;

  std::int64_t index(int x, int y, int z) const {
    return (static_cast<std::int64_t>(z) * dims[1] + y) * dims[0] + x;
  }
};

struct SdfSample {
  double value = 0.0;
  bool out_of_bounds = false;
};

struct GradientSample {
  Vec3 gradient = Vec3::Zero();
  bool out_of_bounds = false;
};

// Marker for cells with no site anywhere in the grid (see
// exact_squared_voxel_distances).
inline constexpr std::int64_t kNoSite = std::numeric_limits<std::int64_t>::max();

// Rasterizes primitives into a voxel grid. Primitives entirely outside the
// bounds are skipped; a note is appended to `warnings` when given.
OccupancyGrid build_occupancy(const std::vector<Primitive>& primitives,
                              const WorkspaceBounds& bounds, double resolution,
                              std::vector<std::string>* warnings = nullptr);

// Exact squared Euclidean distance, in voxel units, from every cell to the
// nearest cell with sites[i] != 0 (Felzenszwalb-Huttenlocher, axis by axis).
// Returns kNoSite everywhere when the site set is empty.
std::vector<std::int64_t> exact_squared_voxel_distances(const Eigen::Vector3i& dims,
                                                        const std::vector<std::uint8_t>& sites);

// Signed distance field of an occupancy grid: positive in free space,
// negative inside obstacles, saturated at +/- the bounds diagonal when one
// side of the surface is empty.
SdfGrid distance_transform(const OccupancyGrid& grid);

// Multilinear interpolation of the field. Points outside the bounds clamp to
// the boundary value and set `out_of_bounds`.
SdfSample sample_distance(const SdfGrid& sdf, const Vec3& point);

// Central finite difference of sample_distance with h = resolution per active
// axis. The z component is zero for 2D grids.
GradientSample sample_gradient(const SdfGrid& sdf, const Vec3& point);

// Plane of values at a fixed index along `axis` (0=x, 1=y, 2=z), row-major
// over the remaining two axes (faster axis last). Throws std::out_of_range on
// a bad index.
struct SdfSlice {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
};
SdfSlice extract_slice(const SdfGrid& sdf, int axis, int index);

}  // namespace mpf
