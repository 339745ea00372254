#include "mpf/sdf_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int clamp_cell(int i, int n) { return std::clamp(i, 0, n - 1); }

struct CellRange {
  int lo[3] = {0, 0, 0};
  int hi[3] = {-1, -1, -1};  // inclusive; empty when hi < lo
  bool empty() const { return hi[0] < lo[0] || hi[1] < lo[1] || hi[2] < lo[2]; }
};

// Conservative cell range covering [mn, mx] in world coordinates.
CellRange cells_overlapping(const OccupancyGrid& grid, const Vec3& mn, const Vec3& mx) {
  CellRange r;
  const int active = grid.bounds.dimension;
  for (int d = 0; d < 3; ++d) {
    if (d >= active) {
      r.lo[d] = 0;
      r.hi[d] = grid.dims[d] - 1;
      continue;
    }
    const double rel_lo = (mn[d] - grid.bounds.min_corner[d]) / grid.resolution - 0.5;
    const double rel_hi = (mx[d] - grid.bounds.min_corner[d]) / grid.resolution - 0.5;
    if (rel_hi < -0.5 || rel_lo > grid.dims[d] - 0.5) return CellRange{};  // fully outside
    r.lo[d] = clamp_cell(static_cast<int>(std::floor(rel_lo)), grid.dims[d]);
    r.hi[d] = clamp_cell(static_cast<int>(std::ceil(rel_hi)), grid.dims[d]);
  }
  return r;
}

void mark_if(OccupancyGrid& grid, const CellRange& range, auto&& inside) {
  for (int z = range.lo[2]; z <= range.hi[2]; ++z) {
    for (int y = range.lo[1]; y <= range.hi[1]; ++y) {
      for (int x = range.lo[0]; x <= range.hi[0]; ++x) {
        if (inside(grid.voxel_center(x, y, z))) grid.cells[grid.index(x, y, z)] = 1;
      }
    }
  }
}

struct Rasterizer {
  OccupancyGrid& grid;
  bool touched = false;

  void operator()(const SpherePrimitive& s) {
    const Vec3 r = Vec3::Constant(s.radius);
    const CellRange range = cells_overlapping(grid, s.center - r, s.center + r);
    if (range.empty()) return;
    touched = true;
    const double r2 = s.radius * s.radius;
    const int active = grid.bounds.dimension;
    mark_if(grid, range, [&](const Vec3& c) {
      double d2 = 0.0;
      for (int d = 0; d < active; ++d) {
        const double e = c[d] - s.center[d];
        d2 += e * e;
      }
      return d2 <= r2;
    });
  }

  void operator()(const BoxPrimitive& b) {
    const CellRange range =
        cells_overlapping(grid, b.center - b.half_extents, b.center + b.half_extents);
    if (range.empty()) return;
    touched = true;
    const int active = grid.bounds.dimension;
    mark_if(grid, range, [&](const Vec3& c) {
      for (int d = 0; d < active; ++d) {
        if (std::abs(c[d] - b.center[d]) > b.half_extents[d]) return false;
      }
      return true;
    });
  }

  void operator()(const PointPrimitive& p) {
    int idx[3] = {0, 0, 0};
    for (int d = 0; d < grid.bounds.dimension; ++d) {
      const double rel = (p.center[d] - grid.bounds.min_corner[d]) / grid.resolution;
      idx[d] = static_cast<int>(std::floor(rel));
      if (idx[d] < 0 || idx[d] >= grid.dims[d]) return;
    }
    touched = true;
    grid.cells[grid.index(idx[0], idx[1], idx[2])] = 1;
  }

  void operator()(const HalfSpacePrimitive& h) {
    const int active = grid.bounds.dimension;
    // The half space misses the workspace only if every bounds corner is
    // strictly outside it.
    double best = 0.0;
    for (int d = 0; d < active; ++d) {
      best += h.normal[d] * (h.normal[d] < 0.0 ? grid.bounds.max_corner[d]
                                               : grid.bounds.min_corner[d]);
    }
    if (best > h.offset) return;
    touched = true;
    CellRange all;
    for (int d = 0; d < 3; ++d) {
      all.lo[d] = 0;
      all.hi[d] = grid.dims[d] - 1;
    }
    mark_if(grid, all, [&](const Vec3& c) {
      double dot = 0.0;
      for (int d = 0; d < active; ++d) dot += h.normal[d] * c[d];
      return dot <= h.offset;
    });
  }

  void operator()(const BitmapPrimitive& bm) {
    const Vec3 mn(bm.origin[0], bm.origin[1], 0.0);
    const Vec3 mx(bm.origin[0] + bm.cols * bm.cell_size, bm.origin[1] + bm.rows * bm.cell_size,
                  0.0);
    const CellRange range = cells_overlapping(grid, mn, mx);
    if (range.empty()) return;
    touched = true;
    mark_if(grid, range, [&](const Vec3& c) {
      const int col = static_cast<int>(std::floor((c[0] - bm.origin[0]) / bm.cell_size));
      const int row = static_cast<int>(std::floor((c[1] - bm.origin[1]) / bm.cell_size));
      if (row < 0 || row >= bm.rows || col < 0 || col >= bm.cols) return false;
      return bm.mask[static_cast<std::size_t>(row) * bm.cols + col] != 0;
    });
  }
};

// One pass of the lower-envelope squared distance transform along a line.
// f holds squared distances on input and output; v, z, out are scratch.
void envelope_1d(double* f, int n, int* v, double* z, double* out) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s;
    while (true) {
      const int p = v[k];
      if (f[p] == kInf) {
        // An infinite parabola never wins; drop it.
        if (k == 0) {
          v[0] = q;
          z[0] = -kInf;
          z[1] = kInf;
          s = kInf;
          break;
        }
        --k;
        continue;
      }
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
          (2.0 * q - 2.0 * p);
      if (s <= z[k]) {
        --k;
        continue;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kInf;
      break;
    }
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const int p = v[k];
    if (f[p] == kInf) {
      out[q] = kInf;
    } else {
      const double d = q - p;
      out[q] = d * d + f[p];
    }
  }
}

}  // namespace

OccupancyGrid build_occupancy(const std::vector<Primitive>& primitives,
                              const WorkspaceBounds& bounds, double resolution,
                              std::vector<std::string>* warnings) {
  if (resolution <= 0.0) throw std::invalid_argument("build_occupancy: resolution must be > 0");
  if (bounds.dimension != 2 && bounds.dimension != 3) {
    throw std::invalid_argument("build_occupancy: dimension must be 2 or 3");
  }
  OccupancyGrid grid;
  grid.bounds = bounds;
  grid.resolution = resolution;
  for (int d = 0; d < 3; ++d) {
    if (d >= bounds.dimension) {
      grid.dims[d] = 1;
      continue;
    }
    const double extent = bounds.max_corner[d] - bounds.min_corner[d];
    if (extent <= 0.0) throw std::invalid_argument("build_occupancy: empty bounds");
    grid.dims[d] = std::max(1, static_cast<int>(std::ceil(extent / resolution - 1e-9)));
  }
  grid.cells.assign(static_cast<std::size_t>(grid.cell_count()), 0);

  for (std::size_t i = 0; i < primitives.size(); ++i) {
    Rasterizer raster{grid};
    std::visit(raster, primitives[i]);
    if (!raster.touched && warnings != nullptr) {
      warnings->push_back("primitive " + std::to_string(i) + " lies outside the workspace bounds");
    }
  }
  return grid;
}

std::vector<std::int64_t> exact_squared_voxel_distances(const Eigen::Vector3i& dims,
                                                        const std::vector<std::uint8_t>& sites) {
  const std::int64_t total = static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
  if (static_cast<std::int64_t>(sites.size()) != total) {
    throw std::invalid_argument("exact_squared_voxel_distances: size mismatch");
  }
  std::vector<double> field(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) field[i] = sites[i] ? 0.0 : kInf;

  const int max_dim = dims.maxCoeff();
  std::vector<double> line(max_dim), out(max_dim), z(max_dim + 1);
  std::vector<int> v(max_dim);

  const auto at = [&](int x, int y, int z_) -> double& {
    return field[(static_cast<std::size_t>(z_) * dims[1] + y) * dims[0] + x];
  };

  if (dims[0] > 1) {
    for (int z_ = 0; z_ < dims[2]; ++z_) {
      for (int y = 0; y < dims[1]; ++y) {
        double* row = &at(0, y, z_);
        envelope_1d(row, dims[0], v.data(), z.data(), out.data());
        std::copy(out.begin(), out.begin() + dims[0], row);
      }
    }
  }
  if (dims[1] > 1) {
    for (int z_ = 0; z_ < dims[2]; ++z_) {
      for (int x = 0; x < dims[0]; ++x) {
        for (int y = 0; y < dims[1]; ++y) line[y] = at(x, y, z_);
        envelope_1d(line.data(), dims[1], v.data(), z.data(), out.data());
        for (int y = 0; y < dims[1]; ++y) at(x, y, z_) = out[y];
      }
    }
  }
  if (dims[2] > 1) {
    for (int y = 0; y < dims[1]; ++y) {
      for (int x = 0; x < dims[0]; ++x) {
        for (int z_ = 0; z_ < dims[2]; ++z_) line[z_] = at(x, y, z_);
        envelope_1d(line.data(), dims[2], v.data(), z.data(), out.data());
        for (int z_ = 0; z_ < dims[2]; ++z_) at(x, y, z_) = out[z_];
      }
    }
  }

  std::vector<std::int64_t> result(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    result[i] = field[i] == kInf ? kNoSite : static_cast<std::int64_t>(std::llround(field[i]));
  }
  return result;
}

SdfGrid distance_transform(const OccupancyGrid& grid) {
  SdfGrid sdf;
  sdf.bounds = grid.bounds;
  sdf.resolution = grid.resolution;
  sdf.dims = grid.dims;
  sdf.values.resize(grid.cells.size());

  std::vector<std::uint8_t> complement(grid.cells.size());
  for (std::size_t i = 0; i < grid.cells.size(); ++i) complement[i] = grid.cells[i] ? 0 : 1;

  const std::vector<std::int64_t> to_occupied = exact_squared_voxel_distances(grid.dims, grid.cells);
  const std::vector<std::int64_t> to_free = exact_squared_voxel_distances(grid.dims, complement);

  const double saturation = grid.bounds.diagonal();
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    if (grid.cells[i]) {
      const double d = to_free[i] == kNoSite
                           ? saturation
                           : std::min(saturation, std::sqrt(static_cast<double>(to_free[i])) *
                                                      grid.resolution);
      sdf.values[i] = -d;
    } else {
      const double d = to_occupied[i] == kNoSite
                           ? saturation
                           : std::min(saturation, std::sqrt(static_cast<double>(to_occupied[i])) *
                                                      grid.resolution);
      sdf.values[i] = d;
    }
  }
  return sdf;
}

namespace {

// Continuous cell coordinate of a point along one axis (0 at the first cell
// center), clamped to the sampled lattice.
inline void cell_coord(double p, double mn, double inv_res, int n, int& i0, int& i1, double& frac) {
  double u = (p - mn) * inv_res - 0.5;
  if (u <= 0.0) {
    i0 = i1 = 0;
    frac = 0.0;
    return;
  }
  if (u >= n - 1) {
    i0 = i1 = n - 1;
    frac = 0.0;
    return;
  }
  i0 = static_cast<int>(u);
  i1 = i0 + 1;
  frac = u - i0;
}

double interpolate(const SdfGrid& sdf, const Vec3& point) {
  const double inv_res = 1.0 / sdf.resolution;
  int x0, x1, y0, y1, z0, z1;
  double fx, fy, fz;
  cell_coord(point[0], sdf.bounds.min_corner[0], inv_res, sdf.dims[0], x0, x1, fx);
  cell_coord(point[1], sdf.bounds.min_corner[1], inv_res, sdf.dims[1], y0, y1, fy);
  if (sdf.bounds.dimension == 3) {
    cell_coord(point[2], sdf.bounds.min_corner[2], inv_res, sdf.dims[2], z0, z1, fz);
  } else {
    z0 = z1 = 0;
    fz = 0.0;
  }
  const auto v = [&](int x, int y, int z) { return sdf.values[sdf.index(x, y, z)]; };
  const double c00 = v(x0, y0, z0) * (1.0 - fx) + v(x1, y0, z0) * fx;
  const double c10 = v(x0, y1, z0) * (1.0 - fx) + v(x1, y1, z0) * fx;
  const double c01 = v(x0, y0, z1) * (1.0 - fx) + v(x1, y0, z1) * fx;
  const double c11 = v(x0, y1, z1) * (1.0 - fx) + v(x1, y1, z1) * fx;
  const double c0 = c00 * (1.0 - fy) + c10 * fy;
  const double c1 = c01 * (1.0 - fy) + c11 * fy;
  return c0 * (1.0 - fz) + c1 * fz;
}

}  // namespace

SdfSample sample_distance(const SdfGrid& sdf, const Vec3& point) {
  SdfSample sample;
  sample.out_of_bounds = !sdf.bounds.contains(point);
  sample.value = interpolate(sdf, point);
  return sample;
}

GradientSample sample_gradient(const SdfGrid& sdf, const Vec3& point) {
  GradientSample sample;
  sample.out_of_bounds = !sdf.bounds.contains(point);
  const double h = sdf.resolution;
  Vec3 lo = point, hi = point;
  for (int d = 0; d < sdf.bounds.dimension; ++d) {
    lo[d] = point[d] - h;
    hi[d] = point[d] + h;
    sample.gradient[d] = (interpolate(sdf, hi) - interpolate(sdf, lo)) / (2.0 * h);
    lo[d] = point[d];
    hi[d] = point[d];
  }
  return sample;
}

SdfSlice extract_slice(const SdfGrid& sdf, int axis, int index) {
  if (axis < 0 || axis > 2) throw std::out_of_range("extract_slice: axis must be 0, 1, or 2");
  if (index < 0 || index >= sdf.dims[axis]) {
    throw std::out_of_range("extract_slice: index " + std::to_string(index) +
                            " outside [0, " + std::to_string(sdf.dims[axis]) + ")");
  }
  const int row_axis = axis == 2 ? 1 : 2;
  const int col_axis = axis == 0 ? 1 : 0;
  SdfSlice slice;
  slice.rows = sdf.dims[row_axis];
  slice.cols = sdf.dims[col_axis];
  slice.values.reserve(static_cast<std::size_t>(slice.rows) * slice.cols);
  int coord[3];
  coord[axis] = index;
  for (int r = 0; r < slice.rows; ++r) {
    coord[row_axis] = r;
    for (int c = 0; c < slice.cols; ++c) {
      coord[col_axis] = c;
      slice.values.push_back(sdf.values[sdf.index(coord[0], coord[1], coord[2])]);
    }
  }
  return slice;
}

}  // namespace mpf
