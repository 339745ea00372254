#include <doctest.h>

#include <random>

#include "mpf/sdf_grid.hpp"
#include "support/oracles.hpp"

using namespace mpf;

namespace {

WorkspaceBounds square_bounds(double half, int dimension = 2) {
  WorkspaceBounds b;
  b.dimension = dimension;
  b.min_corner = Vec3::Constant(-half);
  b.max_corner = Vec3::Constant(half);
  if (dimension == 2) {
    b.min_corner[2] = 0.0;
    b.max_corner[2] = 0.0;
  }
  return b;
}

std::vector<std::uint8_t> random_sites(const Eigen::Vector3i& dims, int count,
                                       std::mt19937_64& rng) {
  std::vector<std::uint8_t> sites(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
  std::uniform_int_distribution<std::size_t> pick(0, sites.size() - 1);
  for (int i = 0; i < count; ++i) sites[pick(rng)] = 1;
  return sites;
}

}  // namespace

TEST_CASE("occupancy marks the voxel centers covered by primitives") {
  WorkspaceBounds bounds = square_bounds(1.0);
  std::vector<Primitive> primitives;
  primitives.push_back(SpherePrimitive{Vec3(0.0, 0.0, 0.0), 0.35});
  const OccupancyGrid grid = build_occupancy(primitives, bounds, 0.1);

  CHECK(grid.dims[0] == 20);
  CHECK(grid.dims[1] == 20);
  CHECK(grid.dims[2] == 1);
  int occupied = 0;
  for (int y = 0; y < grid.dims[1]; ++y) {
    for (int x = 0; x < grid.dims[0]; ++x) {
      const Vec3 c = grid.voxel_center(x, y, 0);
      const bool inside = c.head<2>().norm() <= 0.35;
      CHECK(grid.cells[grid.index(x, y, 0)] == (inside ? 1 : 0));
      occupied += inside ? 1 : 0;
    }
  }
  CHECK(occupied > 0);
}

TEST_CASE("a point primitive occupies exactly its containing voxel") {
  std::vector<Primitive> primitives;
  primitives.push_back(PointPrimitive{Vec3(0.31, -0.22, 0.0)});
  const OccupancyGrid grid = build_occupancy(primitives, square_bounds(1.0), 0.1);
  int occupied = 0;
  for (std::uint8_t c : grid.cells) occupied += c;
  CHECK(occupied == 1);
  // (0.31, -0.22) relative to (-1, -1) is cell (13, 7).
  CHECK(grid.cells[grid.index(13, 7, 0)] == 1);
}

TEST_CASE("primitives outside the bounds are skipped with a warning") {
  std::vector<Primitive> primitives;
  primitives.push_back(SpherePrimitive{Vec3(5.0, 5.0, 0.0), 0.2});
  primitives.push_back(HalfSpacePrimitive{Vec3::UnitX(), -10.0});
  std::vector<std::string> warnings;
  const OccupancyGrid grid = build_occupancy(primitives, square_bounds(1.0), 0.1, &warnings);
  CHECK(warnings.size() == 2);
  for (std::uint8_t c : grid.cells) CHECK(c == 0);
}

TEST_CASE("bitmap primitives rasterize their true cells") {
  BitmapPrimitive bitmap;
  bitmap.rows = 2;
  bitmap.cols = 2;
  // Row 0 is the *top* row in file order; config parsing flips it. Build the
  // in-memory layout directly here: row 0 at low y.
  bitmap.mask = {1, 0, 0, 1};
  bitmap.origin = Eigen::Vector2d(0.0, 0.0);
  bitmap.cell_size = 0.5;
  std::vector<Primitive> primitives{bitmap};
  const OccupancyGrid grid = build_occupancy(primitives, square_bounds(1.0), 0.25);

  // Bitmap cell (0,0) covers [0,0.5)^2 -> voxel centers (0.125..0.375)^2.
  CHECK(grid.cells[grid.index(4, 4, 0)] == 1);
  CHECK(grid.cells[grid.index(5, 5, 0)] == 1);
  CHECK(grid.cells[grid.index(6, 4, 0)] == 0);
  CHECK(grid.cells[grid.index(6, 6, 0)] == 1);
  CHECK(grid.cells[grid.index(7, 7, 0)] == 1);
  CHECK(grid.cells[grid.index(4, 6, 0)] == 0);
}

TEST_CASE("exact squared voxel distances match brute force on random grids") {
  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<int> size2d(2, 24);
  std::uniform_int_distribution<int> size3d(2, 12);
  std::uniform_int_distribution<int> count(1, 24);
  for (int round = 0; round < 40; ++round) {
    Eigen::Vector3i dims;
    if (round % 2 == 0) {
      dims = Eigen::Vector3i(size2d(rng), size2d(rng), 1);
    } else {
      dims = Eigen::Vector3i(size3d(rng), size3d(rng), size3d(rng));
    }
    const std::vector<std::uint8_t> sites = random_sites(dims, count(rng), rng);
    const auto fast = exact_squared_voxel_distances(dims, sites);
    const auto slow = oracle::brute_force_squared_distances(dims, sites);
    REQUIRE(fast == slow);
  }
}

TEST_CASE("exact squared voxel distances handle empty and full site sets") {
  const Eigen::Vector3i dims(4, 3, 2);
  std::vector<std::uint8_t> none(24, 0);
  for (std::int64_t d : exact_squared_voxel_distances(dims, none)) CHECK(d == kNoSite);
  std::vector<std::uint8_t> all(24, 1);
  for (std::int64_t d : exact_squared_voxel_distances(dims, all)) CHECK(d == 0);
}

TEST_CASE("distance transform signs and magnitudes around a single voxel") {
  std::vector<Primitive> primitives;
  primitives.push_back(PointPrimitive{Vec3(0.05, 0.05, 0.0)});  // center voxel of 20x20
  const OccupancyGrid grid = build_occupancy(primitives, square_bounds(1.0), 0.1);
  const SdfGrid sdf = distance_transform(grid);

  const int cx = 10, cy = 10;
  CHECK(sdf.values[sdf.index(cx, cy, 0)] == doctest::Approx(-0.1));
  CHECK(sdf.values[sdf.index(cx + 1, cy, 0)] == doctest::Approx(0.1));
  CHECK(sdf.values[sdf.index(cx, cy + 1, 0)] == doctest::Approx(0.1));
  CHECK(sdf.values[sdf.index(cx + 1, cy + 1, 0)] == doctest::Approx(0.1 * std::sqrt(2.0)));
  CHECK(sdf.values[sdf.index(cx + 3, cy, 0)] == doctest::Approx(0.3));
}

TEST_CASE("degenerate grids saturate at the bounds diagonal") {
  const WorkspaceBounds bounds = square_bounds(1.0);
  const double diagonal = bounds.diagonal();
  const SdfGrid empty = distance_transform(build_occupancy({}, bounds, 0.1));
  for (double v : empty.values) CHECK(v == doctest::Approx(diagonal));

  std::vector<Primitive> wall{HalfSpacePrimitive{Vec3::UnitX(), 2.0}};
  const SdfGrid full = distance_transform(build_occupancy(wall, bounds, 0.1));
  for (double v : full.values) CHECK(v <= 0.0);
  CHECK(*std::min_element(full.values.begin(), full.values.end()) == doctest::Approx(-diagonal));
}

TEST_CASE("interpolation reproduces voxel-center values and is continuous") {
  std::vector<Primitive> primitives;
  primitives.push_back(BoxPrimitive{Vec3(0.4, 0.0, 0.0), Vec3(0.2, 0.3, 0.0)});
  const OccupancyGrid grid = build_occupancy(primitives, square_bounds(1.0), 0.05);
  const SdfGrid sdf = distance_transform(grid);

  for (int y : {3, 10, 17}) {
    for (int x : {2, 9, 19}) {
      const Vec3 c = grid.voxel_center(x, y, 0);
      CHECK(sample_distance(sdf, c).value == doctest::Approx(sdf.values[sdf.index(x, y, 0)]));
    }
  }

  // Continuity across cell faces: approach a face from both sides.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> in_grid(-0.9, 0.9);
  for (int i = 0; i < 200; ++i) {
    const double face_x = std::round(in_grid(rng) / 0.05) * 0.05;
    const Vec3 p(face_x, in_grid(rng), 0.0);
    const double left = sample_distance(sdf, p - Vec3(1e-10, 0, 0)).value;
    const double right = sample_distance(sdf, p + Vec3(1e-10, 0, 0)).value;
    CHECK(std::abs(left - right) < 1e-9);
  }
}

TEST_CASE("points outside the bounds clamp and set the flag") {
  std::vector<Primitive> primitives;
  primitives.push_back(SpherePrimitive{Vec3::Zero(), 0.3});
  const SdfGrid sdf = distance_transform(build_occupancy(primitives, square_bounds(1.0), 0.1));

  const SdfSample inside = sample_distance(sdf, Vec3(0.5, 0.5, 0.0));
  CHECK_FALSE(inside.out_of_bounds);
  const SdfSample outside = sample_distance(sdf, Vec3(3.0, 0.5, 0.0));
  CHECK(outside.out_of_bounds);
  const SdfSample edge = sample_distance(sdf, Vec3(0.95, 0.5, 0.0));
  CHECK(outside.value == doctest::Approx(edge.value).epsilon(0.05));

  CHECK(sample_gradient(sdf, Vec3(3.0, 0.5, 0.0)).out_of_bounds);
  CHECK_FALSE(sample_gradient(sdf, Vec3(0.2, 0.1, 0.0)).out_of_bounds);
}

TEST_CASE("gradient magnitude is near one away from surfaces and edges") {
  std::vector<Primitive> primitives;
  primitives.push_back(SpherePrimitive{Vec3::Zero(), 0.25});
  const double res = 0.02;
  const SdfGrid sdf = distance_transform(build_occupancy(primitives, square_bounds(1.0), res));

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> radius(0.25 + 2.5 * res, 0.85);
  for (int i = 0; i < 300; ++i) {
    const double a = angle(rng);
    const double r = radius(rng);
    const Vec3 p(r * std::cos(a), r * std::sin(a), 0.0);
    if (std::abs(p[0]) > 0.9 || std::abs(p[1]) > 0.9) continue;  // keep off the grid edge
    const GradientSample g = sample_gradient(sdf, p);
    const double magnitude = g.gradient.norm();
    CHECK(magnitude > 0.5);
    CHECK(magnitude < 1.5);
    CHECK(g.gradient[2] == 0.0);
    // The gradient of a sphere's distance field points radially outward.
    CHECK(g.gradient.head<2>().normalized().dot(p.head<2>().normalized()) > 0.9);
  }
}

TEST_CASE("3D distance transform agrees with geometry for a sphere") {
  std::vector<Primitive> primitives;
  primitives.push_back(SpherePrimitive{Vec3::Zero(), 0.3});
  const OccupancyGrid grid = build_occupancy(primitives, square_bounds(0.8, 3), 0.05);
  const SdfGrid sdf = distance_transform(grid);
  CHECK(sdf.dims[2] == 32);

  // At voxel resolution the field should track ||p|| - r within ~2 cells.
  for (const Vec3& p : {Vec3(0.6, 0.0, 0.0), Vec3(0.0, 0.5, 0.3), Vec3(0.4, 0.4, 0.4)}) {
    const double expected = p.norm() - 0.3;
    CHECK(std::abs(sample_distance(sdf, p).value - expected) < 2.0 * 0.05);
  }
}

TEST_CASE("slice extraction matches direct indexing") {
  std::vector<Primitive> primitives;
  primitives.push_back(SpherePrimitive{Vec3(0.1, -0.2, 0.2), 0.3});
  const SdfGrid sdf = distance_transform(build_occupancy(primitives, square_bounds(0.6, 3), 0.1));

  const SdfSlice slice = extract_slice(sdf, 2, 5);
  CHECK(slice.rows == sdf.dims[1]);
  CHECK(slice.cols == sdf.dims[0]);
  for (int y = 0; y < sdf.dims[1]; ++y) {
    for (int x = 0; x < sdf.dims[0]; ++x) {
      CHECK(slice.values[static_cast<std::size_t>(y) * slice.cols + x] ==
            sdf.values[sdf.index(x, y, 5)]);
    }
  }
  CHECK_THROWS_AS(extract_slice(sdf, 2, 99), std::out_of_range);
  CHECK_THROWS_AS(extract_slice(sdf, 3, 0), std::out_of_range);
}
