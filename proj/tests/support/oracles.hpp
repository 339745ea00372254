#pragma once

// Independent reference implementations used to check the library: brute
// force scans, finite differences, closed-form kinematics, and small
// statistics helpers. Everything here trades speed for obviousness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mpf/sdf_grid.hpp"

namespace oracle {

// Squared distance to the nearest site by scanning the full site list.
inline std::vector<std::int64_t> brute_force_squared_distances(
    const Eigen::Vector3i& dims, const std::vector<std::uint8_t>& sites) {
  struct Cell {
    int x, y, z;
  };
  std::vector<Cell> site_cells;
  for (int z = 0; z < dims[2]; ++z) {
    for (int y = 0; y < dims[1]; ++y) {
      for (int x = 0; x < dims[0]; ++x) {
        if (sites[(static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x]) {
          site_cells.push_back({x, y, z});
        }
      }
    }
  }
  std::vector<std::int64_t> out(sites.size(), mpf::kNoSite);
  if (site_cells.empty()) return out;
  std::size_t i = 0;
  for (int z = 0; z < dims[2]; ++z) {
    for (int y = 0; y < dims[1]; ++y) {
      for (int x = 0; x < dims[0]; ++x, ++i) {
        std::int64_t best = mpf::kNoSite;
        for (const Cell& s : site_cells) {
          const std::int64_t dx = x - s.x;
          const std::int64_t dy = y - s.y;
          const std::int64_t dz = z - s.z;
          best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        out[i] = best;
      }
    }
  }
  return out;
}

// Both solutions of the planar two-link reach problem: configurations whose
// tip (link lengths l1, l2) lands on `target`. Empty when out of reach.
inline std::vector<Eigen::Vector2d> two_link_ik(double l1, double l2,
                                                const Eigen::Vector2d& target) {
  const double d2 = target.squaredNorm();
  const double cos_q2 = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  std::vector<Eigen::Vector2d> solutions;
  if (cos_q2 < -1.0 || cos_q2 > 1.0) return solutions;
  const double base = std::atan2(target[1], target[0]);
  for (double sign : {1.0, -1.0}) {
    const double q2 = sign * std::acos(cos_q2);
    const double q1 = base - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
    solutions.push_back({q1, q2});
  }
  return solutions;
}

// Regularized incomplete beta function by continued fraction (Lentz), good to
// ~1e-10 for the arguments a t-test needs.
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_beta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double front = std::exp(ln_beta + a * std::log(x) + b * std::log1p(-x));
  const bool swap = x > (a + 1.0) / (a + b + 2.0);
  if (swap) return 1.0 - incomplete_beta(b, a, 1.0 - x);

  const double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double result = d;
  for (int m = 1; m <= 300; ++m) {
    const double m_d = static_cast<double>(m);
    double numerator = m_d * (b - m_d) * x / ((a + 2.0 * m_d - 1.0) * (a + 2.0 * m_d));
    d = 1.0 + numerator * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + numerator / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    result *= d * c;
    numerator = -(a + m_d) * (a + b + m_d) * x / ((a + 2.0 * m_d) * (a + 2.0 * m_d + 1.0));
    d = 1.0 + numerator * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + numerator / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    result *= delta;
    if (std::abs(delta - 1.0) < 1e-12) break;
  }
  return front * result / a;
}

// P(T <= t) for Student's t with nu degrees of freedom.
inline double student_t_cdf(double t, double nu) {
  const double x = nu / (nu + t * t);
  const double half_tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, x);
  return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

// One-sided paired t-test p-value for the hypothesis mean(a - b) < 0.
inline double paired_t_pvalue_less(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n < 2 || b.size() != n) return 1.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  if (var == 0.0) return mean < 0.0 ? 0.0 : 1.0;
  const double t = mean / std::sqrt(var / static_cast<double>(n));
  return student_t_cdf(t, static_cast<double>(n - 1));
}

}  // namespace oracle
