#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>

namespace mpf {

using Vec3 = Eigen::Vector3d;
using Config = Eigen::VectorXd;

// Seeded generator for a named stream. Streams derived from the same seed
// but different tags are independent for all practical purposes.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0,
                                std::uint64_t substream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(substream),
                    static_cast<std::uint32_t>(substream >> 32)};
  return std::mt19937_64(seq);
}

// Uniform sample from the solid ball of the given radius in `dim` dimensions.
inline Eigen::VectorXd uniform_ball(int dim, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(dim);
  double norm2 = 0.0;
  do {
    for (int d = 0; d < dim; ++d) v[d] = gauss(rng);
    norm2 = v.squaredNorm();
  } while (norm2 == 0.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(dim));
  return v * (r / std::sqrt(norm2));
}

}  // namespace mpf
