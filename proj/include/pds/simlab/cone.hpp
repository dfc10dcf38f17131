#pragma once
// Planted-cone generator: d_i = s (a cos(theta) + u_{z_i} sin(theta)) + eps_i,
// eps_i ~ N(0, sigma^2 I). With orthonormal u_j orthogonal to a, any two
// cluster means meet at arccos(cos^2 theta).

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pds/diff_engine.hpp"
#include "pds/vector_ops.hpp"

namespace pds::simlab {

struct ConeSpec {
  std::size_t dimension = 64;
  // Normalized if not unit (with a warning); empty draws a random unit axis.
  Vector axis;
  std::size_t k_planted = 4;
  double axis_angle_deg = 10.0;
  // One count per planted cluster; empty means 50 each.
  std::vector<std::size_t> cluster_counts;
  double sigma = 0.0;
  double scale = 1.0;
  // Optional explicit strategy directions, made orthonormal to the axis and
  // each other. Empty draws random ones.
  std::vector<Vector> directions;
};

struct ConeDataset {
  DifferenceSet set;
  std::vector<int> labels;
  Vector axis;
  std::vector<Vector> directions;
  // Noise-free cluster centers s (a cos(theta) + u_j sin(theta)).
  std::vector<Vector> planted_means;
  std::vector<std::string> warnings;
};

// Throws DataError unless k_planted >= 1, dimension >= k_planted + 1 and sigma >= 0.
ConeDataset generate_cone_dataset(const ConeSpec& spec, std::uint64_t seed);

double planted_pairwise_angle_deg(double axis_angle_deg);
double axis_angle_for_pairwise_deg(double pairwise_deg);

// Orthonormalizes `vectors` in order after removing components along `against`;
// throws DataError if any becomes degenerate.
std::vector<Vector> orthonormalize(std::vector<Vector> vectors, const std::vector<Vector>& against);

}  // namespace pds::simlab
