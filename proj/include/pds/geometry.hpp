#pragma once
// Geometric diagnostics of a prototype set: pairwise angles, the cone axis
// sum_j mu_j, the DoM vector mean(D), and how the two relate.

#include <span>
#include <string>
#include <vector>

#include "pds/diff_engine.hpp"
#include "pds/prototype_set.hpp"
#include "pds/vector_ops.hpp"

namespace pds {

// Angle in degrees, cosine clamped into [-1, 1]. Both vectors nonzero.
double angle_degrees(VectorView u, VectorView v);

// All a < b in index order. Throws DataError naming a zero-norm prototype.
std::vector<double> pairwise_angles(std::span<const Vector> prototypes);
inline std::vector<double> pairwise_angles(const PrototypeSet& set) {
  return pairwise_angles(set.prototypes);
}

// Unweighted sum of prototypes.
Vector cone_axis(const PrototypeSet& set);

Vector dom_vector(const DifferenceSet& set);
Vector dom_vector(std::span<const Vector> diffs);

inline constexpr double kAxisIdentityTolerance = 1e-6;

struct GeometryReport {
  std::vector<double> pairwise_angles_deg;
  double angle_min = 0.0;
  double angle_max = 0.0;
  double angle_mean = 0.0;
  Vector axis;
  Vector dom;
  double axis_dom_angle_deg = 0.0;
  std::vector<double> prototype_norms;
  double mean_prototype_norm = 0.0;

  // ||(sum n_j mu_j)/N - mean(D)|| / ||mean(D)||; holds at any Lloyd fixed point.
  double weighted_identity_residual = 0.0;
  // ||sum mu_j - k mean(D)|| / ||k mean(D)||; exact only for equal cluster sizes.
  double unweighted_identity_residual = 0.0;
  bool balanced = false;
  // Set when the unweighted identity misses kAxisIdentityTolerance.
  bool unweighted_identity_diverges = false;
};

// Weighted identity (sum n_j mu_j)/N = mean(D), which k-means guarantees, and
// the unweighted sum_j mu_j = k mean(D), which only holds for equal sizes.
// Unlike the angle statistics this accepts zero prototypes.
struct AxisIdentities {
  double weighted_residual = 0.0;
  double unweighted_residual = 0.0;
  bool balanced = false;
  bool unweighted_diverges = false;
};

AxisIdentities check_axis_identities(const PrototypeSet& set, const DifferenceSet& diffs);

// Throws DataError when dimensions disagree or a prototype is zero.
GeometryReport analyze_geometry(const PrototypeSet& set, const DifferenceSet& diffs);

std::string render_geometry_text(const GeometryReport& report);
std::string geometry_to_json(const GeometryReport& report);
// Histogram of pairwise angles, one row per bin: bin_lo,bin_hi,count.
std::string angle_histogram_csv(const GeometryReport& report, double bin_width_deg = 2.0);

}  // namespace pds
