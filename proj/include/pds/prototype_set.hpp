#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pds/vector_ops.hpp"

namespace pds {

enum class DType { f32, f64 };

std::string_view to_string(DType t);
DType parse_dtype(std::string_view s);

// Rounds each element to the value the dtype can hold.
Vector quantize(VectorView v, DType dtype);

inline constexpr std::string_view kElbowMethod = "elbow-max-chord-distance";

struct KSelectionRecord {
  std::vector<int> candidate_ks;
  std::vector<double> wcss_curve;
  int chosen_k = 1;
  std::string method{kElbowMethod};
  std::vector<std::string> warnings;

  bool operator==(const KSelectionRecord&) const = default;
};

struct DiscoveryParams {
  std::uint64_t seed = 0;
  int max_iters = 300;
  double tol = 1e-6;
  int restarts = 10;
  std::optional<KSelectionRecord> k_selection;

  bool operator==(const DiscoveryParams&) const = default;
};

struct PrototypeSet {
  std::vector<Vector> prototypes;
  std::vector<std::size_t> cluster_sizes;
  int layer = 0;
  DiscoveryParams discovery_params;
  std::string source_trace_hash;
  DType dtype = DType::f64;

  std::size_t k() const { return prototypes.size(); }
  std::size_t dimension() const { return prototypes.empty() ? 0 : prototypes.front().size(); }
  std::size_t total_n() const;

  bool operator==(const PrototypeSet&) const = default;
};

// (sum_j n_j mu_j) / N. Equals mean(D) at any Lloyd fixed point.
Vector weighted_centroid(const PrototypeSet& set);

// ||weighted_centroid - mean(diffs)|| relative to ||mean(diffs)||, with an
// absolute floor scaled by the mean diff norm so an exactly-zero mean is
// judged sensibly.
double weighted_centroid_residual(const PrototypeSet& set, std::span<const Vector> diffs);
inline constexpr double kWeightedCentroidTolerance = 1e-6;

}  // namespace pds
