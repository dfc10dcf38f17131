#pragma once
// k-means prototype discovery over a difference set, with elbow selection of k.
//
// All clustering runs in f64. Results are a pure function of
// (D, k, seed, max_iters, tol) and the active kernel table.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pds/diff_engine.hpp"
#include "pds/prototype_set.hpp"

namespace pds {

struct ClusterAssignment {
  std::vector<int> labels;
  // Total within-cluster sum of squares against the returned centroids.
  double inertia = 0.0;
  int iterations = 0;
  bool converged = false;
  // WCSS after each Lloyd update; non-increasing.
  std::vector<double> wcss_history;
};

struct KMeansResult {
  PrototypeSet prototypes;
  ClusterAssignment assignment;
};

// k-means++ seeding followed by Lloyd iterations. Stops once the largest
// centroid shift drops below tol or after max_iters updates. Empty clusters
// are refilled with the point farthest from its current centroid.
// Throws DataError when the set is empty or k is outside [1, N].
KMeansResult kmeans(const DifferenceSet& set, int k, std::uint64_t seed, int max_iters = 300,
                    double tol = 1e-6);

// Best-of-restarts WCSS for each k in [k_min, k_max], then the elbow.
KSelectionRecord select_k(const DifferenceSet& set, int k_min, int k_max, std::uint64_t seed,
                          int restarts, int max_iters = 300, double tol = 1e-6);

// Index of the elbow on a WCSS curve: the interior point farthest from the
// chord joining the endpoints after scaling both axes to [0, 1]. Ties and
// flat curves resolve to index 0.
std::size_t elbow_index(std::span<const int> ks, std::span<const double> wcss);

struct DiscoverOptions {
  int k_min = 1;
  // Defaults to min(12, N - 1).
  std::optional<int> k_max;
  std::uint64_t seed = 0;
  int restarts = 10;
  int max_iters = 300;
  double tol = 1e-6;
};

int default_k_max(std::size_t n);

PrototypeSet discover(const DifferenceSet& set, const DiscoverOptions& options = {});

// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

// Aligned text table: k, wcss, and a marker on the chosen row.
std::string render_k_selection(const KSelectionRecord& record);

}  // namespace pds
