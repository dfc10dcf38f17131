#pragma once
// Pairs CoT and neutral activations by example_id and forms d_i = cot - neutral.

#include <span>
#include <string>
#include <vector>

#include "pds/trace_store.hpp"
#include "pds/vector_ops.hpp"

namespace pds {

struct NormStats {
  double mean_norm = 0.0;
  // Population standard deviation.
  double std_norm = 0.0;
};

struct DifferenceSet {
  std::vector<Vector> diffs;
  std::vector<std::string> example_ids;
  int layer = 0;
  NormStats norm_stats;
  // Digest of whatever the set was built from; empty for ad hoc sets.
  std::string source_hash;

  std::size_t size() const { return diffs.size(); }
  std::size_t dimension() const { return diffs.empty() ? 0 : diffs.front().size(); }
};

struct PairingReport {
  // Ids with a cot record but no neutral one, or the reverse.
  std::vector<std::string> orphan_ids;
  // Ids dropped by the min-norm filter.
  std::vector<std::string> filtered_ids;
  std::size_t eval_input_ignored = 0;

  // One orphan id per line.
  std::string render() const;
};

struct DifferenceBuild {
  DifferenceSet set;
  PairingReport report;
};

Vector compute_difference(VectorView cot, VectorView neutral);

// Throws DataError on duplicate (example_id, condition) pairs, on mixed
// layers, and when no complete pair survives. Diffs with norm below
// min_diff_norm are dropped and reported.
DifferenceBuild build_difference_set(std::span<const ActivationRecord> records,
                                     double min_diff_norm = 0.0);

NormStats norm_statistics(std::span<const Vector> vectors);
inline NormStats norm_statistics(const DifferenceSet& set) { return norm_statistics(set.diffs); }

// Builds a set from bare vectors (synthetic data, tests); ids are "d<i>".
DifferenceSet make_difference_set(std::vector<Vector> diffs, int layer = 0);

// Stable digest of ids and values, used as source_trace_hash for in-memory sets.
std::string difference_set_digest(const DifferenceSet& set);

}  // namespace pds
