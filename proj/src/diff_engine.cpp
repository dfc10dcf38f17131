#include "pds/diff_engine.hpp"

#include <cmath>
#include <optional>
#include <unordered_map>

#include "pds/errors.hpp"
#include "pds/hash.hpp"

namespace pds {

Vector compute_difference(VectorView cot, VectorView neutral) {
  if (cot.size() != neutral.size()) {
    throw DimensionError(cot.size(), neutral.size(), "compute_difference");
  }
  return subtract(cot, neutral);
}

NormStats norm_statistics(std::span<const Vector> vectors) {
  if (vectors.empty()) {
    throw DataError("norm statistics of an empty set");
  }
  std::vector<double> norms;
  norms.reserve(vectors.size());
  for (const Vector& v : vectors) {
    norms.push_back(norm(v));
  }
  const double n = static_cast<double>(norms.size());
  double mean = 0.0;
  for (double x : norms) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : norms) var += (x - mean) * (x - mean);
  var /= n;
  return {mean, std::sqrt(var)};
}

std::string PairingReport::render() const {
  std::string out;
  for (const std::string& id : orphan_ids) {
    out += id;
    out.push_back('\n');
  }
  return out;
}

DifferenceBuild build_difference_set(std::span<const ActivationRecord> records,
                                     double min_diff_norm) {
  struct Slot {
    const ActivationRecord* cot = nullptr;
    const ActivationRecord* neutral = nullptr;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Slot> slots;
  std::vector<std::string> duplicates;
  std::optional<int> layer;
  std::size_t ignored = 0;

  for (const ActivationRecord& r : records) {
    if (r.condition == Condition::eval_input) {
      ++ignored;
      continue;
    }
    if (layer && *layer != r.layer) {
      throw DataError("records span layers " + std::to_string(*layer) + " and " +
                      std::to_string(r.layer) + "; one layer per difference set");
    }
    layer = r.layer;
    auto [it, inserted] = slots.try_emplace(r.example_id);
    if (inserted) {
      order.push_back(r.example_id);
    }
    const ActivationRecord*& slot = r.condition == Condition::cot ? it->second.cot : it->second.neutral;
    if (slot != nullptr) {
      duplicates.push_back(r.example_id + "/" + std::string(to_string(r.condition)));
    }
    slot = &r;
  }
  if (!duplicates.empty()) {
    std::string msg = "ambiguous pairing, duplicate (example_id, condition):";
    for (const std::string& d : duplicates) {
      msg += " " + d;
    }
    throw DataError(msg);
  }

  DifferenceBuild out;
  out.report.eval_input_ignored = ignored;
  out.set.layer = layer.value_or(0);
  for (const std::string& id : order) {
    const Slot& s = slots.at(id);
    if (s.cot == nullptr || s.neutral == nullptr) {
      out.report.orphan_ids.push_back(id);
      continue;
    }
    Vector d = compute_difference(s.cot->vector, s.neutral->vector);
    if (min_diff_norm > 0.0 && norm(d) < min_diff_norm) {
      out.report.filtered_ids.push_back(id);
      continue;
    }
    if (!out.set.diffs.empty() && d.size() != out.set.dimension()) {
      throw DimensionError(out.set.dimension(), d.size(), "difference for '" + id + "'");
    }
    out.set.diffs.push_back(std::move(d));
    out.set.example_ids.push_back(id);
  }
  if (out.set.diffs.empty()) {
    throw DataError("no complete cot/neutral pairs (" + std::to_string(out.report.orphan_ids.size()) +
                    " orphans, " + std::to_string(out.report.filtered_ids.size()) + " filtered)");
  }
  out.set.norm_stats = norm_statistics(out.set.diffs);
  return out;
}

DifferenceSet make_difference_set(std::vector<Vector> diffs, int layer) {
  if (diffs.empty()) {
    throw DataError("difference set must contain at least one vector");
  }
  DifferenceSet set;
  const std::size_t d = diffs.front().size();
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    require_dimension(diffs[i], d, "make_difference_set");
    set.example_ids.push_back("d" + std::to_string(i));
  }
  set.diffs = std::move(diffs);
  set.layer = layer;
  set.norm_stats = norm_statistics(set.diffs);
  return set;
}

std::string difference_set_digest(const DifferenceSet& set) {
  std::string buf;
  for (std::size_t i = 0; i < set.size(); ++i) {
    buf += set.example_ids.size() > i ? set.example_ids[i] : std::string();
    buf.push_back(':');
    for (double x : set.diffs[i]) {
      append_number(buf, x, DType::f64);
      buf.push_back(',');
    }
    buf.push_back('\n');
  }
  return sha256_hex(buf);
}

}  // namespace pds
