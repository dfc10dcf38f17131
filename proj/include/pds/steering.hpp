#pragma once
// Input-specific steering vectors built from a prototype set, the DoM
// baseline, and the shipped per-dataset intervention settings.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pds/prototype_set.hpp"
#include "pds/vector_ops.hpp"

namespace pds {

enum class Policy {
  sum_projections,  // sum_j proj_{mu_j}(h); the default
  top1_projection,  // proj onto the prototype with the largest |cos(h, mu_j)|
  dom_additive,     // the stored mean difference, independent of h
};

std::string_view to_string(Policy p);
// Accepts the enum names and the CLI spellings pds / top1 / dom.
Policy parse_policy(std::string_view s);

enum class PromptType { neutral, cot, anti_cot };

std::string_view to_string(PromptType p);
PromptType parse_prompt_type(std::string_view s);

struct SteeringConfig {
  int layer = 0;
  double alpha = 1.0;
  Policy policy = Policy::sum_projections;
  std::string scope = "first_output_token";
  std::string prototype_source;
};

struct SteeringDiagnostics {
  Policy policy = Policy::sum_projections;
  // c_j = (h . mu_j) / (mu_j . mu_j); empty for dom_additive.
  std::vector<double> coefficients;
  std::optional<std::size_t> selected;
  double steer_norm = 0.0;
  double input_norm = 0.0;
};

struct SteeringResult {
  Vector vector;
  SteeringDiagnostics diagnostics;
};

double projection_coefficient(VectorView h, VectorView mu);
// ((h . mu) / (mu . mu)) mu. Throws DataError for a zero mu.
Vector project(VectorView h, VectorView mu);

// Throws DataError on an empty set, a zero prototype, or a dimension mismatch.
SteeringResult steering_vector(VectorView h, const PrototypeSet& prototypes, Policy policy);

// h + alpha v. alpha == 0 returns h unchanged bit for bit.
Vector apply_steering(VectorView h, VectorView v, double alpha);

// Per-(dataset, prompt type) intervention layer and strength.
class ConfigTable {
 public:
  struct Row {
    std::optional<int> layer;
    std::optional<double> alpha;
  };

  // GSM8K, AQuA-RAT and BIG-Bench rows.
  static ConfigTable defaults();

  void set(std::string_view dataset, PromptType prompt, int layer, double alpha);

  // Lines of `<dataset>.<prompt_type>.<layer|alpha>=<value>`; '#' starts a
  // comment. Throws UsageError on malformed lines.
  void apply_overrides(std::string_view text);
  void apply_overrides_file(const std::filesystem::path& path);

  // Throws DataError listing known datasets when the row is missing or incomplete.
  SteeringConfig lookup(std::string_view dataset, PromptType prompt) const;

  std::vector<std::string> datasets() const;

 private:
  struct Entry {
    std::string display_name;
    std::map<PromptType, Row> rows;
  };
  Entry& entry(std::string_view dataset);
  std::map<std::string, Entry> entries_;  // keyed by lowercase name
};

SteeringConfig config_lookup(std::string_view dataset, PromptType prompt,
                             const ConfigTable& table = ConfigTable::defaults());

}  // namespace pds
