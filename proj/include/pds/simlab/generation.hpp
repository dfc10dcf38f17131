#pragma once
// Autoregressive decoding on the toy model, optionally steering the residual
// stream at (config.layer, last prompt position) during the first decode step.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pds/prototype_set.hpp"
#include "pds/simlab/toy_model.hpp"
#include "pds/steering.hpp"
#include "pds/trace_store.hpp"

namespace pds::simlab {

struct GenerationOptions {
  int max_new = 8;
  std::optional<int> eos_token;
  // 0 means greedy (ties to the lowest token id).
  double temperature = 0.0;
  std::uint64_t sample_seed = 0;
};

struct InjectionPoint {
  int layer = 0;
  // Last prompt token.
  int position = 0;
  std::string step = "first_decode_step";
};

struct InjectionRecord {
  InjectionPoint point;
  Vector pre;
  Vector post;
  SteeringDiagnostics diagnostics;
};

struct ActivationLog {
  // steps[s][l]: residual entering block l (l == n_layers: final stream) at
  // the position that produced token s.
  std::vector<std::vector<Vector>> steps;
  std::optional<InjectionRecord> injection;

  bool operator==(const ActivationLog& other) const;
};

struct GenerationResult {
  // Generated tokens only; an EOS token, when hit, is included.
  std::vector<int> tokens;
  ActivationLog log;
};

// Plain decoding with no intervention.
GenerationResult generate(const ToyModel& model, std::span<const int> prompt,
                          const GenerationOptions& options);

// Throws DataError on an empty prompt or config.layer outside [0, n_layers).
GenerationResult generate_with_injection(const ToyModel& model, std::span<const int> prompt,
                                         const SteeringConfig& config, const PrototypeSet& prototypes,
                                         const GenerationOptions& options);

// One eval_input record per decode step with the residual at `layer`.
std::vector<ActivationRecord> activation_log_records(const ActivationLog& log, int layer,
                                                     const std::string& id_prefix);

}  // namespace pds::simlab
