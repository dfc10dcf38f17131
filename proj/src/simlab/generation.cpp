#include "pds/simlab/generation.hpp"

#include <cstring>
#include <algorithm>
#include <cmath>

#include "pds/errors.hpp"
#include "pds/rng.hpp"

namespace pds::simlab {
namespace {

int pick_token(std::span<const double> logits, const GenerationOptions& options, Rng& rng) {
  if (options.temperature <= 0.0) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
      if (logits[i] > logits[best]) best = i;
    }
    return static_cast<int>(best);
  }
  double max_logit = -INFINITY;
  for (double l : logits) max_logit = std::max(max_logit, l);
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - max_logit) / options.temperature);
    total += p[i];
  }
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < p.size(); ++i) {
    u -= p[i];
    if (u < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

GenerationResult decode(const ToyModel& model, std::span<const int> prompt, const GenerationOptions& options,
                        const SteeringConfig* config, const PrototypeSet* prototypes) {
  if (prompt.empty()) {
    throw DataError("generation needs a nonempty prompt");
  }
  const ToyModelSpec& spec = model.spec();
  if (config != nullptr && (config->layer < 0 || config->layer >= spec.n_layers)) {
    throw DataError("injection layer " + std::to_string(config->layer) + " outside [0, " +
                    std::to_string(spec.n_layers) + ")");
  }
  if (options.max_new < 0) {
    throw DataError("max_new must be >= 0");
  }

  GenerationResult out;
  std::vector<int> seq(prompt.begin(), prompt.end());
  Rng rng(options.sample_seed);

  for (int step = 0; step < options.max_new; ++step) {
    if (seq.size() > static_cast<std::size_t>(spec.max_len)) break;
    const int last = static_cast<int>(seq.size()) - 1;

    ForwardPass pass;
    if (step == 0 && config != nullptr) {
      InjectionRecord rec;
      rec.point.layer = config->layer;
      rec.point.position = last;
      ResidualEdit edit{config->layer, last, [&](std::span<double> h) {
                          rec.pre.assign(h.begin(), h.end());
                          SteeringResult steer = steering_vector(h, *prototypes, config->policy);
                          rec.post = apply_steering(h, steer.vector, config->alpha);
                          rec.diagnostics = std::move(steer.diagnostics);
                          std::copy(rec.post.begin(), rec.post.end(), h.begin());
                        }};
      pass = model.forward(seq, &edit);
      out.log.injection = std::move(rec);
    } else {
      pass = model.forward(seq);
    }

    std::vector<Vector> layers;
    for (int l = 0; l <= spec.n_layers; ++l) {
      const auto r = pass.residual_at(l, last);
      layers.emplace_back(r.begin(), r.end());
    }
    out.log.steps.push_back(std::move(layers));

    const int tok = pick_token(pass.logits_at(last), options, rng);
    out.tokens.push_back(tok);
    seq.push_back(tok);
    if (options.eos_token && tok == *options.eos_token) break;
  }
  return out;
}

bool bit_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace

bool ActivationLog::operator==(const ActivationLog& other) const {
  if (steps.size() != other.steps.size()) return false;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    if (steps[s].size() != other.steps[s].size()) return false;
    for (std::size_t l = 0; l < steps[s].size(); ++l) {
      if (!bit_equal(steps[s][l], other.steps[s][l])) return false;
    }
  }
  return true;
}

GenerationResult generate(const ToyModel& model, std::span<const int> prompt, const GenerationOptions& options) {
  return decode(model, prompt, options, nullptr, nullptr);
}

GenerationResult generate_with_injection(const ToyModel& model, std::span<const int> prompt,
                                         const SteeringConfig& config, const PrototypeSet& prototypes,
                                         const GenerationOptions& options) {
  if (prototypes.dimension() != static_cast<std::size_t>(model.spec().d_model)) {
    throw DimensionError(static_cast<std::size_t>(model.spec().d_model), prototypes.dimension(),
                         "prototypes vs toy model");
  }
  return decode(model, prompt, options, &config, &prototypes);
}

std::vector<ActivationRecord> activation_log_records(const ActivationLog& log, int layer,
                                                     const std::string& id_prefix) {
  std::vector<ActivationRecord> out;
  for (std::size_t s = 0; s < log.steps.size(); ++s) {
    if (layer < 0 || static_cast<std::size_t>(layer) >= log.steps[s].size()) {
      throw DataError("activation log has no layer " + std::to_string(layer));
    }
    ActivationRecord r;
    r.example_id = id_prefix + "/step" + std::to_string(s);
    r.condition = Condition::eval_input;
    r.layer = layer;
    r.vector = log.steps[s][static_cast<std::size_t>(layer)];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pds::simlab
