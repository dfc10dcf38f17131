#include "pds/simlab/toy_tasks.hpp"

#include <cmath>
#include <numbers>

#include "pds/errors.hpp"
#include "pds/rng.hpp"

namespace pds::simlab {
namespace {

constexpr int kAnswers = 5;
constexpr int kDistractors = 4;
constexpr int kQueries = 48;
constexpr double kEosWeight = 10.0;
constexpr double kDistractorScale = 0.6;

Vector unit(std::size_t d, int coord) {
  Vector v(d, 0.0);
  v[static_cast<std::size_t>(coord)] = 1.0;
  return v;
}

}  // namespace

ToyModelSpec default_task_model_spec(std::uint64_t weight_seed) {
  ToyModelSpec spec;
  spec.n_layers = 4;
  spec.d_model = 64;
  spec.n_heads = 4;
  spec.vocab_size = 101;
  spec.max_len = 64;
  spec.final_norm = false;
  spec.weight_seed = weight_seed;
  return spec;
}

PlantedTaskWorld build_planted_task_world(std::uint64_t seed) {
  return build_planted_task_world(default_task_model_spec(mix_seed(seed, 0)), seed);
}

PlantedTaskWorld build_planted_task_world(const ToyModelSpec& spec, std::uint64_t seed) {
  validate(spec);
  const int readout = kAnswers + 2 + kDistractors;
  const int reserved_tokens = 1 + kAnswers + 2 + kQueries;
  if (spec.d_model <= readout || spec.vocab_size <= reserved_tokens + 4 || spec.final_norm ||
      spec.n_layers < 2) {
    throw DataError("toy model spec too small for the planted task layout (or final_norm set)");
  }
  const auto d = static_cast<std::size_t>(spec.d_model);

  TaskLayout lay;
  lay.eos_token = 0;
  for (int a = 0; a < kAnswers; ++a) lay.answer_tokens.push_back(1 + a);
  lay.cot_cue = 1 + kAnswers;
  lay.anti_cot_cue = 2 + kAnswers;
  for (int q = 0; q < kQueries; ++q) lay.query_tokens.push_back(3 + kAnswers + q);
  for (int t = reserved_tokens; t < spec.vocab_size; ++t) lay.filler_tokens.push_back(t);
  for (int a = 0; a < kAnswers; ++a) lay.answer_coords.push_back(a);
  lay.bias_coord = kAnswers;
  lay.eos_coord = kAnswers + 1;
  for (int m = 0; m < kDistractors; ++m) lay.distractor_coords.push_back(kAnswers + 2 + m);

  ToyWeights w = random_weights(spec);
  Rng rng(mix_seed(seed, 1));

  // Confine every block write and the position embedding to the complement
  // of the readout block.
  for (BlockWeights& b : w.blocks) {
    for (int c = 0; c < readout; ++c) {
      const auto r = static_cast<std::size_t>(c);
      for (double& x : b.wo.row(r)) x = 0.0;
      for (double& x : b.w2.row(r)) x = 0.0;
      b.b2[r] = 0.0;
    }
  }
  for (std::size_t p = 0; p < w.position_embedding.rows(); ++p) {
    for (int c = 0; c < readout; ++c) w.position_embedding.at(p, static_cast<std::size_t>(c)) = 0.0;
  }
  for (std::size_t t = 0; t < w.token_embedding.rows(); ++t) {
    for (int c = 0; c < readout; ++c) w.token_embedding.at(t, static_cast<std::size_t>(c)) = 0.0;
  }

  for (std::size_t q = 0; q < lay.query_tokens.size(); ++q) {
    const auto tok = static_cast<std::size_t>(lay.query_tokens[q]);
    const int gold = static_cast<int>(rng.below(kAnswers));
    const double strength = 0.05 + 1.45 * rng.uniform();
    lay.query_gold.push_back(gold);
    lay.query_strength.push_back(strength);
    w.token_embedding.at(tok, static_cast<std::size_t>(lay.bias_coord)) = 1.0;
    w.token_embedding.at(tok, static_cast<std::size_t>(lay.answer_coords[static_cast<std::size_t>(gold)])) = strength;
    for (int c : lay.distractor_coords) {
      w.token_embedding.at(tok, static_cast<std::size_t>(c)) = rng.normal();
    }
  }
  for (int a : lay.answer_tokens) {
    w.token_embedding.at(static_cast<std::size_t>(a), static_cast<std::size_t>(lay.eos_coord)) = 1.0;
  }

  for (std::size_t t = 0; t < w.unembedding.rows(); ++t) {
    for (double& x : w.unembedding.row(t)) x = 0.0;
  }
  for (int a = 0; a < kAnswers; ++a) {
    const auto row = static_cast<std::size_t>(lay.answer_tokens[static_cast<std::size_t>(a)]);
    w.unembedding.at(row, static_cast<std::size_t>(lay.answer_coords[static_cast<std::size_t>(a)])) = 1.0;
    w.unembedding.at(row, static_cast<std::size_t>(lay.bias_coord)) = lay.bias_weight;
    for (int c : lay.distractor_coords) {
      w.unembedding.at(row, static_cast<std::size_t>(c)) = kDistractorScale * rng.normal();
    }
  }
  w.unembedding.at(static_cast<std::size_t>(lay.eos_token), static_cast<std::size_t>(lay.eos_coord)) = kEosWeight;

  PlantedTaskWorld world{ToyModel(spec, std::move(w)), std::move(lay), spec.n_layers / 2, {}, {}};
  world.reasoning_axis = unit(d, world.layout.bias_coord);
  for (int c : world.layout.answer_coords) {
    world.strategy_directions.push_back(unit(d, c));
  }
  return world;
}

PrototypeSet matched_prototypes(const PlantedTaskWorld& world, double axis_angle_deg, double scale,
                                std::size_t per_cluster) {
  const double rad = axis_angle_deg * std::numbers::pi / 180.0;
  PrototypeSet set;
  for (const Vector& u : world.strategy_directions) {
    Vector mu(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      mu[i] = scale * (std::cos(rad) * world.reasoning_axis[i] + std::sin(rad) * u[i]);
    }
    set.prototypes.push_back(std::move(mu));
    set.cluster_sizes.push_back(per_cluster);
  }
  set.layer = world.injection_layer;
  set.source_trace_hash = "planted";
  return set;
}

std::vector<ToyTask> make_toy_tasks(const PlantedTaskWorld& world, int n, std::uint64_t seed) {
  if (n < 1) {
    throw DataError("make_toy_tasks needs n >= 1");
  }
  const TaskLayout& lay = world.layout;
  Rng rng(mix_seed(seed, 2));
  std::vector<ToyTask> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ToyTask task;
    task.example_id = "toy-" + std::to_string(i);
    const auto fillers = 3 + rng.below(6);
    for (std::uint64_t f = 0; f < fillers; ++f) {
      task.problem.push_back(lay.filler_tokens[rng.below(lay.filler_tokens.size())]);
    }
    const auto q = rng.below(lay.query_tokens.size());
    task.problem.push_back(lay.query_tokens[q]);
    task.gold_token = lay.answer_tokens[static_cast<std::size_t>(lay.query_gold[q])];
    task.gold_answer = token_text(task.gold_token);
    out.push_back(std::move(task));
  }
  return out;
}

std::vector<int> render_prompt(const PlantedTaskWorld& world, const ToyTask& task, PromptType prompt) {
  std::vector<int> out;
  switch (prompt) {
    case PromptType::neutral:
      break;
    case PromptType::cot:
      out.push_back(world.layout.cot_cue);
      break;
    case PromptType::anti_cot:
      out.push_back(world.layout.anti_cot_cue);
      break;
  }
  out.insert(out.end(), task.problem.begin(), task.problem.end());
  return out;
}

std::string token_text(int token) { return std::to_string(token); }

}  // namespace pds::simlab
