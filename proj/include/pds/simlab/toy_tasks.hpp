#pragma once
// Planted-direction classification tasks for the toy decoder.
//
// The task model reserves a small "readout" block of residual coordinates:
// one per answer, a bias coordinate, an EOS coordinate and a few distractor
// coordinates. Blocks and position embeddings are zeroed on those
// coordinates, so at the last prompt position they hold exactly the query
// token's embedding at every layer, and (with no final norm) the answer
// logits are linear in them:
//
//   logit(answer a) = h[answer_a] + B * h[bias] + sum_m D[a][m] * h[distractor_m]
//
// A query token embeds its gold answer with strength s_q on that answer's
// coordinate; the distractor terms make the unsteered model wrong on part of
// the set. Reasoning strategies are planted as the cone
//   mu_a = cos(theta) e_bias + sin(theta) e_answer_a,
// so summed projections amplify exactly the answer coordinate the input
// already leans toward, and the gold margin grows monotonically with alpha.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pds/prototype_set.hpp"
#include "pds/simlab/toy_model.hpp"
#include "pds/steering.hpp"

namespace pds::simlab {

struct TaskLayout {
  int eos_token = 0;
  std::vector<int> answer_tokens;
  int cot_cue = 0;
  int anti_cot_cue = 0;
  std::vector<int> query_tokens;
  // Index into answer_tokens for each query token.
  std::vector<int> query_gold;
  std::vector<double> query_strength;
  std::vector<int> filler_tokens;

  std::vector<int> answer_coords;
  int bias_coord = 0;
  int eos_coord = 0;
  std::vector<int> distractor_coords;
  double bias_weight = 4.0;
};

struct PlantedTaskWorld {
  ToyModel model;
  TaskLayout layout;
  int injection_layer = 2;
  // Unit vectors in residual space.
  Vector reasoning_axis;
  std::vector<Vector> strategy_directions;
};

// 4 layers, d_model 64, 4 heads, vocab 101, no final norm.
ToyModelSpec default_task_model_spec(std::uint64_t weight_seed);

// Throws DataError when the spec cannot host the readout layout.
PlantedTaskWorld build_planted_task_world(std::uint64_t seed);
PlantedTaskWorld build_planted_task_world(const ToyModelSpec& spec, std::uint64_t seed);

// Planted cone prototypes mu_j = scale (cos(theta) axis + sin(theta) u_j), one
// per answer, each with cluster size `per_cluster`.
PrototypeSet matched_prototypes(const PlantedTaskWorld& world, double axis_angle_deg, double scale = 1.0,
                                std::size_t per_cluster = 40);

struct ToyTask {
  std::string example_id;
  // Filler tokens followed by the query token; the query is always last.
  std::vector<int> problem;
  int gold_token = 0;
  std::string gold_answer;
};

// Deterministic in (world, n, seed). Throws DataError for n < 1.
std::vector<ToyTask> make_toy_tasks(const PlantedTaskWorld& world, int n, std::uint64_t seed);

// neutral: problem; cot / anti_cot: the matching cue token, then the problem.
std::vector<int> render_prompt(const PlantedTaskWorld& world, const ToyTask& task, PromptType prompt);

std::string token_text(int token);

}  // namespace pds::simlab
