#pragma once
// Runs the No-Steering / DoM / PDS arms over toy tasks and renders the
// prompt-condition x arm grid.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pds/eval/metrics.hpp"
#include "pds/prototype_set.hpp"
#include "pds/simlab/generation.hpp"
#include "pds/simlab/toy_tasks.hpp"
#include "pds/steering.hpp"

namespace pds::eval {

enum class Arm { none, dom, pds, pds_top1 };

std::string_view to_string(Arm arm);
Arm parse_arm(std::string_view s);

struct ArmResult {
  Arm arm = Arm::none;
  PromptType prompt_type = PromptType::neutral;
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t n = 0;
  double token_mean = 0.0;
  double token_std = 0.0;
  // Relative to the output directory.
  std::string predictions_file;
};

struct PredictionRow {
  std::string example_id;
  std::string prediction;
  std::string gold;
  long long n_tokens = 0;
};

struct ComparisonOptions {
  std::vector<Arm> arms{Arm::none, Arm::dom, Arm::pds, Arm::pds_top1};
  std::vector<PromptType> prompt_types{PromptType::neutral, PromptType::cot, PromptType::anti_cot};
  // Steering strength per prompt type; missing entries use default_alpha.
  std::map<PromptType, double> alpha;
  double default_alpha = 1.0;
  // Defaults to the world's injection layer.
  std::optional<int> layer;
  simlab::GenerationOptions generation{4, 0, 0.0, 0};
  std::uint64_t seed = 0;
  // When set, predictions and reports are written here.
  std::filesystem::path out_dir;
};

struct ComparisonResult {
  std::vector<ArmResult> cells;
  std::map<std::pair<PromptType, Arm>, std::vector<PredictionRow>> predictions;
  std::string report_text;
  std::string report_json;
  std::string cells_csv;
};

// Throws DimensionError before any generation when the prototypes do not
// match the model width.
ComparisonResult run_comparison(const simlab::PlantedTaskWorld& world, std::span<const simlab::ToyTask> tasks,
                                const PrototypeSet& prototypes, const ComparisonOptions& options);

std::string predictions_filename(PromptType prompt, Arm arm);
// JSONL: {example_id, prediction, gold, n_tokens}; gold optional on read.
std::string serialize_predictions(std::span<const PredictionRow> rows);
std::vector<PredictionRow> read_predictions(const std::filesystem::path& path);

// Scores a predictions file against a gold map (example_id -> answer).
// Rows whose id has no gold entry raise DataError.
ArmResult score_predictions(std::span<const PredictionRow> rows, const std::map<std::string, std::string>& gold);

// Grid with rows = prompt condition, columns = arm.
std::string render_grid(std::span<const ArmResult> cells, std::span<const PromptType> prompts,
                        std::span<const Arm> arms);

}  // namespace pds::eval
