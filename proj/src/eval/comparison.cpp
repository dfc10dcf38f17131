#include "pds/eval/comparison.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pds/diff_engine.hpp"
#include "pds/errors.hpp"
#include "pds/hash.hpp"
#include "pds/trace_store.hpp"

namespace pds::eval {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Arm arm) {
  switch (arm) {
    case Arm::none:
      return "none";
    case Arm::dom:
      return "dom";
    case Arm::pds:
      return "pds";
    case Arm::pds_top1:
      return "pds_top1";
  }
  return "?";
}

Arm parse_arm(std::string_view s) {
  if (s == "none") return Arm::none;
  if (s == "dom") return Arm::dom;
  if (s == "pds") return Arm::pds;
  if (s == "pds_top1" || s == "top1") return Arm::pds_top1;
  throw UsageError("unknown arm '" + std::string(s) + "'");
}

namespace {

std::string_view arm_title(Arm arm) {
  switch (arm) {
    case Arm::none:
      return "No Steering";
    case Arm::dom:
      return "DoM";
    case Arm::pds:
      return "PDS";
    case Arm::pds_top1:
      return "PDS-top1";
  }
  return "?";
}

std::string_view prompt_title(PromptType p) {
  switch (p) {
    case PromptType::neutral:
      return "Neutral";
    case PromptType::cot:
      return "CoT";
    case PromptType::anti_cot:
      return "Anti-CoT";
  }
  return "?";
}

std::string tasks_digest(std::span<const simlab::ToyTask> tasks) {
  std::string buf;
  for (const simlab::ToyTask& t : tasks) {
    buf += t.example_id + ":";
    for (int tok : t.problem) buf += std::to_string(tok) + ",";
    buf += "=" + t.gold_answer + "\n";
  }
  return sha256_hex(buf);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << text;
  if (!out) {
    throw IoError("write to '" + path.string() + "' failed");
  }
}

}  // namespace

std::string predictions_filename(PromptType prompt, Arm arm) {
  return "predictions/" + std::string(to_string(prompt)) + "__" + std::string(to_string(arm)) + ".jsonl";
}

std::string serialize_predictions(std::span<const PredictionRow> rows) {
  std::string out;
  for (const PredictionRow& r : rows) {
    ordered_json j;
    j["example_id"] = r.example_id;
    j["prediction"] = r.prediction;
    j["gold"] = r.gold;
    j["n_tokens"] = r.n_tokens;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<PredictionRow> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PredictionRow r;
      r.example_id = j.at("example_id").get<std::string>();
      r.prediction = j.at("prediction").get<std::string>();
      if (j.contains("gold")) r.gold = j.at("gold").get<std::string>();
      r.n_tokens = j.at("n_tokens").get<long long>();
      rows.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("bad predictions row: ") + e.what());
    }
  }
  return rows;
}

ArmResult score_predictions(std::span<const PredictionRow> rows, const std::map<std::string, std::string>& gold) {
  std::vector<std::string> preds, golds;
  std::vector<long long> lengths;
  for (const PredictionRow& r : rows) {
    const auto it = gold.find(r.example_id);
    if (it == gold.end()) {
      throw DataError("no gold answer for '" + r.example_id + "'");
    }
    preds.push_back(r.prediction);
    golds.push_back(it->second);
    lengths.push_back(r.n_tokens);
  }
  ArmResult out;
  out.n = rows.size();
  out.correct = count_correct(preds, golds);
  out.accuracy = out.n == 0 ? 0.0 : static_cast<double>(out.correct) / static_cast<double>(out.n);
  if (!lengths.empty()) {
    const TokenStats ts = token_stats(lengths);
    out.token_mean = ts.mean;
    out.token_std = ts.std;
  }
  return out;
}

std::string render_grid(std::span<const ArmResult> cells, std::span<const PromptType> prompts,
                        std::span<const Arm> arms) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-10s", "Prompt");
  out += buf;
  for (Arm a : arms) {
    std::snprintf(buf, sizeof(buf), " | %-22.*s", static_cast<int>(arm_title(a).size()), arm_title(a).data());
    out += buf;
  }
  out += "\n";
  out += std::string(10, '-');
  for (std::size_t i = 0; i < arms.size(); ++i) out += "-+-" + std::string(22, '-');
  out += "\n";
  for (PromptType p : prompts) {
    std::snprintf(buf, sizeof(buf), "%-10.*s", static_cast<int>(prompt_title(p).size()), prompt_title(p).data());
    out += buf;
    for (Arm a : arms) {
      const ArmResult* cell = nullptr;
      for (const ArmResult& c : cells) {
        if (c.arm == a && c.prompt_type == p) cell = &c;
      }
      if (cell == nullptr) {
        std::snprintf(buf, sizeof(buf), " | %-22s", "-");
      } else {
        std::snprintf(buf, sizeof(buf), " | %6.2f%% %6.2f+-%-6.2f", 100.0 * cell->accuracy, cell->token_mean,
                      cell->token_std);
      }
      out += buf;
    }
    out += "\n";
  }
  return out;
}

ComparisonResult run_comparison(const simlab::PlantedTaskWorld& world, std::span<const simlab::ToyTask> tasks,
                                const PrototypeSet& prototypes, const ComparisonOptions& options) {
  const auto d_model = static_cast<std::size_t>(world.model.spec().d_model);
  if (prototypes.dimension() != d_model) {
    throw DimensionError(d_model, prototypes.dimension(), "prototypes vs toy model");
  }
  if (tasks.empty()) {
    throw DataError("comparison needs at least one task");
  }
  const int layer = options.layer.value_or(world.injection_layer);
  if (layer < 0 || layer >= world.model.spec().n_layers) {
    throw DataError("injection layer " + std::to_string(layer) + " outside the toy model");
  }
  const std::string task_hash = tasks_digest(tasks);
  const std::string proto_hash = sha256_hex(serialize_prototypes(prototypes));

  ComparisonResult result;
  for (PromptType p : options.prompt_types) {
    const auto alpha_it = options.alpha.find(p);
    const double alpha = alpha_it == options.alpha.end() ? options.default_alpha : alpha_it->second;
    for (Arm arm : options.arms) {
      std::vector<PredictionRow> rows;
      for (const simlab::ToyTask& task : tasks) {
        const std::vector<int> prompt = simlab::render_prompt(world, task, p);
        simlab::GenerationResult gen;
        if (arm == Arm::none) {
          gen = simlab::generate(world.model, prompt, options.generation);
        } else {
          SteeringConfig cfg;
          cfg.layer = layer;
          cfg.alpha = alpha;
          cfg.policy = arm == Arm::dom      ? Policy::dom_additive
                       : arm == Arm::pds    ? Policy::sum_projections
                                            : Policy::top1_projection;
          gen = simlab::generate_with_injection(world.model, prompt, cfg, prototypes, options.generation);
        }
        PredictionRow row;
        row.example_id = task.example_id;
        row.prediction = gen.tokens.empty() ? std::string() : simlab::token_text(gen.tokens.front());
        row.gold = task.gold_answer;
        long long n = static_cast<long long>(gen.tokens.size());
        if (n > 0 && options.generation.eos_token && gen.tokens.back() == *options.generation.eos_token) --n;
        row.n_tokens = n;
        rows.push_back(std::move(row));
      }
      std::map<std::string, std::string> gold;
      for (const simlab::ToyTask& t : tasks) gold[t.example_id] = t.gold_answer;
      ArmResult cell = score_predictions(rows, gold);
      cell.arm = arm;
      cell.prompt_type = p;
      cell.predictions_file = predictions_filename(p, arm);
      result.cells.push_back(cell);
      result.predictions[{p, arm}] = std::move(rows);
    }
  }

  std::string header;
  header += "tasks           " + std::to_string(tasks.size()) + "  sha256 " + task_hash + "\n";
  header += "prototypes      k=" + std::to_string(prototypes.k()) + "  sha256 " + proto_hash + "\n";
  header += "model           weight_seed " + std::to_string(world.model.spec().weight_seed) + "  layers " +
            std::to_string(world.model.spec().n_layers) + "  d_model " + std::to_string(d_model) + "\n";
  header += "injection       layer " + std::to_string(layer) + "  scope first_output_token\n";
  header += "decoding        " +
            std::string(options.generation.temperature > 0.0 ? "sampled" : "greedy") + "  max_new " +
            std::to_string(options.generation.max_new) + "  seed " + std::to_string(options.seed) + "\n";
  std::string alphas = "alpha          ";
  for (PromptType p : options.prompt_types) {
    const auto it = options.alpha.find(p);
    char buf[64];
    std::snprintf(buf, sizeof(buf), " %s=%g", std::string(to_string(p)).c_str(),
                  it == options.alpha.end() ? options.default_alpha : it->second);
    alphas += buf;
  }
  header += alphas + "\n";
  header += "metric          Accuracy@1 (%)  avg+-std generated tokens (population std)\n\n";
  result.report_text = header + render_grid(result.cells, options.prompt_types, options.arms);

  ordered_json j;
  j["tasks_sha256"] = task_hash;
  j["prototypes_sha256"] = proto_hash;
  j["layer"] = layer;
  j["seed"] = options.seed;
  j["cells"] = ordered_json::array();
  result.cells_csv = "prompt_type,arm,accuracy,correct,n,token_mean,token_std,predictions_file\n";
  for (const ArmResult& c : result.cells) {
    ordered_json cj;
    cj["prompt_type"] = to_string(c.prompt_type);
    cj["arm"] = to_string(c.arm);
    cj["accuracy"] = c.accuracy;
    cj["correct"] = c.correct;
    cj["n"] = c.n;
    cj["token_mean"] = c.token_mean;
    cj["token_std"] = c.token_std;
    cj["predictions_file"] = c.predictions_file;
    j["cells"].push_back(cj);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%zu,%zu,%.17g,%.17g,%s\n", std::string(to_string(c.prompt_type)).c_str(),
                  std::string(to_string(c.arm)).c_str(), c.accuracy, c.correct, c.n, c.token_mean, c.token_std,
                  c.predictions_file.c_str());
    result.cells_csv += buf;
  }
  result.report_json = j.dump(2) + "\n";

  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir / "predictions");
    for (const auto& [key, rows] : result.predictions) {
      write_file(options.out_dir / predictions_filename(key.first, key.second), serialize_predictions(rows));
    }
    write_file(options.out_dir / "report.txt", result.report_text);
    write_file(options.out_dir / "report.json", result.report_json);
    write_file(options.out_dir / "cells.csv", result.cells_csv);
  }
  return result;
}

}  // namespace pds::eval
