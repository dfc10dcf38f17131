// pds: command-line front end for prototype-based dynamic steering.
//
// Exit codes: 0 success, 2 usage error, 3 data/format error, 4 internal
// invariant failure.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pds/diff_engine.hpp"
#include "pds/errors.hpp"
#include "pds/eval/comparison.hpp"
#include "pds/geometry.hpp"
#include "pds/hash.hpp"
#include "pds/prototype_discovery.hpp"
#include "pds/rng.hpp"
#include "pds/simlab/cone.hpp"
#include "pds/simlab/toy_tasks.hpp"
#include "pds/steering.hpp"
#include "pds/trace_store.hpp"

namespace fs = std::filesystem;
using namespace pds;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_dir = ".";
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

fs::path in_out_dir(const GlobalOptions& g, const std::string& explicit_path, const char* fallback) {
  if (!explicit_path.empty()) return explicit_path;
  return fs::path(g.out_dir) / fallback;
}

ConfigTable load_config(const GlobalOptions& g) {
  ConfigTable table = ConfigTable::defaults();
  if (!g.config_path.empty()) table.apply_overrides_file(g.config_path);
  return table;
}

// A paired trace (cot + neutral) or a diff file written by collect-diffs.
DifferenceSet load_difference_set(const std::string& trace_path, const std::string& diffs_path,
                                  double min_diff_norm, PairingReport* report = nullptr) {
  if (trace_path.empty() == diffs_path.empty()) {
    throw UsageError("give exactly one of --trace or --diffs");
  }
  if (!trace_path.empty()) {
    const Trace trace = read_trace(trace_path);
    DifferenceBuild build = build_difference_set(trace.records, min_diff_norm);
    build.set.source_hash = sha256_file(trace_path);
    if (report != nullptr) *report = build.report;
    return std::move(build.set);
  }
  const Trace trace = read_trace(diffs_path);
  std::vector<Vector> diffs;
  std::vector<std::string> ids;
  for (const ActivationRecord& r : trace.records) {
    if (min_diff_norm > 0.0 && norm(r.vector) < min_diff_norm) continue;
    diffs.push_back(r.vector);
    ids.push_back(r.example_id);
  }
  if (diffs.empty()) throw DataError("diff file holds no usable vectors");
  DifferenceSet set = make_difference_set(std::move(diffs), trace.header.layer);
  set.example_ids = std::move(ids);
  set.source_hash = sha256_file(diffs_path);
  return set;
}

void write_diff_file(const DifferenceSet& set, const TraceHeader& like, const fs::path& path) {
  TraceHeader h = like;
  h.layer = set.layer;
  h.dimension = set.dimension();
  h.dtype = DType::f64;
  std::vector<ActivationRecord> records;
  for (std::size_t i = 0; i < set.size(); ++i) {
    ActivationRecord r;
    r.example_id = set.example_ids[i];
    r.condition = Condition::eval_input;
    r.layer = set.layer;
    r.vector = set.diffs[i];
    records.push_back(std::move(r));
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_trace(h, records, path);
}

nlohmann::ordered_json diagnostics_json(const std::string& id, const SteeringDiagnostics& d) {
  nlohmann::ordered_json j;
  j["example_id"] = id;
  j["policy"] = to_string(d.policy);
  j["coefficients"] = d.coefficients;
  if (d.selected) {
    j["selected"] = *d.selected;
  } else {
    j["selected"] = nullptr;
  }
  j["steer_norm"] = d.steer_norm;
  j["input_norm"] = d.input_norm;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prototype-based dynamic steering toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for every randomized step");
  app.add_option("--config", g.config_path, "key=value overrides for the steering table");
  app.add_option("--out-dir", g.out_dir, "Directory for default outputs");

  // collect-diffs
  auto* collect = app.add_subcommand("collect-diffs", "Pair cot/neutral records and form difference vectors");
  std::string c_trace, c_out, c_report;
  double min_diff_norm = 0.0;
  collect->add_option("--trace", c_trace, "Paired activation trace")->required();
  collect->add_option("--out", c_out, "Diff file (default <out-dir>/diffs.jsonl)");
  collect->add_option("--report", c_report, "Orphan report (default <out-dir>/pairing_report.txt)");
  collect->add_option("--min-diff-norm", min_diff_norm, "Drop diffs with a smaller norm");

  // discover
  auto* disc = app.add_subcommand("discover", "Cluster differences into prototypes");
  std::string d_trace, d_diffs, d_out;
  DiscoverOptions dopt;
  int d_kmax = 0, d_fixed_k = 0;
  disc->add_option("--trace", d_trace, "Paired activation trace");
  disc->add_option("--diffs", d_diffs, "Diff file from collect-diffs");
  disc->add_option("--out", d_out, "Prototype file (default <out-dir>/prototypes.json)");
  disc->add_option("--k-min", dopt.k_min, "Smallest candidate k")->check(CLI::PositiveNumber);
  disc->add_option("--k-max", d_kmax, "Largest candidate k (default min(12, N-1))");
  disc->add_option("--k", d_fixed_k, "Skip elbow selection and use this k");
  disc->add_option("--restarts", dopt.restarts, "Seeded runs per k")->check(CLI::PositiveNumber);
  disc->add_option("--max-iters", dopt.max_iters, "Lloyd iteration cap")->check(CLI::PositiveNumber);
  disc->add_option("--tol", dopt.tol, "Centroid-shift stopping tolerance")->check(CLI::PositiveNumber);
  disc->add_option("--min-diff-norm", min_diff_norm, "Drop diffs with a smaller norm");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Geometry report for a prototype set");
  std::string a_protos, a_trace, a_diffs;
  double bin_width = 2.0;
  analyze->add_option("--prototypes", a_protos, "Prototype file")->required();
  analyze->add_option("--trace", a_trace, "Paired activation trace the prototypes came from");
  analyze->add_option("--diffs", a_diffs, "Diff file the prototypes came from");
  analyze->add_option("--bin-width", bin_width, "Angle histogram bin width in degrees");

  // steer
  auto* steer = app.add_subcommand("steer", "Apply steering to captured input activations");
  std::string s_protos, s_input, s_out, s_policy = "pds", s_dataset, s_prompt = "neutral", s_diag;
  std::optional<double> s_alpha;
  steer->add_option("--prototypes", s_protos, "Prototype file")->required();
  steer->add_option("--input-trace", s_input, "Trace of eval_input activations")->required();
  steer->add_option("--alpha", s_alpha, "Steering strength");
  steer->add_option("--dataset", s_dataset, "Take alpha from the steering table");
  steer->add_option("--prompt-type", s_prompt, "neutral, cot or anti_cot (with --dataset)");
  steer->add_option("--policy", s_policy, "pds, top1 or dom");
  steer->add_option("--out", s_out, "Steered trace")->required();
  steer->add_option("--diagnostics", s_diag, "Diagnostics JSONL (default <out>.diagnostics.jsonl)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a planted-cone dataset with ground truth");
  std::size_t y_dim = 64, y_k = 4, y_per = 50;
  double y_pair = 15.0, y_sigma = 0.02, y_scale = 1.0;
  std::optional<double> y_axis_angle;
  synth->add_option("--dimension", y_dim, "Vector dimension");
  synth->add_option("--k", y_k, "Planted clusters");
  synth->add_option("--per-cluster", y_per, "Points per cluster");
  synth->add_option("--pairwise-angle", y_pair, "Planted angle between cluster means (deg)");
  synth->add_option("--axis-angle", y_axis_angle, "Angle of each strategy from the axis (deg)");
  synth->add_option("--sigma", y_sigma, "Noise standard deviation as a fraction of --scale");
  synth->add_option("--scale", y_scale, "Magnitude s");

  // eval
  auto* ev = app.add_subcommand("eval", "Comparison grid: no steering vs DoM vs PDS");
  int e_n = 200, e_max_new = 4;
  double e_alpha = 8.0, e_pair = 30.0;
  std::string e_protos, e_arms = "none,dom,pds,pds_top1", e_pred_dir, e_gold;
  ev->add_option("--n", e_n, "Toy tasks")->check(CLI::PositiveNumber);
  ev->add_option("--alpha", e_alpha, "Steering strength for every prompt type");
  ev->add_option("--prototypes", e_protos, "Prototype file (default: the planted cone)");
  ev->add_option("--planted-angle", e_pair, "Pairwise angle of the planted cone (deg)");
  ev->add_option("--arms", e_arms, "Comma-separated arms");
  ev->add_option("--max-new", e_max_new, "Decode budget")->check(CLI::PositiveNumber);
  ev->add_option("--predictions-dir", e_pred_dir, "Score <prompt>__<arm>.jsonl files instead of running toys");
  ev->add_option("--gold", e_gold, "Gold JSONL {example_id, answer} for --predictions-dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*collect) {
      const Trace trace = read_trace(c_trace);
      DifferenceBuild build = build_difference_set(trace.records, min_diff_norm);
      build.set.source_hash = sha256_file(c_trace);
      const fs::path out = in_out_dir(g, c_out, "diffs.jsonl");
      const fs::path report = in_out_dir(g, c_report, "pairing_report.txt");
      write_diff_file(build.set, trace.header, out);
      write_text(report, build.report.render());
      std::printf("pairs            %zu\n", build.set.size());
      std::printf("orphans          %zu\n", build.report.orphan_ids.size());
      std::printf("filtered         %zu\n", build.report.filtered_ids.size());
      std::printf("mean |d|         %.6f\n", build.set.norm_stats.mean_norm);
      std::printf("std |d| (pop.)   %.6f\n", build.set.norm_stats.std_norm);
      std::printf("diffs            %s\n", out.string().c_str());
      return 0;
    }

    if (*disc) {
      const DifferenceSet set = load_difference_set(d_trace, d_diffs, min_diff_norm);
      dopt.seed = g.seed;
      if (d_kmax > 0) dopt.k_max = d_kmax;
      if (d_fixed_k > 0) dopt.k_min = dopt.k_max.emplace(d_fixed_k);
      const PrototypeSet protos = discover(set, dopt);
      const fs::path out = in_out_dir(g, d_out, "prototypes.json");
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      write_prototypes(protos, out);
      if (protos.discovery_params.k_selection) {
        const std::string table = render_k_selection(*protos.discovery_params.k_selection);
        write_text(fs::path(g.out_dir) / "k_selection.txt", table);
        std::fputs(table.c_str(), stdout);
      }
      std::printf("k                %zu\n", protos.k());
      std::printf("prototypes       %s\n", out.string().c_str());
      return 0;
    }

    if (*analyze) {
      const DifferenceSet set = load_difference_set(a_trace, a_diffs, 0.0);
      const PrototypeSet protos = read_prototypes(a_protos, set.diffs);
      const GeometryReport report = analyze_geometry(protos, set);
      std::fputs(render_geometry_text(report).c_str(), stdout);
      write_text(fs::path(g.out_dir) / "geometry.json", geometry_to_json(report));
      write_text(fs::path(g.out_dir) / "angle_histogram.csv", angle_histogram_csv(report, bin_width));
      return 0;
    }

    if (*steer) {
      const PrototypeSet protos = read_prototypes(s_protos);
      const Policy policy = parse_policy(s_policy);
      double alpha = 1.0;
      if (s_alpha) {
        alpha = *s_alpha;
      } else if (!s_dataset.empty()) {
        alpha = config_lookup(s_dataset, parse_prompt_type(s_prompt), load_config(g)).alpha;
      } else {
        throw UsageError("give --alpha or --dataset");
      }
      if (alpha < 0.0) throw UsageError("--alpha must be >= 0");

      const Trace input = read_trace(s_input);
      if (input.header.dimension != protos.dimension()) {
        throw DimensionError(protos.dimension(), input.header.dimension, "input trace vs prototypes");
      }
      std::vector<ActivationRecord> steered;
      std::string diag;
      for (const ActivationRecord& r : input.records) {
        if (r.condition != Condition::eval_input) continue;
        const SteeringResult s = steering_vector(r.vector, protos, policy);
        ActivationRecord out = r;
        out.vector = apply_steering(r.vector, s.vector, alpha);
        steered.push_back(std::move(out));
        diag += diagnostics_json(r.example_id, s.diagnostics).dump() + "\n";
      }
      if (steered.empty()) throw DataError("input trace has no eval_input records");
      TraceHeader h = input.header;
      h.dtype = DType::f64;
      write_trace(h, steered, s_out);
      write_text(s_diag.empty() ? s_out + ".diagnostics.jsonl" : s_diag, diag);
      std::printf("steered          %zu records (alpha %g, policy %s)\n", steered.size(), alpha,
                  std::string(to_string(policy)).c_str());
      return 0;
    }

    if (*synth) {
      simlab::ConeSpec spec;
      spec.dimension = y_dim;
      spec.k_planted = y_k;
      spec.axis_angle_deg = y_axis_angle ? *y_axis_angle : simlab::axis_angle_for_pairwise_deg(y_pair);
      spec.cluster_counts.assign(y_k, y_per);
      spec.scale = y_scale;
      spec.sigma = y_sigma * y_scale;
      const simlab::ConeDataset data = simlab::generate_cone_dataset(spec, g.seed);

      // Neutral activations are arbitrary; cot = neutral + d_i.
      Rng rng(mix_seed(g.seed, 99));
      TraceHeader h;
      h.dimension = y_dim;
      h.layer = 0;
      h.model_id = "synthetic-cone";
      h.dtype = DType::f64;
      h.created_utc = "1970-01-01T00:00:00Z";
      std::vector<ActivationRecord> records;
      for (std::size_t i = 0; i < data.set.size(); ++i) {
        Vector base(y_dim);
        for (double& x : base) x = rng.normal();
        ActivationRecord neutral{data.set.example_ids[i], Condition::neutral, 0, base, "", ""};
        ActivationRecord cot{data.set.example_ids[i], Condition::cot, 0, add(base, data.set.diffs[i]), "", ""};
        records.push_back(std::move(cot));
        records.push_back(std::move(neutral));
      }
      const fs::path dir = g.out_dir;
      fs::create_directories(dir);
      write_trace(h, records, dir / "synth_trace.jsonl");
      write_diff_file(data.set, h, dir / "synth_diffs.jsonl");
      nlohmann::ordered_json gt;
      gt["seed"] = g.seed;
      gt["axis_angle_deg"] = spec.axis_angle_deg;
      gt["pairwise_angle_deg"] = simlab::planted_pairwise_angle_deg(spec.axis_angle_deg);
      gt["sigma"] = spec.sigma;
      gt["scale"] = spec.scale;
      gt["example_ids"] = data.set.example_ids;
      gt["labels"] = data.labels;
      gt["axis"] = data.axis;
      gt["directions"] = data.directions;
      gt["planted_means"] = data.planted_means;
      gt["warnings"] = data.warnings;
      write_text(dir / "ground_truth.json", gt.dump(1) + "\n");
      std::printf("points           %zu\n", data.set.size());
      std::printf("pairwise angle   %.6f deg\n", simlab::planted_pairwise_angle_deg(spec.axis_angle_deg));
      std::printf("outputs          %s/{synth_trace.jsonl,synth_diffs.jsonl,ground_truth.json}\n",
                  dir.string().c_str());
      return 0;
    }

    if (*ev) {
      std::vector<eval::Arm> arms;
      std::stringstream ss(e_arms);
      for (std::string a; std::getline(ss, a, ',');) arms.push_back(eval::parse_arm(a));
      const std::vector<PromptType> prompts{PromptType::neutral, PromptType::cot, PromptType::anti_cot};

      if (!e_pred_dir.empty()) {
        if (e_gold.empty()) throw UsageError("--predictions-dir needs --gold");
        std::map<std::string, std::string> gold;
        std::ifstream in(e_gold);
        if (!in) throw IoError("cannot open '" + e_gold + "'");
        std::size_t line_no = 0;
        for (std::string line; std::getline(in, line);) {
          ++line_no;
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          try {
            const auto j = nlohmann::json::parse(line);
            gold[j.at("example_id").get<std::string>()] = j.at("answer").get<std::string>();
          } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("bad gold row: ") + e.what());
          }
        }
        std::vector<eval::ArmResult> cells;
        for (PromptType p : prompts) {
          for (eval::Arm a : arms) {
            const fs::path f = fs::path(e_pred_dir) / fs::path(eval::predictions_filename(p, a)).filename();
            if (!fs::exists(f)) continue;
            eval::ArmResult cell = eval::score_predictions(eval::read_predictions(f), gold);
            cell.arm = a;
            cell.prompt_type = p;
            cells.push_back(cell);
          }
        }
        if (cells.empty()) throw DataError("no <prompt>__<arm>.jsonl files in " + e_pred_dir);
        const std::string grid = eval::render_grid(cells, prompts, arms);
        write_text(fs::path(g.out_dir) / "report.txt", grid);
        std::fputs(grid.c_str(), stdout);
        return 0;
      }

      const simlab::PlantedTaskWorld world = simlab::build_planted_task_world(g.seed);
      const std::vector<simlab::ToyTask> tasks = simlab::make_toy_tasks(world, e_n, g.seed);
      const PrototypeSet protos =
          e_protos.empty()
              ? simlab::matched_prototypes(world, simlab::axis_angle_for_pairwise_deg(e_pair))
              : read_prototypes(e_protos);
      eval::ComparisonOptions opt;
      opt.arms = arms;
      opt.prompt_types = prompts;
      opt.default_alpha = e_alpha;
      opt.seed = g.seed;
      opt.generation.max_new = e_max_new;
      opt.generation.eos_token = world.layout.eos_token;
      if (!g.config_path.empty()) {
        // Only rows under the dataset name "toy" apply here.
        const ConfigTable table = load_config(g);
        const auto names = table.datasets();
        const bool has_toy = std::any_of(names.begin(), names.end(), [](std::string n) {
          std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
          return n == "toy";
        });
        for (PromptType p : prompts) {
          if (!has_toy) break;
          const SteeringConfig cfg = table.lookup("toy", p);
          opt.alpha[p] = cfg.alpha;
          opt.layer = cfg.layer;
        }
      }
      opt.out_dir = g.out_dir;
      const eval::ComparisonResult result = eval::run_comparison(world, tasks, protos, opt);
      std::fputs(result.report_text.c_str(), stdout);
      return 0;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const InvariantError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitUsage;
}
