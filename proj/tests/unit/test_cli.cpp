#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pds/prototype_discovery.hpp"
#include "pds/trace_store.hpp"
#include "support.hpp"

using namespace pds;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PDS_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("synth -> collect-diffs -> discover -> analyze -> steer") {
  test::TempDir dir("cli");
  const std::string d = dir.path().string();

  Run r = run("synth --seed 4 --k 3 --pairwise-angle 30 --sigma 0.02 --out-dir " + d);
  REQUIRE_MESSAGE(r.code == 0, r.out);

  r = run("collect-diffs --trace " + d + "/synth_trace.jsonl --out-dir " + d);
  REQUIRE_MESSAGE(r.code == 0, r.out);
  CHECK(r.out.find("pairs            150") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "pairing_report.txt"));

  r = run("discover --seed 4 --diffs " + d + "/diffs.jsonl --k-max 8 --out-dir " + d);
  REQUIRE_MESSAGE(r.code == 0, r.out);
  const PrototypeSet protos = read_prototypes(dir / "prototypes.json");
  CHECK(protos.k() == 3);
  CHECK(protos.source_trace_hash.size() == 64);
  CHECK(std::filesystem::exists(dir / "k_selection.txt"));

  r = run("analyze --prototypes " + d + "/prototypes.json --diffs " + d + "/diffs.jsonl --out-dir " + d);
  REQUIRE_MESSAGE(r.code == 0, r.out);
  const auto geo = nlohmann::json::parse(slurp(dir / "geometry.json"));
  CHECK(std::abs(geo.at("angle_mean").get<double>() - 30.0) < 2.0);
  CHECK(std::filesystem::exists(dir / "angle_histogram.csv"));

  // Steer the neutral activations, re-labelled as eval inputs.
  Trace t = read_trace(dir / "synth_trace.jsonl");
  std::vector<ActivationRecord> inputs;
  for (ActivationRecord rec : t.records) {
    if (rec.condition != Condition::neutral) continue;
    rec.condition = Condition::eval_input;
    inputs.push_back(rec);
  }
  write_trace(t.header, inputs, dir / "inputs.jsonl");
  r = run("steer --prototypes " + d + "/prototypes.json --input-trace " + d + "/inputs.jsonl --dataset GSM8K "
          "--prompt-type anti_cot --out " + d + "/steered.jsonl");
  REQUIRE_MESSAGE(r.code == 0, r.out);
  CHECK(r.out.find("alpha 10") != std::string::npos);
  const Trace steered = read_trace(dir / "steered.jsonl");
  CHECK(steered.records.size() == inputs.size());
  std::istringstream diag(slurp(dir / "steered.jsonl.diagnostics.jsonl"));
  std::string first;
  std::getline(diag, first);
  const auto dj = nlohmann::json::parse(first);
  CHECK(dj.at("coefficients").size() == 3);

  // Zero strength returns the inputs unchanged.
  r = run("steer --prototypes " + d + "/prototypes.json --input-trace " + d + "/inputs.jsonl --alpha 0 --out " + d +
          "/same.jsonl");
  REQUIRE(r.code == 0);
  const Trace same = read_trace(dir / "same.jsonl");
  for (std::size_t i = 0; i < inputs.size(); ++i) CHECK(same.records[i].vector == inputs[i].vector);
}

TEST_CASE("eval: toy grid is reproducible and predictions rescore") {
  test::TempDir dir("cli_eval");
  const std::string d = dir.path().string();
  const Run a = run("eval --seed 2 --n 40 --out-dir " + d + "/a");
  const Run b = run("eval --seed 2 --n 40 --out-dir " + d + "/b");
  REQUIRE_MESSAGE(a.code == 0, a.out);
  CHECK(a.out == b.out);
  CHECK(slurp(dir / "a/report.txt") == slurp(dir / "b/report.txt"));

  // Gold file from the prediction rows, then score the directory externally.
  std::ofstream gold(dir / "gold.jsonl");
  std::istringstream rows(slurp(dir / "a/predictions/neutral__none.jsonl"));
  for (std::string line; std::getline(rows, line);) {
    const auto j = nlohmann::json::parse(line);
    gold << nlohmann::json{{"example_id", j["example_id"]}, {"answer", j["gold"]}}.dump() << "\n";
  }
  gold.close();
  const Run s = run("eval --predictions-dir " + d + "/a/predictions --gold " + d + "/gold.jsonl --out-dir " + d + "/s");
  REQUIRE_MESSAGE(s.code == 0, s.out);
  // The external scorer's grid matches the grid section of the toy report.
  const std::string report = slurp(dir / "a/report.txt");
  CHECK(report.find(s.out) != std::string::npos);
}

TEST_CASE("exit codes") {
  test::TempDir dir("cli_codes");
  const std::string d = dir.path().string();
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("discover --k-min 0 --diffs x").code == 2);
  CHECK(run("discover --trace a --diffs b").code == 2);
  CHECK(run("collect-diffs --trace " + d + "/missing.jsonl").code == 3);
  {
    std::ofstream bad(dir / "bad.jsonl");
    bad << R"({"format_version":1,"dimension":2,"layer":0,"model_id":"m","dtype":"f64","created_utc":"t"})" "\n"
        << R"({"example_id":"a","condition":"cot","vector":[1,2,3]})" "\n";
  }
  const Run bad = run("collect-diffs --trace " + d + "/bad.jsonl --out-dir " + d);
  CHECK(bad.code == 3);
  CHECK(bad.out.find("line 2") != std::string::npos);
  CHECK(run("steer --prototypes " + d + "/nope.json --input-trace x --alpha 1 --out y").code == 3);
  CHECK(run("--help").code == 0);
}
