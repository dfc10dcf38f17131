// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "pds/diff_engine.hpp"
#include "pds/errors.hpp"
#include "pds/eval/comparison.hpp"
#include "pds/geometry.hpp"
#include "pds/prototype_discovery.hpp"
#include "pds/rng.hpp"
#include "pds/simlab/cone.hpp"
#include "pds/simlab/generation.hpp"
#include "pds/simlab/toy_tasks.hpp"
#include "pds/steering.hpp"
#include "pds/trace_store.hpp"

namespace fs = std::filesystem;
using namespace pds;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failures and a summary.
class Check {
 public:
  void fail(const std::string& what) {
    ++failures_;
    if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  void expect(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
  Outcome outcome(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, std::to_string(failures_) + " failure(s): " + notes_};
  }

 private:
  int failures_ = 0;
  std::string notes_;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Vector random_vector(Rng& rng, std::size_t d, double scale = 1.0) {
  Vector v(d);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

// Independent oracle: orthonormal basis by modified Gram-Schmidt, applied twice.
std::vector<Vector> orthonormal_basis(const std::vector<Vector>& vs) {
  std::vector<Vector> q;
  for (const Vector& v : vs) {
    Vector u = v;
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& b : q) {
        double c = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) c += u[i] * b[i];
        for (std::size_t i = 0; i < u.size(); ++i) u[i] -= c * b[i];
      }
    }
    double n = 0.0;
    for (double x : u) n += x * x;
    n = std::sqrt(n);
    for (double& x : u) x /= n;
    q.push_back(u);
  }
  return q;
}

Vector remove_span(Vector v, const std::vector<Vector>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const Vector& b : basis) {
      double c = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) c += v[i] * b[i];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
    }
  }
  return v;
}

double l2(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double l2_diff(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

PrototypeSet bare_set(std::vector<Vector> protos) {
  PrototypeSet s;
  s.cluster_sizes.assign(protos.size(), 1);
  s.prototypes = std::move(protos);
  return s;
}

// ---------------------------------------------------------------------------

Outcome projection_algebra() {
  Check c;
  double worst_scale = 0, worst_span = 0, worst_lin = 0, worst_null = 0;
  for (std::size_t d : {4, 64, 512}) {
    Rng rng(mix_seed(1234, d));
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t k = 1 + rng.below(std::min<std::size_t>(8, d - 1));
      std::vector<Vector> protos;
      for (std::size_t j = 0; j < k; ++j) protos.push_back(random_vector(rng, d, std::exp(rng.normal())));
      const PrototypeSet set = bare_set(protos);
      const Vector h = random_vector(rng, d, 3.0);
      const Vector v = steering_vector(h, set, Policy::sum_projections).vector;
      const double vn = std::max(l2(v), 1e-300);

      std::vector<Vector> rescaled;
      for (const Vector& p : protos) rescaled.push_back(scaled(p, std::pow(10.0, 6.0 * rng.uniform() - 3.0)));
      const Vector v_scaled = steering_vector(h, bare_set(rescaled), Policy::sum_projections).vector;
      const double e_scale = l2_diff(v, v_scaled) / vn;
      worst_scale = std::max(worst_scale, e_scale);
      c.expect(e_scale <= 1e-9, "scale invariance d=" + std::to_string(d) + fmt(" rel %.3g", e_scale));

      const std::vector<Vector> basis = orthonormal_basis(protos);
      const double e_span = l2(remove_span(v, basis)) / vn;
      worst_span = std::max(worst_span, e_span);
      c.expect(e_span <= 1e-8, "span residual d=" + std::to_string(d) + fmt(" %.3g", e_span));

      const Vector h2 = random_vector(rng, d, 3.0);
      const double a = 4.0 * rng.uniform() - 2.0, b = 4.0 * rng.uniform() - 2.0;
      Vector combo = scaled(h, a);
      axpy(b, h2, combo);
      const Vector v2 = steering_vector(h2, set, Policy::sum_projections).vector;
      Vector expected = scaled(v, a);
      axpy(b, v2, expected);
      const Vector got = steering_vector(combo, set, Policy::sum_projections).vector;
      const double e_lin = l2_diff(got, expected) / (std::abs(a) * l2(v) + std::abs(b) * l2(v2) + 1e-300);
      worst_lin = std::max(worst_lin, e_lin);
      c.expect(e_lin <= 1e-9, "linearity d=" + std::to_string(d) + fmt(" rel %.3g", e_lin));

      const Vector h_perp = remove_span(h, basis);
      const double e_null =
          l2(steering_vector(h_perp, set, Policy::sum_projections).vector) / l2(h_perp);
      worst_null = std::max(worst_null, e_null);
      c.expect(e_null <= 1e-9, "orthogonal null d=" + std::to_string(d) + fmt(" rel %.3g", e_null));
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "3000 cases; worst scale %.1e span %.1e linear %.1e null %.1e", worst_scale,
                worst_span, worst_lin, worst_null);
  return c.outcome(buf);
}

// Labels by nearest prototype; ties go to the lower index.
std::vector<int> nearest_labels(const DifferenceSet& set, const PrototypeSet& protos) {
  std::vector<int> labels;
  for (const Vector& x : set.diffs) {
    int best = 0;
    double best_d = INFINITY;
    for (std::size_t j = 0; j < protos.k(); ++j) {
      double dd = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) dd += (x[i] - protos.prototypes[j][i]) * (x[i] - protos.prototypes[j][i]);
      if (dd < best_d) {
        best_d = dd;
        best = static_cast<int>(j);
      }
    }
    labels.push_back(best);
  }
  return labels;
}

simlab::ConeDataset cone(std::size_t k, double pairwise_deg, double sigma_frac, std::uint64_t seed,
                         std::size_t per_cluster = 50, std::size_t d = 64) {
  simlab::ConeSpec spec;
  spec.dimension = d;
  spec.k_planted = k;
  spec.axis_angle_deg = simlab::axis_angle_for_pairwise_deg(pairwise_deg);
  spec.cluster_counts.assign(k, per_cluster);
  spec.scale = 1.0;
  spec.sigma = sigma_frac;
  return simlab::generate_cone_dataset(spec, seed);
}

Outcome clustering() {
  Check c;
  int lloyd_runs = 0;
  double worst_identity = 0.0, min_ari = 1.0;
  std::string elbow_summary;

  // WCSS monotonicity and the weighted centroid identity over many single runs.
  for (std::uint64_t s = 0; s < 60; ++s) {
    Rng rng(mix_seed(77, s));
    DifferenceSet set;
    if (s % 2 == 0) {
      set = cone(3 + s % 3, 20.0 + static_cast<double>(s), 0.1, s).set;
    } else {
      std::vector<Vector> pts;
      const std::size_t n = 20 + rng.below(200), d = 2 + rng.below(40);
      for (std::size_t i = 0; i < n; ++i) pts.push_back(random_vector(rng, d));
      set = make_difference_set(std::move(pts));
    }
    for (int k = 1; k <= 8; ++k) {
      KMeansResult r;
      try {
        r = kmeans(set, k, mix_seed(s, k));
      } catch (const InvariantError& e) {
        c.fail(std::string("kmeans invariant: ") + e.what());
        continue;
      }
      ++lloyd_runs;
      const auto& h = r.assignment.wcss_history;
      for (std::size_t i = 1; i < h.size(); ++i) {
        c.expect(h[i] <= h[i - 1], "WCSS rose at iteration " + std::to_string(i));
      }
      const Vector mean = dom_vector(set);
      const Vector wc = weighted_centroid(r.prototypes);
      const double rel = l2_diff(mean, wc) / std::max(l2(mean), 1e-300);
      worst_identity = std::max(worst_identity, rel);
      c.expect(rel <= 1e-6, fmt("weighted centroid identity rel %.3g", rel));
    }
  }

  // Planted-cone recovery: 30 deg between clusters, sigma = 0.05 s.
  for (std::size_t k_star : {3, 4, 5}) {
    int elbow_hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const simlab::ConeDataset data = cone(k_star, 30.0, 0.05, mix_seed(seed, k_star));
      DiscoverOptions fixed;
      fixed.k_min = fixed.k_max.emplace(static_cast<int>(k_star));
      fixed.seed = seed;
      const PrototypeSet protos = discover(data.set, fixed);
      const double ari = adjusted_rand_index(data.labels, nearest_labels(data.set, protos));
      min_ari = std::min(min_ari, ari);
      c.expect(ari >= 0.9, "k*=" + std::to_string(k_star) + " seed " + std::to_string(seed) + fmt(" ARI %.3f", ari));

      DiscoverOptions sweep;
      sweep.k_min = 1;
      sweep.k_max = 10;
      sweep.seed = seed;
      const PrototypeSet chosen = discover(data.set, sweep);
      if (static_cast<std::size_t>(chosen.discovery_params.k_selection->chosen_k) == k_star) ++elbow_hits;
    }
    c.expect(elbow_hits >= 18, "elbow k*=" + std::to_string(k_star) + " hit " + std::to_string(elbow_hits) + "/20");
    elbow_summary += " k*=" + std::to_string(k_star) + ":" + std::to_string(elbow_hits) + "/20";
  }

  char buf[240];
  std::snprintf(buf, sizeof buf, "%d Lloyd runs; identity worst %.1e; min ARI %.3f; elbow%s", lloyd_runs,
                worst_identity, min_ari, elbow_summary.c_str());
  return c.outcome(buf);
}

Outcome geometry() {
  Check c;
  double worst_angle = 0.0, worst_balanced = 0.0;
  int flagged = 0, unbalanced_cases = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(mix_seed(500, seed));
    const std::size_t k = 2 + rng.below(5);
    const double pairwise = 5.0 + 80.0 * rng.uniform();
    simlab::ConeSpec spec;
    spec.dimension = 8 + rng.below(100);
    spec.k_planted = k;
    spec.axis_angle_deg = simlab::axis_angle_for_pairwise_deg(pairwise);
    spec.scale = 0.5 + 2.0 * rng.uniform();
    spec.sigma = 0.0;
    const bool balanced = seed % 2 == 0;
    for (std::size_t j = 0; j < k; ++j) spec.cluster_counts.push_back(balanced ? 10 : 3 + 7 * j);
    const simlab::ConeDataset data = simlab::generate_cone_dataset(spec, seed);

    DiscoverOptions fixed;
    fixed.k_min = fixed.k_max.emplace(static_cast<int>(k));
    fixed.seed = seed;
    const PrototypeSet protos = discover(data.set, fixed);
    const GeometryReport report = analyze_geometry(protos, data.set);

    // Planted angle from the generator's own means, independent of the code under test.
    for (double a : report.pairwise_angles_deg) {
      const double err = std::abs(a - pairwise);
      worst_angle = std::max(worst_angle, err);
      c.expect(err <= 1e-6, fmt("angle error %.3g deg", err));
    }
    // Oracle for the unweighted identity: sum of centroids vs k * mean of diffs.
    Vector sum(spec.dimension, 0.0);
    for (const Vector& m : protos.prototypes) for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += m[i];
    Vector kmean(spec.dimension, 0.0);
    for (const Vector& x : data.set.diffs) for (std::size_t i = 0; i < x.size(); ++i) kmean[i] += x[i];
    for (double& x : kmean) x *= static_cast<double>(k) / static_cast<double>(data.set.size());
    const double rel = l2_diff(sum, kmean) / l2(kmean);
    if (balanced) {
      worst_balanced = std::max(worst_balanced, rel);
      c.expect(rel <= kAxisIdentityTolerance, fmt("balanced identity rel %.3g", rel));
      c.expect(report.balanced && !report.unweighted_identity_diverges, "balanced set flagged");
    } else {
      ++unbalanced_cases;
      c.expect(rel > kAxisIdentityTolerance, "unbalanced identity unexpectedly exact");
      c.expect(!report.balanced && report.unweighted_identity_diverges, "imbalance not flagged");
      if (report.unweighted_identity_diverges) ++flagged;
      c.expect(render_geometry_text(report).find("imbalanced") != std::string::npos,
               "text report omits the imbalance flag");
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "20 cones; worst angle err %.1e deg; balanced identity %.1e; imbalance flagged %d/%d",
                worst_angle, worst_balanced, flagged, unbalanced_cases);
  return c.outcome(buf);
}

// Handcrafted model: zero blocks, no final norm, identity unembedding, vocab == d.
simlab::ToyModel linear_readout_model(std::size_t d, Rng& rng, bool random_unembedding) {
  simlab::ToyModelSpec spec;
  spec.n_layers = 2;
  spec.d_model = static_cast<int>(d);
  spec.n_heads = 1;
  spec.vocab_size = static_cast<int>(d);
  spec.max_len = 16;
  spec.final_norm = false;
  simlab::ToyWeights w = simlab::random_weights(spec);
  for (auto& b : w.blocks) {
    b.wo = simlab::Matrix(d, d);
    b.w2 = simlab::Matrix(b.w2.rows(), b.w2.cols());
    std::fill(b.b2.begin(), b.b2.end(), 0.0);
  }
  w.position_embedding = simlab::Matrix(w.position_embedding.rows(), d);
  w.unembedding = simlab::Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      w.unembedding.at(i, j) = random_unembedding ? rng.normal() : (i == j ? 1.0 : 0.0);
    }
  }
  return simlab::ToyModel(spec, std::move(w));
}

Outcome injection() {
  Check c;
  int alpha0 = 0, locality = 0, forced = 0;

  // Bit-identity at alpha = 0 and locality for alpha > 0 on random toy decoders.
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    simlab::ToyModelSpec spec;
    spec.weight_seed = seed;
    spec.final_norm = seed % 2 == 0;
    const simlab::ToyModel model = simlab::build_toy_model(spec);
    Rng rng(mix_seed(900, seed));
    std::vector<int> prompt;
    for (int i = 0; i < 6 + static_cast<int>(seed % 5); ++i) prompt.push_back(1 + static_cast<int>(rng.below(100)));
    std::vector<Vector> protos;
    for (int j = 0; j < 3; ++j) protos.push_back(random_vector(rng, 64));
    const PrototypeSet set = bare_set(protos);
    simlab::GenerationOptions opt;
    opt.max_new = 6;
    const simlab::GenerationResult base = simlab::generate(model, prompt, opt);

    for (int layer = 0; layer < spec.n_layers; ++layer) {
      SteeringConfig cfg;
      cfg.layer = layer;
      cfg.alpha = 0.0;
      const simlab::GenerationResult zero = simlab::generate_with_injection(model, prompt, cfg, set, opt);
      const bool same = zero.tokens == base.tokens && zero.log.steps == base.log.steps;
      c.expect(same, "alpha=0 run differs at layer " + std::to_string(layer));
      alpha0 += same;

      cfg.alpha = 2.0;
      const simlab::GenerationResult steered = simlab::generate_with_injection(model, prompt, cfg, set, opt);
      bool ok = true;
      for (int l = 0; l < layer; ++l) ok = ok && steered.log.steps[0][l] == base.log.steps[0][l];
      ok = ok && steered.log.steps[0][layer] != base.log.steps[0][layer];
      c.expect(ok, "alpha>0 locality broken at layer " + std::to_string(layer));
      locality += ok;
    }
  }

  // Analytic readout: last token embeds as a*e_0 + b*e_t, prototype e_t, threshold (a-b)/b.
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(mix_seed(31, trial));
    const std::size_t d = 16;
    simlab::ToyModel model = linear_readout_model(d, rng, false);
    simlab::ToyWeights w = model.weights();
    const int target = 1 + static_cast<int>(rng.below(d - 1));
    const double a = 1.0 + 4.0 * rng.uniform(), b = 0.2 + 0.7 * rng.uniform() * a;
    for (std::size_t i = 0; i < d; ++i) w.token_embedding.at(3, i) = 0.0;
    w.token_embedding.at(3, 0) = a;
    w.token_embedding.at(3, static_cast<std::size_t>(target)) = b;
    model = simlab::ToyModel(model.spec(), w);
    Vector e_t(d, 0.0);
    e_t[static_cast<std::size_t>(target)] = 1.0;
    const PrototypeSet set = bare_set({e_t});
    const double threshold = (a - b) / b;
    simlab::GenerationOptions opt;
    opt.max_new = 1;
    const std::vector<int> prompt{5, 3};
    for (double factor : {1.0 + 1e-9, 1.01, 2.0, 10.0}) {
      SteeringConfig cfg;
      cfg.layer = 1;
      cfg.alpha = threshold * factor + 1e-12;
      const auto out = simlab::generate_with_injection(model, prompt, cfg, set, opt);
      const bool hit = out.tokens.at(0) == target;
      c.expect(hit, fmt("analytic readout missed target at alpha/threshold %.6g", factor));
      forced += hit;
    }
    SteeringConfig below;
    below.layer = 1;
    below.alpha = threshold * 0.99;
    c.expect(simlab::generate_with_injection(model, prompt, below, set, opt).tokens.at(0) == 0,
             "analytic readout flipped below threshold");
  }

  // Random linear readout: threshold from a brute-force scan of the logit oracle over the vocab.
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(mix_seed(47, trial));
    const std::size_t d = 24;
    const simlab::ToyModel model = linear_readout_model(d, rng, true);
    const std::vector<int> prompt{2, 9, static_cast<int>(rng.below(d))};
    const Vector mu = random_vector(rng, d);
    const PrototypeSet set = bare_set({mu});
    const auto& W = model.weights();
    Vector h(d);
    for (std::size_t i = 0; i < d; ++i) h[i] = W.token_embedding.at(static_cast<std::size_t>(prompt.back()), i);
    double hm = 0.0, mm = 0.0;
    for (std::size_t i = 0; i < d; ++i) hm += h[i] * mu[i], mm += mu[i] * mu[i];
    const double coef = hm / mm;
    Vector z0(d, 0.0), slope(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < d; ++i) {
        z0[j] += W.unembedding.at(j, i) * h[i];
        slope[j] += W.unembedding.at(j, i) * coef * mu[i];
      }
    }
    const auto base_tok = static_cast<std::size_t>(std::max_element(z0.begin(), z0.end()) - z0.begin());
    const auto target = static_cast<std::size_t>(std::max_element(slope.begin(), slope.end()) - slope.begin());
    if (target == base_tok) continue;
    double threshold = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (j == target) continue;
      threshold = std::max(threshold, (z0[j] - z0[target]) / (slope[target] - slope[j]));
    }
    simlab::GenerationOptions opt;
    opt.max_new = 1;
    for (double factor : {1.0 + 1e-6, 1.5, 4.0}) {
      SteeringConfig cfg;
      cfg.layer = 1;
      cfg.alpha = threshold * factor;
      const bool hit = simlab::generate_with_injection(model, prompt, cfg, set, opt).tokens.at(0) ==
                       static_cast<int>(target);
      c.expect(hit, fmt("oracle readout missed target at alpha/threshold %.6g", factor));
      forced += hit;
    }
  }

  char buf[200];
  std::snprintf(buf, sizeof buf, "alpha=0 identical %d runs; locality %d runs; forced readouts %d", alpha0,
                locality, forced);
  return c.outcome(buf);
}

Outcome end_to_end() {
  Check c;
  std::string summary;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto run = [&] {
      const simlab::PlantedTaskWorld world = simlab::build_planted_task_world(seed);
      const std::vector<simlab::ToyTask> tasks = simlab::make_toy_tasks(world, 200, seed);
      const PrototypeSet protos = simlab::matched_prototypes(world, simlab::axis_angle_for_pairwise_deg(30.0));
      eval::ComparisonOptions opt;
      opt.default_alpha = 8.0;
      opt.seed = seed;
      return eval::run_comparison(world, tasks, protos, opt);
    };
    const eval::ComparisonResult first = run();
    const eval::ComparisonResult second = run();
    c.expect(first.report_text == second.report_text, "grid not byte-identical for seed " + std::to_string(seed));
    for (PromptType p : {PromptType::neutral, PromptType::cot, PromptType::anti_cot}) {
      double none = -1, pds = -1;
      for (const auto& cell : first.cells) {
        if (cell.prompt_type != p) continue;
        if (cell.arm == eval::Arm::none) none = cell.accuracy;
        if (cell.arm == eval::Arm::pds) pds = cell.accuracy;
      }
      c.expect(pds >= none, "seed " + std::to_string(seed) + " " + std::string(to_string(p)) +
                                fmt(": PDS %.3f", pds) + fmt(" < none %.3f", none));
      if (p == PromptType::neutral) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " s%llu %.0f->%.0f%%", static_cast<unsigned long long>(seed), 100 * none,
                      100 * pds);
        summary += buf;
      }
    }
  }
  return c.outcome("n=200 x 5 seeds, grids reproducible; neutral none->PDS" + summary);
}

Outcome format() {
  Check c;
  const fs::path dir = fs::temp_directory_path() / ("pds_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  int traces = 0, protos = 0;
  for (int trial = 0; trial < 500; ++trial) {
    Rng rng(mix_seed(2024, trial));
    const std::size_t d = 1 + rng.below(512);
    TraceHeader h;
    h.dimension = d;
    h.layer = static_cast<int>(rng.below(80));
    h.model_id = "model-" + std::to_string(trial);
    h.dtype = trial % 2 ? DType::f32 : DType::f64;
    h.created_utc = "2026-01-02T03:04:05Z";
    std::vector<ActivationRecord> records;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      ActivationRecord r;
      r.example_id = "ex\"" + std::to_string(i) + "\\é";
      r.condition = static_cast<Condition>(rng.below(3));
      r.layer = h.layer;
      Vector v(d);
      for (double& x : v) {
        const double mag = std::pow(10.0, 20.0 * rng.uniform() - 10.0);
        x = rng.uniform() < 0.05 ? (rng.uniform() < 0.5 ? 0.0 : -0.0) : mag * rng.normal();
      }
      r.vector = quantize(v, h.dtype);
      if (rng.uniform() < 0.5) r.prompt_hash = "sha256:" + std::to_string(rng.next_u64());
      records.push_back(std::move(r));
    }
    const fs::path tp = dir / "t.jsonl";
    write_trace(h, records, tp);
    const Trace back = read_trace(tp);
    bool same = back.header == h && back.records.size() == records.size();
    for (std::size_t i = 0; same && i < records.size(); ++i) {
      same = back.records[i].example_id == records[i].example_id &&
             back.records[i].condition == records[i].condition &&
             back.records[i].prompt_hash == records[i].prompt_hash &&
             back.records[i].vector.size() == records[i].vector.size();
      for (std::size_t j = 0; same && j < d; ++j) {
        same = std::bit_cast<std::uint64_t>(back.records[i].vector[j]) ==
               std::bit_cast<std::uint64_t>(records[i].vector[j]);
      }
    }
    c.expect(same, "trace mismatch trial " + std::to_string(trial));
    traces += same;

    PrototypeSet ps;
    const std::size_t k = 1 + rng.below(6);
    ps.dtype = h.dtype;
    ps.layer = h.layer;
    for (std::size_t j = 0; j < k; ++j) {
      ps.prototypes.push_back(quantize(random_vector(rng, d, std::exp(3.0 * rng.normal())), ps.dtype));
      ps.cluster_sizes.push_back(1 + rng.below(1000));
    }
    ps.discovery_params.seed = rng.next_u64();
    ps.discovery_params.restarts = 1 + static_cast<int>(rng.below(20));
    ps.discovery_params.tol = std::pow(10.0, -1.0 - 8.0 * rng.uniform());
    if (trial % 3 == 0) {
      KSelectionRecord sel;
      for (int kk = 1; kk <= 4; ++kk) {
        sel.candidate_ks.push_back(kk);
        sel.wcss_curve.push_back(100.0 / kk + rng.uniform());
      }
      sel.chosen_k = 2;
      if (trial % 2) sel.warnings.push_back("non-monotone WCSS curve");
      ps.discovery_params.k_selection = sel;
    }
    ps.source_trace_hash = std::to_string(rng.next_u64());
    const fs::path pp = dir / "p.json";
    write_prototypes(ps, pp);
    const bool pok = read_prototypes(pp) == ps;
    c.expect(pok, "prototype mismatch trial " + std::to_string(trial));
    protos += pok;
  }

  // Corrupted fixtures must name the offending line.
  struct Fixture {
    std::string text;
    std::size_t line;
  };
  const std::string header = R"({"format_version":1,"dimension":4,"layer":3,"model_id":"m","dtype":"f64","created_utc":"x"})";
  const std::string good = R"({"example_id":"a","condition":"cot","vector":[1,2,3,4]})";
  std::vector<Fixture> fixtures;
  {
    std::string t = header + "\n";
    for (int i = 0; i < 5; ++i) t += good + "\n";
    t += R"({"example_id":"b","condition":"cot","vector":[1,2,3,4,5]})" "\n";
    fixtures.push_back({t, 7});
  }
  fixtures.push_back({header + "\n" + good + "\n{\"example_id\":\"a\",\"condition\":\"cot\",\"vector\":[1,2,\n", 3});
  fixtures.push_back({header + "\n" + good + "\n" + good + "\n" + R"({"example_id":"a","condition":"reasoning","vector":[1,2,3,4]})" "\n", 4});
  fixtures.push_back({header + "\n" + R"({"example_id":"a","condition":"cot","vector":[1,"x",3,4]})" "\n", 2});
  fixtures.push_back({header + "\n\n" + R"({"example_id":"a","condition":"cot","layer":5,"vector":[1,2,3,4]})" "\n", 3});
  int located = 0;
  for (const Fixture& f : fixtures) {
    std::istringstream in(f.text);
    try {
      parse_trace(in);
      c.fail("corrupted fixture accepted");
    } catch (const ParseError& e) {
      const bool ok = e.line() == f.line && std::string(e.what()).find("line " + std::to_string(f.line)) == 0;
      c.expect(ok, "fixture reported line " + std::to_string(e.line()) + " want " + std::to_string(f.line));
      located += ok;
    } catch (const std::exception& e) {
      c.fail(std::string("unlocated error: ") + e.what());
    }
  }
  try {
    parse_prototypes(R"({"format_version":1,"dimension":2,"layer":0,"k":0,"total_n":0,"prototypes":[],"cluster_sizes":[],"source_trace_hash":""})");
    c.fail("k=0 prototype file accepted");
  } catch (const FormatError&) {
    ++located;
  }
  fs::remove_all(dir);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d/500 traces, %d/500 prototype files round-trip; %d/%zu corrupt fixtures located",
                traces, protos, located, fixtures.size() + 1);
  return c.outcome(buf);
}

Outcome config_fidelity() {
  Check c;
  struct Row {
    const char* dataset;
    PromptType prompt;
    int layer;
    double alpha;
  };
  // Steering hyperparameter table as published.
  const Row rows[] = {
      {"GSM8K", PromptType::neutral, 16, 1.0},    {"GSM8K", PromptType::cot, 16, 1.0},
      {"GSM8K", PromptType::anti_cot, 16, 10.0},  {"AQuA-RAT", PromptType::neutral, 16, 7.0},
      {"AQuA-RAT", PromptType::cot, 16, 1.0},     {"AQuA-RAT", PromptType::anti_cot, 16, 10.0},
      {"BIG-Bench", PromptType::neutral, 15, 1.0}, {"BIG-Bench", PromptType::cot, 15, 1.0},
      {"BIG-Bench", PromptType::anti_cot, 15, 1.0},
  };
  for (const Row& r : rows) {
    const SteeringConfig cfg = config_lookup(r.dataset, r.prompt);
    c.expect(cfg.layer == r.layer && cfg.alpha == r.alpha,
             std::string(r.dataset) + "/" + std::string(to_string(r.prompt)) + " mismatch");
    c.expect(cfg.policy == Policy::sum_projections && cfg.scope == "first_output_token",
             std::string(r.dataset) + " default policy/scope");
  }
  return c.outcome("9/9 rows exact (layers {15,16}, alpha {1,7,10})");
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
    double budget_s;
  };
  const Criterion criteria[] = {
      {"projection-algebra", projection_algebra, 10.0},
      {"clustering", clustering, 60.0},
      {"geometry", geometry, 0.0},
      {"injection", injection, 30.0},
      {"end-to-end-toy", end_to_end, 0.0},
      {"format", format, 0.0},
      {"config-fidelity", config_fidelity, 0.0},
  };
  int failed = 0;
  for (const Criterion& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_s > 0 && secs >= cr.budget_s) {
      o.pass = false;
      o.detail += fmt("; runtime %.1fs over budget", secs);
    }
    std::printf("%s  %-20s %6.2fs  %s\n", o.pass ? "PASS" : "FAIL", cr.name, secs, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
