#include "pds/prototype_discovery.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "pds/errors.hpp"
#include "pds/rng.hpp"

namespace pds {
namespace {

constexpr double kMonotoneSlack = 1e-12;

std::vector<Vector> seed_plus_plus(const std::vector<Vector>& points, int k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<Vector> centers;
  centers.reserve(static_cast<std::size_t>(k));
  centers.push_back(points[rng.below(n)]);
  std::vector<double> dist2(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist2[i] = squared_distance(points[i], centers.back());
  }
  while (centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (double x : dist2) total += x;
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.below(n);
    } else {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (dist2[i] <= 0.0) continue;
        cum += dist2[i];
        if (cum > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        // Round-off left target beyond the running sum; take the last candidate.
        for (std::size_t i = n; i-- > 0;) {
          if (dist2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    }
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      dist2[i] = std::min(dist2[i], squared_distance(points[i], centers.back()));
    }
  }
  return centers;
}

int nearest(const Vector& p, const std::vector<Vector>& centers) {
  int best = 0;
  double best_d = squared_distance(p, centers[0]);
  for (std::size_t j = 1; j < centers.size(); ++j) {
    const double d = squared_distance(p, centers[j]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

void repair_empty(const std::vector<Vector>& points, std::vector<Vector>& centers,
                  std::vector<int>& labels, std::vector<std::size_t>& counts) {
  for (std::size_t j = 0; j < centers.size(); ++j) {
    if (counts[j] != 0) continue;
    std::size_t pick = points.size();
    double pick_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto from = static_cast<std::size_t>(labels[i]);
      if (counts[from] < 2) continue;
      const double d = squared_distance(points[i], centers[from]);
      if (d > pick_d) {
        pick_d = d;
        pick = i;
      }
    }
    if (pick == points.size()) {
      throw InvariantError("empty-cluster repair found no donor cluster");
    }
    --counts[static_cast<std::size_t>(labels[pick])];
    labels[pick] = static_cast<int>(j);
    ++counts[j];
    centers[j] = points[pick];
  }
}

std::vector<Vector> cluster_means(const std::vector<Vector>& points, const std::vector<int>& labels,
                                  const std::vector<std::size_t>& counts, std::size_t d) {
  std::vector<Vector> means(counts.size(), Vector(d, 0.0));
  for (std::size_t i = 0; i < points.size(); ++i) {
    axpy(1.0, points[i], means[static_cast<std::size_t>(labels[i])]);
  }
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const double n = static_cast<double>(counts[j]);
    for (double& x : means[j]) {
      x /= n;
    }
  }
  return means;
}

double total_wcss(const std::vector<Vector>& points, const std::vector<int>& labels,
                  const std::vector<Vector>& centers) {
  double acc = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    acc += squared_distance(points[i], centers[static_cast<std::size_t>(labels[i])]);
  }
  return acc;
}

struct CurvePoint {
  int k;
  KMeansResult best;
};

std::vector<CurvePoint> sweep(const DifferenceSet& set, int k_min, int k_max, std::uint64_t seed,
                              int restarts, int max_iters, double tol) {
  if (restarts < 1) {
    throw DataError("restarts must be >= 1");
  }
  std::vector<CurvePoint> out;
  for (int k = k_min; k <= k_max; ++k) {
    std::optional<KMeansResult> best;
    for (int r = 0; r < restarts; ++r) {
      KMeansResult run = kmeans(set, k, mix_seed(seed, static_cast<std::uint64_t>(r)), max_iters, tol);
      if (!best || run.assignment.inertia < best->assignment.inertia) {
        best = std::move(run);
      }
    }
    out.push_back({k, std::move(*best)});
  }
  return out;
}

KSelectionRecord record_from(const std::vector<CurvePoint>& curve) {
  KSelectionRecord rec;
  for (const CurvePoint& p : curve) {
    rec.candidate_ks.push_back(p.k);
    rec.wcss_curve.push_back(p.best.assignment.inertia);
  }
  const double scale = rec.wcss_curve.front();
  for (std::size_t i = 1; i < rec.wcss_curve.size(); ++i) {
    if (rec.wcss_curve[i] > rec.wcss_curve[i - 1] + 1e-9 * scale) {
      rec.warnings.push_back("wcss increases from k=" + std::to_string(rec.candidate_ks[i - 1]) +
                             " to k=" + std::to_string(rec.candidate_ks[i]) +
                             "; consider more restarts");
    }
  }
  rec.chosen_k = rec.candidate_ks[elbow_index(rec.candidate_ks, rec.wcss_curve)];
  return rec;
}

}  // namespace

KMeansResult kmeans(const DifferenceSet& set, int k, std::uint64_t seed, int max_iters, double tol) {
  const std::vector<Vector>& points = set.diffs;
  const std::size_t n = points.size();
  if (n == 0) {
    throw DataError("k-means on an empty difference set");
  }
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw DataError("k-means needs 1 <= k <= N (k=" + std::to_string(k) + ", N=" +
                    std::to_string(n) + ")");
  }
  if (!(tol > 0.0)) {
    throw DataError("k-means tolerance must be positive");
  }
  if (max_iters < 1) {
    throw DataError("k-means max_iters must be >= 1");
  }
  const std::size_t d = set.dimension();

  Rng rng(seed);
  std::vector<Vector> centers = seed_plus_plus(points, k, rng);
  std::vector<int> labels(n, 0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  ClusterAssignment assignment;

  for (int iter = 1; iter <= max_iters; ++iter) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = nearest(points[i], centers);
      ++counts[static_cast<std::size_t>(labels[i])];
    }
    repair_empty(points, centers, labels, counts);

    std::vector<Vector> updated = cluster_means(points, labels, counts, d);
    double shift = 0.0;
    for (std::size_t j = 0; j < centers.size(); ++j) {
      shift = std::max(shift, std::sqrt(squared_distance(updated[j], centers[j])));
    }
    const double wcss = total_wcss(points, labels, updated);
    if (!assignment.wcss_history.empty()) {
      const double prev = assignment.wcss_history.back();
      if (wcss > prev + kMonotoneSlack * std::max(prev, 1.0)) {
        throw InvariantError("Lloyd iteration increased WCSS");
      }
    }
    assignment.wcss_history.push_back(wcss);
    centers = std::move(updated);
    assignment.iterations = iter;
    if (shift < tol) {
      assignment.converged = true;
      break;
    }
  }

  assignment.labels = labels;
  assignment.inertia = assignment.wcss_history.back();

  KMeansResult out;
  out.prototypes.prototypes = std::move(centers);
  out.prototypes.cluster_sizes = std::move(counts);
  out.prototypes.layer = set.layer;
  out.prototypes.discovery_params.seed = seed;
  out.prototypes.discovery_params.max_iters = max_iters;
  out.prototypes.discovery_params.tol = tol;
  out.prototypes.discovery_params.restarts = 1;
  out.prototypes.source_trace_hash =
      set.source_hash.empty() ? difference_set_digest(set) : set.source_hash;
  out.assignment = std::move(assignment);
  return out;
}

std::size_t elbow_index(std::span<const int> ks, std::span<const double> wcss) {
  if (ks.size() != wcss.size() || ks.empty()) {
    throw DataError("elbow needs matching, nonempty k and wcss sequences");
  }
  if (ks.size() < 3) {
    return 0;
  }
  const auto [lo, hi] = std::minmax_element(wcss.begin(), wcss.end());
  const double w_span = *hi - *lo;
  const double k_span = static_cast<double>(ks.back() - ks.front());
  if (!(w_span > 0.0) || !(k_span > 0.0)) {
    return 0;
  }
  auto xs = [&](std::size_t i) { return static_cast<double>(ks[i] - ks.front()) / k_span; };
  auto ys = [&](std::size_t i) { return (wcss[i] - *lo) / w_span; };
  const double x0 = xs(0), y0 = ys(0);
  const double dx = xs(ks.size() - 1) - x0, dy = ys(ks.size() - 1) - y0;
  const double len = std::hypot(dx, dy);

  std::size_t best = 0;
  double best_dist = -1.0;
  for (std::size_t i = 1; i + 1 < ks.size(); ++i) {
    const double dist = std::abs(dy * (xs(i) - x0) - dx * (ys(i) - y0)) / len;
    if (dist > best_dist + 1e-12) {
      best_dist = dist;
      best = i;
    }
  }
  return best_dist > 1e-12 ? best : 0;
}

KSelectionRecord select_k(const DifferenceSet& set, int k_min, int k_max, std::uint64_t seed,
                          int restarts, int max_iters, double tol) {
  if (k_min < 1 || k_min >= k_max || static_cast<std::size_t>(k_max) > set.size()) {
    throw DataError("select_k needs 1 <= k_min < k_max <= N");
  }
  return record_from(sweep(set, k_min, k_max, seed, restarts, max_iters, tol));
}

int default_k_max(std::size_t n) {
  return static_cast<int>(std::min<std::size_t>(12, n > 0 ? n - 1 : 0));
}

PrototypeSet discover(const DifferenceSet& set, const DiscoverOptions& options) {
  const std::size_t n = set.size();
  if (n == 0) {
    throw DataError("discover on an empty difference set");
  }
  if (options.k_min < 1) {
    throw DataError("k_min must be >= 1");
  }
  const int k_min = std::min<int>(options.k_min, static_cast<int>(n));
  int k_max = options.k_max.value_or(default_k_max(n));
  k_max = std::min<int>(k_max, static_cast<int>(n));
  if (k_max < k_min) {
    k_max = k_min;
  }

  std::vector<CurvePoint> curve =
      sweep(set, k_min, k_max, options.seed, options.restarts, options.max_iters, options.tol);
  KSelectionRecord record = record_from(curve);
  auto chosen = std::find_if(curve.begin(), curve.end(),
                             [&](const CurvePoint& p) { return p.k == record.chosen_k; });

  PrototypeSet out = std::move(chosen->best.prototypes);
  out.discovery_params.seed = options.seed;
  out.discovery_params.max_iters = options.max_iters;
  out.discovery_params.tol = options.tol;
  out.discovery_params.restarts = options.restarts;
  out.discovery_params.k_selection = std::move(record);
  return out;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw DataError("ARI needs labelings of equal length");
  }
  const std::size_t n = a.size();
  if (n < 2) {
    return 1.0;
  }
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < n; ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, v] : joint) sum_joint += c2(v);
  for (const auto& [key, v] : ra) sum_a += c2(v);
  for (const auto& [key, v] : rb) sum_b += c2(v);
  const double expected = sum_a * sum_b / c2(static_cast<double>(n));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) {
    return sum_joint == expected ? 1.0 : 0.0;
  }
  return (sum_joint - expected) / (max_index - expected);
}

std::string render_k_selection(const KSelectionRecord& record) {
  std::string out = "    k              wcss\n";
  char line[96];
  for (std::size_t i = 0; i < record.candidate_ks.size(); ++i) {
    std::snprintf(line, sizeof(line), "%5d  %16.6e%s\n", record.candidate_ks[i], record.wcss_curve[i],
                  record.candidate_ks[i] == record.chosen_k ? "  <- chosen" : "");
    out += line;
  }
  out += "method: " + record.method + "\n";
  for (const std::string& w : record.warnings) {
    out += "warning: " + w + "\n";
  }
  return out;
}

}  // namespace pds
