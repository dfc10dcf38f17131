#include "pds/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "pds/errors.hpp"

namespace pds {

double angle_degrees(VectorView u, VectorView v) {
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) {
    throw DataError("angle with a zero vector is undefined");
  }
  const double c = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

std::vector<double> pairwise_angles(std::span<const Vector> prototypes) {
  for (std::size_t j = 0; j < prototypes.size(); ++j) {
    if (norm(prototypes[j]) == 0.0) {
      throw DataError("prototype " + std::to_string(j) + " has zero norm");
    }
  }
  std::vector<double> out;
  for (std::size_t a = 0; a < prototypes.size(); ++a) {
    for (std::size_t b = a + 1; b < prototypes.size(); ++b) {
      out.push_back(angle_degrees(prototypes[a], prototypes[b]));
    }
  }
  return out;
}

Vector cone_axis(const PrototypeSet& set) {
  if (set.k() == 0) {
    throw DataError("cone axis of an empty prototype set");
  }
  Vector axis(set.dimension(), 0.0);
  for (const Vector& mu : set.prototypes) {
    axpy(1.0, mu, axis);
  }
  return axis;
}

Vector dom_vector(std::span<const Vector> diffs) { return mean_of(diffs); }

Vector dom_vector(const DifferenceSet& set) { return mean_of(set.diffs); }

namespace {

double relative_residual(VectorView got, VectorView want) {
  const double err = std::sqrt(squared_distance(got, want));
  const double scale = norm(want);
  if (scale == 0.0) {
    return err == 0.0 ? 0.0 : INFINITY;
  }
  return err / scale;
}

}  // namespace

AxisIdentities check_axis_identities(const PrototypeSet& set, const DifferenceSet& diffs) {
  if (set.k() == 0 || diffs.size() == 0) {
    throw DataError("axis identities need prototypes and differences");
  }
  if (diffs.dimension() != set.dimension()) {
    throw DimensionError(set.dimension(), diffs.dimension(), "axis identities: difference set");
  }
  AxisIdentities out;
  out.weighted_residual = weighted_centroid_residual(set, diffs.diffs);
  const double k = static_cast<double>(set.k());
  out.unweighted_residual = relative_residual(cone_axis(set), scaled(dom_vector(diffs), k));
  out.balanced = std::all_of(set.cluster_sizes.begin(), set.cluster_sizes.end(),
                             [&](std::size_t n) { return n == set.cluster_sizes.front(); });
  out.unweighted_diverges = !(out.unweighted_residual <= kAxisIdentityTolerance);
  return out;
}

GeometryReport analyze_geometry(const PrototypeSet& set, const DifferenceSet& diffs) {
  if (set.k() == 0) {
    throw DataError("geometry of an empty prototype set");
  }
  if (diffs.size() == 0) {
    throw DataError("geometry needs a nonempty difference set");
  }
  if (diffs.dimension() != set.dimension()) {
    throw DimensionError(set.dimension(), diffs.dimension(), "geometry: difference set");
  }
  GeometryReport r;
  r.pairwise_angles_deg = pairwise_angles(set);
  if (!r.pairwise_angles_deg.empty()) {
    const auto [lo, hi] = std::minmax_element(r.pairwise_angles_deg.begin(), r.pairwise_angles_deg.end());
    r.angle_min = *lo;
    r.angle_max = *hi;
    double s = 0.0;
    for (double a : r.pairwise_angles_deg) s += a;
    r.angle_mean = s / static_cast<double>(r.pairwise_angles_deg.size());
  }
  r.axis = cone_axis(set);
  r.dom = dom_vector(diffs);
  r.axis_dom_angle_deg = (norm(r.axis) > 0.0 && norm(r.dom) > 0.0) ? angle_degrees(r.axis, r.dom) : 0.0;
  for (const Vector& mu : set.prototypes) {
    r.prototype_norms.push_back(norm(mu));
  }
  double s = 0.0;
  for (double x : r.prototype_norms) s += x;
  r.mean_prototype_norm = s / static_cast<double>(r.prototype_norms.size());

  const AxisIdentities ids = check_axis_identities(set, diffs);
  r.weighted_identity_residual = ids.weighted_residual;
  r.unweighted_identity_residual = ids.unweighted_residual;
  r.balanced = ids.balanced;
  r.unweighted_identity_diverges = ids.unweighted_diverges;
  return r;
}

std::string render_geometry_text(const GeometryReport& r) {
  std::string out;
  char line[160];
  const std::size_t k = r.prototype_norms.size();
  std::snprintf(line, sizeof(line), "prototypes            %zu\n", k);
  out += line;
  std::snprintf(line, sizeof(line), "pairwise angle (deg)  min %.4f  mean %.4f  max %.4f\n", r.angle_min,
                r.angle_mean, r.angle_max);
  out += line;
  std::snprintf(line, sizeof(line), "axis vs DoM (deg)     %.6f\n", r.axis_dom_angle_deg);
  out += line;
  std::snprintf(line, sizeof(line), "mean prototype norm   %.6f\n", r.mean_prototype_norm);
  out += line;
  for (std::size_t j = 0; j < k; ++j) {
    std::snprintf(line, sizeof(line), "  |mu_%zu|              %.6f\n", j, r.prototype_norms[j]);
    out += line;
  }
  std::snprintf(line, sizeof(line), "weighted identity     residual %.3e\n", r.weighted_identity_residual);
  out += line;
  std::snprintf(line, sizeof(line), "unweighted identity   residual %.3e  clusters %s%s\n",
                r.unweighted_identity_residual, r.balanced ? "balanced" : "imbalanced",
                r.unweighted_identity_diverges ? "  [FLAG: sum of prototypes != k * mean(D)]" : "");
  out += line;
  return out;
}

std::string geometry_to_json(const GeometryReport& r) {
  nlohmann::ordered_json j;
  j["pairwise_angles_deg"] = r.pairwise_angles_deg;
  j["angle_min"] = r.angle_min;
  j["angle_max"] = r.angle_max;
  j["angle_mean"] = r.angle_mean;
  j["axis"] = r.axis;
  j["dom"] = r.dom;
  j["axis_dom_angle_deg"] = r.axis_dom_angle_deg;
  j["prototype_norms"] = r.prototype_norms;
  j["mean_prototype_norm"] = r.mean_prototype_norm;
  j["weighted_identity_residual"] = r.weighted_identity_residual;
  j["unweighted_identity_residual"] = r.unweighted_identity_residual;
  j["balanced"] = r.balanced;
  j["unweighted_identity_diverges"] = r.unweighted_identity_diverges;
  return j.dump(2) + "\n";
}

std::string angle_histogram_csv(const GeometryReport& r, double bin_width_deg) {
  if (!(bin_width_deg > 0.0)) {
    throw DataError("histogram bin width must be positive");
  }
  const auto bins = static_cast<std::size_t>(std::ceil(180.0 / bin_width_deg));
  std::vector<std::size_t> counts(bins, 0);
  for (double a : r.pairwise_angles_deg) {
    auto b = static_cast<std::size_t>(a / bin_width_deg);
    counts[std::min(b, bins - 1)]++;
  }
  std::string out = "bin_lo,bin_hi,count\n";
  char line[96];
  for (std::size_t b = 0; b < bins; ++b) {
    std::snprintf(line, sizeof(line), "%g,%g,%zu\n", b * bin_width_deg,
                  std::min(180.0, (b + 1) * bin_width_deg), counts[b]);
    out += line;
  }
  return out;
}

}  // namespace pds
