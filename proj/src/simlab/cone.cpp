#include "pds/simlab/cone.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pds/errors.hpp"
#include "pds/rng.hpp"

namespace pds::simlab {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Vector random_gaussian(std::size_t d, Rng& rng) {
  Vector v(d);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace

double planted_pairwise_angle_deg(double axis_angle_deg) {
  const double c = std::cos(axis_angle_deg * kDeg);
  return std::acos(std::clamp(c * c, -1.0, 1.0)) / kDeg;
}

double axis_angle_for_pairwise_deg(double pairwise_deg) {
  return std::acos(std::sqrt(std::cos(pairwise_deg * kDeg))) / kDeg;
}

std::vector<Vector> orthonormalize(std::vector<Vector> vectors, const std::vector<Vector>& against) {
  std::vector<Vector> basis = against;
  for (Vector& v : vectors) {
    // Two passes of modified Gram-Schmidt keep the basis orthogonal to ~1e-16.
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& b : basis) {
        axpy(-dot(v, b), b, v);
      }
    }
    const double n = norm(v);
    if (!(n > 1e-12)) {
      throw DataError("strategy directions are linearly dependent");
    }
    for (double& x : v) x /= n;
    basis.push_back(v);
  }
  return vectors;
}

ConeDataset generate_cone_dataset(const ConeSpec& spec, std::uint64_t seed) {
  if (spec.k_planted < 1) {
    throw DataError("cone spec needs k_planted >= 1");
  }
  if (spec.dimension < spec.k_planted + 1) {
    throw DataError("cone spec needs dimension >= k_planted + 1");
  }
  if (!(spec.sigma >= 0.0)) {
    throw DataError("cone spec needs sigma >= 0");
  }
  std::vector<std::size_t> counts = spec.cluster_counts;
  if (counts.empty()) {
    counts.assign(spec.k_planted, 50);
  }
  if (counts.size() != spec.k_planted) {
    throw DataError("cluster_counts must have k_planted entries");
  }

  Rng rng(seed);
  ConeDataset out;
  const std::size_t d = spec.dimension;

  Vector axis = spec.axis.empty() ? random_gaussian(d, rng) : spec.axis;
  require_dimension(axis, d, "cone axis");
  const double an = norm(axis);
  if (an == 0.0) {
    throw DataError("cone axis is zero");
  }
  if (!spec.axis.empty() && std::abs(an - 1.0) > 1e-12) {
    out.warnings.push_back("cone axis was not unit length; normalized");
  }
  for (double& x : axis) x /= an;

  std::vector<Vector> raw = spec.directions;
  if (raw.empty()) {
    for (std::size_t j = 0; j < spec.k_planted; ++j) {
      raw.push_back(random_gaussian(d, rng));
    }
  }
  if (raw.size() != spec.k_planted) {
    throw DataError("explicit directions must number k_planted");
  }
  for (const Vector& r : raw) require_dimension(r, d, "cone direction");
  std::vector<Vector> dirs = orthonormalize(std::move(raw), {axis});

  const double ct = std::cos(spec.axis_angle_deg * kDeg);
  const double st = std::sin(spec.axis_angle_deg * kDeg);
  for (const Vector& u : dirs) {
    Vector c(d);
    for (std::size_t i = 0; i < d; ++i) {
      c[i] = spec.scale * (axis[i] * ct + u[i] * st);
    }
    out.planted_means.push_back(std::move(c));
  }

  std::vector<int> labels;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    labels.insert(labels.end(), counts[j], static_cast<int>(j));
  }
  for (std::size_t i = labels.size(); i > 1; --i) {
    std::swap(labels[i - 1], labels[rng.below(i)]);
  }

  std::vector<Vector> diffs;
  diffs.reserve(labels.size());
  for (int z : labels) {
    Vector v = out.planted_means[static_cast<std::size_t>(z)];
    if (spec.sigma > 0.0) {
      for (double& x : v) x += spec.sigma * rng.normal();
    }
    diffs.push_back(std::move(v));
  }
  if (diffs.empty()) {
    throw DataError("cone spec produced no points");
  }
  out.set = make_difference_set(std::move(diffs));
  out.set.source_hash = difference_set_digest(out.set);
  out.labels = std::move(labels);
  out.axis = std::move(axis);
  out.directions = std::move(dirs);
  return out;
}

}  // namespace pds::simlab
