#include "pds/vector_ops.hpp"

#include <cmath>

#include "pds/errors.hpp"
#include "pds/simd/kernels.hpp"

namespace pds {

void require_dimension(VectorView x, std::size_t expected, const char* context) {
  if (x.size() != expected) {
    throw DimensionError(expected, x.size(), context);
  }
}

double dot(VectorView x, VectorView y) {
  require_dimension(y, x.size(), "dot");
  return simd::active_kernels().dot(x.data(), y.data(), x.size());
}

double squared_norm(VectorView x) { return simd::active_kernels().dot(x.data(), x.data(), x.size()); }

double norm(VectorView x) { return std::sqrt(squared_norm(x)); }

double squared_distance(VectorView x, VectorView y) {
  require_dimension(y, x.size(), "squared_distance");
  return simd::active_kernels().squared_distance(x.data(), y.data(), x.size());
}

void axpy(double a, VectorView x, std::span<double> y) {
  require_dimension(x, y.size(), "axpy");
  simd::active_kernels().axpy(a, x.data(), y.data(), x.size());
}

Vector subtract(VectorView x, VectorView y) {
  require_dimension(y, x.size(), "subtract");
  Vector out(x.size());
  simd::active_kernels().sub(x.data(), y.data(), out.data(), x.size());
  return out;
}

Vector add(VectorView x, VectorView y) {
  require_dimension(y, x.size(), "add");
  Vector out(x.begin(), x.end());
  simd::active_kernels().axpy(1.0, y.data(), out.data(), out.size());
  return out;
}

Vector scaled(VectorView x, double a) {
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = a * x[i];
  }
  return out;
}

Vector mean_of(std::span<const Vector> rows) {
  if (rows.empty()) {
    throw DataError("mean of an empty set");
  }
  const std::size_t d = rows.front().size();
  Vector acc(d, 0.0);
  for (const Vector& r : rows) {
    require_dimension(r, d, "mean_of");
    for (std::size_t i = 0; i < d; ++i) {
      acc[i] += r[i];
    }
  }
  const double n = static_cast<double>(rows.size());
  for (double& v : acc) {
    v /= n;
  }
  return acc;
}

}  // namespace pds
