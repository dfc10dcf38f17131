#pragma once
// Dense f64 vector helpers on top of the active SIMD kernel table.

#include <cstddef>
#include <span>
#include <vector>

namespace pds {

using Vector = std::vector<double>;
using VectorView = std::span<const double>;

double dot(VectorView x, VectorView y);
double squared_norm(VectorView x);
double norm(VectorView x);
double squared_distance(VectorView x, VectorView y);

// y += a * x
void axpy(double a, VectorView x, std::span<double> y);
Vector subtract(VectorView x, VectorView y);
Vector add(VectorView x, VectorView y);
Vector scaled(VectorView x, double a);

// Arithmetic mean of equally sized vectors; rows must be nonempty.
Vector mean_of(std::span<const Vector> rows);

// Throws DimensionError when x.size() != expected.
void require_dimension(VectorView x, std::size_t expected, const char* context);

}  // namespace pds
