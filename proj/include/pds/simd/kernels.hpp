#pragma once
// f64 inner-loop kernels with a scalar reference and ISA-specific variants.
//
// Every hot loop in the toolkit (k-means distances, projections, the toy
// decoder's matvecs) goes through the active KernelTable. The scalar table is
// the reference; SIMD tables are checked against it in tests/unit/test_kernels.
//
// Selection happens once, on first use: the best ISA the CPU reports, unless
// the PDS_KERNELS environment variable names one ("scalar", "avx2", "neon").
// Results are deterministic for a fixed table; different tables may differ in
// the last bits because reductions are reassociated.

#include <cstddef>
#include <string_view>
#include <vector>

namespace pds::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  const char* name;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i (x[i] - y[i])^2
  double (*squared_distance)(const double* x, const double* y, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out[i] = x[i] - y[i]
  void (*sub)(const double* x, const double* y, double* out, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

const KernelTable& active_kernels();

// Overrides the process-wide selection. Throws std::invalid_argument if the
// requested ISA is unavailable on this machine.
void select_kernels(Isa isa);

std::vector<const KernelTable*> available_kernels();

Isa parse_isa(std::string_view name);

}  // namespace pds::simd
