#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "pds/simd/kernels.hpp"

namespace pds::simd {

#if defined(PDS_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(PDS_HAVE_NEON)
const KernelTable& neon_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(PDS_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(PDS_HAVE_NEON)
  return &neon_table();
#else
  return nullptr;
#endif
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "neon") return Isa::neon;
  throw std::invalid_argument("unknown kernel ISA '" + std::string(name) + "'");
}

namespace {

const KernelTable* lookup(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &scalar_kernels();
    case Isa::avx2:
      return avx2_kernels();
    case Isa::neon:
      return neon_kernels();
  }
  return nullptr;
}

const KernelTable* detect() {
  if (const char* env = std::getenv("PDS_KERNELS"); env != nullptr && *env != '\0') {
    const KernelTable* table = lookup(parse_isa(env));
    if (table == nullptr) {
      throw std::invalid_argument(std::string("PDS_KERNELS=") + env + " is not available here");
    }
    return table;
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  if (const KernelTable* t = neon_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> active{detect()};
  return active;
}

}  // namespace

const KernelTable& active_kernels() { return *slot().load(std::memory_order_acquire); }

void select_kernels(Isa isa) {
  const KernelTable* table = lookup(isa);
  if (table == nullptr) {
    throw std::invalid_argument("requested kernel ISA is not available on this machine");
  }
  slot().store(table, std::memory_order_release);
}

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
  if (const KernelTable* t = avx2_kernels()) out.push_back(t);
  if (const KernelTable* t = neon_kernels()) out.push_back(t);
  return out;
}

}  // namespace pds::simd
