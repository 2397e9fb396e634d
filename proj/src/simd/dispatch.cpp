#include <atomic>
#include <cstdlib>
#include <string_view>

#include "dalign/simd/kernels.hpp"

namespace dalign::simd {

#ifndef DALIGN_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif

namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &scalar_kernels();
    case Isa::kAvx2:
      return cpu_supports(Isa::kAvx2) ? avx2_kernels() : nullptr;
  }
  return nullptr;
}

const KernelTable* select_default() {
  if (const char* env = std::getenv("DALIGN_SIMD"); env != nullptr) {
    if (std::string_view(env) == "scalar") return &scalar_kernels();
  }
  if (const KernelTable* t = table_for(Isa::kAvx2); t != nullptr) return t;
  return &scalar_kernels();
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(DALIGN_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      return avx2_kernels() != nullptr && __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& active_kernels() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    const KernelTable* chosen = select_default();
    // Concurrent first calls pick the same table, so a lost race is harmless.
    g_active.compare_exchange_strong(t, chosen, std::memory_order_acq_rel);
    t = g_active.load(std::memory_order_acquire);
  }
  return *t;
}

bool force_isa(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) return false;
  g_active.store(t, std::memory_order_release);
  return true;
}

}  // namespace dalign::simd
