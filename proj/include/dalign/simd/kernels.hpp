#pragma once

// Data-parallel inner loops shared by the metric, relevance and microformer
// code. Each kernel has a scalar reference implementation and, where the
// target supports it, an AVX2 variant selected at runtime.
//
// Reduction order is part of the contract: reductions accumulate into four
// interleaved partial sums (element i goes to lane i % 4), the lanes are
// combined as (l0 + l1) + (l2 + l3), and the tail past the last full block of
// four is added sequentially. The AVX2 variants follow the same order with
// separate multiply and add instructions, so every variant is bit-identical
// to the scalar reference (the build disables FMA contraction).

#include <cstddef>
#include <span>
#include <string_view>

namespace dalign::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

struct FuzzyMasses {
  double intersection = 0.0;  // sum of element-wise min
  double union_ = 0.0;        // sum of element-wise max
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y += x
  void (*add_into)(const double* x, double* y, std::size_t n);
  FuzzyMasses (*fuzzy_masses)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in.
const KernelTable* avx2_kernels();

bool cpu_supports(Isa isa);

// The table used by the wrappers below. Chosen on first use: the best
// supported variant unless DALIGN_SIMD=scalar is set in the environment.
const KernelTable& active_kernels();

// Overrides the runtime choice. Returns false (and changes nothing) when the
// variant is unavailable on this build or CPU.
bool force_isa(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active_kernels().dot(a.data(), b.data(), a.size());
}

inline double sum(std::span<const double> a) {
  return active_kernels().sum(a.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active_kernels().axpy(alpha, x.data(), y.data(), x.size());
}

inline void add_into(std::span<const double> x, std::span<double> y) {
  active_kernels().add_into(x.data(), y.data(), x.size());
}

inline FuzzyMasses fuzzy_masses(std::span<const double> a, std::span<const double> b) {
  return active_kernels().fuzzy_masses(a.data(), b.data(), a.size());
}

}  // namespace dalign::simd
