// Compiled with -mavx2 (and without -mfma). Only reached after a runtime CPU
// check, so nothing here may run on the dispatch path before that.
#include "dalign/simd/kernels.hpp"

#include <immintrin.h>

namespace dalign::simd {
namespace {

inline double reduce_lanes(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, prod);
  }
  double total = reduce_lanes(acc);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double total = reduce_lanes(acc);
  for (; i < n; ++i) total += a[i];
  return total;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d scale = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(scale, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_into_avx2(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] += x[i];
}

FuzzyMasses fuzzy_masses_avx2(const double* a, const double* b, std::size_t n) {
  __m256d lo = _mm256_setzero_pd();
  __m256d hi = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    lo = _mm256_add_pd(lo, _mm256_min_pd(va, vb));
    hi = _mm256_add_pd(hi, _mm256_max_pd(va, vb));
  }
  FuzzyMasses out;
  out.intersection = reduce_lanes(lo);
  out.union_ = reduce_lanes(hi);
  for (; i < n; ++i) {
    out.intersection += a[i] < b[i] ? a[i] : b[i];
    out.union_ += a[i] > b[i] ? a[i] : b[i];
  }
  return out;
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{Isa::kAvx2, dot_avx2, sum_avx2, axpy_avx2, add_into_avx2,
                                 fuzzy_masses_avx2};
  return &table;
}

}  // namespace dalign::simd
