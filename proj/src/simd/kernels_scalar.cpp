#include "dalign/simd/kernels.hpp"

namespace dalign::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int k = 0; k < 4; ++k) lane[k] += a[i + k] * b[i + k];
  }
  double total = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

double sum_scalar(const double* a, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int k = 0; k < 4; ++k) lane[k] += a[i + k];
  }
  double total = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) total += a[i];
  return total;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_into_scalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

// min/max spelled like the x86 MINPD/MAXPD definitions (second operand on
// ties and unordered comparisons).
inline double min_pd(double a, double b) { return a < b ? a : b; }
inline double max_pd(double a, double b) { return a > b ? a : b; }

FuzzyMasses fuzzy_masses_scalar(const double* a, const double* b, std::size_t n) {
  double lo[4] = {0.0, 0.0, 0.0, 0.0};
  double hi[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int k = 0; k < 4; ++k) {
      lo[k] += min_pd(a[i + k], b[i + k]);
      hi[k] += max_pd(a[i + k], b[i + k]);
    }
  }
  FuzzyMasses out;
  out.intersection = (lo[0] + lo[1]) + (lo[2] + lo[3]);
  out.union_ = (hi[0] + hi[1]) + (hi[2] + hi[3]);
  for (; i < n; ++i) {
    out.intersection += min_pd(a[i], b[i]);
    out.union_ += max_pd(a[i], b[i]);
  }
  return out;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::kScalar, dot_scalar, sum_scalar, axpy_scalar,
                                 add_into_scalar, fuzzy_masses_scalar};
  return table;
}

}  // namespace dalign::simd
