#include "dalign/tensor.hpp"

#include <stdexcept>

#include "dalign/simd/kernels.hpp"

namespace dalign::nn {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double coeff = a(i, p);
      if (coeff != 0.0) simd::axpy(coeff, b.row(p), dst);
    }
  }
  return out;
}

void matmul_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    throw std::invalid_argument("matmul_tn_accumulate: shape mismatch");
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto src = b.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double coeff = a(i, p);
      if (coeff != 0.0) simd::axpy(coeff, src, out.row(p));
    }
  }
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: shape mismatch");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = simd::dot(a.row(i), b.row(j));
  }
  return out;
}

}  // namespace dalign::nn
