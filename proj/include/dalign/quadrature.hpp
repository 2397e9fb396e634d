#pragma once

#include <cstddef>
#include <vector>

namespace dalign::quad {

// Gauss-Legendre rule mapped to [0, 1]: sum_k weights[k] * g(nodes[k])
// approximates the integral of g over [0, 1] and is exact for polynomials of
// degree <= 2 * size - 1. Nodes are ascending and strictly inside (0, 1);
// the weights sum to 1.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

// Throws std::invalid_argument for n == 0.
GaussLegendre gauss_legendre_unit(std::size_t n);

}  // namespace dalign::quad
