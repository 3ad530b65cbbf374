#pragma once

#include "lphom/types.hpp"

#include <vector>

namespace lphom {

/// Gauss-Legendre rule on [0, 1] (Golub-Welsch).
struct Rule1D {
  std::vector<double> points;
  std::vector<double> weights;
};

Rule1D gauss_legendre(int n);

/// Tensor-product Gauss-Legendre rule on [0, 1]^d, weights summing to 1.
struct TensorRule {
  std::vector<VecN> points;
  std::vector<double> weights;
};

TensorRule tensor_gauss(int d, int n);

}  // namespace lphom
