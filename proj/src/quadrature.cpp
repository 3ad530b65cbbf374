#include "lphom/quadrature.hpp"

#include "lphom/multi_index.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace lphom {

Rule1D gauss_legendre(int n) {
  if (n < 1) throw InvalidArgument("Gauss-Legendre rule needs at least one point");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule1D r;
  for (int k = 0; k < n; ++k) {
    const double v = es.eigenvectors()(0, k);
    r.points.push_back(0.5 * (es.eigenvalues()(k) + 1.0));
    r.weights.push_back(v * v);  // 2 v^2 on [-1, 1], halved on [0, 1]
  }
  return r;
}

TensorRule tensor_gauss(int d, int n) {
  const Rule1D g = gauss_legendre(n);
  TensorRule t;
  for_each_index(IVecN::Zero(d), IVecN::Constant(d, n - 1), [&](const IVecN& k) {
    VecN p(d);
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      p(a) = g.points[k(a)];
      w *= g.weights[k(a)];
    }
    t.points.push_back(p);
    t.weights.push_back(w);
  });
  return t;
}

}  // namespace lphom
