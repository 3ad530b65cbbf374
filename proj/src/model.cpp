#include "lphom/model.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lphom {

void Coefficients::validate() const {
  for (double v : {mu1, mu3, kappa1, kappa3, alpha, beta, dl, df, db})
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("reaction coefficients must be finite and non-negative");
  if (!(mu2 > 0.0) || !(kappa2 > 0.0)) throw InvalidArgument("mu2 and kappa2 must be positive");
}

long long step_count(double T, double dt) {
  if (T == 0.0) return 0;
  const double n = T / dt;
  const long long k = std::llround(n);
  if (k < 1 || std::abs(n - static_cast<double>(k)) > 1e-8 * std::max(1.0, n))
    throw InvalidArgument("T is not a multiple of dt");
  return k;
}

std::string at_time(const std::string& what, double t) {
  std::ostringstream os;
  os << what << " at t = " << t;
  return os.str();
}

double receptor_bound(const Coefficients& c, double r0, double T) {
  // p(r_b) - d_b r_b <= (L_p - d_b) r_b and -d_f r_f <= 0.
  return r0 * std::exp(std::max(c.p_lipschitz() - c.db, 0.0) * T);
}

double barrier_rate(const Coefficients& c, double Rbar, double gamma_max, double M) {
  if (!(M > 0.0)) return c.F_lipschitz();
  return c.F_lipschitz() + c.beta * Rbar * gamma_max / M;
}

struct DiffusionStepper::Factor {
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
};

DiffusionStepper::DiffusionStepper(const FvOperator& op, std::vector<double> theta, double dt, double tol)
    : theta_(std::move(theta)), tol_(tol) {
  if (static_cast<int>(theta_.size()) != op.size()) throw InvalidArgument("porosity vector does not match the operator");
  const double scale = dt / (op.grid.h * op.grid.h);
  system_ = scale * op.stiffness;
  for (int k = 0; k < op.size(); ++k) system_.coeffRef(k, k) += theta_[k];
  system_.makeCompressed();
  // The true residual cannot be resolved below rounding of |A| |x|.
  double norm_inf = 0.0;
  for (int k = 0; k < system_.outerSize(); ++k) {
    double row = 0.0;
    for (SpMat::InnerIterator it(system_, k); it; ++it) row += std::abs(it.value());
    norm_inf = std::max(norm_inf, row);
  }
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * norm_inf / std::max(1e-300, *std::min_element(theta_.begin(), theta_.end()));
  tol_ = std::max(tol_, floor);
  auto f = std::make_shared<Factor>();
  f->ldlt.compute(system_);
  if (f->ldlt.info() != Eigen::Success) throw SolverError("diffusion system factorization failed");
  factor_ = std::move(f);
}

int DiffusionStepper::solve(Vec& l) const {
  Vec b(l.size());
  for (int k = 0; k < l.size(); ++k) b(k) = theta_[k] * l(k);
  l = factor_->ldlt.solve(b);
  if ((b - system_ * l).norm() <= tol_ * b.norm()) return 0;
  const CgResult r = pcg(system_, b, l, tol_, 10 * static_cast<int>(l.size()) + 100, false);
  if (!r.converged) throw SolverError("diffusion solve did not converge: residual " + std::to_string(r.residual));
  return r.iterations;
}

}  // namespace lphom
