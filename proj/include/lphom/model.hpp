#pragma once

// Reaction terms of the ligand-receptor model, the a-priori bounds derived
// from them, the observable record shared by the micro and macro solvers and
// the backward-Euler diffusion stepper both use.

#include "lphom/fv.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace lphom {

struct Coefficients {
  double mu1 = 1.0, mu2 = 1.0, mu3 = 1.0;           // F(l) = mu1 l / (mu2 + mu3 l)
  double kappa1 = 1.0, kappa2 = 1.0, kappa3 = 1.0;  // p(r) = kappa1 r / (kappa2 + kappa3 r)
  double alpha = 1.0;
  double beta = 1.0;
  double dl = 0.1, df = 0.1, db = 0.1;

  double F(double l) const { return mu1 * l / (mu2 + mu3 * l); }
  double p(double r) const { return kappa1 * r / (kappa2 + kappa3 * r); }
  /// Lipschitz constants on [0, inf).
  double F_lipschitz() const { return mu1 / mu2; }
  double p_lipschitz() const { return kappa1 / kappa2; }
  void validate() const;
};

struct InitialData {
  std::function<double(const VecN&)> l0 = [](const VecN&) { return 1.0; };
  double rf0 = 1.0;
  double rb0 = 0.0;
};

/// Bound on r_f + r_b over [0, T]: d/dt (r_f + r_b) = p(r_b) - d_f r_f - d_b r_b.
double receptor_bound(const Coefficients& c, double r0, double T);

/// Growth rate B of the L-infinity barrier M e^{Bt}: B = sup F(s)/s +
/// beta Rbar gamma_max / M, with gamma_max the largest boundary measure per
/// unit fluid volume.
double barrier_rate(const Coefficients& c, double Rbar, double gamma_max, double M);

struct Observation {
  double t = 0.0;
  double l2 = 0.0;
  double min_l = 0.0;
  double max_l = 0.0;
  double energy = 0.0;
  double rf_mass = 0.0;
  double rb_mass = 0.0;
  double min_r = 0.0;
};

struct RunResult {
  std::vector<Observation> series;
  double energy_time_integral = 0.0;  // trapezoidal in t
  double barrier_M = 0.0;
  double barrier_B = 0.0;
  bool ok = true;
  std::string failure;  // first invariant violation, with its time
  int steps = 0;
  long long cg_iterations = 0;
};

struct StepReport {
  double bulk_source = 0.0;      // volume integral of the reaction term
  double boundary_source = 0.0;  // boundary flux integral
  double max_rate = 0.0;         // largest explicit reaction rate seen
  int cg_iterations = 0;
};

/// Number of steps of size dt in [0, T]; throws unless T is a multiple of dt.
long long step_count(double T, double dt);

std::string at_time(const std::string& what, double t);

/// Time loop shared by the micro and macro solvers. Solver provides
/// config() (T, dt, sample_every), step(), observe(), state().l and
/// max_receptor_sum(). The observer sees the state at t = 0 and after every
/// step. The run stops at the first invariant violation.
template <class Solver>
RunResult run_loop(Solver& solver, const std::function<void(const Solver&)>& observer, double Rbar, double gamma_max) {
  const auto& cfg = solver.config();
  RunResult res;
  const auto& l0 = solver.state().l;
  res.barrier_M = std::max(0.0, l0.size() ? l0.maxCoeff() : 0.0);
  res.barrier_B = barrier_rate(cfg.coef, Rbar, gamma_max, res.barrier_M);

  auto check = [&](const Observation& o) {
    if (o.min_l < -1e-12) return at_time("negative ligand concentration " + std::to_string(o.min_l), o.t);
    if (o.min_r < -1e-12) return at_time("negative receptor density " + std::to_string(o.min_r), o.t);
    if (o.max_l > res.barrier_M * std::exp(res.barrier_B * o.t) + 1e-6)
      return at_time("L-infinity barrier exceeded: max l = " + std::to_string(o.max_l), o.t);
    if (solver.max_receptor_sum() > Rbar * (1.0 + 1e-12) + 1e-12) return at_time("receptor bound exceeded", o.t);
    return std::string();
  };

  Observation o = solver.observe();
  res.series.push_back(o);
  if (observer) observer(solver);
  res.failure = check(o);
  const long long n = step_count(cfg.T, cfg.dt);
  double e_prev = o.energy;
  for (long long k = 1; k <= n && res.failure.empty(); ++k) {
    const StepReport rep = solver.step();
    res.cg_iterations += rep.cg_iterations;
    ++res.steps;
    o = solver.observe();
    res.energy_time_integral += 0.5 * cfg.dt * (e_prev + o.energy);
    e_prev = o.energy;
    if (observer) observer(solver);
    if (cfg.dt * rep.max_rate > 0.5)
      res.failure = at_time("reaction step budget exceeded (dt * rate = " + std::to_string(cfg.dt * rep.max_rate) + ")", o.t);
    else
      res.failure = check(o);
    if (k % cfg.sample_every == 0 || k == n || !res.failure.empty()) res.series.push_back(o);
  }
  res.ok = res.failure.empty();
  return res;
}

/// Backward Euler for diag(theta) l_t + S l / h^2 = f:
/// (diag(theta) + dt S / h^2) l_new = diag(theta) l* with l* already carrying
/// the explicit sources.
class DiffusionStepper {
 public:
  /// The constant system is factored once (sparse LDL^T). tol is the relative
  /// residual accepted after the direct solve, raised to the rounding floor
  /// 64 u |A|_inf / min theta; above it the solve is polished with PCG.
  DiffusionStepper(const FvOperator& op, std::vector<double> theta, double dt, double tol);
  /// Solves in place; returns PCG iterations spent polishing (usually 0).
  int solve(Vec& l) const;
  const std::vector<double>& theta() const { return theta_; }

 private:
  struct Factor;
  SpMat system_;
  std::shared_ptr<const Factor> factor_;
  std::vector<double> theta_;
  double tol_;
};

}  // namespace lphom
