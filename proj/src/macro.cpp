#include "lphom/macro.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace lphom {

namespace {

int cells_along(double extent, double h) {
  const double n = extent / h;
  const long long k = std::llround(n);
  if (k < 1 || std::abs(n - static_cast<double>(k)) > 1e-8 * std::max(1.0, n))
    throw InvalidArgument("domain extent is not a multiple of H");
  return static_cast<int>(k);
}

Grid2 macro_grid(const MacroConfig& cfg) {
  const int nx = cells_along(cfg.domain.hi(0) - cfg.domain.lo(0), cfg.H);
  const int ny = cells_along(cfg.domain.hi(1) - cfg.domain.lo(1), cfg.H);
  return Grid2::over(to_vec2(cfg.domain.lo), to_vec2(cfg.domain.hi), nx, ny);
}

// Cache key: D, K and A(x, D y) at a few probe points of the reference cell.
std::vector<double> cache_key(const MacroConfig& cfg, const VecN& x) {
  const Mat2 D = to_mat2(cfg.tf.D(x)), K = to_mat2(cfg.tf.K(x));
  std::vector<double> key(D.data(), D.data() + 4);
  key.insert(key.end(), K.data(), K.data() + 4);
  for (double py : {0.125, 0.5, 0.875})
    for (double px : {0.125, 0.5, 0.875}) {
      const Mat2 a = cfg.A(x, D * Vec2(px, py));
      key.insert(key.end(), a.data(), a.data() + 4);
    }
  return key;
}

void check_finite(const Vec& v, const char* name, double t) {
  if (!v.allFinite()) throw SolverError(at_time(std::string("NaN or Inf in ") + name, t));
}

void check_finite(const std::vector<double>& v, const char* name, double t) {
  for (double x : v)
    if (!std::isfinite(x)) throw SolverError(at_time(std::string("NaN or Inf in ") + name, t));
}

std::shared_ptr<const MacroModel> make_model(const MacroConfig& cfg) {
  cfg.validate();
  return std::make_shared<const MacroModel>(assemble_macro(cfg));
}

}  // namespace

void MacroConfig::validate() const {
  if (domain.dim() != 2 || tf.dim != 2 || cell.dim != 2) throw InvalidArgument("the macro solver is two-dimensional");
  if (!(H > 0.0)) throw InvalidArgument("H must be positive");
  if (!(T >= 0.0)) throw InvalidArgument("T must be non-negative");
  if (T > 0.0 && !(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (sample_every < 1) throw InvalidArgument("sample_every must be at least 1");
  if (n_gamma < 1) throw InvalidArgument("n_gamma must be at least 1");
  if (!(cg_tol > 0.0)) throw InvalidArgument("cg_tol must be positive");
  if (init.rf0 < 0.0 || init.rb0 < 0.0) throw InvalidArgument("receptor initial data must be non-negative");
  if (cell.shape == InclusionShape::kFiber) throw InvalidArgument("the macro boundary quadrature supports disk inclusions only");
  coef.validate();
  cell.validate();
  step_count(T, dt);
  macro_grid(*this);
}

double MacroModel::gamma_total(int node) const {
  double s = 0.0;
  for (int k = 0; k < n_gamma; ++k) s += gamma_w[node * n_gamma + k];
  return s;
}

std::vector<VecN> macro_nodes(const MacroConfig& cfg) {
  const Grid2 g = macro_grid(cfg);
  std::vector<VecN> pts(g.size());
  for (int c = 0; c < g.size(); ++c) pts[c] = from_vec2(g.center(c));
  return pts;
}

MacroModel assemble_macro(const MacroConfig& cfg) {
  MacroModel m;
  m.grid = macro_grid(cfg);
  const int n = m.grid.size();
  const std::vector<VecN> pts = macro_nodes(cfg);

  std::vector<std::optional<EffectiveTensor>> tensors(n);
  if (cfg.tensors) {
    if (static_cast<int>(cfg.tensors->tensors.size()) != n) throw InvalidArgument("tensor field does not cover the macro nodes");
    for (int k = 0; k < n; ++k) {
      if (!cfg.tensors->tensors[k]) throw InvalidArgument("no effective tensor at node " + std::to_string(k) + ": " + cfg.tensors->errors[k]);
      tensors[k] = cfg.tensors->tensors[k];
    }
  } else {
    std::map<std::vector<double>, EffectiveTensor> cache;
    for (int k = 0; k < n; ++k) {
      std::vector<double> key;
      if (cfg.tensor_cache) {
        key = cache_key(cfg, pts[k]);
        if (auto it = cache.find(key); it != cache.end()) {
          tensors[k] = it->second;
          continue;
        }
      }
      try {
        tensors[k] = effective_tensor(solve_cell(pts[k], cfg.A, cfg.tf, cfg.cell, cfg.cell_opt), cfg.cell);
      } catch (const Error& e) {
        throw InvalidArgument("cell problem failed at node " + std::to_string(k) + ": " + e.what());
      }
      ++m.cell_solves;
      if (cfg.tensor_cache) cache.emplace(std::move(key), *tensors[k]);
    }
  }

  m.A.resize(n);
  m.theta.resize(n);
  m.detD.resize(n);
  const bool coupled = cfg.boundary_terms && cfg.cell.has_inclusion();
  m.n_gamma = coupled ? cfg.n_gamma : 0;
  m.gamma_w.assign(static_cast<std::size_t>(n) * m.n_gamma, 0.0);
  const double dth = 2.0 * std::numbers::pi / cfg.n_gamma;
  for (int k = 0; k < n; ++k) {
    const EffectiveTensor& t = *tensors[k];
    Eigen::SelfAdjointEigenSolver<Mat2> es(t.A);
    if (!(es.eigenvalues()(0) > 0.0)) throw InvalidArgument("effective tensor is not positive definite at node " + std::to_string(k));
    m.A[k] = t.A;
    m.theta[k] = cfg.porosity == GeometryMode::kDiscrete ? t.theta_discrete : t.theta;
    m.detD[k] = std::abs(cfg.tf.D(pts[k]).determinant());
    if (!coupled) continue;
    const Mat2 DK = to_mat2(cfg.tf.D(pts[k])) * to_mat2(cfg.tf.K(pts[k]));
    double total = 0.0;
    for (int s = 0; s < cfg.n_gamma; ++s) {
      const double th = (s + 0.5) * dth;
      const double w = (DK * Vec2(-std::sin(th), std::cos(th))).norm() * cfg.cell.radius * dth;
      m.gamma_w[static_cast<std::size_t>(k) * m.n_gamma + s] = w;
      total += w;
    }
    if (cfg.gamma == GeometryMode::kDiscrete && total > 0.0) {
      const double scale = t.gamma_discrete / total;
      for (int s = 0; s < cfg.n_gamma; ++s) m.gamma_w[static_cast<std::size_t>(k) * m.n_gamma + s] *= scale;
      total = t.gamma_discrete;
    }
    m.gamma_max = std::max(m.gamma_max, total / (m.detD[k] * m.theta[k]));
  }
  m.op = assemble_fv(m.grid, std::vector<std::uint8_t>(n, 1), m.A, false);
  return m;
}

MacroSolver::MacroSolver(MacroConfig cfg) : MacroSolver(cfg, make_model(cfg)) {}

MacroSolver::MacroSolver(MacroConfig cfg, std::shared_ptr<const MacroModel> model)
    : cfg_(std::move(cfg)),
      model_(std::move(model)),
      diffusion_(model_->op, model_->theta, cfg_.dt > 0.0 ? cfg_.dt : 1.0, cfg_.cg_tol) {
  const MacroModel& m = *model_;
  state_.l.resize(m.size());
  for (int k = 0; k < m.size(); ++k) state_.l(k) = cfg_.init.l0(from_vec2(m.grid.center(k)));
  state_.rf.assign(m.gamma_w.size(), cfg_.init.rf0);
  state_.rb.assign(m.gamma_w.size(), cfg_.init.rb0);
  check_finite(state_.l, "l0", 0.0);
}

StepReport MacroSolver::step() {
  const MacroModel& m = *model_;
  const Coefficients& c = cfg_.coef;
  const double dt = cfg_.dt, H2 = m.grid.cell_area();
  MacroState& s = state_;
  StepReport rep;

  Vec lstar = s.l;
  for (int k = 0; k < m.size(); ++k) {
    const double lk = s.l(k), th = m.theta[k];
    const double bulk = th * (c.F(lk) - c.dl * lk);
    double boundary = 0.0, deposit_rate = 0.0;
    for (int q = 0; q < m.n_gamma; ++q) {
      const std::size_t i = static_cast<std::size_t>(k) * m.n_gamma + q;
      const double w = m.gamma_w[i] / m.detD[k];
      const double rf = s.rf[i], rb = s.rb[i];
      boundary += w * (c.beta * rb - c.alpha * rf * lk);
      deposit_rate += w * c.alpha * rf;
      s.rf[i] = rf + dt * (c.p(rb) - c.alpha * lk * rf + c.beta * rb - c.df * rf);
      s.rb[i] = rb + dt * (c.alpha * lk * rf - c.beta * rb - c.db * rb);
      rep.max_rate = std::max({rep.max_rate, c.alpha * lk + c.df, c.beta + c.db + c.p_lipschitz()});
    }
    lstar(k) += dt * (bulk + boundary) / th;
    rep.bulk_source += H2 * bulk;
    rep.boundary_source += H2 * boundary;
    rep.max_rate = std::max(rep.max_rate, c.F_lipschitz() + c.dl + deposit_rate / th);
  }
  check_finite(lstar, "l", s.t);
  check_finite(s.rf, "r_f", s.t);
  check_finite(s.rb, "r_b", s.t);
  rep.cg_iterations = diffusion_.solve(lstar);
  s.l = std::move(lstar);
  check_finite(s.l, "l", s.t);
  s.t += dt;
  return rep;
}

double MacroSolver::energy() const { return fv_energy(model_->op, state_.l, true); }

double MacroSolver::mass() const {
  double s = 0.0;
  for (int k = 0; k < model_->size(); ++k) s += model_->theta[k] * state_.l(k);
  return s * model_->grid.cell_area();
}

double MacroSolver::max_receptor_sum() const {
  double m = 0.0;
  for (std::size_t i = 0; i < state_.rf.size(); ++i) m = std::max(m, state_.rf[i] + state_.rb[i]);
  return m;
}

Observation MacroSolver::observe() const {
  const MacroModel& m = *model_;
  Observation o;
  o.t = state_.t;
  const double H2 = m.grid.cell_area();
  double l2 = 0.0;
  for (int k = 0; k < m.size(); ++k) l2 += H2 * m.theta[k] * state_.l(k) * state_.l(k);
  o.l2 = std::sqrt(l2);
  o.min_l = state_.l.minCoeff();
  o.max_l = state_.l.maxCoeff();
  o.energy = energy();
  o.min_r = state_.rf.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state_.rf.size(); ++i) {
    const int k = static_cast<int>(i) / m.n_gamma;
    const double w = H2 * m.gamma_w[i] / m.detD[k];
    o.rf_mass += w * state_.rf[i];
    o.rb_mass += w * state_.rb[i];
    o.min_r = std::min({o.min_r, state_.rf[i], state_.rb[i]});
  }
  return o;
}

RunResult run_macro(const MacroConfig& cfg, const MacroObserver& observer) {
  MacroSolver solver(cfg);
  return run_macro(solver, observer);
}

RunResult run_macro(MacroSolver& solver, const MacroObserver& observer) {
  const MacroConfig& cfg = solver.config();
  const double Rbar = receptor_bound(cfg.coef, cfg.init.rf0 + cfg.init.rb0, cfg.T);
  return run_loop<MacroSolver>(solver, observer, Rbar, solver.model().gamma_max);
}

GridFunction macro_field(const MacroSolver& solver) {
  GridFunction f;
  f.grid = solver.model().grid;
  f.values.assign(solver.state().l.data(), solver.state().l.data() + solver.state().l.size());
  f.tags.assign(f.grid.size(), CellTag::kFluid);
  return f;
}

}  // namespace lphom
