#include "lphom/micro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lphom {

namespace {

int cells_along(double extent, double h) {
  const double n = extent / h;
  const long long k = std::llround(n);
  if (k < 1 || std::abs(n - static_cast<double>(k)) > 1e-8 * std::max(1.0, n))
    throw InvalidArgument("domain extent is not a multiple of the grid spacing");
  return static_cast<int>(k);
}

void check_finite(const Vec& v, const char* name, double t) {
  if (!v.allFinite()) throw SolverError(at_time(std::string("NaN or Inf in ") + name, t));
}

void check_finite(const std::vector<double>& v, const char* name, double t) {
  for (double x : v)
    if (!std::isfinite(x)) throw SolverError(at_time(std::string("NaN or Inf in ") + name, t));
}

std::shared_ptr<const MicroGrid> make_grid(const MicroConfig& cfg) {
  cfg.validate();
  return std::make_shared<const MicroGrid>(build_micro_grid(cfg));
}

}  // namespace

void MicroConfig::validate() const {
  if (domain.dim() != 2 || tf.dim != 2 || cell.dim != 2) throw InvalidArgument("the micro solver is two-dimensional");
  if (!(eps > 0.0) || eps > 1.0) throw InvalidArgument("eps must lie in (0, 1]");
  if (!(r > 0.0) || r >= 1.0) throw InvalidArgument("r must lie in (0, 1)");
  if (cells_per_eps < 8) throw InvalidArgument("h must not exceed eps/8 (cells_per_eps >= 8)");
  if (!(T >= 0.0)) throw InvalidArgument("T must be non-negative");
  if (T > 0.0 && !(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (sample_every < 1) throw InvalidArgument("sample_every must be at least 1");
  if (!(cg_tol > 0.0)) throw InvalidArgument("cg_tol must be positive");
  if (init.rf0 < 0.0 || init.rb0 < 0.0) throw InvalidArgument("receptor initial data must be non-negative");
  coef.validate();
  cell.validate();
  step_count(T, dt);
  cells_along(domain.hi(0) - domain.lo(0), h());
  cells_along(domain.hi(1) - domain.lo(1), h());
}

double MicroGrid::boundary_length() const {
  double s = 0.0;
  for (const BoundaryFace& f : faces) s += f.length;
  return s;
}

double analytic_boundary_measure(const Partition& partition, const UnitCellSpec& cell) {
  double total = 0.0;
  for (const Subdomain& s : partition.subdomains)
    total += s.hat_count * gamma_measure(cell, to_mat2(s.D), to_mat2(s.K));
  return partition.eps * total;
}

MicroGrid build_micro_grid(const MicroConfig& cfg) {
  MicroGrid g;
  const double h = cfg.h();
  const int nx = cells_along(cfg.domain.hi(0) - cfg.domain.lo(0), h);
  const int ny = cells_along(cfg.domain.hi(1) - cfg.domain.lo(1), h);
  g.grid = Grid2::over(to_vec2(cfg.domain.lo), to_vec2(cfg.domain.hi), nx, ny);
  g.partition = build_partition(cfg.domain, cfg.eps, cfg.r, cfg.tf, cfg.anchor);

  g.fluid.assign(g.grid.size(), 1);
  std::vector<Mat2> coeff(g.grid.size());
  for (int c = 0; c < g.grid.size(); ++c) {
    const Location loc = locate(g.partition, from_vec2(g.grid.center(c)));
    const Subdomain& s = g.partition.subdomains[loc.n];
    if (!loc.in_lambda && g.partition.subdomains.size() > 0 && cfg.cell.in_inclusion(loc.y_local, s.Kinv)) g.fluid[c] = 0;
    // A^eps = L_0(A): macro argument frozen at the anchor of the subdomain.
    Mat2 a = cfg.A(s.anchor, to_mat2(s.D) * to_vec2(loc.y_local));
    a(0, 1) = a(1, 0) = 0.5 * (a(0, 1) + a(1, 0));
    coeff[c] = a;
  }
  if (std::count(g.fluid.begin(), g.fluid.end(), 1) == 0) throw InvalidArgument("no fluid cells");
  if (count_components(g.grid, g.fluid, false) != 1) throw InvalidArgument("fluid region is disconnected");
  g.op = assemble_fv(g.grid, g.fluid, coeff, false);

  for (const Subdomain& s : g.partition.subdomains) {
    if (s.hat_count == 0 || !cfg.cell.has_inclusion()) continue;
    const double fluid_volume = s.detD * (1.0 - cfg.cell.inclusion_volume(s.K));
    g.gamma_max = std::max(g.gamma_max, gamma_measure(cfg.cell, to_mat2(s.D), to_mat2(s.K)) / fluid_volume);
  }
  if (!cfg.cell.has_inclusion()) return g;

  std::vector<double> nodes((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const Location loc = locate(g.partition, from_vec2(g.grid.node(i, j)));
      nodes[i + (nx + 1) * j] =
          loc.in_lambda ? 1.0 : cfg.cell.level_set(loc.y_local, g.partition.subdomains[loc.n].Kinv);
    }
  for (const Segment& seg : marching_squares(g.grid, nodes)) {
    const Vec2 m = seg.midpoint();
    const int ci = std::clamp(static_cast<int>(std::floor((m.x() - g.grid.lo.x()) / h)), 0, nx - 1);
    const int cj = std::clamp(static_cast<int>(std::floor((m.y() - g.grid.lo.y()) / h)), 0, ny - 1);
    int best = -1;
    if (g.fluid[g.grid.index(ci, cj)]) {
      best = g.grid.index(ci, cj);
    } else {
      double best_d = std::numeric_limits<double>::infinity();
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int i = ci + di, j = cj + dj;
          if (i < 0 || j < 0 || i >= nx || j >= ny) continue;
          const int c = g.grid.index(i, j);
          if (!g.fluid[c]) continue;
          const double d = (g.grid.center(c) - m).norm();
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
    }
    if (best < 0) {
      g.unassigned_length += seg.length();
      continue;
    }
    BoundaryFace f;
    f.unknown = g.op.unknown[best];
    f.subdomain = g.partition.subdomain_index(from_vec2(m));
    f.length = seg.length();
    f.mid = m;
    g.faces.push_back(f);
  }
  return g;
}

MicroState initial_state(const MicroGrid& g, const MicroConfig& cfg) {
  MicroState s;
  s.l.resize(g.op.size());
  for (int k = 0; k < g.op.size(); ++k) s.l(k) = cfg.init.l0(from_vec2(g.grid.center(g.op.cells[k])));
  s.rf.assign(g.faces.size(), cfg.init.rf0);
  s.rb.assign(g.faces.size(), cfg.init.rb0);
  check_finite(s.l, "l0", 0.0);
  return s;
}

MicroSolver::MicroSolver(MicroConfig cfg) : MicroSolver(cfg, make_grid(cfg)) {}

MicroSolver::MicroSolver(MicroConfig cfg, std::shared_ptr<const MicroGrid> grid)
    : cfg_(std::move(cfg)),
      grid_(std::move(grid)),
      diffusion_(grid_->op, std::vector<double>(grid_->op.size(), 1.0), cfg_.dt > 0.0 ? cfg_.dt : 1.0, cfg_.cg_tol),
      state_(initial_state(*grid_, cfg_)) {}

StepReport MicroSolver::step() {
  const MicroGrid& g = *grid_;
  const Coefficients& c = cfg_.coef;
  const double dt = cfg_.dt, eps = cfg_.eps, h2 = g.grid.cell_area();
  MicroState& s = state_;
  StepReport rep;

  Vec lstar = s.l;
  std::vector<double> deposit_rate(s.l.size(), 0.0);
  for (int k = 0; k < s.l.size(); ++k) {
    const double src = c.F(s.l(k)) - c.dl * s.l(k);
    lstar(k) += dt * src;
    rep.bulk_source += h2 * src;
  }
  for (std::size_t f = 0; f < g.faces.size(); ++f) {
    const BoundaryFace& face = g.faces[f];
    const double lf = s.l(face.unknown), rf = s.rf[f], rb = s.rb[f];
    const double flux = c.beta * rb - c.alpha * lf * rf;
    lstar(face.unknown) += dt * eps * flux * face.length / h2;
    rep.boundary_source += eps * flux * face.length;
    deposit_rate[face.unknown] += eps * c.alpha * rf * face.length / h2;
    s.rf[f] = rf + dt * (c.p(rb) - c.alpha * lf * rf + c.beta * rb - c.df * rf);
    s.rb[f] = rb + dt * (c.alpha * lf * rf - c.beta * rb - c.db * rb);
    rep.max_rate = std::max({rep.max_rate, c.alpha * lf + c.df, c.beta + c.db + c.p_lipschitz()});
  }
  for (double d : deposit_rate) rep.max_rate = std::max(rep.max_rate, c.F_lipschitz() + c.dl + d);
  check_finite(lstar, "l", s.t);
  check_finite(s.rf, "r_f", s.t);
  check_finite(s.rb, "r_b", s.t);

  rep.cg_iterations = diffusion_.solve(lstar);
  s.l = std::move(lstar);
  check_finite(s.l, "l", s.t);
  s.t += dt;
  return rep;
}

double micro_energy(const MicroState& s, const MicroGrid& g) { return fv_energy(g.op, s.l, true); }

double micro_mass(const MicroState& s, const MicroGrid& g) { return g.grid.cell_area() * s.l.sum(); }

double MicroSolver::energy() const { return micro_energy(state_, *grid_); }

Observation MicroSolver::observe() const {
  const MicroGrid& g = *grid_;
  Observation o;
  o.t = state_.t;
  o.l2 = std::sqrt(g.grid.cell_area() * state_.l.squaredNorm());
  o.min_l = state_.l.size() ? state_.l.minCoeff() : 0.0;
  o.max_l = state_.l.size() ? state_.l.maxCoeff() : 0.0;
  o.energy = energy();
  o.min_r = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < g.faces.size(); ++f) {
    o.rf_mass += cfg_.eps * state_.rf[f] * g.faces[f].length;
    o.rb_mass += cfg_.eps * state_.rb[f] * g.faces[f].length;
    o.min_r = std::min({o.min_r, state_.rf[f], state_.rb[f]});
  }
  if (g.faces.empty()) o.min_r = 0.0;
  return o;
}

RunResult run_micro(const MicroConfig& cfg, const MicroObserver& observer) {
  MicroSolver solver(cfg);
  return run_micro(solver, observer);
}

RunResult run_micro(MicroSolver& solver, const MicroObserver& observer) {
  const MicroConfig& cfg = solver.config();
  const double Rbar = receptor_bound(cfg.coef, cfg.init.rf0 + cfg.init.rb0, cfg.T);
  return run_loop<MicroSolver>(solver, observer, Rbar, solver.grid().gamma_max);
}

double MicroSolver::max_receptor_sum() const {
  double m = 0.0;
  for (std::size_t f = 0; f < state_.rf.size(); ++f) m = std::max(m, state_.rf[f] + state_.rb[f]);
  return m;
}

std::vector<double> micro_field(const MicroSolver& solver) {
  return to_cells(solver.grid().op, solver.state().l, std::numeric_limits<double>::quiet_NaN());
}

}  // namespace lphom
