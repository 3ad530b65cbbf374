#include "lphom/study.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <numbers>
#include <thread>

namespace lphom {

namespace {

double psi(const VecN& x, const VecN& y) {
  return (1.0 + x(0)) * (1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * y(0)) + 0.25 * std::sin(2.0 * std::numbers::pi * y(1)));
}

struct MacroTrajectory {
  std::vector<GridFunction> snapshots;  // one per macro step, t = k dt
  double dt = 0.0;
  RunResult run;
  double receptor_pairing = 0.0;  // |Y_x|^{-1} int_Omega int_Gamma_x r_b psi at T
  int cell_solves = 0;
};

MacroTrajectory run_macro_trajectory(const StudyConfig& st) {
  MacroTrajectory tr;
  MacroConfig mc = st.macro_config();
  tr.dt = mc.dt;
  MacroSolver solver(mc);
  tr.cell_solves = solver.model().cell_solves;
  tr.run = run_macro(solver, [&](const MacroSolver& s) { tr.snapshots.push_back(macro_field(s)); });
  if (!tr.run.ok) return tr;

  const MacroModel& m = solver.model();
  const double dth = 2.0 * std::numbers::pi / std::max(1, m.n_gamma);
  for (int k = 0; k < m.size(); ++k) {
    const VecN x = from_vec2(m.grid.center(k));
    const MatN K = mc.tf.K(x);
    for (int q = 0; q < m.n_gamma; ++q) {
      const double th = (q + 0.5) * dth;
      const VecN y = mc.cell.center() + mc.cell.radius * K * make_vec(std::cos(th), std::sin(th));
      const std::size_t i = static_cast<std::size_t>(k) * m.n_gamma + q;
      tr.receptor_pairing += m.grid.cell_area() * m.gamma_w[i] / m.detD[k] * solver.state().rb[i] * psi(x, y);
    }
  }
  return tr;
}

ConvergenceRow run_row(const StudyConfig& st, double e, const MacroTrajectory& macro) {
  ConvergenceRow row;
  row.eps = e;
  row.dt = st.dt_for(e);
  try {
    const MicroConfig mc = st.micro_config(e);
    row.h = mc.h();
    MicroSolver solver(mc);
    const MicroGrid& g = solver.grid();
    row.fluid_cells = g.fluid_count();
    std::vector<VecN> centres(g.fluid_count());
    for (int k = 0; k < g.fluid_count(); ++k) centres[k] = from_vec2(g.grid.center(g.op.cells[k]));
    const long long n = step_count(mc.T, mc.dt);
    const long long stride = std::llround(mc.dt / macro.dt);
    long long k = 0;
    double num = 0.0, den = 0.0;
    const double h2 = g.grid.cell_area();
    const RunResult run = run_micro(solver, [&](const MicroSolver& s) {
      const GridFunction& ref = macro.snapshots[static_cast<std::size_t>(k * stride)];
      const double w = (k == 0 || k == n) ? 0.5 * mc.dt : mc.dt;
      double dn = 0.0, dd = 0.0;
      for (int u = 0; u < s.state().l.size(); ++u) {
        const double lm = ref.eval(centres[u]);
        const double diff = s.state().l(u) - lm;
        dn += diff * diff;
        dd += lm * lm;
      }
      num += w * h2 * dn;
      den += w * h2 * dd;
      ++k;
    });
    row.steps = run.steps;
    if (!run.ok) {
      row.failure = "micro run: " + run.failure;
      return row;
    }
    row.E = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    row.energy_micro = run.energy_time_integral;
    row.energy_macro = macro.run.energy_time_integral;
    row.energy_gap = std::abs(row.energy_micro - row.energy_macro);

    double pairing = 0.0;
    for (std::size_t f = 0; f < g.faces.size(); ++f) {
      const Location loc = locate(g.partition, from_vec2(g.faces[f].mid));
      pairing += e * g.faces[f].length * solver.state().rb[f] * psi(from_vec2(g.faces[f].mid), loc.y_local);
    }
    row.lts_gap = std::abs(pairing - macro.receptor_pairing);
    row.ok = true;
  } catch (const Error& ex) {
    row.failure = ex.what();
  }
  return row;
}

int workers(const StudyConfig& st) {
  if (st.threads > 0) return st.threads;
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, std::min(hw, static_cast<int>(st.eps.size())));
}

}  // namespace

void StudyConfig::validate() const {
  if (eps.empty()) throw InvalidArgument("eps list is empty");
  for (std::size_t k = 1; k < eps.size(); ++k)
    if (!(eps[k] < eps[k - 1])) throw InvalidArgument("eps list must be strictly decreasing");
  if (threads < 0) throw InvalidArgument("threads must be non-negative");
  make_scenario(scenario, radius);
  macro_config().validate();
  const double dt_min = dt_for(eps.back());
  for (double e : eps) {
    micro_config(e).validate();
    const double ratio = dt_for(e) / dt_min;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) throw InvalidArgument("micro time steps must be multiples of the macro step");
  }
}

double StudyConfig::dt_for(double e) const { return dt_rule == DtRule::kFixed ? dt : dt * e / eps.front(); }

InitialData StudyConfig::initial_data() const {
  InitialData d;
  const double a = l0_amp;
  d.l0 = [a](const VecN& x) { return 1.0 + a * std::cos(std::numbers::pi * x(0)) * std::cos(std::numbers::pi * x(1)); };
  return d;
}

MicroConfig StudyConfig::micro_config(double e) const {
  MicroConfig c;
  apply(make_scenario(scenario, radius), c);
  c.eps = e;
  c.r = r;
  c.cells_per_eps = cells_per_eps;
  c.T = T;
  c.dt = dt_for(e);
  c.coef = coef;
  c.init = initial_data();
  c.cg_tol = cg_tol;
  c.sample_every = std::max<long long>(1, step_count(T, c.dt) / 100);
  return c;
}

MacroConfig StudyConfig::macro_config() const {
  MacroConfig c;
  const Scenario sc = make_scenario(scenario, radius);
  apply(sc, c);
  c.H = H;
  c.T = T;
  c.dt = dt_for(eps.back());
  c.n_gamma = n_gamma;
  c.coef = coef;
  c.init = initial_data();
  c.cell_opt.Nc = Nc > 0 ? Nc : cells_per_eps;
  c.porosity = c.gamma = geometry.value_or(sc.consistent_geometry);
  c.cg_tol = cg_tol;
  c.sample_every = std::max<long long>(1, step_count(T, c.dt) / 100);
  return c;
}

ConvergenceReport convergence_study(const StudyConfig& study) {
  study.validate();
  ConvergenceReport rep;
  rep.config = study;
  MacroTrajectory macro;
  try {
    macro = run_macro_trajectory(study);
    if (!macro.run.ok) rep.macro_failure = macro.run.failure;
  } catch (const Error& e) {
    rep.macro_failure = e.what();
  }
  rep.cell_solves = macro.cell_solves;
  rep.rows.resize(study.eps.size());
  if (!rep.macro_failure.empty()) {
    for (std::size_t k = 0; k < study.eps.size(); ++k) {
      rep.rows[k].eps = study.eps[k];
      rep.rows[k].failure = "macro run: " + rep.macro_failure;
    }
  } else if (workers(study) > 1) {
    // Batches of `workers` concurrent micro runs; rows are written by index.
    const std::size_t w = static_cast<std::size_t>(workers(study));
    for (std::size_t b = 0; b < study.eps.size(); b += w) {
      std::vector<std::future<ConvergenceRow>> jobs;
      for (std::size_t k = b; k < std::min(b + w, study.eps.size()); ++k)
        jobs.push_back(std::async(std::launch::async, [&, k] { return run_row(study, study.eps[k], macro); }));
      for (std::size_t k = 0; k < jobs.size(); ++k) rep.rows[b + k] = jobs[k].get();
    }
  } else {
    for (std::size_t k = 0; k < study.eps.size(); ++k) rep.rows[k] = run_row(study, study.eps[k], macro);
  }

  rep.complete = true;
  rep.monotone = true;
  rep.energy_monotone = true;
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    ConvergenceRow& row = rep.rows[k];
    rep.complete = rep.complete && row.ok;
    row.pass = row.ok && (k == 0 || (rep.rows[k - 1].ok && row.E < rep.rows[k - 1].E));
    if (k > 0) {
      rep.monotone = rep.monotone && row.pass;
      rep.energy_monotone = rep.energy_monotone && row.ok && row.energy_gap < rep.rows[k - 1].energy_gap;
    }
  }
  rep.halved = rep.complete && rep.rows.back().E <= 0.5 * rep.rows.front().E;

  if (!study.outdir.empty()) {
    std::filesystem::create_directories(study.outdir);
    std::ofstream os(std::filesystem::path(study.outdir) / "convergence.csv");
    write_convergence_csv(os, rep);
    if (rep.macro_failure.empty()) {
      std::ofstream ms(std::filesystem::path(study.outdir) / "macro_series.csv");
      write_series_csv(ms, macro.run);
    }
  }
  return rep;
}

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report) {
  const StudyConfig& c = report.config;
  fmt::print(os, "epsilon,E,energy_micro,energy_macro,energy_gap,lts_gap,pass,scenario,r,cells_per_eps,h,Nc,H,n_gamma,T,dt,"
                 "geometry,cg_tol,failure\n");
  const std::string geometry =
      c.geometry ? (*c.geometry == GeometryMode::kDiscrete ? "discrete" : "exact")
                 : (make_scenario(c.scenario, c.radius).consistent_geometry == GeometryMode::kDiscrete ? "discrete" : "exact");
  for (const ConvergenceRow& r : report.rows) {
    std::string failure = r.failure;
    for (char& ch : failure)
      if (ch == ',' || ch == '\n') ch = ';';
    fmt::print(os, "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{},{},{:.17g},{},{:.17g},{},{},{:.17g},{},{:.3g},{}\n", r.eps, r.E,
               r.energy_micro, r.energy_macro, r.energy_gap, r.lts_gap, r.pass ? 1 : 0, c.scenario, c.r, c.cells_per_eps,
               r.h, c.Nc > 0 ? c.Nc : c.cells_per_eps, c.H, c.n_gamma, c.T, r.dt, geometry, c.cg_tol, failure);
  }
}

void write_series_csv(std::ostream& os, const RunResult& run) {
  fmt::print(os, "t,l2_norm,min_l,max_l,energy,rf_mass,rb_mass\n");
  for (const Observation& o : run.series)
    fmt::print(os, "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", o.t, o.l2, o.min_l, o.max_l, o.energy, o.rf_mass,
               o.rb_mass);
}

}  // namespace lphom
