#pragma once

// eps-sweep comparing micro solutions against the homogenized solution.
//   E(eps) = |l^eps - l|_{L2((0,T) x Omega*)} / |l|_{L2((0,T) x Omega*)}
// with the macro field sampled bilinearly at the micro fluid centres and
// trapezoidal weights in time.

#include "lphom/macro.hpp"
#include "lphom/micro.hpp"
#include "lphom/scenario.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace lphom {

enum class DtRule { kFixed, kProportional };

struct StudyConfig {
  std::string scenario = "periodic";
  std::vector<double> eps = {1.0 / 8, 1.0 / 16, 1.0 / 32};
  double r = 0.5;
  int cells_per_eps = 16;
  int Nc = 0;  // 0 means cells_per_eps
  double H = 1.0 / 64;
  int n_gamma = 16;
  double T = 1.0;
  double dt = 0.005;
  DtRule dt_rule = DtRule::kFixed;  // proportional: dt scales with eps / eps[0]
  double radius = 0.25;             // <= 0 for the unperforated variant
  double l0_amp = 0.5;              // l0 = 1 + l0_amp cos(pi x1) cos(pi x2)
  std::optional<GeometryMode> geometry;  // default: the scenario's consistent choice
  Coefficients coef;
  double cg_tol = 1e-12;
  int threads = 0;  // 0: one micro run per eps at once, up to the hardware concurrency
  std::string outdir;  // empty: no files

  /// Throws InvalidArgument unless eps is strictly decreasing and the
  /// sub-configurations are valid.
  void validate() const;
  double dt_for(double e) const;
  InitialData initial_data() const;
  MicroConfig micro_config(double e) const;
  MacroConfig macro_config() const;
};

struct ConvergenceRow {
  double eps = 0.0;
  double h = 0.0;
  double dt = 0.0;
  int fluid_cells = 0;
  int steps = 0;
  double E = 0.0;
  double energy_micro = 0.0;  // int_0^T int A^eps grad l^eps . grad l^eps
  double energy_macro = 0.0;  // int_0^T int Aeff grad l . grad l
  double energy_gap = 0.0;
  double lts_gap = 0.0;       // bound-receptor boundary pairing at T
  bool ok = false;
  bool pass = false;          // ok and E below the previous row
  std::string failure;
};

struct ConvergenceReport {
  StudyConfig config;
  std::vector<ConvergenceRow> rows;
  std::string macro_failure;
  bool complete = false;         // every row ran
  bool monotone = false;         // E strictly decreasing
  bool halved = false;           // E(last) <= E(first) / 2
  bool energy_monotone = false;  // energy gap strictly decreasing
  int cell_solves = 0;

  bool verdict() const { return complete && monotone; }
};

ConvergenceReport convergence_study(const StudyConfig& study);

/// Columns: epsilon, E, energy_micro, energy_macro, energy_gap, lts_gap, pass,
/// then the provenance fields needed to reproduce the row.
void write_convergence_csv(std::ostream& os, const ConvergenceReport& report);
/// Columns: t, l2_norm, min_l, max_l, energy, rf_mass, rb_mass.
void write_series_csv(std::ostream& os, const RunResult& run);

}  // namespace lphom
