#pragma once

// Named microstructure scenarios shared by the CLI, the study and the
// acceptance checks.
//   periodic         D = K = I, disk a
//   epithelial       D = diag(1, 1 - 0.3 x2), K = I
//   plywood2d        D = R(pi x2 / 2)^T, K = diag(1.6, 0.8)
//   radius_gradient  D = I, K = (1 + 0.5 x1) I

#include "lphom/cell_problem.hpp"
#include "lphom/geometry.hpp"
#include "lphom/macro.hpp"
#include "lphom/micro.hpp"

#include <string>
#include <vector>

namespace lphom {

struct Scenario {
  std::string name;
  TransformField tf;
  UnitCellSpec cell;
  CoefficientFn A = identity_coefficient();
  /// Macro porosity and boundary measure that match a micro grid with
  /// cells_per_eps = N_c: the staircase values when the lattice is aligned
  /// with the grid (every micro cell then carries the same staircase), the
  /// exact ones otherwise.
  GeometryMode consistent_geometry = GeometryMode::kExact;
};

/// radius <= 0 gives the unperforated variant. Throws InvalidArgument on an
/// unknown name.
Scenario make_scenario(const std::string& name, double radius = 0.25);
std::vector<std::string> scenario_names();

void apply(const Scenario& s, MicroConfig& c);
void apply(const Scenario& s, MacroConfig& c);

}  // namespace lphom
