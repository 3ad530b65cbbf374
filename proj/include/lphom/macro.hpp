#pragma once

// Homogenized model on a cell-centred macro grid of spacing H:
//   theta(x) l_t - div(Aeff(x) grad l) = theta (F(l) - d_l l)
//                                       + |Y_x|^{-1} int_{Gamma_x} (beta r_b - alpha r_f l)
// with the receptor ODEs carried at n_gamma quadrature points of Gamma_x per
// node. theta = |Y*_{x,K}| / |Y_x|; the effective tensor comes from the cell
// problem solved at every macro node.

#include "lphom/cell_problem.hpp"
#include "lphom/geometry.hpp"
#include "lphom/grid.hpp"
#include "lphom/model.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lphom {

/// Where porosity and boundary measure come from: the continuum formulas, or
/// the staircase fluid fraction and marching-squares perimeter of the cell
/// solve (which is what a micro grid with cells_per_eps = N_c resolves).
enum class GeometryMode { kExact, kDiscrete };

struct MacroConfig {
  Box domain = Box::unit(2);
  double H = 1.0 / 64;
  double T = 1.0;
  double dt = 0.005;
  int sample_every = 1;
  int n_gamma = 16;
  std::string scenario = "periodic";
  TransformField tf = TransformField::identity(2);
  UnitCellSpec cell = UnitCellSpec::disk(0.25);
  CoefficientFn A = identity_coefficient();
  Coefficients coef;
  InitialData init;
  CellOptions cell_opt;
  GeometryMode porosity = GeometryMode::kExact;
  GeometryMode gamma = GeometryMode::kExact;
  /// Reuse cell solutions at nodes with identical D, K and identical A at a
  /// set of probe points in the cell.
  bool tensor_cache = true;
  /// Precomputed tensors at the node centres (row-major); computed if empty.
  std::optional<EffectiveTensorField> tensors;
  bool boundary_terms = true;
  double cg_tol = 1e-12;

  void validate() const;
};

struct MacroModel {
  Grid2 grid;
  std::vector<Mat2> A;         // per node
  std::vector<double> theta;   // per node
  std::vector<double> detD;    // |Y_x| per node
  int n_gamma = 0;             // 0 when there is no boundary coupling
  std::vector<double> gamma_w; // node * n_gamma + s, |D K t_s| a dtheta (scaled in discrete mode)
  FvOperator op;
  double gamma_max = 0.0;      // max |Gamma_x| / (|Y_x| theta)
  int cell_solves = 0;

  int size() const { return grid.size(); }
  double gamma_total(int node) const;
};

/// Throws InvalidArgument on a non-SPD tensor or a failed cell solve.
MacroModel assemble_macro(const MacroConfig& cfg);

/// Node centres of the macro grid for cfg, row-major.
std::vector<VecN> macro_nodes(const MacroConfig& cfg);

struct MacroState {
  double t = 0.0;
  Vec l;
  std::vector<double> rf;  // node * n_gamma + s
  std::vector<double> rb;
};

class MacroSolver {
 public:
  explicit MacroSolver(MacroConfig cfg);
  MacroSolver(MacroConfig cfg, std::shared_ptr<const MacroModel> model);

  const MacroConfig& config() const { return cfg_; }
  const MacroModel& model() const { return *model_; }
  const MacroState& state() const { return state_; }
  MacroState& state() { return state_; }

  StepReport step();
  /// int Aeff grad l . grad l (with the boundary completion of the FV form).
  double energy() const;
  Observation observe() const;
  double max_receptor_sum() const;
  /// int theta l.
  double mass() const;

 private:
  MacroConfig cfg_;
  std::shared_ptr<const MacroModel> model_;
  DiffusionStepper diffusion_;
  MacroState state_;
};

using MacroObserver = std::function<void(const MacroSolver&)>;

RunResult run_macro(const MacroConfig& cfg, const MacroObserver& observer = {});
RunResult run_macro(MacroSolver& solver, const MacroObserver& observer = {});

/// The macro ligand field as a grid function (bilinear point evaluation).
GridFunction macro_field(const MacroSolver& solver);

}  // namespace lphom
