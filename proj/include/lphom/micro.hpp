#pragma once

// Microscopic ligand-receptor model on the perforated domain Omega*_{eps,K}:
//   l_t - div(A^eps grad l) = F(l) - d_l l           in Omega*
//   A^eps grad l . n = eps (beta r_b - alpha l r_f)   on Gamma^eps
//   r_f' = p(r_b) - alpha l r_f + beta r_b - d_f r_f,  r_b' = alpha l r_f - beta r_b - d_b r_b
// discretised on a square grid of spacing h = eps / cells_per_eps with the
// receptors living on marching-squares faces of Gamma^eps.

#include "lphom/cell_problem.hpp"
#include "lphom/geometry.hpp"
#include "lphom/grid.hpp"
#include "lphom/model.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lphom {

struct MicroConfig {
  Box domain = Box::unit(2);
  double eps = 1.0 / 8;
  double r = 0.5;
  AnchorRule anchor = AnchorRule::kCenter;
  std::string scenario = "periodic";
  TransformField tf = TransformField::identity(2);
  UnitCellSpec cell = UnitCellSpec::disk(0.25);
  CoefficientFn A = identity_coefficient();
  int cells_per_eps = 16;
  double T = 1.0;
  double dt = 0.005;
  int sample_every = 1;
  Coefficients coef;
  InitialData init;
  double cg_tol = 1e-12;

  double h() const { return eps / cells_per_eps; }
  /// Throws InvalidArgument on h > eps/8, a non-integer grid or a bad time step.
  void validate() const;
};

struct BoundaryFace {
  int unknown = -1;    // adjacent fluid cell (operator unknown index)
  int subdomain = -1;
  double length = 0.0;
  Vec2 mid = Vec2::Zero();
};

struct MicroGrid {
  Grid2 grid;
  Partition partition;
  std::vector<std::uint8_t> fluid;  // per grid cell
  std::vector<BoundaryFace> faces;
  double unassigned_length = 0.0;   // segments with no fluid cell nearby
  FvOperator op;
  double gamma_max = 0.0;           // max |Gamma_x| / |Y*_x| over subdomains

  int fluid_count() const { return op.size(); }
  double boundary_length() const;
};

/// Throws InvalidArgument when the fluid region is disconnected.
MicroGrid build_micro_grid(const MicroConfig& cfg);

/// eps * sum_n |Xi^_n| |D_n K_n Gamma| (analytic boundary measure).
double analytic_boundary_measure(const Partition& partition, const UnitCellSpec& cell);

struct MicroState {
  double t = 0.0;
  Vec l;                   // per fluid unknown
  std::vector<double> rf;  // per boundary face
  std::vector<double> rb;
};

MicroState initial_state(const MicroGrid& g, const MicroConfig& cfg);

/// Stateful solver: owns the grid and the factored-once diffusion system.
class MicroSolver {
 public:
  explicit MicroSolver(MicroConfig cfg);
  MicroSolver(MicroConfig cfg, std::shared_ptr<const MicroGrid> grid);

  const MicroConfig& config() const { return cfg_; }
  const MicroGrid& grid() const { return *grid_; }
  const MicroState& state() const { return state_; }
  MicroState& state() { return state_; }

  /// One IMEX step; throws SolverError naming the field on NaN.
  StepReport step();
  double energy() const;
  Observation observe() const;
  double max_receptor_sum() const;

 private:
  MicroConfig cfg_;
  std::shared_ptr<const MicroGrid> grid_;
  DiffusionStepper diffusion_;
  MicroState state_;
};

/// Sum over fluid faces of harmonic coefficient x difference quotient^2 x
/// face measure, plus the cross terms for a full tensor.
double micro_energy(const MicroState& s, const MicroGrid& g);

/// Total ligand mass sum h^2 l.
double micro_mass(const MicroState& s, const MicroGrid& g);

using MicroObserver = std::function<void(const MicroSolver&)>;

/// Runs to T, sampling every sample_every steps and at T. Invariant
/// violations (negativity, L-infinity barrier, step budget) stop the run and
/// are reported in RunResult::failure.
RunResult run_micro(const MicroConfig& cfg, const MicroObserver& observer = {});
RunResult run_micro(MicroSolver& solver, const MicroObserver& observer = {});

/// Values of l on all grid cells (NaN in solid cells), row-major.
std::vector<double> micro_field(const MicroSolver& solver);

}  // namespace lphom
