#pragma once

// Unit-cell problems on the perforated, transformed cell and the effective
// diffusion tensor. The problem is pulled back to the reference cell,
// y = D_x y~, where it reads
//   div(B (grad w + D^T e_j)) = 0 in Y \ K Y_0, periodic, zero conormal flux,
// with B = |det D| D^{-1} A D^{-T}, and omega^j(x, D y~) = w(y~).

#include "lphom/fv.hpp"
#include "lphom/geometry.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lphom {

/// A(x, y) for y in the physical cell Y_x (Y_x-periodic in y).
using CoefficientFn = std::function<Mat2(const VecN& x, const Vec2& y)>;

CoefficientFn identity_coefficient();

/// B = |det D| D^{-1} A D^{-T}.
Mat2 pullback_coefficient(const Mat2& A, const Mat2& D);

/// |Gamma_x| = |D K Gamma| at unit-cell scale.
double gamma_measure(const UnitCellSpec& cell, const Mat2& D, const Mat2& K);

struct CellSolution {
  VecN x;
  Mat2 D = Mat2::Identity();
  Mat2 K = Mat2::Identity();
  int Nc = 0;
  FvOperator op;  // on the fluid cells of the Nc x Nc reference grid
  std::array<Vec, 2> w;  // correctors per direction, fluid unknowns
  double residual = 0.0;
  int iterations = 0;
  bool zero_mean = false;
  double fluid_fraction = 0.0;       // staircase |Y~*| / |Y|
  double perimeter_discrete = 0.0;   // marching squares length of D K Gamma (unit cell scale)

  /// Corrector j on the full reference grid, NaN in solid cells.
  std::vector<double> corrector_cells(int j) const;
};

struct CellOptions {
  int Nc = 64;
  double tol = 1e-10;
  int max_iter = 0;  // 0 means 50 Nc
};

/// Solves both correctors at macro point x. Throws on a disconnected fluid
/// mask, on N_c < 8 and on non-convergence (the message carries the residual).
CellSolution solve_cell(const VecN& x, const CoefficientFn& A, const TransformField& tf, const UnitCellSpec& cell,
                        const CellOptions& opt);

struct EffectiveTensor {
  Mat2 A = Mat2::Identity();
  double theta = 1.0;           // 1 - |K Y_0|
  double theta_discrete = 1.0;  // staircase fluid fraction
  double gamma_measure = 0.0;   // |Gamma_x| = |D K Gamma|
  double gamma_discrete = 0.0;  // marching squares perimeter of the same curve
  double detD = 1.0;            // |Y_x|
  double residual = 0.0;
  int Nc = 0;
};

EffectiveTensor effective_tensor(const CellSolution& sol, const UnitCellSpec& cell);

/// Discrete energy int B grad w^j . grad w^j over the reference cell; for
/// D = I and A = I the Dirichlet energy of omega^j.
double corrector_energy(const CellSolution& sol, int j);

struct EffectiveTensorField {
  std::vector<VecN> points;
  std::vector<std::optional<EffectiveTensor>> tensors;
  std::vector<std::string> errors;  // empty string on success

  bool all_ok() const;
};

/// Independent solve per point; a failing point records its error and the
/// sweep continues.
EffectiveTensorField tensor_field(const std::vector<VecN>& points, const CoefficientFn& A, const TransformField& tf,
                                  const UnitCellSpec& cell, const CellOptions& opt);

}  // namespace lphom
