#pragma once

// Masked anisotropic finite-volume diffusion operator on a cell-centred grid
// and the preconditioned conjugate gradient used for all linear solves.
//
// The discrete energy form is
//   a(u, v) = sum_faces t_f du dv + sum_corners c/4 (dx_u dy_v + dy_u dx_v)
// where x-faces carry the harmonic mean of b11 over the two cells, y-faces
// that of b22, and a cross term lives on every grid node whose four
// surrounding cells are active (c = mean of b12 over them). For a diagonal
// tensor this is the usual 5-point stencil.

#include "lphom/grid.hpp"

#include <Eigen/Sparse>

#include <array>
#include <vector>

namespace lphom {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

struct FvFace {
  int p = 0;  // unknown indices, q is the +x or +y neighbour of p
  int q = 0;
  int axis = 0;
  double t = 0.0;       // face transmissibility
  double weight = 1.0;  // energy quadrature weight (outer-boundary completion)
};

struct FvCorner {
  std::array<int, 4> u{};  // unknowns at (i,j), (i+1,j), (i,j+1), (i+1,j+1)
  double c = 0.0;
  double weight = 1.0;
};

struct FvOperator {
  Grid2 grid;
  bool periodic = false;
  std::vector<int> unknown;  // cell -> unknown index, -1 if inactive
  std::vector<int> cells;    // unknown -> cell
  std::vector<FvFace> faces;
  std::vector<FvCorner> corners;
  SpMat stiffness;  // a(u, v) = u^T S v

  int size() const { return static_cast<int>(cells.size()); }
};

/// coeff holds one symmetric tensor per grid cell (ignored where inactive).
/// Neumann closure at inactive neighbours and at the outer boundary unless
/// periodic, in which case both axes wrap.
FvOperator assemble_fv(const Grid2& grid, const std::vector<std::uint8_t>& active, const std::vector<Mat2>& coeff,
                       bool periodic);

/// a(u + gu.x, v + gv.x): the affine parts enter through their exact
/// differences across faces, which is how periodic correctors see the
/// macroscopic gradient.
double fv_form(const FvOperator& op, const Vec& u, const Vec2& gu, const Vec& v, const Vec2& gv,
               bool completion = false);

/// Energy a(u, u); completion adds half a dual cell at the outer boundary so
/// that an affine field recovers its exact continuous energy.
double fv_energy(const FvOperator& op, const Vec& u, bool completion);

/// Load vector v -> -a(g.x, v).
Vec affine_load(const FvOperator& op, const Vec2& g);

struct CgResult {
  int iterations = 0;
  double residual = 0.0;  // relative to |b|
  bool converged = false;
};

/// Jacobi-preconditioned CG for symmetric positive (semi-)definite systems.
/// With project_mean the constant nullspace is removed from the right-hand
/// side and from every residual and iterate.
CgResult pcg(const SpMat& a, const Vec& b, Vec& x, double tol, int max_iter, bool project_mean);

/// Scatter unknown values to a full grid vector (fill where inactive).
std::vector<double> to_cells(const FvOperator& op, const Vec& u, double fill = 0.0);
Vec from_cells(const FvOperator& op, const std::vector<double>& values);

}  // namespace lphom
