#pragma once

// Discrete locally periodic unfolding: bulk/perforated and boundary unfolding,
// the local average, the Q/R micro-macro decomposition on interior lattice
// cells, the l-t-s pairing and the norm diagnostics built on them.

#include "lphom/geometry.hpp"
#include "lphom/grid.hpp"

#include <functional>
#include <vector>

namespace lphom {

/// Flat enumeration of all interior lattice cells (n, xi in Xi^_n).
struct LatticeCells {
  std::vector<int> subdomain;
  std::vector<IVecN> xi;
  std::vector<std::vector<int>> lookup;  // per subdomain, over its candidate range; -1 outside Xi^_n

  static LatticeCells build(const Partition& partition);
  int size() const { return static_cast<int>(subdomain.size()); }
  /// Global cell number or -1 if xi is not in Xi^_n.
  int find(const Partition& partition, int n, const IVecN& xi) const;
};

/// Lower corner x~_n + eps D_n xi of a lattice cell, and the map y -> x.
VecN lattice_point(const Partition& partition, int n, const IVecN& xi, const VecN& y);

enum class UnfoldMode { kBulk, kPerforated };

struct UnfoldedGrid {
  int dim = 2;
  int m_y = 0;
  LatticeCells cells;
  std::vector<double> weight;      // per cell: eps^d |det D_n| / m_y^d
  std::vector<double> values;      // cells x samples, sample index with axis 0 fastest
  std::vector<std::uint8_t> present;  // perforated mode drops samples inside Y_0

  int samples_per_cell() const;
  /// Midpoint of unit-cell sample k.
  VecN sample_point(int k) const;
  double value(int cell, int k) const { return values[static_cast<std::size_t>(cell) * samples_per_cell() + k]; }
  /// sum of weight * value over present samples (the double integral over
  /// Omega x Y for |Y| = 1).
  double weighted_sum() const;
  /// Weighted L2 norm over Omega x Y.
  double weighted_l2() const;
  /// Mean of the present samples of one cell.
  double cell_mean(int cell) const;
};

/// T(phi)(x, y) sampled at the m_y^d midpoints of every interior lattice cell.
/// Perforated mode requires K = I on every subdomain.
UnfoldedGrid unfold(const PointFn& phi, const Partition& partition, int m_y, UnfoldMode mode = UnfoldMode::kBulk,
                    const UnitCellSpec& cell = UnitCellSpec::none());
UnfoldedGrid unfold(const GridFunction& phi, const Partition& partition, int m_y,
                    UnfoldMode mode = UnfoldMode::kBulk, const UnitCellSpec& cell = UnitCellSpec::none());

/// Piecewise-constant field on interior lattice cells, zero on Lambda.
/// Holds a pointer to the partition, which must outlive it.
struct CellField {
  const Partition* partition = nullptr;
  LatticeCells cells;
  std::vector<double> values;

  double eval(const VecN& x) const;
  PointFn as_function() const;
  GridFunction to_grid(const Grid2& grid) const;
};

/// M(phi) as the mean over Y of the m_y^d samples of T(phi).
CellField local_average(const PointFn& phi, const Partition& partition, int m_y);
CellField local_average(const GridFunction& phi, const Partition& partition, int m_y);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

/// Integration identity for a grid function: lhs from the unfolded samples,
/// rhs the midpoint-rule integral of phi over the grid cells whose centres
/// lie in the union of interior lattice cells.
IdentityCheck check_integration_identity(const GridFunction& phi, const Partition& partition, int m_y);
/// Same identity for a callable; rhs is tensor Gauss-Legendre quadrature on
/// every interior lattice cell.
IdentityCheck check_integration_identity(const PointFn& phi, const Partition& partition, int m_y);

/// Midpoint rule on n equal-parameter arcs of the reference circle about the
/// cell centre (d = 2, disk inclusion).
struct GammaQuadrature {
  std::vector<Vec2> nodes;     // y(theta_s)
  std::vector<Vec2> tangents;  // dy/dtheta at theta_s
  std::vector<double> weights; // reference surface weights dsigma_y
  double dtheta = 0.0;

  int size() const { return static_cast<int>(nodes.size()); }
  double total() const;
};

GammaQuadrature circle_quadrature(const UnitCellSpec& cell, int n_gamma);

/// Physical node y -> c + K (y - c) of the quadrature on K Gamma.
Vec2 shaped_node(const UnitCellSpec& cell, const Mat2& K, const Vec2& y);

struct BoundaryUnfolded {
  LatticeCells cells;
  GammaQuadrature quad;
  double eps = 0.0;
  std::vector<double> values;      // cells x nodes
  std::vector<double> sqrt_g;      // reference metric per node
  std::vector<double> sqrt_g_map;  // subdomains x nodes: |D_n K_n t_s|

  /// Surface weight of node s in cell c after the linear map D_n K_n (unit scale).
  double mapped_weight(int cell, int s) const;
  double value(int cell, int s) const { return values[static_cast<std::size_t>(cell) * quad.size() + s]; }
};

BoundaryUnfolded unfold_boundary(const PointFn& psi, const Partition& partition, const UnitCellSpec& cell,
                                 const GammaQuadrature& quad);

/// Boundary unfolding identity with exponent p: lhs from the unfolded values
/// and metric ratios, rhs by quadrature over the physical boundary curves.
IdentityCheck check_boundary_identity(const PointFn& psi, const Partition& partition, const UnitCellSpec& cell,
                                      const GammaQuadrature& quad, double p = 2.0);

/// Node convention for Q. kAdjacentCell gives node xi the average over the
/// cell eps D (xi + Y); kCentered averages the 2^d cells sharing the node,
/// which reproduces affine functions.
enum class QRule { kAdjacentCell, kCentered };

struct QInterpolant {
  const Partition* partition = nullptr;
  LatticeCells cells;
  QRule rule = QRule::kAdjacentCell;
  std::vector<double> cell_average;  // per interior lattice cell
  std::vector<std::uint8_t> interior;  // Q defined on this cell

  /// Node value at lattice node xi of subdomain n; NaN if its stencil leaves Xi^_n.
  double node_value(int n, const IVecN& xi) const;
  /// Multilinear interpolant on an interior cell at local coordinate y.
  double eval_local(int cell, const VecN& y) const;
  /// Q(phi)(x); NaN where Q is not defined.
  double eval(const VecN& x) const;
  int interior_count() const;
};

QInterpolant interpolate_Q(const PointFn& phi, const Partition& partition, QRule rule = QRule::kAdjacentCell);
QInterpolant interpolate_Q(const GridFunction& phi, const Partition& partition, QRule rule = QRule::kAdjacentCell);

using GradientFn = std::function<VecN(const VecN&)>;

struct RemainderNorms {
  double r_l2 = 0.0;     // |phi - Q(phi)| over the Q region
  double grad_l2 = 0.0;  // |grad phi| over the same region
  double region_volume = 0.0;
  double ratio = 0.0;    // r_l2 / (eps grad_l2)
};

/// Remainder R = phi - Q(phi) measured by Gauss quadrature on the interior
/// cells. grad may be empty, in which case central differences are used.
RemainderNorms remainder_R(const PointFn& phi, const GradientFn& grad, const Partition& partition,
                           QRule rule = QRule::kAdjacentCell);

/// int_Omega u L(psi) dx by the midpoint rule on the fluid cells of u.
double lts_pairing(const GridFunction& u, const ScalarFieldOnCells& psi, const Partition& partition);

/// |T(phi) - phi| in L2(Omega x Y), with the Lambda part (where T vanishes)
/// sampled on a lambda_samples^d midpoint grid.
double unfold_error_norm(const PointFn& phi, const Partition& partition, int m, int lambda_samples);
/// |T(L psi) - psi~| in L2(Omega x Y), T applied to the l-p approximation.
double lp_unfold_error_norm(const ScalarFieldOnCells& psi, const Partition& partition, int m, int lambda_samples);

}  // namespace lphom
