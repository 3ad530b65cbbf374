#pragma once

// Locally periodic microstructures: transformation fields D(x), K(x), the
// eps-dependent partition into subdomains of side ~eps^r with their local
// lattices, locally periodic approximations and membership indicators.

#include "lphom/types.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lphom {

/// Inverse rotation about the last axis, R(alpha). d = 3 gives the full
/// matrix, d = 2 its upper-left block [[cos, sin], [-sin, cos]].
MatN rotation_matrix(double alpha, int d);

using MatrixField = std::function<MatN(const VecN&)>;

struct Box {
  VecN lo;
  VecN hi;

  static Box unit(int d);
  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
  bool contains(const VecN& x, double tol = 1e-12) const;
};

/// The maps x -> D(x) (local period cell Y_x = D_x Y) and x -> K(x) (local
/// shape change of the inclusion), with the determinant bounds and the
/// Lipschitz budget used by the sampling checks.
struct TransformField {
  int dim = 2;
  MatrixField D;
  MatrixField K;
  double detD_lower = 0.0;
  double detD_upper = 0.0;
  double detK_lower = 0.0;
  double detK_upper = 0.0;
  double lipschitz_budget = 0.0;

  static TransformField identity(int d);

  MatN D_at(const VecN& x) const { return D(x); }
  MatN K_at(const VecN& x) const { return K(x); }
};

enum class InclusionShape {
  kNone,
  kDisk,   // ball of radius a about the centre
  kFiber,  // |transverse part| < a; a slab in 2D, a cylinder in 3D
};

/// Reference cell Y = (0,1)^d with the inclusion Y_0. The shape change K acts
/// about the cell centre: K_x Y_0 := c + K_x (Y_0 - c).
struct UnitCellSpec {
  int dim = 2;
  InclusionShape shape = InclusionShape::kNone;
  double radius = 0.0;
  int fiber_axis = 0;

  static UnitCellSpec none(int d = 2);
  static UnitCellSpec disk(double a, int d = 2);
  static UnitCellSpec fiber(double a, int axis, int d);

  VecN center() const { return VecN::Constant(dim, 0.5); }
  bool has_inclusion() const { return shape != InclusionShape::kNone; }

  /// Signed distance-like level set in pulled-back coordinates: negative
  /// inside K Y_0, zero on K Gamma.
  double level_set(const VecN& y, const MatN& Kinv) const;
  /// y in the open inclusion K Y_0.
  bool in_inclusion(const VecN& y, const MatN& Kinv) const { return level_set(y, Kinv) < 0.0; }
  /// |Y_0|.
  double reference_volume() const;
  /// |K Y_0| = |det K| |Y_0|.
  double inclusion_volume(const MatN& K) const { return std::abs(K.determinant()) * reference_volume(); }
  /// Whether the closure of K Y_0 lies strictly inside Y.
  bool inclusion_inside(const MatN& K, double margin = 0.0) const;

  void validate() const;
};

struct TransformCheck {
  double detD_min = 0.0;
  double detD_max = 0.0;
  double detK_min = 0.0;
  double detK_max = 0.0;
  double lipschitz_D = 0.0;
  double lipschitz_K = 0.0;
  bool inclusion_inside = true;
  bool ok = true;
};

/// Sampling-based verification of the determinant bounds, the Lipschitz
/// budget and K(x) Y_0 inside Y on a uniform grid of the domain.
TransformCheck check_transform(const TransformField& tf, const Box& domain, const UnitCellSpec& cell,
                               int samples_per_axis);

enum class AnchorRule { kCenter, kLowerCorner };

struct Subdomain {
  VecN cube_lo;
  VecN cube_hi;
  VecN lo;  // cube clipped to the domain
  VecN hi;
  VecN anchor;  // x_n
  VecN shift;   // x~_n = eps D_n xi_0
  MatN D;
  MatN Dinv;
  MatN K;
  MatN Kinv;
  double detD = 1.0;
  IVecN lattice_lo;  // inclusive candidate range of lattice indices (relative to the shift)
  IVecN lattice_hi;
  std::vector<std::uint8_t> hat;  // membership of Xi^_n over the candidate range
  int hat_count = 0;
  int xi_count = 0;  // |Xi_n|: cells meeting the subdomain

  bool in_hat(const IVecN& xi) const;
  std::vector<IVecN> hat_cells() const;
};

struct Partition {
  Box domain;
  double eps = 0.0;
  double r = 0.0;
  double side = 0.0;
  AnchorRule anchor_rule = AnchorRule::kCenter;
  IVecN counts;
  std::vector<Subdomain> subdomains;

  int dim() const { return domain.dim(); }
  int size() const { return static_cast<int>(subdomains.size()); }
  /// Subdomain containing x; points on shared faces go to the lower index.
  int subdomain_index(const VecN& x) const;
  /// x~_n + eps D_n (xi + y).
  VecN reconstruct(int n, const IVecN& xi, const VecN& y) const;
  /// |Omega^| = sum_n |Xi^_n| eps^d |det D_n|.
  double hat_volume() const;
  std::size_t hat_cell_count() const;
};

/// Partition covering of the domain. The subdomain side is eps^r rounded to
/// the nearest positive multiple of eps; the last row is clipped.
Partition build_partition(const Box& domain, double eps, double r, const TransformField& tf,
                          AnchorRule anchor_rule = AnchorRule::kCenter);

struct Location {
  int n = -1;
  IVecN xi;
  VecN y_local;
  bool in_lambda = false;
};

Location locate(const Partition& partition, const VecN& x);

/// psi~(x, y~) with y~ in Y, Y-periodic in y~.
struct ScalarFieldOnCells {
  std::string name;
  std::function<double(const VecN& x, const VecN& y)> fn;

  double operator()(const VecN& x, const VecN& y) const { return fn(x, y); }
};

/// Spot-check of Y-periodicity in the fast variable on a few samples.
bool spot_check_periodic(const ScalarFieldOnCells& psi, const Box& domain, int samples, double tol = 1e-12);

enum class LpVariant { kL, kL0 };

double lp_approx(const ScalarFieldOnCells& psi, const Partition& partition, const VecN& x, LpVariant variant);

/// x in the perforated domain. Lambda regions carry no perforation.
bool indicator_perforated(const Partition& partition, const UnitCellSpec& cell, const VecN& x);

/// Plywood fibres along the first lattice axis: D = R(gamma(x_last))^{-1},
/// fibre radius rho(x) a in the transverse fractional coordinates.
struct PlywoodSpec {
  std::function<double(double)> gamma;
  double a = 0.2;
  std::function<double(const VecN&)> rho;

  TransformField transform(int d) const;
};

/// x inside a fibre. The partition must have been built from spec.transform().
bool indicator_plywood(const Partition& partition, const PlywoodSpec& spec, const VecN& x);

/// Measure of Lambda^eps by midpoint sampling.
double lambda_measure_sampled(const Partition& partition, int samples_per_axis);

/// Fraction of Omega^ (sampled) lying inside perforations.
double perforation_fraction_sampled(const Partition& partition, const UnitCellSpec& cell, int samples_per_axis);

}  // namespace lphom
