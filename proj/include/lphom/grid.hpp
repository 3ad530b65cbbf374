#pragma once

// Uniform cell-centred 2D grids, masked grid functions and the small
// geometric utilities shared by the solvers (marching squares, flood fill).

#include "lphom/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace lphom {

struct Grid2 {
  Vec2 lo = Vec2::Zero();
  double h = 1.0;
  int nx = 0;
  int ny = 0;

  /// Grid of n cells per axis on the box [lo, hi]; the box must be square in
  /// cell units (hx == hy).
  static Grid2 over(const Vec2& lo, const Vec2& hi, int nx, int ny);

  int size() const { return nx * ny; }
  int index(int i, int j) const { return i + nx * j; }
  Vec2 center(int i, int j) const { return lo + h * Vec2(i + 0.5, j + 0.5); }
  Vec2 center(int c) const { return center(c % nx, c / nx); }
  Vec2 node(int i, int j) const { return lo + h * Vec2(i, j); }
  double cell_area() const { return h * h; }
};

enum class CellTag : std::uint8_t { kOutside = 0, kFluid = 1, kSolid = 2 };

using PointFn = std::function<double(const VecN&)>;

/// Values at cell centres with a per-cell tag. Only fluid cells carry data;
/// point evaluation is bilinear over the fluid neighbours.
struct GridFunction {
  Grid2 grid;
  std::vector<double> values;
  std::vector<CellTag> tags;

  static GridFunction sample(const Grid2& grid, const PointFn& fn);
  static GridFunction sample(const Grid2& grid, const PointFn& fn, std::vector<CellTag> tags);

  bool fluid(int c) const { return tags[c] == CellTag::kFluid; }
  /// Bilinear interpolation of the centre values with linear extrapolation
  /// across the outer half cell. Neighbours that are not fluid are dropped
  /// and the remaining weights renormalised.
  double eval(const VecN& x) const;
  /// Midpoint-rule integral over fluid cells.
  double integral() const;
  double l2_norm() const;
  PointFn as_function() const;
};

struct Segment {
  Vec2 a;
  Vec2 b;
  double length() const { return (b - a).norm(); }
  Vec2 midpoint() const { return 0.5 * (a + b); }
};

/// Zero contour of a level set sampled at the (nx+1) x (ny+1) grid nodes,
/// one or two segments per crossed cell (ambiguous saddles resolved with the
/// cell-centre average). Negative values are the inside.
std::vector<Segment> marching_squares(const Grid2& grid, const std::vector<double>& node_values);

/// Number of 4-connected components of the cells for which keep(c) holds.
/// periodic wraps both axes.
int count_components(const Grid2& grid, const std::vector<std::uint8_t>& keep, bool periodic);

}  // namespace lphom
