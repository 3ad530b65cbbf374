#include "lphom/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>

namespace lphom {

Grid2 Grid2::over(const Vec2& lo, const Vec2& hi, int nx, int ny) {
  if (nx < 1 || ny < 1) throw InvalidArgument("grid needs at least one cell per axis");
  const double hx = (hi.x() - lo.x()) / nx;
  const double hy = (hi.y() - lo.y()) / ny;
  if (!(hx > 0.0) || std::abs(hx - hy) > 1e-12 * hx) throw InvalidArgument("grid cells must be square");
  Grid2 g;
  g.lo = lo;
  g.h = hx;
  g.nx = nx;
  g.ny = ny;
  return g;
}

GridFunction GridFunction::sample(const Grid2& grid, const PointFn& fn) {
  return sample(grid, fn, std::vector<CellTag>(grid.size(), CellTag::kFluid));
}

GridFunction GridFunction::sample(const Grid2& grid, const PointFn& fn, std::vector<CellTag> tags) {
  if (static_cast<int>(tags.size()) != grid.size()) throw InvalidArgument("tag vector does not match the grid");
  GridFunction f;
  f.grid = grid;
  f.tags = std::move(tags);
  f.values.assign(grid.size(), 0.0);
  for (int c = 0; c < grid.size(); ++c)
    if (f.fluid(c)) f.values[c] = fn(from_vec2(grid.center(c)));
  return f;
}

double GridFunction::eval(const VecN& x) const {
  const double u = (x(0) - grid.lo.x()) / grid.h - 0.5;
  const double v = (x(1) - grid.lo.y()) / grid.h - 0.5;
  // Stencil base clamped so that points in the outer half cell extrapolate.
  const int i0 = std::clamp(static_cast<int>(std::floor(u)), 0, std::max(grid.nx - 2, 0));
  const int j0 = std::clamp(static_cast<int>(std::floor(v)), 0, std::max(grid.ny - 2, 0));
  const int i1 = std::min(i0 + 1, grid.nx - 1);
  const int j1 = std::min(j0 + 1, grid.ny - 1);
  const double tx = grid.nx > 1 ? u - i0 : 0.0;
  const double ty = grid.ny > 1 ? v - j0 : 0.0;
  const std::array<int, 4> cells = {grid.index(i0, j0), grid.index(i1, j0), grid.index(i0, j1), grid.index(i1, j1)};
  const std::array<double, 4> w = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
  double sum = 0.0, wsum = 0.0;
  bool all_fluid = true;
  for (int k = 0; k < 4; ++k) {
    if (fluid(cells[k])) {
      sum += w[k] * values[cells[k]];
      wsum += w[k];
    } else {
      all_fluid = false;
    }
  }
  if (all_fluid) return sum;
  if (std::abs(wsum) > 1e-14) return sum / wsum;
  // No usable bilinear weight: fall back to the nearest fluid stencil cell.
  double best = std::numeric_limits<double>::infinity(), value = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (!fluid(cells[k])) continue;
    const double d = (grid.center(cells[k]) - to_vec2(x)).squaredNorm();
    if (d < best) {
      best = d;
      value = values[cells[k]];
    }
  }
  return value;
}

double GridFunction::integral() const {
  double s = 0.0;
  for (int c = 0; c < grid.size(); ++c)
    if (fluid(c)) s += values[c];
  return s * grid.cell_area();
}

double GridFunction::l2_norm() const {
  double s = 0.0;
  for (int c = 0; c < grid.size(); ++c)
    if (fluid(c)) s += values[c] * values[c];
  return std::sqrt(s * grid.cell_area());
}

PointFn GridFunction::as_function() const {
  return [this](const VecN& x) { return eval(x); };
}

std::vector<Segment> marching_squares(const Grid2& grid, const std::vector<double>& node_values) {
  const int nnx = grid.nx + 1;
  if (static_cast<int>(node_values.size()) != nnx * (grid.ny + 1))
    throw InvalidArgument("node values do not match the grid");
  std::vector<Segment> segs;
  auto val = [&](int i, int j) { return node_values[i + nnx * j]; };
  auto cross = [&](const Vec2& p, double fp, const Vec2& q, double fq) {
    if (!std::isfinite(fp)) return q;
    if (!std::isfinite(fq)) return p;
    const double t = fp / (fp - fq);
    return Vec2(p + t * (q - p));
  };
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      // Corners counter-clockwise from the lower left.
      const std::array<Vec2, 4> p = {grid.node(i, j), grid.node(i + 1, j), grid.node(i + 1, j + 1),
                                     grid.node(i, j + 1)};
      const std::array<double, 4> f = {val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)};
      int code = 0;
      for (int k = 0; k < 4; ++k)
        if (f[k] < 0.0) code |= 1 << k;
      if (code == 0 || code == 15) continue;
      // Edge k joins corner k and corner k+1.
      auto edge_point = [&](int k) { return cross(p[k], f[k], p[(k + 1) % 4], f[(k + 1) % 4]); };
      std::array<int, 4> crossed{};
      int n = 0;
      for (int k = 0; k < 4; ++k) {
        const bool a = f[k] < 0.0, b = f[(k + 1) % 4] < 0.0;
        if (a != b) crossed[n++] = k;
      }
      if (n == 2) {
        segs.push_back({edge_point(crossed[0]), edge_point(crossed[1])});
      } else if (n == 4) {
        const double mid = 0.25 * (f[0] + f[1] + f[2] + f[3]);
        const bool center_inside = mid < 0.0;
        // Pair edges so that the centre's side stays connected.
        if ((f[0] < 0.0) == center_inside) {
          segs.push_back({edge_point(0), edge_point(1)});
          segs.push_back({edge_point(2), edge_point(3)});
        } else {
          segs.push_back({edge_point(3), edge_point(0)});
          segs.push_back({edge_point(1), edge_point(2)});
        }
      }
    }
  }
  return segs;
}

int count_components(const Grid2& grid, const std::vector<std::uint8_t>& keep, bool periodic) {
  std::vector<int> label(grid.size(), -1);
  int comps = 0;
  std::queue<int> q;
  for (int s = 0; s < grid.size(); ++s) {
    if (!keep[s] || label[s] >= 0) continue;
    label[s] = comps;
    q.push(s);
    while (!q.empty()) {
      const int c = q.front();
      q.pop();
      const int i = c % grid.nx, j = c / grid.nx;
      const std::array<std::array<int, 2>, 4> nb = {{{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}}};
      for (auto [a, b] : nb) {
        if (periodic) {
          a = (a + grid.nx) % grid.nx;
          b = (b + grid.ny) % grid.ny;
        } else if (a < 0 || b < 0 || a >= grid.nx || b >= grid.ny) {
          continue;
        }
        const int d = grid.index(a, b);
        if (keep[d] && label[d] < 0) {
          label[d] = comps;
          q.push(d);
        }
      }
    }
    ++comps;
  }
  return comps;
}

}  // namespace lphom
