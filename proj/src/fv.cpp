#include "lphom/fv.hpp"

#include <cmath>
#include <string>

namespace lphom {
namespace {

double harmonic(double a, double b) { return (a > 0.0 && b > 0.0) ? 2.0 * a * b / (a + b) : 0.0; }

// Completion factor for a face between cell k and k+1 along an axis with n
// cells: the first and last interior faces absorb the half dual cell at the
// outer boundary.
double completion_factor(int k, int n) {
  double w = 1.0;
  if (k == 0) w += 0.5;
  if (k + 1 == n - 1) w += 0.5;
  return w;
}

}  // namespace

FvOperator assemble_fv(const Grid2& grid, const std::vector<std::uint8_t>& active, const std::vector<Mat2>& coeff,
                       bool periodic) {
  const int nc = grid.size();
  if (static_cast<int>(active.size()) != nc || static_cast<int>(coeff.size()) != nc)
    throw InvalidArgument("mask or coefficient vector does not match the grid");
  FvOperator op;
  op.grid = grid;
  op.periodic = periodic;
  op.unknown.assign(nc, -1);
  for (int c = 0; c < nc; ++c) {
    if (!active[c]) continue;
    const Mat2& b = coeff[c];
    if (std::abs(b(0, 1) - b(1, 0)) > 1e-12 * b.norm() || b(0, 0) <= 0.0 || b(1, 1) <= 0.0 || b.determinant() <= 0.0)
      throw InvalidArgument("coefficient tensor is not symmetric positive definite at cell " + std::to_string(c));
    op.unknown[c] = static_cast<int>(op.cells.size());
    op.cells.push_back(c);
  }

  auto wrap = [&](int i, int n) { return periodic ? (i + n) % n : i; };
  const int ilast = periodic ? grid.nx : grid.nx - 1;
  const int jlast = periodic ? grid.ny : grid.ny - 1;

  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < ilast; ++i) {
      const int a = grid.index(i, j), b = grid.index(wrap(i + 1, grid.nx), j);
      if (a == b || !active[a] || !active[b]) continue;
      op.faces.push_back({op.unknown[a], op.unknown[b], 0, harmonic(coeff[a](0, 0), coeff[b](0, 0)),
                          periodic ? 1.0 : completion_factor(i, grid.nx)});
    }
  }
  for (int j = 0; j < jlast; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const int a = grid.index(i, j), b = grid.index(i, wrap(j + 1, grid.ny));
      if (a == b || !active[a] || !active[b]) continue;
      op.faces.push_back({op.unknown[a], op.unknown[b], 1, harmonic(coeff[a](1, 1), coeff[b](1, 1)),
                          periodic ? 1.0 : completion_factor(j, grid.ny)});
    }
  }
  for (int j = 0; j < jlast; ++j) {
    for (int i = 0; i < ilast; ++i) {
      const int i1 = wrap(i + 1, grid.nx), j1 = wrap(j + 1, grid.ny);
      const std::array<int, 4> cs = {grid.index(i, j), grid.index(i1, j), grid.index(i, j1), grid.index(i1, j1)};
      if (!active[cs[0]] || !active[cs[1]] || !active[cs[2]] || !active[cs[3]]) continue;
      const double c = 0.25 * (coeff[cs[0]](0, 1) + coeff[cs[1]](0, 1) + coeff[cs[2]](0, 1) + coeff[cs[3]](0, 1));
      if (c == 0.0) continue;
      FvCorner corner;
      for (int k = 0; k < 4; ++k) corner.u[k] = op.unknown[cs[k]];
      corner.c = c;
      corner.weight = periodic ? 1.0 : completion_factor(i, grid.nx) * completion_factor(j, grid.ny);
      op.corners.push_back(corner);
    }
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(op.faces.size() * 4 + op.corners.size() * 16 + op.cells.size());
  for (const FvFace& f : op.faces) {
    trip.emplace_back(f.p, f.p, f.t);
    trip.emplace_back(f.q, f.q, f.t);
    trip.emplace_back(f.p, f.q, -f.t);
    trip.emplace_back(f.q, f.p, -f.t);
  }
  static constexpr std::array<double, 4> ax = {-1.0, 1.0, -1.0, 1.0};
  static constexpr std::array<double, 4> ay = {-1.0, -1.0, 1.0, 1.0};
  for (const FvCorner& k : op.corners)
    for (int r = 0; r < 4; ++r)
      for (int s = 0; s < 4; ++s) trip.emplace_back(k.u[r], k.u[s], 0.25 * k.c * (ax[r] * ay[s] + ay[r] * ax[s]));
  op.stiffness.resize(op.size(), op.size());
  op.stiffness.setFromTriplets(trip.begin(), trip.end());
  op.stiffness.makeCompressed();
  return op;
}

double fv_form(const FvOperator& op, const Vec& u, const Vec2& gu, const Vec& v, const Vec2& gv, bool completion) {
  const double h = op.grid.h;
  double s = 0.0;
  for (const FvFace& f : op.faces) {
    const double du = u(f.q) - u(f.p) + gu(f.axis) * h;
    const double dv = v(f.q) - v(f.p) + gv(f.axis) * h;
    s += f.t * du * dv * (completion ? f.weight : 1.0);
  }
  for (const FvCorner& k : op.corners) {
    const double dxu = u(k.u[1]) + u(k.u[3]) - u(k.u[0]) - u(k.u[2]) + 2.0 * gu(0) * h;
    const double dyu = u(k.u[2]) + u(k.u[3]) - u(k.u[0]) - u(k.u[1]) + 2.0 * gu(1) * h;
    const double dxv = v(k.u[1]) + v(k.u[3]) - v(k.u[0]) - v(k.u[2]) + 2.0 * gv(0) * h;
    const double dyv = v(k.u[2]) + v(k.u[3]) - v(k.u[0]) - v(k.u[1]) + 2.0 * gv(1) * h;
    s += 0.25 * k.c * (dxu * dyv + dyu * dxv) * (completion ? k.weight : 1.0);
  }
  return s;
}

double fv_energy(const FvOperator& op, const Vec& u, bool completion) {
  return fv_form(op, u, Vec2::Zero(), u, Vec2::Zero(), completion);
}

Vec affine_load(const FvOperator& op, const Vec2& g) {
  const double h = op.grid.h;
  Vec b = Vec::Zero(op.size());
  for (const FvFace& f : op.faces) {
    const double flux = f.t * g(f.axis) * h;
    b(f.q) -= flux;
    b(f.p) += flux;
  }
  for (const FvCorner& k : op.corners) {
    // -c/4 (2 g1 h dy_v + 2 g2 h dx_v)
    const double wx = -0.5 * k.c * g(0) * h;  // multiplies dy_v
    const double wy = -0.5 * k.c * g(1) * h;  // multiplies dx_v
    b(k.u[0]) += -wx - wy;
    b(k.u[1]) += -wx + wy;
    b(k.u[2]) += wx - wy;
    b(k.u[3]) += wx + wy;
  }
  return b;
}

CgResult pcg(const SpMat& a, const Vec& b_in, Vec& x, double tol, int max_iter, bool project_mean) {
  const int n = static_cast<int>(b_in.size());
  if (x.size() != n) x = Vec::Zero(n);
  auto project = [&](Vec& v) {
    if (project_mean) v.array() -= v.mean();
  };
  Vec b = b_in;
  project(b);
  project(x);
  CgResult res;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  Vec dinv(n);
  for (int i = 0; i < n; ++i) {
    const double d = a.coeff(i, i);
    dinv(i) = d > 0.0 ? 1.0 / d : 1.0;
  }
  Vec r(n), z(n), p(n), ap(n);
  // Restart from the true residual if the recursive one drifted below tol.
  for (int restart = 0; restart < 4; ++restart) {
    r = b - a * x;
    project(r);
    res.residual = r.norm() / bnorm;
    if (res.residual <= tol || res.iterations >= max_iter) break;
    z = dinv.cwiseProduct(r);
    project(z);
    p = z;
    double rz = r.dot(z);
    while (res.residual > tol && res.iterations < max_iter) {
      ap.noalias() = a * p;
      const double pap = p.dot(ap);
      if (!(pap > 0.0)) break;
      const double alpha = rz / pap;
      x.noalias() += alpha * p;
      r.noalias() -= alpha * ap;
      project(r);
      z = dinv.cwiseProduct(r);
      project(z);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
      ++res.iterations;
      res.residual = r.norm() / bnorm;
    }
  }
  project(x);
  r = b - a * x;
  project(r);
  res.residual = r.norm() / bnorm;
  res.converged = std::isfinite(res.residual) && res.residual <= tol;
  return res;
}

std::vector<double> to_cells(const FvOperator& op, const Vec& u, double fill) {
  std::vector<double> out(op.grid.size(), fill);
  for (int k = 0; k < op.size(); ++k) out[op.cells[k]] = u(k);
  return out;
}

Vec from_cells(const FvOperator& op, const std::vector<double>& values) {
  Vec u(op.size());
  for (int k = 0; k < op.size(); ++k) u(k) = values[op.cells[k]];
  return u;
}

}  // namespace lphom
