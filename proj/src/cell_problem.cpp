#include "lphom/cell_problem.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace lphom {

CoefficientFn identity_coefficient() {
  return [](const VecN&, const Vec2&) { return Mat2(Mat2::Identity()); };
}

Mat2 pullback_coefficient(const Mat2& A, const Mat2& D) {
  const double det = D.determinant();
  if (std::abs(det) < 1e-14 * std::max(1.0, D.norm() * D.norm())) throw InvalidArgument("D_x is singular");
  const Mat2 Dinv = D.inverse();
  Mat2 B = std::abs(det) * Dinv * A * Dinv.transpose();
  B(0, 1) = B(1, 0) = 0.5 * (B(0, 1) + B(1, 0));
  return B;
}

double gamma_measure(const UnitCellSpec& cell, const Mat2& D, const Mat2& K) {
  if (cell.shape == InclusionShape::kDisk) {
    // Arc length of the ellipse D K (a circle), fine midpoint rule.
    constexpr int kArcs = 4096;
    const Mat2 M = D * K;
    double len = 0.0;
    for (int s = 0; s < kArcs; ++s) {
      const double th = (s + 0.5) * 2.0 * std::numbers::pi / kArcs;
      len += (M * Vec2(-std::sin(th), std::cos(th))).norm() * cell.radius * 2.0 * std::numbers::pi / kArcs;
    }
    return len;
  }
  // Two straight interfaces per cell along the fibre axis.
  if (cell.shape == InclusionShape::kFiber) return 2.0 * (D * Vec2::Unit(cell.fiber_axis)).norm();
  return 0.0;
}

std::vector<double> CellSolution::corrector_cells(int j) const {
  return to_cells(op, w[j], std::numeric_limits<double>::quiet_NaN());
}

CellSolution solve_cell(const VecN& x, const CoefficientFn& A, const TransformField& tf, const UnitCellSpec& cell,
                        const CellOptions& opt) {
  if (tf.dim != 2 || cell.dim != 2) throw InvalidArgument("cell problems are solved for d = 2");
  if (opt.Nc < 8) throw InvalidArgument("N_c must be at least 8");
  if (!(opt.tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  CellSolution sol;
  sol.x = x;
  sol.D = to_mat2(tf.D(x));
  sol.K = to_mat2(tf.K(x));
  sol.Nc = opt.Nc;
  if (!cell.inclusion_inside(from_mat2(sol.K))) throw InvalidArgument("K_x Y_0 is not inside Y");
  const MatN Kinv = from_mat2(sol.K.inverse());

  const Grid2 grid = Grid2::over(Vec2(0, 0), Vec2(1, 1), opt.Nc, opt.Nc);
  std::vector<std::uint8_t> fluid(grid.size());
  std::vector<Mat2> B(grid.size());
  int nfluid = 0;
  for (int c = 0; c < grid.size(); ++c) {
    const Vec2 yt = grid.center(c);
    fluid[c] = cell.in_inclusion(from_vec2(yt), Kinv) ? 0 : 1;
    nfluid += fluid[c];
    B[c] = pullback_coefficient(A(x, sol.D * yt), sol.D);
  }
  if (nfluid == 0) throw InvalidArgument("cell has no fluid cells");
  if (count_components(grid, fluid, true) != 1) throw InvalidArgument("fluid part of the unit cell is disconnected");
  sol.fluid_fraction = static_cast<double>(nfluid) / grid.size();

  std::vector<double> nodes((opt.Nc + 1) * (opt.Nc + 1));
  for (int j = 0; j <= opt.Nc; ++j)
    for (int i = 0; i <= opt.Nc; ++i)
      nodes[i + (opt.Nc + 1) * j] = cell.has_inclusion() ? cell.level_set(from_vec2(grid.node(i, j)), Kinv) : 1.0;
  for (const Segment& s : marching_squares(grid, nodes)) sol.perimeter_discrete += (sol.D * (s.b - s.a)).norm();

  sol.op = assemble_fv(grid, fluid, B, true);
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : 50 * opt.Nc;
  for (int j = 0; j < 2; ++j) {
    const Vec2 g = sol.D.transpose() * Vec2::Unit(j);
    const Vec b = affine_load(sol.op, g);
    sol.w[j] = Vec::Zero(sol.op.size());
    const CgResult r = pcg(sol.op.stiffness, b, sol.w[j], opt.tol, max_iter, true);
    sol.iterations += r.iterations;
    sol.residual = std::max(sol.residual, r.residual);
    if (!r.converged)
      throw SolverError("cell problem did not converge: residual " + std::to_string(r.residual) + " after " +
                        std::to_string(r.iterations) + " iterations");
  }
  sol.zero_mean = std::abs(sol.w[0].mean()) <= 1e-12 && std::abs(sol.w[1].mean()) <= 1e-12;
  return sol;
}

EffectiveTensor effective_tensor(const CellSolution& sol, const UnitCellSpec& cell) {
  EffectiveTensor t;
  t.detD = std::abs(sol.D.determinant());
  std::array<Vec2, 2> g;
  for (int j = 0; j < 2; ++j) g[j] = sol.D.transpose() * Vec2::Unit(j);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) t.A(i, j) = fv_form(sol.op, sol.w[i], g[i], sol.w[j], g[j]) / t.detD;
  t.A(0, 1) = t.A(1, 0) = 0.5 * (t.A(0, 1) + t.A(1, 0));
  t.theta = 1.0 - cell.inclusion_volume(from_mat2(sol.K));
  t.theta_discrete = sol.fluid_fraction;
  t.gamma_measure = gamma_measure(cell, sol.D, sol.K);
  t.gamma_discrete = sol.perimeter_discrete;
  t.residual = sol.residual;
  t.Nc = sol.Nc;
  return t;
}

double corrector_energy(const CellSolution& sol, int j) { return fv_energy(sol.op, sol.w[j], false); }

bool EffectiveTensorField::all_ok() const {
  for (const auto& e : errors)
    if (!e.empty()) return false;
  return true;
}

EffectiveTensorField tensor_field(const std::vector<VecN>& points, const CoefficientFn& A, const TransformField& tf,
                                  const UnitCellSpec& cell, const CellOptions& opt) {
  EffectiveTensorField f;
  f.points = points;
  f.tensors.resize(points.size());
  f.errors.resize(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    try {
      f.tensors[k] = effective_tensor(solve_cell(points[k], A, tf, cell, opt), cell);
    } catch (const Error& e) {
      f.errors[k] = e.what();
    }
  }
  return f;
}

}  // namespace lphom
