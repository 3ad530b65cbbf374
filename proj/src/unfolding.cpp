#include "lphom/unfolding.hpp"

#include "lphom/multi_index.hpp"
#include "lphom/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace lphom {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t range_offset(const Subdomain& s, const IVecN& xi) {
  std::size_t offset = 0, stride = 1;
  for (int k = 0; k < xi.size(); ++k) {
    offset += static_cast<std::size_t>(xi(k) - s.lattice_lo(k)) * stride;
    stride *= static_cast<std::size_t>(s.lattice_hi(k) - s.lattice_lo(k) + 1);
  }
  return offset;
}

bool in_range(const Subdomain& s, const IVecN& xi) {
  for (int k = 0; k < xi.size(); ++k)
    if (xi(k) < s.lattice_lo(k) || xi(k) > s.lattice_hi(k)) return false;
  return true;
}

double cell_volume(const Partition& p, int n) { return std::pow(p.eps, p.dim()) * p.subdomains[n].detD; }

void require_2d(const Partition& p) {
  if (p.dim() != 2) throw InvalidArgument("operation is implemented for d = 2 only");
}

}  // namespace

LatticeCells LatticeCells::build(const Partition& partition) {
  LatticeCells lc;
  lc.lookup.resize(partition.size());
  for (int n = 0; n < partition.size(); ++n) {
    const Subdomain& s = partition.subdomains[n];
    auto& lk = lc.lookup[n];
    lk.assign(s.hat.size(), -1);
    std::size_t offset = 0;
    for_each_index(s.lattice_lo, s.lattice_hi, [&](const IVecN& xi) {
      if (s.hat[offset]) {
        lk[offset] = lc.size();
        lc.subdomain.push_back(n);
        lc.xi.push_back(xi);
      }
      ++offset;
    });
  }
  return lc;
}

int LatticeCells::find(const Partition& partition, int n, const IVecN& xi) const {
  const Subdomain& s = partition.subdomains[n];
  if (!in_range(s, xi)) return -1;
  return lookup[n][range_offset(s, xi)];
}

VecN lattice_point(const Partition& partition, int n, const IVecN& xi, const VecN& y) {
  return partition.reconstruct(n, xi, y);
}

int UnfoldedGrid::samples_per_cell() const {
  int s = 1;
  for (int k = 0; k < dim; ++k) s *= m_y;
  return s;
}

VecN UnfoldedGrid::sample_point(int k) const {
  VecN y(dim);
  for (int a = 0; a < dim; ++a) {
    y(a) = ((k % m_y) + 0.5) / m_y;
    k /= m_y;
  }
  return y;
}

double UnfoldedGrid::weighted_sum() const {
  const int m = samples_per_cell();
  double s = 0.0;
  for (int c = 0; c < cells.size(); ++c) {
    double cs = 0.0;
    for (int k = 0; k < m; ++k) {
      const std::size_t i = static_cast<std::size_t>(c) * m + k;
      if (present[i]) cs += values[i];
    }
    s += weight[c] * cs;
  }
  return s;
}

double UnfoldedGrid::weighted_l2() const {
  const int m = samples_per_cell();
  double s = 0.0;
  for (int c = 0; c < cells.size(); ++c) {
    double cs = 0.0;
    for (int k = 0; k < m; ++k) {
      const std::size_t i = static_cast<std::size_t>(c) * m + k;
      if (present[i]) cs += values[i] * values[i];
    }
    s += weight[c] * cs;
  }
  return std::sqrt(s);
}

double UnfoldedGrid::cell_mean(int cell) const {
  const int m = samples_per_cell();
  double s = 0.0;
  int count = 0;
  for (int k = 0; k < m; ++k) {
    const std::size_t i = static_cast<std::size_t>(cell) * m + k;
    if (present[i]) {
      s += values[i];
      ++count;
    }
  }
  return count ? s / count : 0.0;
}

UnfoldedGrid unfold(const PointFn& phi, const Partition& partition, int m_y, UnfoldMode mode,
                    const UnitCellSpec& cell) {
  if (m_y < 2) throw InvalidArgument("unit-cell sampling needs m_y >= 2");
  const int d = partition.dim();
  if (mode == UnfoldMode::kPerforated) {
    if (cell.dim != d) throw InvalidArgument("unit cell dimension does not match the partition");
    for (const Subdomain& s : partition.subdomains)
      if ((s.K - MatN::Identity(d, d)).norm() > 1e-12)
        throw InvalidArgument("perforated unfolding is only defined for K = I");
  }
  UnfoldedGrid u;
  u.dim = d;
  u.m_y = m_y;
  u.cells = LatticeCells::build(partition);
  const std::vector<VecN> ys = midpoint_samples(d, m_y);
  const int m = static_cast<int>(ys.size());
  const MatN identity = MatN::Identity(d, d);
  std::vector<std::uint8_t> keep(m, 1);
  if (mode == UnfoldMode::kPerforated)
    for (int k = 0; k < m; ++k) keep[k] = cell.in_inclusion(ys[k], identity) ? 0 : 1;
  u.weight.resize(u.cells.size());
  u.values.assign(static_cast<std::size_t>(u.cells.size()) * m, 0.0);
  u.present.assign(u.values.size(), 0);
  for (int c = 0; c < u.cells.size(); ++c) {
    const int n = u.cells.subdomain[c];
    u.weight[c] = cell_volume(partition, n) / m;
    for (int k = 0; k < m; ++k) {
      if (!keep[k]) continue;
      const std::size_t i = static_cast<std::size_t>(c) * m + k;
      u.values[i] = phi(partition.reconstruct(n, u.cells.xi[c], ys[k]));
      u.present[i] = 1;
    }
  }
  return u;
}

UnfoldedGrid unfold(const GridFunction& phi, const Partition& partition, int m_y, UnfoldMode mode,
                    const UnitCellSpec& cell) {
  require_2d(partition);
  return unfold(phi.as_function(), partition, m_y, mode, cell);
}

double CellField::eval(const VecN& x) const {
  const Location loc = locate(*partition, x);
  if (loc.in_lambda) return 0.0;
  const int id = cells.find(*partition, loc.n, loc.xi);
  return id < 0 ? 0.0 : values[id];
}

PointFn CellField::as_function() const {
  return [this](const VecN& x) { return eval(x); };
}

GridFunction CellField::to_grid(const Grid2& grid) const { return GridFunction::sample(grid, as_function()); }

CellField local_average(const PointFn& phi, const Partition& partition, int m_y) {
  const UnfoldedGrid u = unfold(phi, partition, m_y);
  CellField f;
  f.partition = &partition;
  f.cells = u.cells;
  f.values.resize(u.cells.size());
  for (int c = 0; c < u.cells.size(); ++c) f.values[c] = u.cell_mean(c);
  return f;
}

CellField local_average(const GridFunction& phi, const Partition& partition, int m_y) {
  require_2d(partition);
  return local_average(phi.as_function(), partition, m_y);
}

IdentityCheck check_integration_identity(const GridFunction& phi, const Partition& partition, int m_y) {
  require_2d(partition);
  IdentityCheck r;
  r.lhs = unfold(phi, partition, m_y).weighted_sum();
  const Grid2& g = phi.grid;
  double s = 0.0;
  for (int c = 0; c < g.size(); ++c) {
    if (!phi.fluid(c)) continue;
    const VecN x = from_vec2(g.center(c));
    if (!partition.domain.contains(x) || locate(partition, x).in_lambda) continue;
    s += phi.values[c];
  }
  r.rhs = s * g.cell_area();
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

IdentityCheck check_integration_identity(const PointFn& phi, const Partition& partition, int m_y) {
  IdentityCheck r;
  r.lhs = unfold(phi, partition, m_y).weighted_sum();
  const int d = partition.dim();
  const TensorRule rule = tensor_gauss(d, 8);
  const LatticeCells cells = LatticeCells::build(partition);
  double s = 0.0;
  for (int c = 0; c < cells.size(); ++c) {
    const int n = cells.subdomain[c];
    double cs = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q)
      cs += rule.weights[q] * phi(partition.reconstruct(n, cells.xi[c], rule.points[q]));
    s += cell_volume(partition, n) * cs;
  }
  r.rhs = s;
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

double GammaQuadrature::total() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

GammaQuadrature circle_quadrature(const UnitCellSpec& cell, int n_gamma) {
  if (cell.dim != 2 || cell.shape != InclusionShape::kDisk)
    throw InvalidArgument("boundary quadrature is implemented for the 2D disk inclusion");
  if (n_gamma < 1) throw InvalidArgument("n_gamma must be positive");
  GammaQuadrature q;
  q.dtheta = 2.0 * std::numbers::pi / n_gamma;
  const Vec2 c(0.5, 0.5);
  const double a = cell.radius;
  for (int s = 0; s < n_gamma; ++s) {
    const double th = (s + 0.5) * q.dtheta;
    q.nodes.push_back(c + a * Vec2(std::cos(th), std::sin(th)));
    q.tangents.push_back(a * Vec2(-std::sin(th), std::cos(th)));
    q.weights.push_back(a * q.dtheta);
  }
  return q;
}

Vec2 shaped_node(const UnitCellSpec& cell, const Mat2& K, const Vec2& y) {
  const Vec2 c = to_vec2(cell.center());
  return c + K * (y - c);
}

double BoundaryUnfolded::mapped_weight(int cell, int s) const {
  const int n = cells.subdomain[cell];
  return sqrt_g_map[static_cast<std::size_t>(n) * quad.size() + s] / sqrt_g[s] * quad.weights[s];
}

BoundaryUnfolded unfold_boundary(const PointFn& psi, const Partition& partition, const UnitCellSpec& cell,
                                 const GammaQuadrature& quad) {
  require_2d(partition);
  BoundaryUnfolded b;
  b.cells = LatticeCells::build(partition);
  b.quad = quad;
  b.eps = partition.eps;
  const int ns = quad.size();
  for (int s = 0; s < ns; ++s) b.sqrt_g.push_back(quad.tangents[s].norm());
  b.sqrt_g_map.resize(static_cast<std::size_t>(partition.size()) * ns);
  std::vector<std::vector<Vec2>> shaped(partition.size());
  for (int n = 0; n < partition.size(); ++n) {
    const Subdomain& sd = partition.subdomains[n];
    const Mat2 DK = to_mat2(sd.D) * to_mat2(sd.K);
    for (int s = 0; s < ns; ++s) {
      b.sqrt_g_map[static_cast<std::size_t>(n) * ns + s] = (DK * quad.tangents[s]).norm();
      shaped[n].push_back(shaped_node(cell, to_mat2(sd.K), quad.nodes[s]));
    }
  }
  b.values.resize(static_cast<std::size_t>(b.cells.size()) * ns);
  for (int c = 0; c < b.cells.size(); ++c) {
    const int n = b.cells.subdomain[c];
    for (int s = 0; s < ns; ++s)
      b.values[static_cast<std::size_t>(c) * ns + s] =
          psi(partition.reconstruct(n, b.cells.xi[c], from_vec2(shaped[n][s])));
  }
  return b;
}

IdentityCheck check_boundary_identity(const PointFn& psi, const Partition& partition, const UnitCellSpec& cell,
                                      const GammaQuadrature& quad, double p) {
  const BoundaryUnfolded b = unfold_boundary(psi, partition, cell, quad);
  const int ns = quad.size();
  IdentityCheck r;
  // lhs: the x-integral over each lattice cell of a function constant in x,
  // divided by |Y_{x_n}|.
  double lhs = 0.0;
  for (int c = 0; c < b.cells.size(); ++c) {
    const int n = b.cells.subdomain[c];
    const double vol = cell_volume(partition, n);
    double inner = 0.0;
    for (int s = 0; s < ns; ++s) {
      const double ratio = b.sqrt_g_map[static_cast<std::size_t>(n) * ns + s] / b.sqrt_g[s];
      inner += ratio * std::pow(std::abs(b.value(c, s)), p) * quad.weights[s];
    }
    lhs += vol / partition.subdomains[n].detD * inner;
  }
  r.lhs = lhs;
  // rhs: eps times the integral over the physical inclusion boundaries,
  // parameterised as X(theta) = X_c + eps D K (y(theta) - c).
  const Vec2 center = to_vec2(cell.center());
  double rhs = 0.0;
  for (int c = 0; c < b.cells.size(); ++c) {
    const int n = b.cells.subdomain[c];
    const Subdomain& sd = partition.subdomains[n];
    const Mat2 M = partition.eps * to_mat2(sd.D) * to_mat2(sd.K);
    const Vec2 xc = to_vec2(partition.reconstruct(n, b.cells.xi[c], cell.center()));
    for (int s = 0; s < ns; ++s) {
      const Vec2 X = xc + M * (quad.nodes[s] - center);
      const double speed = (M * quad.tangents[s]).norm();
      rhs += std::pow(std::abs(psi(from_vec2(X))), p) * speed * quad.dtheta;
    }
  }
  r.rhs = partition.eps * rhs;
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

double QInterpolant::node_value(int n, const IVecN& xi) const {
  if (rule == QRule::kAdjacentCell) {
    const int id = cells.find(*partition, n, xi);
    return id < 0 ? kNaN : cell_average[id];
  }
  const int d = static_cast<int>(xi.size());
  double s = 0.0;
  int count = 0;
  bool ok = true;
  for_each_index(IVecN::Zero(d), IVecN::Ones(d), [&](const IVecN& k) {
    const int id = cells.find(*partition, n, xi - k);
    if (id < 0) {
      ok = false;
      return;
    }
    s += cell_average[id];
    ++count;
  });
  return ok ? s / count : kNaN;
}

double QInterpolant::eval_local(int cell, const VecN& y) const {
  const int n = cells.subdomain[cell];
  const IVecN& xi = cells.xi[cell];
  const int d = static_cast<int>(xi.size());
  double s = 0.0;
  for_each_index(IVecN::Zero(d), IVecN::Ones(d), [&](const IVecN& k) {
    double w = 1.0;
    for (int a = 0; a < d; ++a) w *= k(a) ? y(a) : 1.0 - y(a);
    s += w * node_value(n, xi + k);
  });
  return s;
}

double QInterpolant::eval(const VecN& x) const {
  const Location loc = locate(*partition, x);
  if (loc.in_lambda) return kNaN;
  const int id = cells.find(*partition, loc.n, loc.xi);
  if (id < 0 || !interior[id]) return kNaN;
  return eval_local(id, loc.y_local);
}

int QInterpolant::interior_count() const {
  int c = 0;
  for (auto v : interior) c += v;
  return c;
}

QInterpolant interpolate_Q(const PointFn& phi, const Partition& partition, QRule rule) {
  QInterpolant q;
  q.partition = &partition;
  q.rule = rule;
  q.cells = LatticeCells::build(partition);
  const int d = partition.dim();
  const TensorRule gl = tensor_gauss(d, 6);
  q.cell_average.resize(q.cells.size());
  for (int c = 0; c < q.cells.size(); ++c) {
    double s = 0.0;
    for (std::size_t k = 0; k < gl.points.size(); ++k)
      s += gl.weights[k] * phi(partition.reconstruct(q.cells.subdomain[c], q.cells.xi[c], gl.points[k]));
    q.cell_average[c] = s;
  }
  q.interior.assign(q.cells.size(), 0);
  for (int c = 0; c < q.cells.size(); ++c) {
    bool ok = true;
    for_each_index(IVecN::Zero(d), IVecN::Ones(d), [&](const IVecN& k) {
      if (std::isnan(q.node_value(q.cells.subdomain[c], q.cells.xi[c] + k))) ok = false;
    });
    q.interior[c] = ok ? 1 : 0;
  }
  return q;
}

QInterpolant interpolate_Q(const GridFunction& phi, const Partition& partition, QRule rule) {
  require_2d(partition);
  return interpolate_Q(phi.as_function(), partition, rule);
}

RemainderNorms remainder_R(const PointFn& phi, const GradientFn& grad, const Partition& partition, QRule rule) {
  const QInterpolant q = interpolate_Q(phi, partition, rule);
  const int d = partition.dim();
  const TensorRule gl = tensor_gauss(d, 6);
  auto gradient = [&](const VecN& x) -> VecN {
    if (grad) return grad(x);
    VecN g(d);
    for (int a = 0; a < d; ++a) {
      const double delta = 1e-6;
      VecN xp = x, xm = x;
      xp(a) += delta;
      xm(a) -= delta;
      g(a) = (phi(xp) - phi(xm)) / (2.0 * delta);
    }
    return g;
  };
  RemainderNorms out;
  double r2 = 0.0, g2 = 0.0;
  for (int c = 0; c < q.cells.size(); ++c) {
    if (!q.interior[c]) continue;
    const int n = q.cells.subdomain[c];
    const double vol = cell_volume(partition, n);
    out.region_volume += vol;
    for (std::size_t k = 0; k < gl.points.size(); ++k) {
      const VecN x = partition.reconstruct(n, q.cells.xi[c], gl.points[k]);
      const double r = phi(x) - q.eval_local(c, gl.points[k]);
      r2 += vol * gl.weights[k] * r * r;
      g2 += vol * gl.weights[k] * gradient(x).squaredNorm();
    }
  }
  out.r_l2 = std::sqrt(r2);
  out.grad_l2 = std::sqrt(g2);
  out.ratio = out.grad_l2 > 0.0 ? out.r_l2 / (partition.eps * out.grad_l2) : 0.0;
  return out;
}

double lts_pairing(const GridFunction& u, const ScalarFieldOnCells& psi, const Partition& partition) {
  require_2d(partition);
  const Grid2& g = u.grid;
  double s = 0.0;
  for (int c = 0; c < g.size(); ++c) {
    if (!u.fluid(c)) continue;
    s += u.values[c] * lp_approx(psi, partition, from_vec2(g.center(c)), LpVariant::kL);
  }
  return s * g.cell_area();
}

namespace {

// Integral over the Lambda part of the domain of f(x) by midpoint sampling.
template <typename Fn>
double lambda_integral(const Partition& partition, int samples, Fn&& f) {
  const Box& box = partition.domain;
  const int d = box.dim();
  const VecN step = (box.hi - box.lo) / static_cast<double>(samples);
  const double vol = step.prod();
  double s = 0.0;
  for_each_index(IVecN::Zero(d), IVecN::Constant(d, samples - 1), [&](const IVecN& idx) {
    const VecN x = box.lo + step.cwiseProduct(idx.cast<double>() + VecN::Constant(d, 0.5));
    if (locate(partition, x).in_lambda) s += vol * f(x);
  });
  return s;
}

}  // namespace

double unfold_error_norm(const PointFn& phi, const Partition& partition, int m, int lambda_samples) {
  const int d = partition.dim();
  const LatticeCells cells = LatticeCells::build(partition);
  const std::vector<VecN> ys = midpoint_samples(d, m);
  const int ms = static_cast<int>(ys.size());
  std::vector<double> vals(ms);
  double s = 0.0;
  for (int c = 0; c < cells.size(); ++c) {
    const int n = cells.subdomain[c];
    // The x- and y-samples of a cell share the same midpoints: T(phi)(x, y_j)
    // = phi(point(y_j)) for every x in the cell.
    for (int k = 0; k < ms; ++k) vals[k] = phi(partition.reconstruct(n, cells.xi[c], ys[k]));
    double cs = 0.0;
    for (int i = 0; i < ms; ++i)
      for (int j = 0; j < ms; ++j) cs += (vals[j] - vals[i]) * (vals[j] - vals[i]);
    s += cell_volume(partition, n) * cs / (static_cast<double>(ms) * ms);
  }
  s += lambda_integral(partition, lambda_samples, [&](const VecN& x) {
    const double v = phi(x);
    return v * v;
  });
  return std::sqrt(s);
}

double lp_unfold_error_norm(const ScalarFieldOnCells& psi, const Partition& partition, int m, int lambda_samples) {
  const int d = partition.dim();
  const LatticeCells cells = LatticeCells::build(partition);
  const std::vector<VecN> ys = midpoint_samples(d, m);
  const int ms = static_cast<int>(ys.size());
  std::vector<double> tvals(ms);
  std::vector<VecN> xs(ms);
  double s = 0.0;
  for (int c = 0; c < cells.size(); ++c) {
    const int n = cells.subdomain[c];
    for (int k = 0; k < ms; ++k) {
      xs[k] = partition.reconstruct(n, cells.xi[c], ys[k]);
      tvals[k] = lp_approx(psi, partition, xs[k], LpVariant::kL);
    }
    double cs = 0.0;
    for (int i = 0; i < ms; ++i)
      for (int j = 0; j < ms; ++j) {
        const double diff = tvals[j] - psi(xs[i], ys[j]);
        cs += diff * diff;
      }
    s += cell_volume(partition, n) * cs / (static_cast<double>(ms) * ms);
  }
  s += lambda_integral(partition, lambda_samples, [&](const VecN& x) {
    double v = 0.0;
    for (const VecN& y : ys) v += psi(x, y) * psi(x, y);
    return v / ms;
  });
  return std::sqrt(s);
}

}  // namespace lphom
