#include "lphom/geometry.hpp"
#include "lphom/multi_index.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace lphom {
namespace {

constexpr double kFaceTol = 1e-12;

void require_dim(int d) {
  if (d != 2 && d != 3) throw InvalidArgument("unsupported dimension " + std::to_string(d) + " (expected 2 or 3)");
}

double operator_norm(const MatN& m) {
  Eigen::JacobiSVD<MatN> svd(m);
  return svd.singularValues()(0);
}

// Corners of the parallelepiped origin + E [0,1]^d.
std::vector<VecN> parallelepiped_corners(const VecN& origin, const MatN& E) {
  const int d = static_cast<int>(origin.size());
  std::vector<VecN> corners;
  corners.reserve(std::size_t{1} << d);
  for (int mask = 0; mask < (1 << d); ++mask) {
    VecN c = origin;
    for (int k = 0; k < d; ++k)
      if (mask & (1 << k)) c += E.col(k);
    corners.push_back(c);
  }
  return corners;
}

// Positive-measure overlap of an axis-aligned box and a parallelepiped, by
// separating axes (box normals, parallelepiped normals and, in 3D, edge
// cross products).
bool parallelepiped_meets_box(const VecN& origin, const MatN& E, const VecN& lo, const VecN& hi) {
  const int d = static_cast<int>(origin.size());
  const auto pc = parallelepiped_corners(origin, E);
  std::vector<VecN> bc;
  {
    MatN B = MatN::Zero(d, d);
    for (int k = 0; k < d; ++k) B(k, k) = hi(k) - lo(k);
    bc = parallelepiped_corners(lo, B);
  }
  std::vector<VecN> axes;
  for (int k = 0; k < d; ++k) axes.push_back(VecN::Unit(d, k));
  const MatN Einv_t = E.inverse().transpose();
  for (int k = 0; k < d; ++k) axes.push_back(Einv_t.col(k));
  if (d == 3) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const Eigen::Vector3d a = Eigen::Vector3d::Unit(i);
        const Eigen::Vector3d b(E(0, j), E(1, j), E(2, j));
        const Eigen::Vector3d c = a.cross(b);
        if (c.norm() > 1e-14) axes.push_back(make_vec(c(0), c(1), c(2)));
      }
    }
  }
  for (const VecN& axis : axes) {
    double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
    double bmin = pmin, bmax = -pmin;
    for (const VecN& p : pc) {
      const double v = axis.dot(p);
      pmin = std::min(pmin, v);
      pmax = std::max(pmax, v);
    }
    for (const VecN& p : bc) {
      const double v = axis.dot(p);
      bmin = std::min(bmin, v);
      bmax = std::max(bmax, v);
    }
    const double scale = kFaceTol * std::max(1.0, axis.norm());
    if (pmax <= bmin + scale || bmax <= pmin + scale) return false;
  }
  return true;
}

bool box_contains_all(const std::vector<VecN>& pts, const VecN& lo, const VecN& hi) {
  for (const VecN& p : pts)
    for (int k = 0; k < p.size(); ++k)
      if (p(k) < lo(k) - kFaceTol || p(k) > hi(k) + kFaceTol) return false;
  return true;
}

}  // namespace

MatN rotation_matrix(double alpha, int d) {
  require_dim(d);
  if (!std::isfinite(alpha)) throw InvalidArgument("rotation angle must be finite");
  MatN r = MatN::Identity(d, d);
  const double c = std::cos(alpha), s = std::sin(alpha);
  r(0, 0) = c;
  r(0, 1) = s;
  r(1, 0) = -s;
  r(1, 1) = c;
  return r;
}

Box Box::unit(int d) {
  require_dim(d);
  return Box{VecN::Zero(d), VecN::Ones(d)};
}

double Box::volume() const { return (hi - lo).prod(); }

bool Box::contains(const VecN& x, double tol) const {
  if (x.size() != lo.size()) return false;
  for (int k = 0; k < x.size(); ++k)
    if (!(x(k) >= lo(k) - tol && x(k) <= hi(k) + tol)) return false;
  return true;
}

TransformField TransformField::identity(int d) {
  require_dim(d);
  TransformField tf;
  tf.dim = d;
  tf.D = [d](const VecN&) { return MatN(MatN::Identity(d, d)); };
  tf.K = tf.D;
  tf.detD_lower = tf.detD_upper = tf.detK_lower = tf.detK_upper = 1.0;
  tf.lipschitz_budget = 0.0;
  return tf;
}

UnitCellSpec UnitCellSpec::none(int d) {
  require_dim(d);
  UnitCellSpec c;
  c.dim = d;
  return c;
}

UnitCellSpec UnitCellSpec::disk(double a, int d) {
  require_dim(d);
  UnitCellSpec c;
  c.dim = d;
  c.shape = InclusionShape::kDisk;
  c.radius = a;
  c.validate();
  return c;
}

UnitCellSpec UnitCellSpec::fiber(double a, int axis, int d) {
  require_dim(d);
  UnitCellSpec c;
  c.dim = d;
  c.shape = InclusionShape::kFiber;
  c.radius = a;
  c.fiber_axis = axis;
  c.validate();
  return c;
}

void UnitCellSpec::validate() const {
  require_dim(dim);
  if (shape == InclusionShape::kNone) return;
  if (!(radius > 0.0 && radius < 0.5)) throw InvalidArgument("inclusion radius must satisfy 0 < a < 1/2");
  if (shape == InclusionShape::kFiber && (fiber_axis < 0 || fiber_axis >= dim))
    throw InvalidArgument("fibre axis out of range");
}

double UnitCellSpec::level_set(const VecN& y, const MatN& Kinv) const {
  if (shape == InclusionShape::kNone) return std::numeric_limits<double>::infinity();
  VecN z = Kinv * (y - center());
  if (shape == InclusionShape::kFiber) z(fiber_axis) = 0.0;
  return z.norm() - radius;
}

double UnitCellSpec::reference_volume() const {
  const double a = radius;
  switch (shape) {
    case InclusionShape::kNone:
      return 0.0;
    case InclusionShape::kDisk:
      return dim == 2 ? std::numbers::pi * a * a : 4.0 / 3.0 * std::numbers::pi * a * a * a;
    case InclusionShape::kFiber:
      return dim == 2 ? 2.0 * a : std::numbers::pi * a * a;
  }
  return 0.0;
}

bool UnitCellSpec::inclusion_inside(const MatN& K, double margin) const {
  if (shape == InclusionShape::kNone) return true;
  // Extent of c + K(a B) along axis i is a * |row_i(K)| (restricted to the
  // transverse columns for fibres, which span the whole cell along the axis).
  for (int i = 0; i < dim; ++i) {
    if (shape == InclusionShape::kFiber && i == fiber_axis) continue;
    VecN row = K.row(i).transpose();
    if (shape == InclusionShape::kFiber) row(fiber_axis) = 0.0;
    if (radius * row.norm() >= 0.5 - margin) return false;
  }
  return true;
}

TransformCheck check_transform(const TransformField& tf, const Box& domain, const UnitCellSpec& cell,
                               int samples_per_axis) {
  const int d = domain.dim();
  if (samples_per_axis < 2) throw InvalidArgument("need at least 2 samples per axis");
  TransformCheck out;
  out.detD_min = out.detK_min = std::numeric_limits<double>::infinity();
  out.detD_max = out.detK_max = 0.0;
  const VecN step = (domain.hi - domain.lo) / static_cast<double>(samples_per_axis - 1);
  auto point = [&](const IVecN& idx) {
    VecN x = domain.lo;
    for (int k = 0; k < d; ++k) x(k) += step(k) * idx(k);
    return x;
  };
  for_each_index(IVecN::Zero(d), IVecN::Constant(d, samples_per_axis - 1), [&](const IVecN& idx) {
    const VecN x = point(idx);
    const MatN D = tf.D(x), K = tf.K(x);
    const double dD = std::abs(D.determinant()), dK = std::abs(K.determinant());
    out.detD_min = std::min(out.detD_min, dD);
    out.detD_max = std::max(out.detD_max, dD);
    out.detK_min = std::min(out.detK_min, dK);
    out.detK_max = std::max(out.detK_max, dK);
    if (!cell.inclusion_inside(K)) out.inclusion_inside = false;
    for (int k = 0; k < d; ++k) {
      if (idx(k) + 1 >= samples_per_axis) continue;
      IVecN nb = idx;
      ++nb(k);
      const VecN x2 = point(nb);
      const double dist = (x2 - x).norm();
      out.lipschitz_D = std::max(out.lipschitz_D, (tf.D(x2) - D).norm() / dist);
      out.lipschitz_K = std::max(out.lipschitz_K, (tf.K(x2) - K).norm() / dist);
    }
  });
  constexpr double slack = 1e-12;
  out.ok = out.inclusion_inside && out.detD_min >= tf.detD_lower - slack && out.detD_max <= tf.detD_upper + slack &&
           out.detK_min >= tf.detK_lower - slack && out.detK_max <= tf.detK_upper + slack &&
           out.lipschitz_D <= tf.lipschitz_budget + 1e-12 && out.lipschitz_K <= tf.lipschitz_budget + 1e-12;
  return out;
}

bool Subdomain::in_hat(const IVecN& xi) const {
  const int d = static_cast<int>(xi.size());
  std::size_t offset = 0, stride = 1;
  for (int k = 0; k < d; ++k) {
    if (xi(k) < lattice_lo(k) || xi(k) > lattice_hi(k)) return false;
    offset += static_cast<std::size_t>(xi(k) - lattice_lo(k)) * stride;
    stride *= static_cast<std::size_t>(lattice_hi(k) - lattice_lo(k) + 1);
  }
  return hat[offset] != 0;
}

std::vector<IVecN> Subdomain::hat_cells() const {
  std::vector<IVecN> cells;
  cells.reserve(hat_count);
  std::size_t offset = 0;
  for_each_index(lattice_lo, lattice_hi, [&](const IVecN& xi) {
    if (hat[offset++]) cells.push_back(xi);
  });
  return cells;
}

int Partition::subdomain_index(const VecN& x) const {
  const int d = dim();
  int index = 0, stride = 1;
  for (int k = 0; k < d; ++k) {
    const double t = (x(k) - domain.lo(k)) / side;
    int i = static_cast<int>(std::floor(t));
    if (i > 0 && t == static_cast<double>(i)) --i;
    i = std::clamp(i, 0, counts(k) - 1);
    index += i * stride;
    stride *= counts(k);
  }
  return index;
}

VecN Partition::reconstruct(int n, const IVecN& xi, const VecN& y) const {
  const Subdomain& s = subdomains.at(n);
  return s.shift + eps * (s.D * (xi.cast<double>() + y));
}

double Partition::hat_volume() const {
  double v = 0.0;
  for (const Subdomain& s : subdomains) v += s.hat_count * std::pow(eps, dim()) * s.detD;
  return v;
}

std::size_t Partition::hat_cell_count() const {
  std::size_t c = 0;
  for (const Subdomain& s : subdomains) c += static_cast<std::size_t>(s.hat_count);
  return c;
}

Partition build_partition(const Box& domain, double eps, double r, const TransformField& tf, AnchorRule anchor_rule) {
  const int d = domain.dim();
  require_dim(d);
  if (tf.dim != d) throw InvalidArgument("transform dimension does not match the domain");
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("r must lie in (0, 1)");

  const double raw_side = std::pow(eps, r);
  double max_norm = 0.0;
  {
    constexpr int kProbe = 9;
    const VecN step = (domain.hi - domain.lo) / static_cast<double>(kProbe - 1);
    for_each_index(IVecN::Zero(d), IVecN::Constant(d, kProbe - 1), [&](const IVecN& idx) {
      VecN x = domain.lo;
      for (int k = 0; k < d; ++k) x(k) += step(k) * idx(k);
      max_norm = std::max(max_norm, operator_norm(tf.D(x)));
    });
  }
  if (raw_side < 2.0 * eps * max_norm * (1.0 - 1e-12))
    throw InvalidArgument("subdomain side eps^r is smaller than two lattice cells (2 eps max|D|)");

  Partition p;
  p.domain = domain;
  p.eps = eps;
  p.r = r;
  p.anchor_rule = anchor_rule;
  p.side = eps * std::max(1.0, std::round(raw_side / eps));
  p.counts = IVecN(d);
  for (int k = 0; k < d; ++k)
    p.counts(k) = std::max(1, static_cast<int>(std::ceil((domain.hi(k) - domain.lo(k)) / p.side - 1e-9)));

  for_each_index(IVecN::Zero(d), (p.counts.array() - 1).matrix(), [&](const IVecN& k) {
    Subdomain s;
    s.cube_lo = domain.lo + p.side * k.cast<double>();
    s.cube_hi = s.cube_lo + VecN::Constant(d, p.side);
    s.lo = s.cube_lo;
    s.hi = s.cube_hi.cwiseMin(domain.hi);
    s.anchor = anchor_rule == AnchorRule::kCenter ? VecN(0.5 * (s.lo + s.hi)) : s.lo;
    s.D = tf.D(s.anchor);
    s.K = tf.K(s.anchor);
    s.detD = std::abs(s.D.determinant());
    if (s.detD <= 0.0 || std::abs(s.K.determinant()) <= 0.0) throw InvalidArgument("singular D or K at an anchor");
    s.Dinv = s.D.inverse();
    s.Kinv = s.K.inverse();

    VecN xi0 = (s.Dinv * s.cube_lo) / eps;
    for (int i = 0; i < d; ++i) xi0(i) = std::round(xi0(i));
    s.shift = eps * (s.D * xi0);

    // Candidate lattice range: bounding box of the subdomain in lattice coordinates.
    MatN B = MatN::Zero(d, d);
    for (int i = 0; i < d; ++i) B(i, i) = s.hi(i) - s.lo(i);
    VecN zmin = VecN::Constant(d, std::numeric_limits<double>::infinity());
    VecN zmax = -zmin;
    for (const VecN& c : parallelepiped_corners(s.lo, B)) {
      const VecN z = s.Dinv * (c - s.shift) / eps;
      zmin = zmin.cwiseMin(z);
      zmax = zmax.cwiseMax(z);
    }
    s.lattice_lo = IVecN(d);
    s.lattice_hi = IVecN(d);
    for (int i = 0; i < d; ++i) {
      s.lattice_lo(i) = static_cast<int>(std::floor(zmin(i))) - 1;
      s.lattice_hi(i) = static_cast<int>(std::ceil(zmax(i)));
    }
    const MatN E = eps * s.D;
    for_each_index(s.lattice_lo, s.lattice_hi, [&](const IVecN& xi) {
      const VecN origin = s.shift + E * xi.cast<double>();
      const bool inside = box_contains_all(parallelepiped_corners(origin, E), s.lo, s.hi);
      s.hat.push_back(inside ? 1 : 0);
      if (inside) ++s.hat_count;
      if (inside || parallelepiped_meets_box(origin, E, s.lo, s.hi)) ++s.xi_count;
    });
    p.subdomains.push_back(std::move(s));
  });
  return p;
}

Location locate(const Partition& partition, const VecN& x) {
  if (!partition.domain.contains(x)) throw InvalidArgument("point lies outside the domain");
  Location loc;
  loc.n = partition.subdomain_index(x);
  const Subdomain& s = partition.subdomains[loc.n];
  const VecN z = s.Dinv * (x - s.shift) / partition.eps;
  const int d = partition.dim();
  loc.xi = IVecN(d);
  loc.y_local = VecN(d);
  for (int k = 0; k < d; ++k) {
    double f = std::floor(z(k));
    double y = z(k) - f;
    if (y > 1.0 - 1e-12) {
      f += 1.0;
      y = 0.0;
    }
    loc.xi(k) = static_cast<int>(f);
    loc.y_local(k) = y;
  }
  loc.in_lambda = !s.in_hat(loc.xi);
  return loc;
}

bool spot_check_periodic(const ScalarFieldOnCells& psi, const Box& domain, int samples, double tol) {
  const int d = domain.dim();
  for (int i = 0; i < samples; ++i) {
    // Deterministic low-discrepancy style sample points.
    const double t = (i + 0.5) / samples;
    VecN x(d), y(d);
    for (int k = 0; k < d; ++k) {
      const double frac = std::fmod(t * (k + 1) * 0.618033988749895 + 0.1 * k, 1.0);
      x(k) = domain.lo(k) + frac * (domain.hi(k) - domain.lo(k));
      y(k) = std::fmod(t * (k + 2) * 0.7548776662466927, 1.0);
    }
    const double base = psi(x, y);
    for (int k = 0; k < d; ++k) {
      VecN shifted = y;
      shifted(k) += 1.0;
      if (std::abs(psi(x, shifted) - base) > tol * std::max(1.0, std::abs(base))) return false;
    }
  }
  return true;
}

double lp_approx(const ScalarFieldOnCells& psi, const Partition& partition, const VecN& x, LpVariant variant) {
  const Location loc = locate(partition, x);
  const VecN& xa = variant == LpVariant::kL ? x : partition.subdomains[loc.n].anchor;
  return psi(xa, loc.y_local);
}

bool indicator_perforated(const Partition& partition, const UnitCellSpec& cell, const VecN& x) {
  const Location loc = locate(partition, x);
  if (loc.in_lambda) return true;
  return !cell.in_inclusion(loc.y_local, partition.subdomains[loc.n].Kinv);
}

TransformField PlywoodSpec::transform(int d) const {
  require_dim(d);
  TransformField tf;
  tf.dim = d;
  auto g = gamma;
  auto rh = rho;
  tf.D = [g, d](const VecN& x) { return MatN(rotation_matrix(g(x(d - 1)), d).transpose()); };
  tf.K = [rh, d](const VecN& x) {
    MatN k = MatN::Identity(d, d);
    for (int i = 1; i < d; ++i) k(i, i) = rh(x);
    return k;
  };
  tf.detD_lower = tf.detD_upper = 1.0;
  tf.detK_lower = 0.0;
  tf.detK_upper = std::numeric_limits<double>::infinity();
  tf.lipschitz_budget = std::numeric_limits<double>::infinity();
  return tf;
}

bool indicator_plywood(const Partition& partition, const PlywoodSpec& spec, const VecN& x) {
  const int d = partition.dim();
  if (spec.rho(x) * spec.a >= 0.5) throw InvalidArgument("fibre radius rho(x) a must stay below 1/2");
  const Location loc = locate(partition, x);
  const Subdomain& s = partition.subdomains[loc.n];
  const MatN expected = rotation_matrix(spec.gamma(s.anchor(d - 1)), d).transpose();
  if ((expected - s.D).norm() > 1e-12) throw InvalidArgument("partition was not built from the plywood transform");
  VecN transverse = loc.y_local - VecN::Constant(d, 0.5);
  transverse(0) = 0.0;
  return transverse.norm() / spec.rho(s.anchor) <= spec.a;
}

double lambda_measure_sampled(const Partition& partition, int samples_per_axis) {
  const Box& box = partition.domain;
  const int d = box.dim();
  const VecN step = (box.hi - box.lo) / static_cast<double>(samples_per_axis);
  const double cell = step.prod();
  double measure = 0.0;
  for_each_index(IVecN::Zero(d), IVecN::Constant(d, samples_per_axis - 1), [&](const IVecN& idx) {
    const VecN x = box.lo + step.cwiseProduct(idx.cast<double>() + VecN::Constant(d, 0.5));
    if (locate(partition, x).in_lambda) measure += cell;
  });
  return measure;
}

double perforation_fraction_sampled(const Partition& partition, const UnitCellSpec& cell, int samples_per_axis) {
  const Box& box = partition.domain;
  const int d = box.dim();
  const VecN step = (box.hi - box.lo) / static_cast<double>(samples_per_axis);
  std::size_t in_hat = 0, perforated = 0;
  for_each_index(IVecN::Zero(d), IVecN::Constant(d, samples_per_axis - 1), [&](const IVecN& idx) {
    const VecN x = box.lo + step.cwiseProduct(idx.cast<double>() + VecN::Constant(d, 0.5));
    const Location loc = locate(partition, x);
    if (loc.in_lambda) return;
    ++in_hat;
    if (cell.in_inclusion(loc.y_local, partition.subdomains[loc.n].Kinv)) ++perforated;
  });
  return in_hat == 0 ? 0.0 : static_cast<double>(perforated) / static_cast<double>(in_hat);
}

}  // namespace lphom
