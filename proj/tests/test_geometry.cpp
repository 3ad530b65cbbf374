#include "doctest.h"

#include "lphom/geometry.hpp"

#include <cmath>
#include <numbers>

using namespace lphom;

namespace {

TransformField rotated(double angle) {
  TransformField tf = TransformField::identity(2);
  tf.D = [angle](const VecN&) { return MatN(rotation_matrix(angle, 2).transpose()); };
  return tf;
}

}  // namespace

TEST_CASE("rotation matrix") {
  CHECK((rotation_matrix(0.0, 3) - MatN::Identity(3, 3)).norm() == 0.0);
  const MatN r = rotation_matrix(std::numbers::pi / 2, 2);
  CHECK(r(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r(0, 1) == doctest::Approx(1.0));
  CHECK(r(1, 0) == doctest::Approx(-1.0));
  CHECK(std::abs(r(1, 1)) < 1e-15);
  const MatN r3 = rotation_matrix(0.7, 3);
  CHECK((r3 * r3.transpose() - MatN::Identity(3, 3)).norm() < 1e-14);
  CHECK(r3(2, 2) == 1.0);
  CHECK_THROWS_AS(rotation_matrix(0.1, 4), InvalidArgument);
  CHECK_THROWS_AS(rotation_matrix(NAN, 2), InvalidArgument);
}

TEST_CASE("partition sizes") {
  const Box box = Box::unit(2);
  const auto tf = TransformField::identity(2);
  const Partition p16 = build_partition(box, 1.0 / 16, 0.5, tf);
  CHECK(p16.size() == 16);
  CHECK(p16.side == doctest::Approx(0.25));
  const Partition p4 = build_partition(box, 1.0 / 4, 0.5, tf);
  CHECK(p4.size() == 4);
  CHECK(p4.side == doctest::Approx(0.5));
  // eps^r smaller than two cells.
  CHECK_THROWS_AS(build_partition(box, 0.4, 0.9, tf), InvalidArgument);
  CHECK_THROWS_AS(build_partition(box, 0.1, 1.0, tf), InvalidArgument);
}

TEST_CASE("interior lattice sets by exhaustive corner test") {
  const Partition p = build_partition(Box::unit(2), 1.0 / 16, 0.5, TransformField::identity(2), AnchorRule::kLowerCorner);
  for (const Subdomain& s : p.subdomains) {
    CHECK(s.hat_count == 16);
    CHECK((s.anchor - s.lo).norm() == 0.0);
    // Independent oracle: enumerate lattice points in a generous window.
    int count = 0;
    for (int a = -10; a < 30; ++a)
      for (int b = -10; b < 30; ++b) {
        const double x0 = s.shift(0) + a / 16.0, y0 = s.shift(1) + b / 16.0;
        if (x0 >= s.lo(0) - 1e-12 && x0 + 1.0 / 16 <= s.hi(0) + 1e-12 && y0 >= s.lo(1) - 1e-12 &&
            y0 + 1.0 / 16 <= s.hi(1) + 1e-12)
          ++count;
      }
    CHECK(count == s.hat_count);
  }
  CHECK(p.hat_volume() == doctest::Approx(1.0));
}

TEST_CASE("partition invariants under rotation") {
  const Partition p = build_partition(Box::unit(2), 1.0 / 16, 0.5, rotated(std::numbers::pi / 6));
  double total = 0.0;
  for (const Subdomain& s : p.subdomains) {
    total += (s.hi - s.lo).prod();
    CHECK(Box{s.lo, s.hi}.contains(s.anchor));
    // Every interior cell is inside its subdomain.
    for (const IVecN& xi : s.hat_cells())
      for (double u : {0.0, 1.0})
        for (double v : {0.0, 1.0}) {
          const VecN x = s.shift + p.eps * s.D * (xi.cast<double>() + make_vec(u, v));
          CHECK(Box{s.lo, s.hi}.contains(x, 1e-12));
        }
    CHECK(s.xi_count >= s.hat_count);
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(p.hat_volume() < 1.0);
}

TEST_CASE("locate") {
  const auto tf = TransformField::identity(2);
  // eps = 1/4 with r close to 1 keeps the side snapped to... a single subdomain needs side >= 1.
  const Partition p = build_partition(Box::unit(2), 0.25, 0.01, tf);
  REQUIRE(p.size() == 1);
  const Location loc = locate(p, make_vec(0.3, 0.6));
  CHECK(loc.xi(0) == 1);
  CHECK(loc.xi(1) == 2);
  CHECK(loc.y_local(0) == doctest::Approx(0.2));
  CHECK(loc.y_local(1) == doctest::Approx(0.4));
  const Location corner = locate(p, make_vec(0.5, 0.25));
  CHECK(corner.xi(0) == 2);
  CHECK(corner.xi(1) == 1);
  CHECK(corner.y_local.norm() == 0.0);
  CHECK_THROWS_AS(locate(p, make_vec(1.2, 0.5)), InvalidArgument);

  const Partition pr = build_partition(Box::unit(2), 1.0 / 8, 0.5, rotated(std::numbers::pi / 6));
  const VecN x = make_vec(0.40, 0.35);
  const Location lr = locate(pr, x);
  const Subdomain& s = pr.subdomains[lr.n];
  const VecN z = s.D.inverse() * (x - s.shift) / pr.eps;
  CHECK(lr.xi(0) == static_cast<int>(std::floor(z(0))));
  CHECK(lr.xi(1) == static_cast<int>(std::floor(z(1))));
  CHECK((pr.reconstruct(lr.n, lr.xi, lr.y_local) - x).norm() < 1e-12);
}

TEST_CASE("locate is a left inverse of reconstruction") {
  const Partition p = build_partition(Box::unit(2), 1.0 / 16, 0.5, rotated(0.4));
  for (int i = 0; i < 37; ++i)
    for (int j = 0; j < 41; ++j) {
      const VecN x = make_vec((i + 0.37) / 37.0, (j + 0.61) / 41.0);
      const Location l = locate(p, x);
      CHECK((p.reconstruct(l.n, l.xi, l.y_local) - x).norm() < 1e-12);
      CHECK(l.y_local.minCoeff() >= 0.0);
      CHECK(l.y_local.maxCoeff() < 1.0);
    }
}

TEST_CASE("subdomain faces go to the lower index") {
  const Partition p = build_partition(Box::unit(2), 1.0 / 16, 0.5, TransformField::identity(2));
  CHECK(p.subdomain_index(make_vec(0.25, 0.1)) == 0);
  CHECK(p.subdomain_index(make_vec(0.2500001, 0.1)) == 1);
  CHECK(p.subdomain_index(make_vec(1.0, 1.0)) == 15);
}

TEST_CASE("locally periodic approximations") {
  const Partition p = build_partition(Box::unit(2), 1.0 / 16, 0.5, TransformField::identity(2));
  const ScalarFieldOnCells g{"g", [](const VecN& x, const VecN&) { return x(0) + 2.0 * x(1); }};
  const ScalarFieldOnCells s{"s", [](const VecN&, const VecN& y) { return std::sin(2 * std::numbers::pi * y(0)); }};
  const VecN x = make_vec(0.33, 0.71);
  const int n = p.subdomain_index(x);
  CHECK(lp_approx(g, p, x, LpVariant::kL) == doctest::Approx(0.33 + 1.42));
  CHECK(lp_approx(g, p, x, LpVariant::kL0) == doctest::Approx(p.subdomains[n].anchor(0) + 2 * p.subdomains[n].anchor(1)));
  const double expect = std::sin(2 * std::numbers::pi * 0.33 * 16);
  CHECK(lp_approx(s, p, x, LpVariant::kL) == doctest::Approx(expect).epsilon(1e-10));
  CHECK(lp_approx(s, p, x, LpVariant::kL0) == doctest::Approx(expect).epsilon(1e-10));
  CHECK(spot_check_periodic(s, p.domain, 20));

  PlywoodSpec ply;
  ply.gamma = [](double t) { return std::numbers::pi * t / 2; };
  ply.rho = [](const VecN&) { return 1.0; };
  const Partition pp = build_partition(Box::unit(2), 1.0 / 16, 0.5, ply.transform(2));
  const ScalarFieldOnCells xy{"xy", [](const VecN& x, const VecN& y) { return x(0) * y(1); }};
  for (double t : {0.13, 0.52, 0.87}) {
    const VecN x = make_vec(t, 1.0 - t * 0.9);
    const Location l = locate(pp, x);
    CHECK(lp_approx(xy, pp, x, LpVariant::kL) == doctest::Approx(x(0) * l.y_local(1)));
  }
}

TEST_CASE("perforation indicator") {
  const Partition p = build_partition(Box::unit(2), 1.0 / 16, 0.5, TransformField::identity(2));
  const UnitCellSpec disk = UnitCellSpec::disk(0.25);
  CHECK_FALSE(indicator_perforated(p, disk, make_vec(0.5 / 16 + 3.0 / 16, 0.5 / 16)));
  CHECK(indicator_perforated(p, disk, make_vec(0.01 / 16 + 3.0 / 16, 0.01 / 16 + 5.0 / 16)));

  TransformField grow = TransformField::identity(2);
  grow.K = [](const VecN&) { return MatN(1.5 * MatN::Identity(2, 2)); };
  const Partition pg = build_partition(Box::unit(2), 1.0 / 16, 0.5, grow);
  // Pull-back distance 0.37 / 1.5 < 0.25: inside the perforation.
  const VecN x = make_vec((3 + 0.5 + 0.37) / 16, (7 + 0.5) / 16);
  CHECK_FALSE(indicator_perforated(pg, disk, x));
  CHECK(indicator_perforated(pg, disk, make_vec((3 + 0.5 + 0.38) / 16, (7 + 0.5) / 16)));
}

TEST_CASE("plywood indicator") {
  PlywoodSpec flat;
  flat.gamma = [](double) { return 0.0; };
  flat.rho = [](const VecN&) { return 1.0; };
  flat.a = 0.2;
  const Partition p = build_partition(Box::unit(2), 1.0 / 16, 0.5, flat.transform(2));
  const UnitCellSpec slab = UnitCellSpec::fiber(0.2, 0, 2);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) {
      const VecN x = make_vec((i + 0.3) / 50, (j + 0.7) / 50);
      // Open fibre in one, closed in the other: only differs on the fibre surface.
      CHECK(indicator_plywood(p, flat, x) == !indicator_perforated(p, slab, x));
    }

  PlywoodSpec twist = flat;
  twist.gamma = [](double t) { return std::numbers::pi * t / 2; };
  const Partition pt = build_partition(Box::unit(2), 1.0 / 16, 0.5, twist.transform(2));
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) {
      const VecN x = make_vec((i + 0.5) / 40, (j + 0.5) / 40);
      const int n = pt.subdomain_index(x);
      const Subdomain& s = pt.subdomains[n];
      const MatN R = rotation_matrix(std::numbers::pi * s.anchor(1) / 2, 2);
      const VecN z = R * (x - s.shift) / pt.eps;  // R = D^{-1}
      const double frac = z(1) - std::floor(z(1));
      CHECK(indicator_plywood(pt, twist, x) == (std::abs(frac - 0.5) <= 0.2));
    }
  // Fibre axis points.
  const Subdomain& s0 = pt.subdomains[5];
  CHECK(indicator_plywood(pt, twist, pt.reconstruct(5, s0.hat_cells()[3], make_vec(0.1, 0.5))));

  PlywoodSpec fat = flat;
  fat.rho = [](const VecN&) { return 3.0; };
  CHECK_THROWS_AS(indicator_plywood(p, fat, make_vec(0.5, 0.5)), InvalidArgument);
}

TEST_CASE("transform checks and measures") {
  TransformField epi = TransformField::identity(2);
  epi.D = [](const VecN& x) {
    MatN d = MatN::Identity(2, 2);
    d(1, 1) = 1.0 - 0.3 * x(1);
    return d;
  };
  epi.detD_lower = 0.69;
  epi.detD_upper = 1.0;
  epi.lipschitz_budget = 0.31;
  const UnitCellSpec disk = UnitCellSpec::disk(0.25);
  const TransformCheck ok = check_transform(epi, Box::unit(2), disk, 21);
  CHECK(ok.ok);
  CHECK(ok.lipschitz_D == doctest::Approx(0.3));
  epi.lipschitz_budget = 0.1;
  CHECK_FALSE(check_transform(epi, Box::unit(2), disk, 21).ok);

  TransformField big = TransformField::identity(2);
  big.K = [](const VecN&) { return MatN(2.5 * MatN::Identity(2, 2)); };
  big.detK_upper = 10.0;
  CHECK_FALSE(check_transform(big, Box::unit(2), disk, 5).inclusion_inside);

  // Lambda measure shrinks with eps for a non-trivial D.
  double prev = 1.0;
  for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    const Partition p = build_partition(Box::unit(2), eps, 0.5, epi);
    const double lam = lambda_measure_sampled(p, 400);
    CHECK(lam <= 3.0 * std::pow(eps, 0.5));
    CHECK(lam < prev);
    prev = lam;
  }
  // Perforation fraction converges to |Y_0| for D = K = I.
  const Partition p = build_partition(Box::unit(2), 1.0 / 16, 0.5, TransformField::identity(2));
  CHECK(perforation_fraction_sampled(p, disk, 1600) == doctest::Approx(std::numbers::pi / 16).epsilon(0.01));
}
