#include "doctest.h"

#include "lphom/macro.hpp"
#include "lphom/micro.hpp"
#include "ode_reference.hpp"

#include <cmath>
#include <numbers>

using namespace lphom;

namespace {

constexpr double kPi = std::numbers::pi;

EffectiveTensorField constant_tensors(const MacroConfig& c, const Mat2& A, double theta = 1.0) {
  EffectiveTensorField f;
  f.points = macro_nodes(c);
  for (std::size_t k = 0; k < f.points.size(); ++k) {
    EffectiveTensor t;
    t.A = A;
    t.theta = t.theta_discrete = theta;
    f.tensors.push_back(t);
    f.errors.emplace_back();
  }
  return f;
}

MacroConfig coarse() {
  MacroConfig c;
  c.H = 1.0 / 16;
  c.cell_opt.Nc = 32;
  return c;
}

}  // namespace

TEST_CASE("identity tensor gives the 5-point Laplacian") {
  MacroConfig c = coarse();
  c.H = 0.25;
  c.cell = UnitCellSpec::none();
  const MacroModel m = assemble_macro(c);
  CHECK(m.n_gamma == 0);
  const int n = 4;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * n, n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int p = i + n * j;
      const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[1] < 0 || q[0] >= n || q[1] >= n) continue;
        L(p, p) += 1.0;
        L(p, q[0] + n * q[1]) -= 1.0;
      }
    }
  CHECK((Eigen::MatrixXd(m.op.stiffness) - L).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("anisotropic operator conserves") {
  MacroConfig c = coarse();
  c.tensors = constant_tensors(c, Vec2(2.0, 1.0).asDiagonal());
  const MacroModel m = assemble_macro(c);
  const Vec ones = Vec::Ones(m.size());
  CHECK((m.op.stiffness * ones).cwiseAbs().maxCoeff() <= 1e-12);
  Mat2 bad;
  bad << 1.0, 2.0, 2.0, 1.0;
  c.tensors = constant_tensors(c, bad);
  CHECK_THROWS_AS(assemble_macro(c), InvalidArgument);
}

TEST_CASE("rotated tensor field: operator on x1 against a difference oracle") {
  MacroConfig c = coarse();
  c.H = 1.0 / 32;
  c.tf = TransformField::identity(2);
  c.tf.D = [](const VecN& x) { return MatN(rotation_matrix(kPi * x(1) / 2, 2).transpose()); };
  c.tf.K = [](const VecN&) {
    MatN K = MatN::Zero(2, 2);
    K(0, 0) = 1.6;
    K(1, 1) = 0.8;
    return K;
  };
  const MacroModel m = assemble_macro(c);
  CHECK(m.cell_solves == 32);
  const Grid2& g = m.grid;
  Vec u(m.size());
  for (int k = 0; k < m.size(); ++k) u(k) = g.center(k).x();
  const Vec Su = m.op.stiffness * u / (g.h * g.h);
  auto A = [&](int i, int j) { return m.A[g.index(i, j)]; };
  double worst = 0.0, scale = 0.0;
  for (int j = 2; j < g.ny - 2; ++j)
    for (int i = 2; i < g.nx - 2; ++i) {
      const double div = (A(i + 1, j)(0, 0) - A(i - 1, j)(0, 0)) / (2 * g.h) + (A(i, j + 1)(1, 0) - A(i, j - 1)(1, 0)) / (2 * g.h);
      worst = std::max(worst, std::abs(Su(g.index(i, j)) + div));
      scale = std::max(scale, std::abs(div));
    }
  CHECK(scale > 0.1);
  CHECK(worst <= 0.05 * scale);
}

TEST_CASE("boundary weights sum to the perimeter") {
  MacroConfig c = coarse();
  c.tf.K = [](const VecN& x) { return MatN((1.0 + 0.5 * x(0)) * MatN::Identity(2, 2)); };
  const MacroModel m = assemble_macro(c);
  for (int k = 0; k < m.size(); ++k)
    CHECK(std::abs(m.gamma_total(k) - 2 * kPi * 0.25 * (1.0 + 0.5 * m.grid.center(k).x())) <= 1e-10);

  MacroConfig e = coarse();
  e.n_gamma = 64;
  e.tf.D = [](const VecN& x) {
    MatN D = MatN::Identity(2, 2);
    D(1, 1) = 1.0 - 0.3 * x(1);
    return D;
  };
  const MacroModel me = assemble_macro(e);
  for (int k = 0; k < me.size(); k += 37) {
    const VecN x = from_vec2(me.grid.center(k));
    CHECK(std::abs(me.gamma_total(k) - gamma_measure(e.cell, to_mat2(e.tf.D(x)), Mat2::Identity())) <= 1e-10);
    CHECK(me.theta[k] == doctest::Approx(1 - kPi / 16).epsilon(1e-12));
  }
}

TEST_CASE("zero data stays zero") {
  MacroConfig c = coarse();
  c.init.l0 = [](const VecN&) { return 0.0; };
  c.init.rf0 = c.init.rb0 = 0.0;
  MacroSolver s(c);
  for (int k = 0; k < 10; ++k) s.step();
  CHECK(s.state().l.cwiseAbs().maxCoeff() == 0.0);
  for (double v : s.state().rb) CHECK(v == 0.0);
}

TEST_CASE("spatially constant scenario matches the reference integrator") {
  MacroConfig c;
  c.H = 0.5;
  c.dt = 1e-4;
  c.sample_every = 10000;
  c.cell_opt.Nc = 32;
  MacroSolver s(c);
  const RunResult r = run_macro(s);
  REQUIRE(r.ok);
  const double theta = 1 - kPi / 16;
  const double g = 2 * kPi * 0.25 / theta;
  const auto ref = testing::ode_reference(c.coef, g, {1.0, 1.0, 0.0}, 1.0);
  const auto& st = s.state();
  CHECK(st.l.maxCoeff() - st.l.minCoeff() <= 1e-12);
  CHECK(std::abs(st.l(0) - ref[0]) <= 1e-4);
  CHECK(std::abs(st.rf[0] - ref[1]) <= 1e-4);
  CHECK(std::abs(st.rb[0] - ref[2]) <= 1e-4);
  // Identical coefficients at every quadrature point keep the receptors equal up to rounding in l.
  for (std::size_t i = 1; i < st.rf.size(); ++i) {
    CHECK(std::abs(st.rf[i] - st.rf[0]) <= 1e-12);
    CHECK(std::abs(st.rb[i] - st.rb[0]) <= 1e-12);
  }
}

TEST_CASE("decoupled receptors decay exponentially") {
  MacroConfig c = coarse();
  c.coef.alpha = c.coef.beta = 0.0;
  c.coef.kappa1 = 0.0;
  c.init.rb0 = 0.8;
  c.T = 1.0;
  c.dt = 0.001;
  MacroSolver s(c);
  run_macro(s);
  const double euler = 0.8 * std::pow(1.0 - c.dt * c.coef.db, 1000);
  const double exact = 0.8 * std::exp(-c.coef.db);
  for (double rb : s.state().rb) {
    CHECK(rb == doctest::Approx(euler).epsilon(1e-12));
    CHECK(std::abs(rb - exact) <= 0.5 * c.dt * c.coef.db * c.coef.db * 0.8 * 1.01);
  }
}

TEST_CASE("T = 0, default run, step halving") {
  MacroConfig c = coarse();
  c.T = 0.0;
  CHECK(run_macro(c).series.size() == 1);

  c.T = 1.0;
  const RunResult r = run_macro(c);
  CHECK_MESSAGE(r.ok, r.failure);
  for (const Observation& o : r.series) {
    CHECK(o.min_l >= -1e-12);
    CHECK(o.max_l <= r.barrier_M * std::exp(r.barrier_B * o.t) + 1e-6);
  }

  std::vector<double> finals;
  for (double dt : {0.02, 0.01, 0.005}) {
    MacroConfig h = coarse();
    h.T = 0.4;
    h.dt = dt;
    h.init.l0 = [](const VecN& x) { return 1.0 + 0.5 * std::cos(kPi * x(0)); };
    finals.push_back(run_macro(h).series.back().l2);
  }
  const double d1 = std::abs(finals[1] - finals[0]), d2 = std::abs(finals[2] - finals[1]);
  CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("conservation without reactions") {
  MacroConfig c = coarse();
  c.tf.D = [](const VecN& x) {
    MatN D = MatN::Identity(2, 2);
    D(1, 1) = 1.0 - 0.3 * x(1);
    return D;
  };
  c.coef.mu1 = 0.0;
  c.coef.dl = 0.0;
  c.coef.alpha = c.coef.beta = 0.0;
  c.init.l0 = [](const VecN& x) { return 1.0 + std::sin(3 * x(0)) * x(1); };
  MacroSolver s(c);
  const double m0 = s.mass();
  for (int k = 0; k < 50; ++k) s.step();
  CHECK(std::abs(s.mass() - m0) <= 1e-10 * m0);
}

TEST_CASE("same code path as the unperforated micro solver") {
  MicroConfig mc;
  mc.cell = UnitCellSpec::none();
  mc.eps = 1.0 / 8;
  mc.cells_per_eps = 8;
  mc.T = 0.1;
  mc.init.l0 = [](const VecN& x) { return 1.0 + 0.5 * std::cos(kPi * x(0)) * x(1); };
  MacroConfig ac;
  ac.cell = UnitCellSpec::none();
  ac.H = 1.0 / 64;
  ac.T = mc.T;
  ac.init = mc.init;
  ac.boundary_terms = false;
  MicroSolver micro(mc);
  MacroSolver macro(ac);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    micro.step();
    macro.step();
    worst = std::max(worst, (micro.state().l - macro.state().l).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-12);
}
