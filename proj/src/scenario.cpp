#include "lphom/scenario.hpp"

#include <numbers>

namespace lphom {

std::vector<std::string> scenario_names() { return {"periodic", "epithelial", "plywood2d", "radius_gradient"}; }

Scenario make_scenario(const std::string& name, double radius) {
  Scenario s;
  s.name = name;
  s.tf = TransformField::identity(2);
  s.cell = radius > 0.0 ? UnitCellSpec::disk(radius) : UnitCellSpec::none();
  if (name == "periodic") {
    s.consistent_geometry = GeometryMode::kDiscrete;
  } else if (name == "epithelial") {
    s.tf.D = [](const VecN& x) {
      MatN D = MatN::Identity(2, 2);
      D(1, 1) = 1.0 - 0.3 * x(1);
      return D;
    };
    s.tf.detD_lower = 0.7;
    s.tf.lipschitz_budget = 0.3;
  } else if (name == "plywood2d") {
    s.tf.D = [](const VecN& x) { return MatN(rotation_matrix(std::numbers::pi * x(1) / 2.0, 2).transpose()); };
    s.tf.K = [](const VecN&) {
      MatN K = MatN::Zero(2, 2);
      K(0, 0) = 1.6;
      K(1, 1) = 0.8;
      return K;
    };
    s.tf.detK_lower = s.tf.detK_upper = 1.28;
    s.tf.lipschitz_budget = std::numbers::pi / std::numbers::sqrt2;  // Frobenius norm of dD/dx2
  } else if (name == "radius_gradient") {
    s.tf.K = [](const VecN& x) { return MatN((1.0 + 0.5 * x(0)) * MatN::Identity(2, 2)); };
    s.tf.detK_upper = 2.25;
    s.tf.lipschitz_budget = 0.5 * std::numbers::sqrt2;
  } else {
    throw InvalidArgument("unknown scenario '" + name + "'");
  }
  return s;
}

void apply(const Scenario& s, MicroConfig& c) {
  c.scenario = s.name;
  c.tf = s.tf;
  c.cell = s.cell;
  c.A = s.A;
}

void apply(const Scenario& s, MacroConfig& c) {
  c.scenario = s.name;
  c.tf = s.tf;
  c.cell = s.cell;
  c.A = s.A;
}

}  // namespace lphom
