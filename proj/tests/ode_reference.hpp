#pragma once

// Three-variable reaction system of a spatially homogeneous configuration,
// integrated with an adaptive Dormand-Prince stepper as a reference.
//   l'  = F(l) - d_l l + g (beta r_b - alpha r_f l)
//   r_f' = p(r_b) - alpha l r_f + beta r_b - d_f r_f
//   r_b' = alpha l r_f - beta r_b - d_b r_b
// g is the boundary measure per unit fluid volume.

#include "lphom/model.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>

namespace lphom::testing {

inline std::array<double, 3> ode_reference(const Coefficients& c, double g, std::array<double, 3> x0, double T) {
  using State = std::array<double, 3>;
  auto rhs = [&](const State& x, State& dx, double) {
    const double l = x[0], rf = x[1], rb = x[2];
    dx[0] = c.F(l) - c.dl * l + g * (c.beta * rb - c.alpha * rf * l);
    dx[1] = c.p(rb) - c.alpha * l * rf + c.beta * rb - c.df * rf;
    dx[2] = c.alpha * l * rf - c.beta * rb - c.db * rb;
  };
  namespace odeint = boost::numeric::odeint;
  auto stepper = odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_const(stepper, rhs, x0, 0.0, T, T / 100.0);
  return x0;
}

}  // namespace lphom::testing
