#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace lphom {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Dimension-generic small vectors/matrices (d = 2 or 3), stored inline.
using VecN = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using MatN = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using IVecN = Eigen::Matrix<int, Eigen::Dynamic, 1, 0, 3, 1>;

/// Base error for everything thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input (violated precondition, unsupported combination, point outside the domain).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative solve or time step failed (no convergence, NaN, invariant breach).
class SolverError : public Error {
 public:
  using Error::Error;
};

inline VecN make_vec(double a, double b) {
  VecN v(2);
  v << a, b;
  return v;
}

inline VecN make_vec(double a, double b, double c) {
  VecN v(3);
  v << a, b, c;
  return v;
}

inline Vec2 to_vec2(const VecN& v) { return Vec2(v(0), v(1)); }

inline VecN from_vec2(const Vec2& v) { return make_vec(v.x(), v.y()); }

inline Mat2 to_mat2(const MatN& m) {
  Mat2 r;
  r << m(0, 0), m(0, 1), m(1, 0), m(1, 1);
  return r;
}

inline MatN from_mat2(const Mat2& m) {
  MatN r(2, 2);
  r << m(0, 0), m(0, 1), m(1, 0), m(1, 1);
  return r;
}

}  // namespace lphom
