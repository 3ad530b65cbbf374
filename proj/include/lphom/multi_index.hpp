#pragma once

#include "lphom/types.hpp"

#include <vector>

namespace lphom {

/// Calls fn(index) for every integer multi-index in [lo, hi] (inclusive),
/// first axis fastest.
template <typename Fn>
void for_each_index(const IVecN& lo, const IVecN& hi, Fn&& fn) {
  const int d = static_cast<int>(lo.size());
  for (int i = 0; i < d; ++i)
    if (hi(i) < lo(i)) return;
  IVecN idx = lo;
  while (true) {
    fn(idx);
    int axis = 0;
    while (axis < d) {
      if (++idx(axis) <= hi(axis)) break;
      idx(axis) = lo(axis);
      ++axis;
    }
    if (axis == d) return;
  }
}

/// Midpoints of the m^d tensor sub-cells of the unit cube, first axis fastest.
inline std::vector<VecN> midpoint_samples(int d, int m) {
  std::vector<VecN> pts;
  for_each_index(IVecN::Zero(d), IVecN::Constant(d, m - 1),
                 [&](const IVecN& k) { pts.push_back(((k.cast<double>().array() + 0.5) / m).matrix()); });
  return pts;
}

}  // namespace lphom
