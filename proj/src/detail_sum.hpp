#pragma once

#include <cmath>

// Error-free float transforms (double-double arithmetic, products via fma).
// Used where an algebraic identity between two formulas must survive
// floating point to ~1e-15 relative even under heavy cancellation.

namespace panelkit::detail {

struct Dd {
  double hi = 0.0;
  double lo = 0.0;
};

inline Dd two_sum(double a, double b) {
  double s = a + b;
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

inline Dd two_prod(double a, double b) {
  double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline Dd dd_add(Dd x, Dd y) {
  Dd s = two_sum(x.hi, y.hi);
  double lo = s.lo + x.lo + y.lo;
  return two_sum(s.hi, lo);
}

inline Dd dd_add(Dd x, double y) { return dd_add(x, Dd{y, 0.0}); }

inline Dd dd_mul(Dd x, double y) {
  Dd p = two_prod(x.hi, y);
  p.lo += x.lo * y;
  return two_sum(p.hi, p.lo);
}

inline Dd dd_scale2(Dd x) { return {2.0 * x.hi, 2.0 * x.lo}; }

inline double dd_value(Dd x) { return x.hi + x.lo; }

}  // namespace panelkit::detail
