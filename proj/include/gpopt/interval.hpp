#pragma once

#include <algorithm>
#include <cmath>
#include <iosfwd>

#include "gpopt/errors.hpp"

namespace gpopt {

/// Closed real interval [lo, hi] with finite endpoints.
///
/// No outward rounding is performed. The solver tolerances (1e-3 optimality,
/// 1e-6 feasibility) are many orders above the rounding error of the
/// endpoint arithmetic, so enclosures are exact up to floating point.
class Interval {
 public:
  constexpr Interval() = default;
  Interval(double point) : Interval(point, point) {}  // NOLINT
  Interval(double lo, double hi);

  double lo() const { return lo_; }
  double hi() const { return hi_; }

  double width() const { return hi_ - lo_; }
  double mid() const { return 0.5 * (lo_ + hi_); }
  bool contains(double x) const { return lo_ <= x && x <= hi_; }
  bool contains(const Interval& other) const {
    return lo_ <= other.lo_ && other.hi_ <= hi_;
  }
  bool degenerate() const { return lo_ == hi_; }
  double clamp(double x) const { return std::clamp(x, lo_, hi_); }
  double mag() const { return std::max(std::abs(lo_), std::abs(hi_)); }

  Interval& operator+=(const Interval& b);
  Interval& operator-=(const Interval& b);
  Interval& operator*=(const Interval& b);

  friend bool operator==(const Interval& a, const Interval& b) {
    return a.lo_ == b.lo_ && a.hi_ == b.hi_;
  }

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

std::ostream& operator<<(std::ostream& os, const Interval& a);

enum class ArithOp { add, sub, mul, div };

/// Natural interval extension of a binary arithmetic operation. Exact for all
/// four operations; division requires 0 not in b.
Interval iv_arith(const Interval& a, const Interval& b, ArithOp op);

inline Interval operator+(const Interval& a, const Interval& b) {
  return iv_arith(a, b, ArithOp::add);
}
inline Interval operator-(const Interval& a, const Interval& b) {
  return iv_arith(a, b, ArithOp::sub);
}
inline Interval operator*(const Interval& a, const Interval& b) {
  return iv_arith(a, b, ArithOp::mul);
}
inline Interval operator/(const Interval& a, const Interval& b) {
  return iv_arith(a, b, ArithOp::div);
}
inline Interval operator-(const Interval& a) { return {-a.hi(), -a.lo()}; }

/// Monotone univariate maps with exact images.
enum class Monotone {
  exp,           ///< x -> exp(x), increasing
  exp_neg_sqrt,  ///< d -> exp(-sqrt(d)), decreasing on d >= 0
  exp_neg_half,  ///< d -> exp(-d/2), decreasing
  sqr_nonneg,    ///< x -> x^2 on x >= 0, increasing
  sqrt,          ///< x -> sqrt(x) on x >= 0, increasing
};

Interval iv_monotone_unary(const Interval& a, Monotone f);

/// Image of a monotone function: [f(lo), f(hi)] or [f(hi), f(lo)].
template <typename F>
Interval monotone_image(const Interval& a, F&& f, bool increasing) {
  const double flo = f(a.lo());
  const double fhi = f(a.hi());
  return increasing ? Interval(flo, fhi) : Interval(fhi, flo);
}

Interval sqr(const Interval& a);
Interval hull(const Interval& a, const Interval& b);

/// Intersection; returns false when the intervals are disjoint.
bool intersect(const Interval& a, const Interval& b, Interval& out);

}  // namespace gpopt
