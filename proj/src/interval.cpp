#include "gpopt/interval.hpp"

#include <array>
#include <ostream>
#include <string>

namespace gpopt {

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw DomainError("interval endpoints must be finite");
  }
  if (lo > hi) {
    throw DomainError("interval lower bound exceeds upper bound: [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

Interval& Interval::operator+=(const Interval& b) { return *this = *this + b; }
Interval& Interval::operator-=(const Interval& b) { return *this = *this - b; }
Interval& Interval::operator*=(const Interval& b) { return *this = *this * b; }

std::ostream& operator<<(std::ostream& os, const Interval& a) {
  return os << '[' << a.lo() << ", " << a.hi() << ']';
}

Interval iv_arith(const Interval& a, const Interval& b, ArithOp op) {
  switch (op) {
    case ArithOp::add:
      return {a.lo() + b.lo(), a.hi() + b.hi()};
    case ArithOp::sub:
      return {a.lo() - b.hi(), a.hi() - b.lo()};
    case ArithOp::mul: {
      const std::array<double, 4> p = {a.lo() * b.lo(), a.lo() * b.hi(),
                                       a.hi() * b.lo(), a.hi() * b.hi()};
      const auto [mn, mx] = std::minmax_element(p.begin(), p.end());
      return {*mn, *mx};
    }
    case ArithOp::div: {
      if (b.contains(0.0)) throw DomainError("interval division by zero");
      return a * Interval(1.0 / b.hi(), 1.0 / b.lo());
    }
  }
  throw DomainError("unknown interval operation");
}

Interval iv_monotone_unary(const Interval& a, Monotone f) {
  switch (f) {
    case Monotone::exp:
      return monotone_image(a, [](double x) { return std::exp(x); }, true);
    case Monotone::exp_neg_sqrt:
      if (a.lo() < 0.0) throw DomainError("exp(-sqrt(d)) requires d >= 0");
      return monotone_image(
          a, [](double d) { return std::exp(-std::sqrt(d)); }, false);
    case Monotone::exp_neg_half:
      return monotone_image(
          a, [](double d) { return std::exp(-0.5 * d); }, false);
    case Monotone::sqr_nonneg:
      if (a.lo() < 0.0) throw DomainError("sqr_nonneg requires x >= 0");
      return monotone_image(a, [](double x) { return x * x; }, true);
    case Monotone::sqrt:
      if (a.lo() < 0.0) throw DomainError("sqrt requires x >= 0");
      return monotone_image(a, [](double x) { return std::sqrt(x); }, true);
  }
  throw DomainError("unknown monotone function");
}

Interval sqr(const Interval& a) {
  if (a.lo() >= 0.0) return {a.lo() * a.lo(), a.hi() * a.hi()};
  if (a.hi() <= 0.0) return {a.hi() * a.hi(), a.lo() * a.lo()};
  const double m = a.mag();
  return {0.0, m * m};
}

Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi())};
}

bool intersect(const Interval& a, const Interval& b, Interval& out) {
  const double lo = std::max(a.lo(), b.lo());
  const double hi = std::min(a.hi(), b.hi());
  if (lo > hi) return false;
  out = Interval(lo, hi);
  return true;
}

}  // namespace gpopt
