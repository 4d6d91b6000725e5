#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gpopt/interval.hpp"

namespace gpopt {

/// McCormick relaxation of a factorable function evaluated at one point.
///
/// Holds the interval range of the function over the current box, the values
/// of a convex underestimator (cv) and a concave overestimator (cc) at the
/// evaluation point, and a subgradient of each with respect to the n
/// independent variables.
struct Relaxation {
  Interval range;
  double cv = 0.0;
  double cc = 0.0;
  std::vector<double> cv_sub;
  std::vector<double> cc_sub;

  std::size_t n() const { return cv_sub.size(); }
};

/// Value and slope of a univariate function at a point.
struct Linearization {
  double value = 0.0;
  double slope = 0.0;
};

/// Convex and concave envelopes (or tight relaxations) of a univariate
/// function over a fixed box, in the form consumed by mc_compose().
class UnivariateEnvelope {
 public:
  virtual ~UnivariateEnvelope() = default;

  /// Box the envelope was constructed on.
  virtual const Interval& box() const = 0;
  /// The underlying function.
  virtual double eval(double x) const = 0;
  /// Convex underestimator on box() with a subgradient.
  virtual Linearization cv(double x) const = 0;
  /// Concave overestimator on box() with a supergradient.
  virtual Linearization cc(double x) const = 0;
  /// Exact image of box() under the function.
  virtual Interval exact_range() const = 0;
  virtual double argmin_of_cv() const = 0;
  virtual double argmax_of_cc() const = 0;
};

/// Seed relaxation of independent variable i at point_i inside box_i.
Relaxation mc_variable(std::size_t i, const Interval& box_i, double point_i,
                       std::size_t n);

/// Constant c with zero subgradients.
Relaxation mc_constant(double c, std::size_t n);

/// alpha*a + beta*b + gamma. Pass b == nullptr for alpha*a + gamma.
Relaxation mc_affine(const Relaxation& a, const Relaxation* b, double alpha,
                     double beta, double gamma);

/// sum_i coeffs[i]*terms[i] + constant over n independent variables.
Relaxation mc_lincomb(std::span<const Relaxation* const> terms,
                      std::span<const double> coeffs, double constant,
                      std::size_t n);

/// Bilinear McCormick product rule.
Relaxation mc_product(const Relaxation& a, const Relaxation& b);

/// Univariate McCormick composition env(inner), followed by mc_cut().
Relaxation mc_compose(const Relaxation& inner, const UnivariateEnvelope& env);

/// Clip cv and cc to the range; active bounds get zero subgradients.
Relaxation mc_cut(Relaxation a);

/// Convex side of a univariate composition only: value and subgradient.
/// Used by constructions that combine several compositions with max/min.
void compose_cv(const Relaxation& inner, const UnivariateEnvelope& env,
                double& value, std::vector<double>& sub);
void compose_cc(const Relaxation& inner, const UnivariateEnvelope& env,
                double& value, std::vector<double>& sub);

/// mid(a, b, c): the median of three numbers.
inline double mid3(double a, double b, double c) {
  return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

inline Relaxation operator+(const Relaxation& a, const Relaxation& b) {
  return mc_affine(a, &b, 1.0, 1.0, 0.0);
}
inline Relaxation operator-(const Relaxation& a, const Relaxation& b) {
  return mc_affine(a, &b, 1.0, -1.0, 0.0);
}
inline Relaxation operator-(const Relaxation& a) {
  return mc_affine(a, nullptr, -1.0, 0.0, 0.0);
}
inline Relaxation operator*(double c, const Relaxation& a) {
  return mc_affine(a, nullptr, c, 0.0, 0.0);
}
inline Relaxation operator+(const Relaxation& a, double c) {
  return mc_affine(a, nullptr, 1.0, 0.0, c);
}
inline Relaxation operator*(const Relaxation& a, const Relaxation& b) {
  return mc_product(a, b);
}

}  // namespace gpopt
