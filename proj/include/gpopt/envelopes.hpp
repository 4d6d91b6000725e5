#pragma once

#include <array>
#include <functional>
#include <limits>
#include <string>
#include <string_view>

#include "gpopt/mccormick.hpp"

namespace gpopt {

/// Matern covariance functions of half-integer order plus the squared
/// exponential limit, written as functions of the weighted squared distance
/// d = sum_i lambda_i^2 (x_i - x'_i)^2 with unit output variance.
enum class KernelKind { matern12, matern32, matern52, squared_exponential };

double kernel_value(KernelKind nu, double d);
/// dk/dd. Infinite at d = 0 for matern12.
double kernel_derivative(KernelKind nu, double d);

/// "1/2", "3/2", "5/2", "inf".
std::string kernel_name(KernelKind nu);
KernelKind parse_kernel(std::string_view name);

/// A twice differentiable univariate function.
struct Curve {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;
};

/// Piece of an envelope side: either the function itself or a straight line
/// between two stored points.
struct EnvelopePiece {
  double x0 = 0.0;
  double x1 = 0.0;
  bool line = false;
  double y0 = 0.0;
  double y1 = 0.0;
};

/// One side (convex or concave) of an envelope: up to three pieces covering
/// the box from left to right.
struct EnvelopeSide {
  std::array<EnvelopePiece, 3> pieces{};
  int count = 0;

  static EnvelopeSide curve(const Interval& box);
  static EnvelopeSide line(double x0, double y0, double x1, double y1);
  void push_curve(double x0, double x1);
  void push_line(double x0, double y0, double x1, double y1);
};

/// Envelope assembled from curve and line pieces. All envelopes in this
/// library are instances of this type (possibly wrapped by AffineEnvelope).
class SegmentEnvelope : public UnivariateEnvelope {
 public:
  SegmentEnvelope(Interval box, Curve curve, EnvelopeSide cv, EnvelopeSide cc,
                  Interval range, double argmin_cv, double argmax_cc);

  const Interval& box() const override { return box_; }
  double eval(double x) const override { return curve_.f(x); }
  Linearization cv(double x) const override;
  Linearization cc(double x) const override;
  Interval exact_range() const override { return range_; }
  double argmin_of_cv() const override { return argmin_cv_; }
  double argmax_of_cc() const override { return argmax_cc_; }

  /// Below `anchor`, curve pieces of the concave side are replaced by the
  /// tangent at the anchor (used where the slope is unbounded, e.g. sqrt at 0).
  void set_cc_anchor(double anchor) { cc_anchor_ = anchor; }

  const EnvelopeSide& cv_side() const { return cv_; }
  const EnvelopeSide& cc_side() const { return cc_; }

 private:
  Linearization eval_side(const EnvelopeSide& side, double x, bool convex) const;

  Interval box_;
  Curve curve_;
  EnvelopeSide cv_;
  EnvelopeSide cc_;
  Interval range_;
  double argmin_cv_;
  double argmax_cc_;
  double cc_anchor_ = -std::numeric_limits<double>::infinity();
};

/// x -> scale * inner(a*x + b) + shift, with the envelope sides mapped
/// accordingly (sides swap when scale < 0).
class AffineEnvelope : public UnivariateEnvelope {
 public:
  AffineEnvelope(SegmentEnvelope inner, Interval box, double a, double b,
                 double scale, double shift);

  const Interval& box() const override { return box_; }
  double eval(double x) const override;
  Linearization cv(double x) const override;
  Linearization cc(double x) const override;
  Interval exact_range() const override { return range_; }
  double argmin_of_cv() const override { return argmin_; }
  double argmax_of_cc() const override { return argmax_; }

 private:
  double to_inner(double x) const { return inner_.box().clamp(a_ * x + b_); }

  SegmentEnvelope inner_;
  Interval box_;
  double a_, b_, scale_, shift_;
  Interval range_;
  double argmin_, argmax_;
};

/// Affine interpolation of (box.lo, f_at_lo) and (box.hi, f_at_hi).
double secant(double f_at_lo, double f_at_hi, const Interval& box, double x);

/// Root of g on `bracket` by Newton's method (100 iterations, |g| <= 1e-9),
/// falling back to bisection when g changes sign over the bracket and to a
/// golden-section search on |g| otherwise.
/// Throws RootFindError if neither succeeds.
double newton_1d(const std::function<double(double)>& g,
                 const std::function<double(double)>& dg,
                 const Interval& bracket, double start);

/// Point x in `bracket` where the tangent of c at x passes through
/// (anchor_x, anchor_y). Callers guarantee a sign change on the bracket.
double tangent_point(const Curve& c, double anchor_x, double anchor_y,
                     const Interval& bracket);

/// Covariance function k_nu on a distance box: convex, so cv = k and cc is
/// the secant.
SegmentEnvelope kernel_env(KernelKind nu, const Interval& d_box);

/// Standard normal density.
double normal_pdf(double x);
/// Standard normal distribution function, (1 + erf(x/sqrt(2)))/2.
double normal_cdf(double x);

/// Envelopes of the standard normal density (convex on |x| >= 1, concave on
/// [-1, 1]).
SegmentEnvelope pdf_env(const Interval& x_box);

/// Envelopes of erf (convex for x <= 0, concave for x >= 0).
SegmentEnvelope erf_env(const Interval& x_box);

/// Envelopes of the normal CDF as an affine transform of erf_env().
AffineEnvelope cdf_env(const Interval& x_box);

/// Envelopes of a monotone function with one inflection point. If
/// convex_left, c is convex left of the inflection and concave right of it,
/// otherwise the reverse.
SegmentEnvelope one_inflection_env(const Curve& c, const Interval& box,
                                   double inflection, bool convex_left,
                                   bool increasing);

/// Convex function: cv = f, cc = secant.
SegmentEnvelope convex_env(const Curve& c, const Interval& box,
                           double argmin_cv, Interval range);
/// Concave function: cv = secant, cc = f.
SegmentEnvelope concave_env(const Curve& c, const Interval& box,
                            double argmax_cc, Interval range);

SegmentEnvelope sqr_env(const Interval& box);
SegmentEnvelope exp_env(const Interval& box);
/// sqrt on box.lo >= 0. The concave side uses the tangent at 1e-12 below it.
SegmentEnvelope sqrt_env(const Interval& box);
/// 1/x on a strictly positive box.
SegmentEnvelope reciprocal_env(const Interval& box);

/// Relaxation of k_nu(d) built by plain McCormick arithmetic from sqrt, exp
/// and products, without the dedicated kernel envelope.
Relaxation kernel_generic(KernelKind nu, const Relaxation& d);

/// Relaxation of the normal density by plain McCormick arithmetic,
/// exp(-x^2/2)/sqrt(2 pi).
Relaxation pdf_generic(const Relaxation& x);

}  // namespace gpopt
