#include "gpopt/envelopes.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace gpopt {

namespace {

constexpr double kRootTol = 1e-9;
constexpr int kNewtonIters = 100;
constexpr double kSqrtAnchor = 1e-12;

const double kSqrt3 = std::sqrt(3.0);
const double kSqrt5 = std::sqrt(5.0);

EnvelopeSide negated(EnvelopeSide s) {
  for (int i = 0; i < s.count; ++i) {
    s.pieces[i].y0 = -s.pieces[i].y0;
    s.pieces[i].y1 = -s.pieces[i].y1;
  }
  return s;
}

struct Sides {
  EnvelopeSide cv;
  EnvelopeSide cc;
};

// Envelope geometry of g, convex on (-inf, p] and concave on [p, inf).
Sides convex_concave_sides(const Curve& g, const Interval& box, double p) {
  const double a = box.lo(), b = box.hi();
  const double ga = g.f(a), gb = g.f(b);
  Sides s;
  if (b <= p) {
    s.cv = EnvelopeSide::curve(box);
    s.cc = EnvelopeSide::line(a, ga, b, gb);
    return s;
  }
  if (a >= p) {
    s.cv = EnvelopeSide::line(a, ga, b, gb);
    s.cc = EnvelopeSide::curve(box);
    return s;
  }
  // Convex side: tangent through (b, g(b)) touching the convex part.
  const double h_cv = ga + g.df(a) * (b - a) - gb;
  if (h_cv >= 0.0) {
    s.cv = EnvelopeSide::line(a, ga, b, gb);
  } else {
    const double xc = tangent_point(g, b, gb, Interval(a, p));
    s.cv.push_curve(a, xc);
    s.cv.push_line(xc, g.f(xc), b, gb);
  }
  // Concave side: tangent through (a, g(a)) touching the concave part.
  const double h_cc = gb + g.df(b) * (a - b) - ga;
  if (h_cc <= 0.0) {
    s.cc = EnvelopeSide::line(a, ga, b, gb);
  } else {
    const double xc = tangent_point(g, a, ga, Interval(p, b));
    s.cc.push_line(a, ga, xc, g.f(xc));
    s.cc.push_curve(xc, b);
  }
  return s;
}

Curve pdf_curve() {
  return {[](double x) { return normal_pdf(x); },
          [](double x) { return -x * normal_pdf(x); },
          [](double x) { return (x * x - 1.0) * normal_pdf(x); }};
}

// Tangent-condition residual: tangent of c at x evaluated at ax, minus ay.
double tangent_gap(const Curve& c, double x, double ax, double ay) {
  return c.f(x) + c.df(x) * (ax - x) - ay;
}

}  // namespace

double kernel_value(KernelKind nu, double d) {
  switch (nu) {
    case KernelKind::matern12:
      return std::exp(-std::sqrt(d));
    case KernelKind::matern32: {
      const double r = kSqrt3 * std::sqrt(d);
      return (1.0 + r) * std::exp(-r);
    }
    case KernelKind::matern52: {
      const double r = kSqrt5 * std::sqrt(d);
      return (1.0 + r + 5.0 * d / 3.0) * std::exp(-r);
    }
    case KernelKind::squared_exponential:
      return std::exp(-0.5 * d);
  }
  throw DomainError("unknown kernel");
}

double kernel_derivative(KernelKind nu, double d) {
  switch (nu) {
    case KernelKind::matern12: {
      const double s = std::sqrt(d);
      if (s == 0.0) return -std::numeric_limits<double>::infinity();
      return -std::exp(-s) / (2.0 * s);
    }
    case KernelKind::matern32:
      return -1.5 * std::exp(-kSqrt3 * std::sqrt(d));
    case KernelKind::matern52: {
      const double r = kSqrt5 * std::sqrt(d);
      return -(5.0 / 6.0) * (1.0 + r) * std::exp(-r);
    }
    case KernelKind::squared_exponential:
      return -0.5 * std::exp(-0.5 * d);
  }
  throw DomainError("unknown kernel");
}

std::string kernel_name(KernelKind nu) {
  switch (nu) {
    case KernelKind::matern12:
      return "1/2";
    case KernelKind::matern32:
      return "3/2";
    case KernelKind::matern52:
      return "5/2";
    case KernelKind::squared_exponential:
      return "inf";
  }
  throw DomainError("unknown kernel");
}

KernelKind parse_kernel(std::string_view name) {
  if (name == "1/2" || name == "0.5") return KernelKind::matern12;
  if (name == "3/2" || name == "1.5") return KernelKind::matern32;
  if (name == "5/2" || name == "2.5") return KernelKind::matern52;
  if (name == "inf" || name == "se") return KernelKind::squared_exponential;
  throw DomainError("unknown kernel order '" + std::string(name) +
                    "' (expected 1/2, 3/2, 5/2 or inf)");
}

EnvelopeSide EnvelopeSide::curve(const Interval& box) {
  EnvelopeSide s;
  s.push_curve(box.lo(), box.hi());
  return s;
}

EnvelopeSide EnvelopeSide::line(double x0, double y0, double x1, double y1) {
  EnvelopeSide s;
  s.push_line(x0, y0, x1, y1);
  return s;
}

void EnvelopeSide::push_curve(double x0, double x1) {
  pieces.at(count++) = EnvelopePiece{x0, x1, false, 0.0, 0.0};
}

void EnvelopeSide::push_line(double x0, double y0, double x1, double y1) {
  pieces.at(count++) = EnvelopePiece{x0, x1, true, y0, y1};
}

SegmentEnvelope::SegmentEnvelope(Interval box, Curve curve, EnvelopeSide cv,
                                 EnvelopeSide cc, Interval range,
                                 double argmin_cv, double argmax_cc)
    : box_(box),
      curve_(std::move(curve)),
      cv_(cv),
      cc_(cc),
      range_(range),
      argmin_cv_(box.clamp(argmin_cv)),
      argmax_cc_(box.clamp(argmax_cc)) {}

Linearization SegmentEnvelope::eval_side(const EnvelopeSide& side, double x,
                                         bool convex) const {
  x = box_.clamp(x);
  int k = 0;
  while (k + 1 < side.count && x > side.pieces[k].x1) ++k;
  const EnvelopePiece& p = side.pieces[k];
  Linearization lin;
  if (p.line) {
    const double dx = p.x1 - p.x0;
    lin.slope = dx > 0.0 ? (p.y1 - p.y0) / dx : 0.0;
    lin.value = p.y0 + lin.slope * (x - p.x0);
    return lin;
  }
  if (!convex && x < cc_anchor_) {
    const double fa = curve_.f(cc_anchor_);
    lin.slope = curve_.df(cc_anchor_);
    lin.value = fa + lin.slope * (x - cc_anchor_);
    return lin;
  }
  lin.value = curve_.f(x);
  lin.slope = curve_.df(x);
  if (!std::isfinite(lin.slope)) {
    // Unbounded slope: fall back to the constant bound.
    lin.value = convex ? range_.lo() : range_.hi();
    lin.slope = 0.0;
  }
  return lin;
}

Linearization SegmentEnvelope::cv(double x) const {
  return eval_side(cv_, x, true);
}

Linearization SegmentEnvelope::cc(double x) const {
  return eval_side(cc_, x, false);
}

AffineEnvelope::AffineEnvelope(SegmentEnvelope inner, Interval box, double a,
                               double b, double scale, double shift)
    : inner_(std::move(inner)),
      box_(box),
      a_(a),
      b_(b),
      scale_(scale),
      shift_(shift) {
  if (a == 0.0) throw DomainError("affine envelope needs a nonzero slope");
  const Interval r = inner_.exact_range();
  range_ = scale >= 0.0 ? Interval(scale * r.lo() + shift, scale * r.hi() + shift)
                        : Interval(scale * r.hi() + shift, scale * r.lo() + shift);
  const double zmin = scale >= 0.0 ? inner_.argmin_of_cv() : inner_.argmax_of_cc();
  const double zmax = scale >= 0.0 ? inner_.argmax_of_cc() : inner_.argmin_of_cv();
  argmin_ = box_.clamp((zmin - b) / a);
  argmax_ = box_.clamp((zmax - b) / a);
}

double AffineEnvelope::eval(double x) const {
  return scale_ * inner_.eval(a_ * x + b_) + shift_;
}

Linearization AffineEnvelope::cv(double x) const {
  const double z = to_inner(x);
  const Linearization l = scale_ >= 0.0 ? inner_.cv(z) : inner_.cc(z);
  return {scale_ * l.value + shift_, scale_ * l.slope * a_};
}

Linearization AffineEnvelope::cc(double x) const {
  const double z = to_inner(x);
  const Linearization l = scale_ >= 0.0 ? inner_.cc(z) : inner_.cv(z);
  return {scale_ * l.value + shift_, scale_ * l.slope * a_};
}

double secant(double f_at_lo, double f_at_hi, const Interval& box, double x) {
  const double w = box.width();
  if (w <= 0.0) return f_at_lo;
  return f_at_lo + (f_at_hi - f_at_lo) * (x - box.lo()) / w;
}

double newton_1d(const std::function<double(double)>& g,
                 const std::function<double(double)>& dg,
                 const Interval& bracket, double start) {
  double x = bracket.clamp(start);
  for (int it = 0; it < kNewtonIters; ++it) {
    const double gx = g(x);
    if (std::abs(gx) <= kRootTol) return x;
    const double d = dg(x);
    if (d == 0.0 || !std::isfinite(d) || !std::isfinite(gx)) break;
    const double next = x - gx / d;
    if (!std::isfinite(next) || !bracket.contains(next)) break;
    x = next;
  }

  // Bisection when the bracket shows a sign change.
  {
    double lo = bracket.lo(), hi = bracket.hi();
    double glo = g(lo), ghi = g(hi);
    if (std::abs(glo) <= kRootTol) return lo;
    if (std::abs(ghi) <= kRootTol) return hi;
    if (std::isfinite(glo) && std::isfinite(ghi) && (glo < 0.0) != (ghi < 0.0)) {
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (lo + hi);
        if (m <= lo || m >= hi) break;
        const double gm = g(m);
        if (std::abs(gm) <= kRootTol) return m;
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = m;
          glo = gm;
        } else {
          hi = m;
        }
      }
      // Adjacent doubles straddle the root.
      return std::abs(glo) <= std::abs(g(hi)) ? lo : hi;
    }
  }

  // Golden-section search on |g| over the bracket.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = bracket.lo(), hi = bracket.hi();
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = std::abs(g(x1)), f2 = std::abs(g(x2));
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + bracket.mag()); ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = std::abs(g(x1));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = std::abs(g(x2));
    }
  }
  double best = f1 <= f2 ? x1 : x2;
  double fbest = std::min(f1, f2);
  for (double e : {bracket.lo(), bracket.hi()}) {
    const double fe = std::abs(g(e));
    if (fe < fbest) {
      fbest = fe;
      best = e;
    }
  }
  if (!(fbest <= kRootTol)) throw RootFindError();
  return best;
}

double tangent_point(const Curve& c, double anchor_x, double anchor_y,
                     const Interval& bracket) {
  auto h = [&](double x) { return tangent_gap(c, x, anchor_x, anchor_y); };
  auto dh = [&](double x) { return c.d2f(x) * (anchor_x - x); };
  return newton_1d(h, dh, bracket, bracket.mid());
}

SegmentEnvelope kernel_env(KernelKind nu, const Interval& d_box) {
  if (d_box.lo() < 0.0) throw DomainError("kernel distance box must be >= 0");
  Curve c;
  c.f = [nu](double d) { return kernel_value(nu, d); };
  if (nu == KernelKind::matern12) {
    c.df = [](double d) {
      if (d <= 1e-12) return -std::numeric_limits<double>::infinity();
      return kernel_derivative(KernelKind::matern12, d);
    };
  } else {
    c.df = [nu](double d) { return kernel_derivative(nu, d); };
  }
  const double kl = kernel_value(nu, d_box.lo());
  const double ku = kernel_value(nu, d_box.hi());
  return SegmentEnvelope(d_box, std::move(c), EnvelopeSide::curve(d_box),
                         EnvelopeSide::line(d_box.lo(), kl, d_box.hi(), ku),
                         Interval(ku, kl), d_box.hi(), d_box.lo());
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

SegmentEnvelope pdf_env(const Interval& x_box) {
  const Curve c = pdf_curve();
  const double a = x_box.lo(), b = x_box.hi();
  const double fa = c.f(a), fb = c.f(b);
  EnvelopeSide cv, cc;

  // Convex side.
  if (b <= -1.0 || a >= 1.0) {
    cv = EnvelopeSide::curve(x_box);
  } else if (a >= -1.0 && b <= 1.0) {
    cv = EnvelopeSide::line(a, fa, b, fb);
  } else {
    // Tangent from the left anchor onto the right convex part, or from the
    // right anchor onto the left convex part; the lower of the two endpoints
    // decides which one supports the envelope.
    const bool right = a >= -1.0 || (b > 1.0 && a + b > 0.0);
    const bool left = b <= 1.0 || (a < -1.0 && a + b < 0.0);
    if (right) {
      if (tangent_gap(c, b, a, fa) >= 0.0) {
        cv = EnvelopeSide::line(a, fa, b, fb);
      } else {
        const double xc = tangent_point(c, a, fa, Interval(1.0, b));
        cv.push_line(a, fa, xc, c.f(xc));
        cv.push_curve(xc, b);
      }
    } else if (left) {
      if (tangent_gap(c, a, b, fb) >= 0.0) {
        cv = EnvelopeSide::line(a, fa, b, fb);
      } else {
        const double xc = tangent_point(c, b, fb, Interval(a, -1.0));
        cv.push_curve(a, xc);
        cv.push_line(xc, c.f(xc), b, fb);
      }
    } else {
      // Symmetric box: both endpoints have the same density.
      cv = EnvelopeSide::line(a, fa, b, fb);
    }
  }

  // Concave side.
  if (b <= -1.0 || a >= 1.0) {
    cc = EnvelopeSide::line(a, fa, b, fb);
  } else if (a >= -1.0 && b <= 1.0) {
    cc = EnvelopeSide::curve(x_box);
  } else if (a < -1.0 && b <= 1.0) {
    if (tangent_gap(c, b, a, fa) <= 0.0) {
      cc = EnvelopeSide::line(a, fa, b, fb);
    } else {
      const double xc = tangent_point(c, a, fa, Interval(-1.0, b));
      cc.push_line(a, fa, xc, c.f(xc));
      cc.push_curve(xc, b);
    }
  } else if (a >= -1.0 && b > 1.0) {
    if (tangent_gap(c, a, b, fb) <= 0.0) {
      cc = EnvelopeSide::line(a, fa, b, fb);
    } else {
      const double xc = tangent_point(c, b, fb, Interval(a, 1.0));
      cc.push_curve(a, xc);
      cc.push_line(xc, c.f(xc), b, fb);
    }
  } else {
    const double x1 = tangent_point(c, a, fa, Interval(-1.0, 1.0));
    const double x2 = tangent_point(c, b, fb, Interval(-1.0, 1.0));
    cc.push_line(a, fa, x1, c.f(x1));
    cc.push_curve(x1, x2);
    cc.push_line(x2, c.f(x2), b, fb);
  }

  const double peak = x_box.clamp(0.0);
  const double far = std::abs(a) >= std::abs(b) ? a : b;
  return SegmentEnvelope(x_box, c, cv, cc, Interval(std::min(fa, fb), c.f(peak)),
                         far, peak);
}

SegmentEnvelope one_inflection_env(const Curve& c, const Interval& box,
                                   double inflection, bool convex_left,
                                   bool increasing) {
  Sides s;
  if (convex_left) {
    s = convex_concave_sides(c, box, inflection);
  } else {
    const Curve g{[&c](double x) { return -c.f(x); },
                  [&c](double x) { return -c.df(x); },
                  [&c](double x) { return -c.d2f(x); }};
    const Sides t = convex_concave_sides(g, box, inflection);
    s.cv = negated(t.cc);
    s.cc = negated(t.cv);
  }
  const double fa = c.f(box.lo()), fb = c.f(box.hi());
  const Interval range = increasing ? Interval(fa, std::max(fa, fb))
                                    : Interval(fb, std::max(fa, fb));
  const double argmin = increasing ? box.lo() : box.hi();
  const double argmax = increasing ? box.hi() : box.lo();
  return SegmentEnvelope(box, c, s.cv, s.cc, range, argmin, argmax);
}

SegmentEnvelope erf_env(const Interval& x_box) {
  const double k = 2.0 / std::sqrt(std::numbers::pi);
  Curve c{[](double x) { return std::erf(x); },
          [k](double x) { return k * std::exp(-x * x); },
          [k](double x) { return -2.0 * x * k * std::exp(-x * x); }};
  return one_inflection_env(c, x_box, 0.0, true, true);
}

AffineEnvelope cdf_env(const Interval& x_box) {
  const double s = 1.0 / std::numbers::sqrt2;
  SegmentEnvelope inner = erf_env(Interval(x_box.lo() * s, x_box.hi() * s));
  return AffineEnvelope(std::move(inner), x_box, s, 0.0, 0.5, 0.5);
}

SegmentEnvelope convex_env(const Curve& c, const Interval& box,
                           double argmin_cv, Interval range) {
  return SegmentEnvelope(
      box, c, EnvelopeSide::curve(box),
      EnvelopeSide::line(box.lo(), c.f(box.lo()), box.hi(), c.f(box.hi())),
      range, argmin_cv, range.hi() == c.f(box.lo()) ? box.lo() : box.hi());
}

SegmentEnvelope concave_env(const Curve& c, const Interval& box,
                            double argmax_cc, Interval range) {
  return SegmentEnvelope(
      box, c,
      EnvelopeSide::line(box.lo(), c.f(box.lo()), box.hi(), c.f(box.hi())),
      EnvelopeSide::curve(box), range,
      range.lo() == c.f(box.lo()) ? box.lo() : box.hi(), argmax_cc);
}

SegmentEnvelope sqr_env(const Interval& box) {
  Curve c{[](double x) { return x * x; }, [](double x) { return 2.0 * x; },
          [](double) { return 2.0; }};
  return convex_env(c, box, box.clamp(0.0), sqr(box));
}

SegmentEnvelope exp_env(const Interval& box) {
  Curve c{[](double x) { return std::exp(x); },
          [](double x) { return std::exp(x); },
          [](double x) { return std::exp(x); }};
  return convex_env(c, box, box.lo(),
                    Interval(std::exp(box.lo()), std::exp(box.hi())));
}

SegmentEnvelope sqrt_env(const Interval& box) {
  if (box.lo() < 0.0) throw DomainError("sqrt requires a nonnegative box");
  Curve c{[](double x) { return std::sqrt(std::max(x, 0.0)); },
          [](double x) { return 0.5 / std::sqrt(x); },
          [](double x) { return -0.25 / (x * std::sqrt(x)); }};
  SegmentEnvelope env = concave_env(
      c, box, box.hi(), Interval(std::sqrt(box.lo()), std::sqrt(box.hi())));
  if (box.lo() < kSqrtAnchor) env.set_cc_anchor(kSqrtAnchor);
  return env;
}

SegmentEnvelope reciprocal_env(const Interval& box) {
  if (box.lo() <= 0.0) throw DomainError("reciprocal requires a positive box");
  Curve c{[](double x) { return 1.0 / x; },
          [](double x) { return -1.0 / (x * x); },
          [](double x) { return 2.0 / (x * x * x); }};
  return convex_env(c, box, box.hi(), Interval(1.0 / box.hi(), 1.0 / box.lo()));
}

Relaxation kernel_generic(KernelKind nu, const Relaxation& d) {
  auto exp_of = [](const Relaxation& e) { return mc_compose(e, exp_env(e.range)); };
  if (nu == KernelKind::squared_exponential) return exp_of(-0.5 * d);
  Relaxation dn = d;
  if (dn.range.lo() < 0.0) dn.range = Interval(0.0, std::max(0.0, dn.range.hi()));
  const Relaxation s = mc_compose(dn, sqrt_env(dn.range));
  switch (nu) {
    case KernelKind::matern12:
      return exp_of(-s);
    case KernelKind::matern32:
      return mc_product(kSqrt3 * s + 1.0, exp_of(-kSqrt3 * s));
    case KernelKind::matern52: {
      const Relaxation poly = mc_affine(s, &dn, kSqrt5, 5.0 / 3.0, 1.0);
      return mc_product(poly, exp_of(-kSqrt5 * s));
    }
    case KernelKind::squared_exponential:
      break;
  }
  throw DomainError("unknown kernel");
}

Relaxation pdf_generic(const Relaxation& x) {
  const Relaxation q = mc_compose(x, sqr_env(x.range));
  const Relaxation e = -0.5 * q;
  return (1.0 / std::sqrt(2.0 * std::numbers::pi)) *
         mc_compose(e, exp_env(e.range));
}

}  // namespace gpopt
