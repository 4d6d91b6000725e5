#include "gpopt/acquisition.hpp"

#include <cmath>
#include <numbers>

namespace gpopt {

namespace {

const double kSqrt2 = std::numbers::sqrt2;

struct Plane {
  double value;
  double d_mu;
  double d_sigma;
};

// Two-plane envelope through the four corners of mu_box x sigma_box, values
// f[i][j] with i indexing mu (lo, hi) and j indexing sigma (lo, hi). The
// concave envelope is the min of the planes, the convex one the max.
Plane vertex_envelope(const Interval& mu_box, const Interval& sigma_box,
                      const double f[2][2], double mu, double sigma,
                      bool concave) {
  const double wm = mu_box.width(), ws = sigma_box.width();
  const double u = wm > 0.0 ? (mu - mu_box.lo()) / wm : 0.0;
  const double v = ws > 0.0 ? (sigma - sigma_box.lo()) / ws : 0.0;
  const double f00 = f[0][0], f10 = f[1][0], f01 = f[0][1], f11 = f[1][1];
  const double cross = (f00 + f11) - (f10 + f01);
  const bool main_diagonal = concave ? cross >= 0.0 : cross <= 0.0;

  struct P {
    double c, a, b;  // value c + a*u + b*v
  };
  P p1, p2;
  if (main_diagonal) {
    p1 = {f00, f10 - f00, f11 - f10};
    p2 = {f00, f11 - f01, f01 - f00};
  } else {
    p1 = {f00, f10 - f00, f01 - f00};
    p2 = {f11 - (f11 - f01) - (f11 - f10), f11 - f01, f11 - f10};
  }
  const double v1 = p1.c + p1.a * u + p1.b * v;
  const double v2 = p2.c + p2.a * u + p2.b * v;
  const bool first = concave ? v1 <= v2 : v1 >= v2;
  const P& p = first ? p1 : p2;
  return {first ? v1 : v2, wm > 0.0 ? p.a / wm : 0.0,
          ws > 0.0 ? p.b / ws : 0.0};
}

Relaxation constant_relaxation(const Interval& range, std::size_t n) {
  Relaxation r;
  r.range = range;
  r.cv = range.lo();
  r.cc = range.hi();
  r.cv_sub.assign(n, 0.0);
  r.cc_sub.assign(n, 0.0);
  return r;
}

// Largest of two convex compositions.
void max_cv(const Relaxation& a, const UnivariateEnvelope& ea,
            const Relaxation& b, const UnivariateEnvelope& eb, Relaxation& out) {
  double va, vb;
  std::vector<double> sa, sb;
  compose_cv(a, ea, va, sa);
  compose_cv(b, eb, vb, sb);
  if (va >= vb) {
    out.cv = va;
    out.cv_sub = std::move(sa);
  } else {
    out.cv = vb;
    out.cv_sub = std::move(sb);
  }
}

// Smallest of two concave compositions.
void min_cc(const Relaxation& a, const UnivariateEnvelope& ea,
            const Relaxation& b, const UnivariateEnvelope& eb, Relaxation& out) {
  double va, vb;
  std::vector<double> sa, sb;
  compose_cc(a, ea, va, sa);
  compose_cc(b, eb, vb, sb);
  if (va <= vb) {
    out.cc = va;
    out.cc_sub = std::move(sa);
  } else {
    out.cc = vb;
    out.cc_sub = std::move(sb);
  }
}

// Vertex envelope composed with monotone inner relaxations: the inner bound
// used for each argument follows the sign of the plane coefficient.
void vertex_side(const Relaxation& mu, const Relaxation& sigma,
                 const double f[2][2], bool concave, double mu_at,
                 const std::vector<double>& mu_sub, double sigma_at,
                 const std::vector<double>& sigma_sub, Relaxation& out) {
  const Plane p = vertex_envelope(mu.range, sigma.range, f,
                                  mu.range.clamp(mu_at),
                                  sigma.range.clamp(sigma_at), concave);
  std::vector<double> sub(mu.n(), 0.0);
  for (std::size_t k = 0; k < sub.size(); ++k) {
    sub[k] = p.d_mu * mu_sub[k] + p.d_sigma * sigma_sub[k];
  }
  if (concave) {
    out.cc = p.value;
    out.cc_sub = std::move(sub);
  } else {
    out.cv = p.value;
    out.cv_sub = std::move(sub);
  }
}

void corner_values(const Interval& mb, const Interval& sb, double t,
                   double (*fn)(double, double, double), double f[2][2]) {
  f[0][0] = fn(mb.lo(), sb.lo(), t);
  f[1][0] = fn(mb.hi(), sb.lo(), t);
  f[0][1] = fn(mb.lo(), sb.hi(), t);
  f[1][1] = fn(mb.hi(), sb.hi(), t);
}

void check_sigma(const Relaxation& sigma) {
  if (sigma.range.lo() < 0.0) {
    throw DomainError("standard deviation range must be nonnegative");
  }
}

BivariateRelaxationResult to_bivariate(const Relaxation& r, PiRegime regime) {
  BivariateRelaxationResult out;
  out.cv = r.cv;
  out.cc = r.cc;
  out.cv_sub = {r.cv_sub[0], r.cv_sub[1]};
  out.cc_sub = {r.cc_sub[0], r.cc_sub[1]};
  out.range = r.range;
  out.regime = regime;
  return out;
}

// PI(., sigma) for sigma > 0 and its derivatives in mu.
Curve pi_mu_curve(double sigma, double t) {
  return {[=](double mu) { return normal_cdf((t - mu) / sigma); },
          [=](double mu) { return -normal_pdf((t - mu) / sigma) / sigma; },
          [=](double mu) {
            const double z = (t - mu) / sigma;
            return -z * normal_pdf(z) / (sigma * sigma);
          }};
}

// Left/right branch of PI(., sigma_lo) used by the f-tilde/g-tilde
// constructions; the step function when sigma_lo = 0.
Curve pi_branch_curve(double sigma, double t, bool left) {
  if (sigma > 0.0) return pi_mu_curve(sigma, t);
  const double v = left ? 1.0 : 0.0;
  return {[v](double) { return v; }, [](double) { return 0.0; },
          [](double) { return 0.0; }};
}

}  // namespace

void AcquisitionSpec::validate() const {
  if (kind == AcquisitionKind::lcb && !(kappa >= 0.0)) {
    throw DomainError("LCB requires kappa >= 0");
  }
  if (kind != AcquisitionKind::lcb && !std::isfinite(f_min)) {
    throw DomainError("EI/PI require a finite f_min");
  }
}

std::string acquisition_name(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::ei:
      return "ei";
    case AcquisitionKind::pi:
      return "pi";
    case AcquisitionKind::lcb:
      return "lcb";
  }
  throw DomainError("unknown acquisition kind");
}

AcquisitionKind parse_acquisition(const std::string& name) {
  if (name == "ei" || name == "EI") return AcquisitionKind::ei;
  if (name == "pi" || name == "PI") return AcquisitionKind::pi;
  if (name == "lcb" || name == "LCB") return AcquisitionKind::lcb;
  throw DomainError("unknown acquisition function '" + name + "'");
}

double ei_value(double mu, double sigma, double f_min) {
  if (sigma < 0.0) throw DomainError("EI requires sigma >= 0");
  if (sigma == 0.0) return std::max(f_min - mu, 0.0);
  const double z = (f_min - mu) / sigma;
  return std::max(0.0, sigma * (z * normal_cdf(z) + normal_pdf(z)));
}

std::array<double, 2> ei_gradient(double mu, double sigma, double f_min) {
  if (sigma < 0.0) throw DomainError("EI requires sigma >= 0");
  if (sigma == 0.0) {
    if (mu < f_min) return {-1.0, 0.0};
    if (mu > f_min) return {0.0, 0.0};
    return {-0.5, normal_pdf(0.0)};
  }
  const double z = (f_min - mu) / sigma;
  return {-normal_cdf(z), normal_pdf(z)};
}

double pi_value(double mu, double sigma, double f_min) {
  if (sigma < 0.0) throw DomainError("PI requires sigma >= 0");
  if (sigma == 0.0) return mu < f_min ? 1.0 : 0.0;
  return normal_cdf((f_min - mu) / sigma);
}

Interval ei_range(const Interval& mu_box, const Interval& sigma_box,
                  double f_min) {
  return {ei_value(mu_box.hi(), sigma_box.lo(), f_min),
          ei_value(mu_box.lo(), sigma_box.hi(), f_min)};
}

Interval pi_range(const Interval& mu_box, const Interval& sigma_box,
                  double f_min) {
  const double mL = mu_box.lo(), mU = mu_box.hi();
  const double hi = mL < f_min ? pi_value(mL, sigma_box.lo(), f_min)
                               : pi_value(mL, sigma_box.hi(), f_min);
  const double lo = mU >= f_min ? pi_value(mU, sigma_box.lo(), f_min)
                                : pi_value(mU, sigma_box.hi(), f_min);
  return {lo, std::max(lo, hi)};
}

SegmentEnvelope pi_mu_facet_env(double sigma, const Interval& mu_box,
                                double t) {
  const double mL = mu_box.lo(), mU = mu_box.hi();
  if (sigma > 0.0) {
    return one_inflection_env(pi_mu_curve(sigma, t), mu_box, t, false, false);
  }
  Curve step{[t](double mu) { return mu < t ? 1.0 : 0.0; },
             [](double) { return 0.0; }, [](double) { return 0.0; }};
  if (mU < t || mL >= t) {
    const double v = mU < t ? 1.0 : 0.0;
    return SegmentEnvelope(mu_box, step, EnvelopeSide::curve(mu_box),
                           EnvelopeSide::curve(mu_box), Interval(v), mU, mL);
  }
  EnvelopeSide cv, cc;
  cv.push_line(mL, 1.0, t, 0.0);
  cc.push_line(mL, 1.0, t, 1.0);
  if (mU > t) {
    cv.push_curve(t, mU);
    cc.push_line(t, 1.0, mU, 0.0);
  }
  return SegmentEnvelope(mu_box, step, cv, cc, Interval(0.0, 1.0), mU, mL);
}

SegmentEnvelope pi_sigma_facet_env(double mu, const Interval& sigma_box,
                                   double t) {
  const double c = t - mu;
  const double sL = sigma_box.lo(), sU = sigma_box.hi();
  if (c == 0.0) {
    Curve half{[](double s) { return s > 0.0 ? 0.5 : 0.0; },
               [](double) { return 0.0; }, [](double) { return 0.0; }};
    if (sL > 0.0 || sU == 0.0) {
      const double v = sL > 0.0 ? 0.5 : 0.0;
      return SegmentEnvelope(sigma_box, half, EnvelopeSide::curve(sigma_box),
                             EnvelopeSide::curve(sigma_box), Interval(v), sL, sU);
    }
    return SegmentEnvelope(sigma_box, half, EnvelopeSide::line(0.0, 0.0, sU, 0.5),
                           EnvelopeSide::line(0.0, 0.5, sU, 0.5),
                           Interval(0.0, 0.5), sL, sU);
  }
  const double at_zero = c > 0.0 ? 1.0 : 0.0;
  Curve curve{[=](double s) { return s > 0.0 ? normal_cdf(c / s) : at_zero; },
              [=](double s) {
                return s > 0.0 ? -c * normal_pdf(c / s) / (s * s) : 0.0;
              },
              [=](double s) {
                if (s <= 0.0) return 0.0;
                const double u = c / s;
                return normal_pdf(u) * u * (2.0 - u * u) / (s * s);
              }};
  const bool increasing = c < 0.0;
  return one_inflection_env(curve, sigma_box, std::abs(c) / kSqrt2, increasing,
                            increasing);
}

double pi_f_tilde(double mu, const Interval& mu_box, const Interval& sigma_box,
                  double t) {
  const double sL = sigma_box.lo(), sU = sigma_box.hi();
  if (mu >= t) return pi_value(mu, sL, t);
  const double at_t = pi_value(t, sL, t);
  const double at_lo = pi_value(mu_box.lo(), sU, t);
  const double w = t - mu_box.lo();
  if (w <= 0.0) return at_t;
  return at_t + (at_t - at_lo) / w * (mu - t);
}

double pi_g_tilde(double mu, const Interval& mu_box, const Interval& sigma_box,
                  double t) {
  const double sL = sigma_box.lo(), sU = sigma_box.hi();
  const double left_limit = sL > 0.0 ? 0.5 : 1.0;
  const double a = pi_value(t, sU, t);
  if (mu < t) return pi_value(mu, sL, t);
  if (mu == t) return std::max(left_limit, a);
  const double w = mu_box.hi() - t;
  return a + (pi_value(mu_box.hi(), sU, t) - a) / w * (mu - t);
}

SegmentEnvelope pi_f_tilde_env(const Interval& mu_box,
                               const Interval& sigma_box, double t) {
  const double mL = mu_box.lo(), mU = mu_box.hi();
  if (!(mL < t && t <= mU)) {
    throw DomainError("f-tilde requires f_min inside the mu box");
  }
  const Curve right = pi_branch_curve(sigma_box.lo(), t, false);
  const double s = (pi_f_tilde(t, mu_box, sigma_box, t) -
                    pi_f_tilde(mL, mu_box, sigma_box, t)) /
                   (t - mL);
  Curve c{[=](double mu) { return pi_f_tilde(mu, mu_box, sigma_box, t); },
          [=](double mu) { return mu >= t ? right.df(mu) : s; },
          [=](double mu) { return mu >= t ? right.d2f(mu) : 0.0; }};
  const double yL = c.f(mL), yU = c.f(mU);

  EnvelopeSide cv;
  const double h_t = right.f(t) + right.df(t) * (mL - t) - yL;
  double xc = t;
  if (mU > t && h_t > 0.0) {
    const double h_u = right.f(mU) + right.df(mU) * (mL - mU) - yL;
    xc = h_u >= 0.0 ? mU : tangent_point(right, mL, yL, Interval(t, mU));
  }
  cv.push_line(mL, yL, xc, right.f(xc));
  if (xc < mU) cv.push_curve(xc, mU);
  return SegmentEnvelope(mu_box, c, cv, EnvelopeSide::line(mL, yL, mU, yL),
                         Interval(yU, std::max(yU, yL)), mU, mL);
}

SegmentEnvelope pi_g_tilde_env(const Interval& mu_box,
                               const Interval& sigma_box, double t) {
  const double mL = mu_box.lo(), mU = mu_box.hi();
  if (!(mL < t && t <= mU)) {
    throw DomainError("g-tilde requires f_min inside the mu box");
  }
  const Curve left = pi_branch_curve(sigma_box.lo(), t, true);
  Curve c{[=](double mu) { return pi_g_tilde(mu, mu_box, sigma_box, t); },
          [=](double mu) { return left.df(mu); },
          [=](double mu) { return left.d2f(mu); }};
  const double yL = c.f(mL), yU = c.f(mU);
  const double yt = c.f(t);

  EnvelopeSide cc;
  if (mU == t) {
    cc.push_curve(mL, mU);
  } else {
    const double h_t = yt + left.df(t) * (mU - t) - yU;
    if (h_t >= 0.0) {
      cc.push_curve(mL, t);
      cc.push_line(t, yt, mU, yU);
    } else if (left.f(mL) + left.df(mL) * (mU - mL) - yU <= 0.0) {
      cc.push_line(mL, yL, mU, yU);
    } else {
      const double xc = tangent_point(left, mU, yU, Interval(mL, t));
      cc.push_curve(mL, xc);
      cc.push_line(xc, left.f(xc), mU, yU);
    }
  }
  return SegmentEnvelope(mu_box, c, EnvelopeSide::line(mL, yU, mU, yU), cc,
                         Interval(yU, std::max(yU, yL)), mU, mL);
}

PiRegime pi_regime(const Interval& mu_box, const Interval& sigma_box,
                   double t) {
  const double mL = mu_box.lo(), mU = mu_box.hi();
  const double sL = sigma_box.lo(), sU = sigma_box.hi();
  if (sU == 0.0) return PiRegime::constant;
  if (sL > 0.0 && std::max(std::abs(mL - t), std::abs(mU - t)) <= kSqrt2 * sL) {
    return PiRegime::mccormick_i1i2;
  }
  if (mL >= t) {
    return mL - t >= kSqrt2 * sU ? PiRegime::componentwise
                                 : PiRegime::facet_monotone;
  }
  if (mU < t || (mU == t && sL > 0.0)) {
    return t - mU >= kSqrt2 * sU ? PiRegime::componentwise
                                 : PiRegime::facet_monotone;
  }
  return PiRegime::general;
}

Relaxation pi_compose(const Relaxation& mu, const Relaxation& sigma, double t) {
  check_sigma(sigma);
  const Interval& mb = mu.range;
  const Interval& sb = sigma.range;
  const Interval exact = pi_range(mb, sb, t);
  const PiRegime regime = pi_regime(mb, sb, t);

  if (regime == PiRegime::constant) return constant_relaxation(exact, mu.n());
  if (regime == PiRegime::mccormick_i1i2) {
    Relaxation r = pi_generic(mu, sigma, t);
    r.range = exact;
    return mc_cut(std::move(r));
  }

  Relaxation r;
  r.range = exact;
  const double mL = mb.lo(), mU = mb.hi();
  const double sL = sb.lo(), sU = sb.hi();
  if (mL >= t) {
    // Decreasing in mu, increasing in sigma.
    const SegmentEnvelope f_sigma = pi_sigma_facet_env(mU, sb, t);
    max_cv(mu, pi_mu_facet_env(sL, mb, t), sigma, f_sigma, r);
    if (regime == PiRegime::componentwise) {
      double f[2][2];
      corner_values(mb, sb, t, pi_value, f);
      vertex_side(mu, sigma, f, true, mu.cv, mu.cv_sub, sigma.cc, sigma.cc_sub,
                  r);
    } else {
      min_cc(mu, pi_mu_facet_env(sU, mb, t), sigma,
             pi_sigma_facet_env(mL, sb, t), r);
    }
  } else if (regime != PiRegime::general) {
    // Decreasing in both arguments.
    if (regime == PiRegime::componentwise) {
      double f[2][2];
      corner_values(mb, sb, t, pi_value, f);
      vertex_side(mu, sigma, f, false, mu.cc, mu.cc_sub, sigma.cc,
                  sigma.cc_sub, r);
    } else {
      max_cv(mu, pi_mu_facet_env(sU, mb, t), sigma,
             pi_sigma_facet_env(mU, sb, t), r);
    }
    min_cc(mu, pi_mu_facet_env(sL, mb, t), sigma, pi_sigma_facet_env(mL, sb, t),
           r);
  } else {
    max_cv(mu, pi_f_tilde_env(mb, sb, t), sigma, pi_sigma_facet_env(mU, sb, t),
           r);
    min_cc(mu, pi_g_tilde_env(mb, sb, t), sigma, pi_sigma_facet_env(mL, sb, t),
           r);
  }
  return mc_cut(std::move(r));
}

Relaxation ei_compose(const Relaxation& mu, const Relaxation& sigma, double t) {
  check_sigma(sigma);
  const Interval& mb = mu.range;
  const Interval& sb = sigma.range;
  Relaxation r;
  r.range = ei_range(mb, sb, t);

  // EI is convex, nonincreasing in mu and nondecreasing in sigma.
  const double m = mb.clamp(mu.cc), s = sb.clamp(sigma.cv);
  r.cv = ei_value(m, s, t);
  const std::array<double, 2> g = ei_gradient(m, s, t);
  r.cv_sub.assign(mu.n(), 0.0);
  for (std::size_t k = 0; k < r.cv_sub.size(); ++k) {
    r.cv_sub[k] = g[0] * mu.cc_sub[k] + g[1] * sigma.cv_sub[k];
  }

  double f[2][2];
  corner_values(mb, sb, t, ei_value, f);
  vertex_side(mu, sigma, f, true, mu.cv, mu.cv_sub, sigma.cc, sigma.cc_sub, r);
  return mc_cut(std::move(r));
}

Relaxation lcb_relax(const Relaxation& mu, const Relaxation& sigma,
                     double kappa) {
  if (!(kappa >= 0.0)) throw DomainError("LCB requires kappa >= 0");
  return mc_affine(mu, &sigma, 1.0, -kappa, 0.0);
}

Relaxation pi_generic(const Relaxation& mu, const Relaxation& sigma, double t) {
  check_sigma(sigma);
  if (sigma.range.lo() <= 0.0) {
    return constant_relaxation(Interval(0.0, 1.0), mu.n());
  }
  const Relaxation inv = mc_compose(sigma, reciprocal_env(sigma.range));
  const Relaxation z = mc_product(mc_affine(mu, nullptr, -1.0, 0.0, t), inv);
  return mc_compose(z, cdf_env(z.range));
}

Relaxation ei_generic(const Relaxation& mu, const Relaxation& sigma, double t) {
  check_sigma(sigma);
  const Relaxation num = mc_affine(mu, nullptr, -1.0, 0.0, t);
  if (sigma.range.lo() <= 0.0) {
    // z unbounded: only Phi in [0, 1] and phi in [0, phi(0)] are known.
    const Relaxation cdf = constant_relaxation(Interval(0.0, 1.0), mu.n());
    const Relaxation pdf =
        constant_relaxation(Interval(0.0, normal_pdf(0.0)), mu.n());
    return mc_product(num, cdf) + mc_product(sigma, pdf);
  }
  const Relaxation inv = mc_compose(sigma, reciprocal_env(sigma.range));
  const Relaxation z = mc_product(num, inv);
  const Relaxation cdf = mc_compose(z, cdf_env(z.range));
  const Relaxation pdf = pdf_generic(z);
  return mc_product(num, cdf) + mc_product(sigma, pdf);
}

BivariateRelaxationResult ei_relax(const Interval& mu_box,
                                   const Interval& sigma_box, double mu,
                                   double sigma, double f_min) {
  if (sigma_box.lo() < 0.0) throw DomainError("sigma box must be >= 0");
  const Relaxation m = mc_variable(0, mu_box, mu, 2);
  const Relaxation s = mc_variable(1, sigma_box, sigma, 2);
  return to_bivariate(ei_compose(m, s, f_min), PiRegime::componentwise);
}

BivariateRelaxationResult pi_relax(const Interval& mu_box,
                                   const Interval& sigma_box, double mu,
                                   double sigma, double f_min) {
  if (sigma_box.lo() < 0.0) throw DomainError("sigma box must be >= 0");
  const Relaxation m = mc_variable(0, mu_box, mu, 2);
  const Relaxation s = mc_variable(1, sigma_box, sigma, 2);
  return to_bivariate(pi_compose(m, s, f_min),
                      pi_regime(mu_box, sigma_box, f_min));
}

}  // namespace gpopt
