#include "gpopt/mccormick.hpp"

#include <algorithm>
#include <string>

namespace gpopt {

namespace {

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  if (alpha == 0.0) return;
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += alpha * x[k];
}

void check_dims(const Relaxation& a, const Relaxation& b) {
  if (a.n() != b.n()) {
    throw DomainError("relaxations over different variable counts: " +
                      std::to_string(a.n()) + " vs " + std::to_string(b.n()));
  }
}

// Product term coef*v where v ranges over [v.cv, v.cc]; picks the endpoint
// giving the smaller (lower = true) or larger value.
struct Term {
  double value;
  const std::vector<double>* sub;
  double coef;
};

Term bound_term(double coef, const Relaxation& v, bool lower) {
  const bool use_cv = (coef >= 0.0) == lower;
  return use_cv ? Term{coef * v.cv, &v.cv_sub, coef}
                : Term{coef * v.cc, &v.cc_sub, coef};
}

}  // namespace

Relaxation mc_variable(std::size_t i, const Interval& box_i, double point_i,
                       std::size_t n) {
  if (i >= n) throw DomainError("variable index out of range");
  if (!box_i.contains(point_i)) {
    throw DomainError("point " + std::to_string(point_i) +
                      " outside variable box");
  }
  Relaxation r;
  r.range = box_i;
  r.cv = r.cc = point_i;
  r.cv_sub.assign(n, 0.0);
  r.cc_sub.assign(n, 0.0);
  r.cv_sub[i] = r.cc_sub[i] = 1.0;
  return r;
}

Relaxation mc_constant(double c, std::size_t n) {
  Relaxation r;
  r.range = Interval(c);
  r.cv = r.cc = c;
  r.cv_sub.assign(n, 0.0);
  r.cc_sub.assign(n, 0.0);
  return r;
}

Relaxation mc_affine(const Relaxation& a, const Relaxation* b, double alpha,
                     double beta, double gamma) {
  Relaxation r;
  r.cv_sub.assign(a.n(), 0.0);
  r.cc_sub.assign(a.n(), 0.0);
  r.range = alpha * a.range + gamma;
  if (alpha >= 0.0) {
    r.cv = alpha * a.cv;
    r.cc = alpha * a.cc;
    axpy(alpha, a.cv_sub, r.cv_sub);
    axpy(alpha, a.cc_sub, r.cc_sub);
  } else {
    r.cv = alpha * a.cc;
    r.cc = alpha * a.cv;
    axpy(alpha, a.cc_sub, r.cv_sub);
    axpy(alpha, a.cv_sub, r.cc_sub);
  }
  if (b != nullptr && beta != 0.0) {
    check_dims(a, *b);
    r.range += beta * b->range;
    if (beta >= 0.0) {
      r.cv += beta * b->cv;
      r.cc += beta * b->cc;
      axpy(beta, b->cv_sub, r.cv_sub);
      axpy(beta, b->cc_sub, r.cc_sub);
    } else {
      r.cv += beta * b->cc;
      r.cc += beta * b->cv;
      axpy(beta, b->cc_sub, r.cv_sub);
      axpy(beta, b->cv_sub, r.cc_sub);
    }
  }
  r.cv += gamma;
  r.cc += gamma;
  return r;
}

Relaxation mc_lincomb(std::span<const Relaxation* const> terms,
                      std::span<const double> coeffs, double constant,
                      std::size_t n) {
  if (terms.size() != coeffs.size()) {
    throw DomainError("mc_lincomb: term/coefficient count mismatch");
  }
  Relaxation r;
  r.cv_sub.assign(n, 0.0);
  r.cc_sub.assign(n, 0.0);
  double lo = constant, hi = constant;
  r.cv = r.cc = constant;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const double c = coeffs[t];
    if (c == 0.0) continue;
    const Relaxation& a = *terms[t];
    if (a.n() != n) throw DomainError("mc_lincomb: dimension mismatch");
    if (c > 0.0) {
      lo += c * a.range.lo();
      hi += c * a.range.hi();
      r.cv += c * a.cv;
      r.cc += c * a.cc;
      axpy(c, a.cv_sub, r.cv_sub);
      axpy(c, a.cc_sub, r.cc_sub);
    } else {
      lo += c * a.range.hi();
      hi += c * a.range.lo();
      r.cv += c * a.cc;
      r.cc += c * a.cv;
      axpy(c, a.cc_sub, r.cv_sub);
      axpy(c, a.cv_sub, r.cc_sub);
    }
  }
  r.range = Interval(lo, std::max(lo, hi));
  return r;
}

Relaxation mc_product(const Relaxation& a, const Relaxation& b) {
  check_dims(a, b);
  const double aL = a.range.lo(), aU = a.range.hi();
  const double bL = b.range.lo(), bU = b.range.hi();

  // Underestimators: bL*a + aL*b - aL*bL and bU*a + aU*b - aU*bU.
  const Term u1a = bound_term(bL, a, true), u1b = bound_term(aL, b, true);
  const Term u2a = bound_term(bU, a, true), u2b = bound_term(aU, b, true);
  const double cv1 = u1a.value + u1b.value - aL * bL;
  const double cv2 = u2a.value + u2b.value - aU * bU;
  // Overestimators: bL*a + aU*b - aU*bL and bU*a + aL*b - aL*bU.
  const Term o1a = bound_term(bL, a, false), o1b = bound_term(aU, b, false);
  const Term o2a = bound_term(bU, a, false), o2b = bound_term(aL, b, false);
  const double cc1 = o1a.value + o1b.value - aU * bL;
  const double cc2 = o2a.value + o2b.value - aL * bU;

  Relaxation r;
  r.range = a.range * b.range;
  r.cv_sub.assign(a.n(), 0.0);
  r.cc_sub.assign(a.n(), 0.0);
  const bool first_cv = cv1 >= cv2;
  r.cv = first_cv ? cv1 : cv2;
  const Term& ta = first_cv ? u1a : u2a;
  const Term& tb = first_cv ? u1b : u2b;
  axpy(ta.coef, *ta.sub, r.cv_sub);
  axpy(tb.coef, *tb.sub, r.cv_sub);
  const bool first_cc = cc1 <= cc2;
  r.cc = first_cc ? cc1 : cc2;
  const Term& sa = first_cc ? o1a : o2a;
  const Term& sb = first_cc ? o1b : o2b;
  axpy(sa.coef, *sa.sub, r.cc_sub);
  axpy(sb.coef, *sb.sub, r.cc_sub);
  return mc_cut(std::move(r));
}

void compose_cv(const Relaxation& inner, const UnivariateEnvelope& env,
                double& value, std::vector<double>& sub) {
  const double z = mid3(inner.cv, inner.cc, env.argmin_of_cv());
  const std::vector<double>* inner_sub = nullptr;
  if (z == inner.cv) {
    inner_sub = &inner.cv_sub;
  } else if (z == inner.cc) {
    inner_sub = &inner.cc_sub;
  }
  const Linearization lin = env.cv(z);
  value = lin.value;
  sub.assign(inner.n(), 0.0);
  if (inner_sub != nullptr) axpy(lin.slope, *inner_sub, sub);
}

void compose_cc(const Relaxation& inner, const UnivariateEnvelope& env,
                double& value, std::vector<double>& sub) {
  const double z = mid3(inner.cv, inner.cc, env.argmax_of_cc());
  const std::vector<double>* inner_sub = nullptr;
  if (z == inner.cv) {
    inner_sub = &inner.cv_sub;
  } else if (z == inner.cc) {
    inner_sub = &inner.cc_sub;
  }
  const Linearization lin = env.cc(z);
  value = lin.value;
  sub.assign(inner.n(), 0.0);
  if (inner_sub != nullptr) axpy(lin.slope, *inner_sub, sub);
}

Relaxation mc_compose(const Relaxation& inner, const UnivariateEnvelope& env) {
  const Interval& box = env.box();
  const double tol = 1e-12 * (1.0 + box.mag());
  if (inner.range.lo() < box.lo() - tol || inner.range.hi() > box.hi() + tol) {
    throw DomainError("composition: inner range outside envelope domain");
  }
  Relaxation r;
  r.range = env.exact_range();
  compose_cv(inner, env, r.cv, r.cv_sub);
  compose_cc(inner, env, r.cc, r.cc_sub);
  return mc_cut(std::move(r));
}

Relaxation mc_cut(Relaxation a) {
  if (a.cv < a.range.lo()) {
    a.cv = a.range.lo();
    std::fill(a.cv_sub.begin(), a.cv_sub.end(), 0.0);
  } else if (a.cv > a.range.hi()) {
    a.cv = a.range.hi();
  }
  if (a.cc > a.range.hi()) {
    a.cc = a.range.hi();
    std::fill(a.cc_sub.begin(), a.cc_sub.end(), 0.0);
  } else if (a.cc < a.range.lo()) {
    a.cc = a.range.lo();
  }
  return a;
}

}  // namespace gpopt
