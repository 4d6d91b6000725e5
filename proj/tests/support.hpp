// Shared generators, independent oracles and fuzz drivers for the unit and
// acceptance tests.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gpopt/acquisition.hpp"
#include "gpopt/cli.hpp"
#include "gpopt/gp.hpp"
#include "gpopt/problem.hpp"
#include "gpopt/train.hpp"

namespace gpopt::testing {

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double a, double b) {
    return a + (b - a) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  // Box inside [lo, hi]: mostly wide, sometimes narrow or degenerate.
  Interval box(double lo, double hi) {
    const double a = uniform(lo, hi);
    const double r = uniform(0.0, 1.0);
    double w;
    if (r < 0.05) {
      w = 0.0;
    } else if (r < 0.2) {
      w = (hi - lo) * std::pow(10.0, uniform(-8.0, -2.0));
    } else {
      w = uniform(0.0, hi - lo);
    }
    double b = std::min(a + w, hi);
    return Interval(std::min(a, b), std::max(a, b));
  }
  double in(const Interval& b) { return b.degenerate() ? b.lo() : b.clamp(uniform(b.lo(), b.hi())); }
};

// Accumulates property violations; keeps the first few messages.
struct Check {
  long total = 0;
  long failed = 0;
  double worst = 0.0;
  std::string first;

  void expect(bool ok, double violation, const std::string& what) {
    ++total;
    if (ok) return;
    ++failed;
    worst = std::max(worst, violation);
    if (failed <= 3) first += what + "\n";
  }
  void merge(const Check& o) {
    total += o.total;
    failed += o.failed;
    worst = std::max(worst, o.worst);
    if (failed - o.failed < 3) first += o.first;
  }
  bool ok() const { return failed == 0; }
  std::string summary() const {
    std::ostringstream s;
    s << failed << "/" << total << " violations";
    if (failed > 0) s << " (worst " << worst << ")\n" << first;
    return s.str();
  }
};

inline std::string describe(const std::string& tag, const Interval& box, double x) {
  std::ostringstream s;
  s.precision(17);
  s << tag << " box [" << box.lo() << ", " << box.hi() << "] x " << x;
  return s.str();
}

// ---- Independent oracles -------------------------------------------------

inline double oracle_kernel(KernelKind nu, double d) {
  const double r = std::sqrt(d);
  switch (nu) {
    case KernelKind::matern12:
      return std::exp(-r);
    case KernelKind::matern32:
      return (1.0 + std::sqrt(3.0) * r) * std::exp(-std::sqrt(3.0) * r);
    case KernelKind::matern52:
      return (1.0 + std::sqrt(5.0) * r + 5.0 / 3.0 * d) * std::exp(-std::sqrt(5.0) * r);
    case KernelKind::squared_exponential:
      return std::exp(-d / 2.0);
  }
  return 0.0;
}

inline double oracle_pdf(double x) {
  return std::exp(-x * x / 2.0) / std::sqrt(2.0 * std::numbers::pi);
}
inline double oracle_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// E[max(f_min - F, 0)] for F ~ N(mu, sigma^2) by quadrature.
inline double oracle_ei(double mu, double sigma, double f_min) {
  if (sigma == 0.0) return std::max(f_min - mu, 0.0);
  auto g = [&](double z) { return std::max(f_min - (mu + sigma * z), 0.0) * oracle_pdf(z); };
  const double zc = (f_min - mu) / sigma;
  const double lo = -12.0;
  if (zc <= lo) return 0.0;
  return simpson(g, lo, std::min(zc, 12.0), 4000) +
         (zc > 12.0 ? (f_min - mu) * (1.0 - oracle_cdf(12.0)) : 0.0);
}

// P(F < f_min) by quadrature of the density.
inline double oracle_pi(double mu, double sigma, double f_min) {
  if (sigma == 0.0) return mu < f_min ? 1.0 : 0.0;
  const double zc = (f_min - mu) / sigma;
  if (zc < -12.0) return 0.0;
  if (zc > 12.0) return 1.0;
  return simpson(oracle_pdf, -12.0, zc, 4000);
}

// Posterior by explicit inverse of the covariance matrix.
struct NaiveGP {
  Eigen::MatrixXd Kinv;
  const GPModel* m;

  explicit NaiveGP(const GPModel& model) : m(&model) {
    const int N = model.N;
    Eigen::MatrixXd K(N, N);
    for (int a = 0; a < N; ++a) {
      for (int b = 0; b < N; ++b) K(a, b) = k(model.X_scaled.row(a), model.X_scaled.row(b));
      K(a, a) += model.sigma_n2();
    }
    Kinv = K.fullPivLu().inverse();
  }
  double k(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) const {
    double d = 0.0;
    for (int j = 0; j < m->D; ++j) {
      const double l = std::exp(m->log_theta[j]);
      d += l * l * (a(j) - b(j)) * (a(j) - b(j));
    }
    return std::exp(2.0 * m->log_theta[m->D]) * oracle_kernel(m->nu, d);
  }
  Eigen::VectorXd kx(const std::vector<double>& x) const {
    Eigen::RowVectorXd xs(m->D);
    for (int j = 0; j < m->D; ++j) {
      const Interval& b = m->input_bounds[j];
      xs(j) = (x[j] - b.lo()) / (b.hi() - b.lo());
    }
    Eigen::VectorXd v(m->N);
    for (int i = 0; i < m->N; ++i) v(i) = k(xs, m->X_scaled.row(i));
    return v;
  }
  double mean(const std::vector<double>& x) const {
    return m->output_mean + m->output_std * kx(x).dot(Kinv * m->y_scaled);
  }
  double variance(const std::vector<double>& x) const {
    const Eigen::VectorXd v = kx(x);
    const double s2 = std::exp(2.0 * m->log_theta[m->D]) - v.dot(Kinv * v);
    return m->output_std * m->output_std * s2;
  }
};

// ---- Random models and problems -----------------------------------------

inline KernelKind random_kernel(Gen& g) {
  static const KernelKind all[] = {KernelKind::matern12, KernelKind::matern32,
                                   KernelKind::matern52, KernelKind::squared_exponential};
  return all[g.integer(0, 3)];
}

// Random GP on a random raw box with a smooth response; noiseless with
// probability p_noiseless.
inline std::shared_ptr<const GPModel> random_model(Gen& g, int D, int N, KernelKind nu,
                                                   double p_noiseless = 0.3) {
  std::vector<Interval> bounds;
  for (int j = 0; j < D; ++j) {
    const double lo = g.uniform(-5.0, 5.0);
    bounds.emplace_back(lo, lo + g.uniform(0.5, 10.0));
  }
  Eigen::MatrixXd X(N, D);
  Eigen::VectorXd y(N);
  std::vector<double> w(D), ph(D);
  for (int j = 0; j < D; ++j) {
    w[j] = g.uniform(0.5, 4.0);
    ph[j] = g.uniform(0.0, 6.0);
  }
  for (int i = 0; i < N; ++i) {
    double s = 0.0;
    for (int j = 0; j < D; ++j) {
      X(i, j) = g.uniform(bounds[j].lo(), bounds[j].hi());
      const double u = (X(i, j) - bounds[j].lo()) / bounds[j].width();
      s += std::sin(w[j] * u * 3.0 + ph[j]) + 0.3 * u;
    }
    y(i) = 2.0 + 3.0 * s;
  }
  std::vector<double> th(D + 2);
  for (int j = 0; j < D; ++j) th[j] = g.uniform(-0.5, 2.0);
  th[D] = g.uniform(-0.5, 0.7);
  th[D + 1] = g.coin(p_noiseless) ? kNoiselessLogSigmaN - 1.0 : g.uniform(-5.0, -1.5);
  try {
    return std::make_shared<const GPModel>(build_model(nu, th, X, y, bounds));
  } catch (const NotPositiveDefinite&) {
    th[D + 1] = -3.0;
    return std::make_shared<const GPModel>(build_model(nu, th, X, y, bounds));
  }
}

inline std::vector<Interval> random_subbox(Gen& g, const std::vector<Interval>& root) {
  std::vector<Interval> b;
  for (const Interval& r : root) {
    if (g.coin(0.1)) {
      const double c = g.uniform(r.lo(), r.hi());
      b.emplace_back(c, c);
    } else {
      const double a = g.uniform(r.lo(), r.hi()), c = g.uniform(r.lo(), r.hi());
      b.emplace_back(std::min(a, c), std::max(a, c));
    }
  }
  return b;
}

inline std::vector<double> midpoint_of(const std::vector<Interval>& box) {
  std::vector<double> x;
  for (const Interval& b : box) x.push_back(b.mid());
  return x;
}

inline std::vector<double> random_point(Gen& g, const std::vector<Interval>& box) {
  std::vector<double> x;
  for (const Interval& b : box) x.push_back(g.in(b));
  return x;
}

// ---- Fuzz drivers --------------------------------------------------------

constexpr double kTol = 1e-9;

inline double scaled_tol(double tol, double v) { return tol * (1.0 + std::abs(v)); }

// Validity, convexity and support-line checks of one univariate envelope.
inline void check_univariate(Check& c, const std::string& tag, const UnivariateEnvelope& env,
                             const std::function<double(double)>& f, Gen& g, int samples,
                             double tol = kTol) {
  const Interval& box = env.box();
  const Interval rng = env.exact_range();
  for (int s = 0; s < samples; ++s) {
    const double x = g.in(box);
    const double fx = f(x);
    const Linearization lv = env.cv(x), lc = env.cc(x);
    const double t = scaled_tol(tol, fx);
    c.expect(lv.value <= fx + t, lv.value - fx, describe(tag + " cv > f", box, x));
    c.expect(lc.value >= fx - t, fx - lc.value, describe(tag + " cc < f", box, x));
    c.expect(rng.lo() <= fx + t && fx <= rng.hi() + t, 0.0,
             describe(tag + " f outside exact_range", box, x));
    // Midpoint convexity / concavity.
    const double y = g.in(box), m = 0.5 * (x + y);
    const double cvm = env.cv(m).value, ccm = env.cc(m).value;
    const double cvy = env.cv(y).value, ccy = env.cc(y).value;
    c.expect(cvm <= 0.5 * (lv.value + cvy) + t, cvm - 0.5 * (lv.value + cvy),
             describe(tag + " cv not convex", box, m));
    c.expect(ccm >= 0.5 * (lc.value + ccy) - t, 0.5 * (lc.value + ccy) - ccm,
             describe(tag + " cc not concave", box, m));
    // Support lines of the relaxations bound f on the whole box.
    if (s % 10 == 0) {
      for (int k = 0; k < 20; ++k) {
        const double q = g.in(box), fq = f(q);
        const double tq = scaled_tol(tol, fq) + tol * std::abs(q - x) * (1.0 + std::abs(lv.slope) + std::abs(lc.slope));
        const double under = lv.value + lv.slope * (q - x);
        const double over = lc.value + lc.slope * (q - x);
        c.expect(under <= fq + tq, under - fq, describe(tag + " cv support line above f", box, q));
        c.expect(over >= fq - tq, fq - over, describe(tag + " cc support line below f", box, q));
      }
    }
  }
}

inline Check fuzz_univariate_envelopes(std::uint64_t seed, int boxes, int samples) {
  Gen g(seed);
  Check c;
  const KernelKind kinds[] = {KernelKind::matern12, KernelKind::matern32,
                              KernelKind::matern52, KernelKind::squared_exponential};
  for (int b = 0; b < boxes; ++b) {
    for (KernelKind nu : kinds) {
      const Interval d = g.coin(0.2) ? Interval(0.0, g.uniform(0.0, 20.0)) : g.box(0.0, 20.0);
      check_univariate(c, "kernel " + kernel_name(nu), kernel_env(nu, d),
                       [nu](double x) { return oracle_kernel(nu, x); }, g, samples);
    }
    {
      const Interval x = g.box(-6.0, 6.0);
      check_univariate(c, "pdf", pdf_env(x), oracle_pdf, g, samples);
      const Interval y = g.box(-6.0, 6.0);
      check_univariate(c, "cdf", cdf_env(y), oracle_cdf, g, samples);
      const Interval e = g.box(-4.0, 4.0);
      check_univariate(c, "erf", erf_env(e), [](double v) { return std::erf(v); }, g, samples);
    }
    check_univariate(c, "sqr", sqr_env(g.box(-5.0, 5.0)), [](double v) { return v * v; }, g,
                     samples);
    check_univariate(c, "exp", exp_env(g.box(-5.0, 5.0)), [](double v) { return std::exp(v); },
                     g, samples);
    check_univariate(c, "sqrt", sqrt_env(g.coin(0.3) ? Interval(0.0, g.uniform(0.0, 10.0))
                                                     : g.box(0.0, 10.0)),
                     [](double v) { return std::sqrt(v); }, g, samples);
    check_univariate(c, "reciprocal", reciprocal_env(g.box(0.05, 10.0)),
                     [](double v) { return 1.0 / v; }, g, samples);
    {
      const double f_min = g.uniform(-2.0, 2.0);
      const double sigma = g.uniform(0.01, 3.0);
      const Interval mu = g.box(-6.0, 6.0);
      check_univariate(c, "pi mu-facet", pi_mu_facet_env(sigma, mu, f_min),
                       [=](double v) { return oracle_cdf((f_min - v) / sigma); }, g, samples);
      const double mu0 = g.uniform(-4.0, 4.0);
      const Interval s = g.box(1e-3, 5.0);
      check_univariate(c, "pi sigma-facet", pi_sigma_facet_env(mu0, s, f_min),
                       [=](double v) { return oracle_cdf((f_min - mu0) / v); }, g, samples);
    }
  }
  return c;
}

// Bivariate EI/PI relaxations: validity, exact range and support planes.
inline Check fuzz_acquisition(std::uint64_t seed, int boxes, int samples) {
  Gen g(seed);
  Check c;
  for (int b = 0; b < boxes; ++b) {
    const double f_min = g.uniform(-2.0, 2.0);
    const Interval mu = g.box(-5.0, 5.0);
    const Interval sg = g.coin(0.15) ? Interval(0.0, g.uniform(0.0, 3.0)) : g.box(0.0, 3.0);
    for (int kind = 0; kind < 2; ++kind) {
      const bool ei = kind == 0;
      auto f = [&](double m, double s) {
        return ei ? ei_value(m, s, f_min) : pi_value(m, s, f_min);
      };
      const std::string tag = ei ? "ei" : "pi";
      for (int s = 0; s < samples; ++s) {
        const double m = g.in(mu), sv = g.in(sg);
        BivariateRelaxationResult r;
        r = ei ? ei_relax(mu, sg, m, sv, f_min) : pi_relax(mu, sg, m, sv, f_min);
        const double fx = f(m, sv);
        std::ostringstream w;
        w.precision(17);
        w << tag << " mu [" << mu.lo() << "," << mu.hi() << "] sigma [" << sg.lo() << ","
          << sg.hi() << "] f_min " << f_min << " at (" << m << "," << sv << ")";
        const double t = scaled_tol(kTol, fx);
        c.expect(r.cv <= fx + t, r.cv - fx, w.str() + " cv > f");
        c.expect(r.cc >= fx - t, fx - r.cc, w.str() + " cc < f");
        c.expect(r.range.lo() <= r.cv + t && r.cc <= r.range.hi() + t, 0.0,
                 w.str() + " relaxation outside range");
        c.expect(r.range.lo() <= fx + t && fx <= r.range.hi() + t, 0.0,
                 w.str() + " f outside range");
        if (s % 10 == 0) {
          for (int k = 0; k < 20; ++k) {
            const double qm = g.in(mu), qs = g.in(sg), fq = f(qm, qs);
            const double under = r.cv + r.cv_sub[0] * (qm - m) + r.cv_sub[1] * (qs - sv);
            const double over = r.cc + r.cc_sub[0] * (qm - m) + r.cc_sub[1] * (qs - sv);
            const double tq = scaled_tol(kTol, fq) * (1.0 + std::abs(qm - m) + std::abs(qs - sv));
            c.expect(under <= fq + tq, under - fq, w.str() + " cv support plane above f");
            c.expect(over >= fq - tq, fq - over, w.str() + " cc support plane below f");
          }
        }
      }
    }
  }
  return c;
}

// Composite expressions through the McCormick rules: validity of values and
// support planes over the box.
inline Check fuzz_mccormick(std::uint64_t seed, int boxes, int points) {
  Gen g(seed);
  Check c;
  using Fn = std::function<double(double, double)>;
  using Rel = std::function<Relaxation(const Relaxation&, const Relaxation&)>;
  struct Expr {
    std::string name;
    Fn f;
    Rel r;
    Interval xd, yd;
  };
  const std::vector<Expr> exprs = {
      {"x*y + exp(x) - y^2", [](double x, double y) { return x * y + std::exp(x) - y * y; },
       [](const Relaxation& x, const Relaxation& y) {
         return x * y + mc_compose(x, exp_env(x.range)) - mc_compose(y, sqr_env(y.range));
       },
       Interval(-2, 2), Interval(-2, 2)},
      {"k52(x^2 + 2 y^2)",
       [](double x, double y) { return oracle_kernel(KernelKind::matern52, x * x + 2 * y * y); },
       [](const Relaxation& x, const Relaxation& y) {
         const Relaxation d = mc_compose(x, sqr_env(x.range)) + 2.0 * mc_compose(y, sqr_env(y.range));
         return mc_compose(d, kernel_env(KernelKind::matern52, d.range));
       },
       Interval(-2, 2), Interval(-2, 2)},
      {"pdf(x - y) * y", [](double x, double y) { return oracle_pdf(x - y) * y; },
       [](const Relaxation& x, const Relaxation& y) {
         const Relaxation t = x - y;
         return mc_compose(t, pdf_env(t.range)) * y;
       },
       Interval(-3, 3), Interval(0.5, 2)},
      {"cdf(x / y)", [](double x, double y) { return oracle_cdf(x / y); },
       [](const Relaxation& x, const Relaxation& y) {
         const Relaxation t = x * mc_compose(y, reciprocal_env(y.range));
         return mc_compose(t, cdf_env(t.range));
       },
       Interval(-3, 3), Interval(0.2, 3)},
      {"sqrt(x^2 + y) - 3 x", [](double x, double y) { return std::sqrt(x * x + y) - 3 * x; },
       [](const Relaxation& x, const Relaxation& y) {
         const Relaxation t = mc_compose(x, sqr_env(x.range)) + y;
         return mc_compose(t, sqrt_env(t.range)) - 3.0 * x;
       },
       Interval(-2, 2), Interval(0, 4)},
  };
  for (int b = 0; b < boxes; ++b) {
    for (const Expr& e : exprs) {
      const Interval bx = g.box(e.xd.lo(), e.xd.hi()), by = g.box(e.yd.lo(), e.yd.hi());
      for (int p = 0; p < points; ++p) {
        const double x = g.in(bx), y = g.in(by);
        const Relaxation r = e.r(mc_variable(0, bx, x, 2), mc_variable(1, by, y, 2));
        const double fx = e.f(x, y);
        std::ostringstream w;
        w.precision(17);
        w << e.name << " box [" << bx.lo() << "," << bx.hi() << "]x[" << by.lo() << ","
          << by.hi() << "] at (" << x << "," << y << ")";
        const double t = scaled_tol(kTol, fx);
        c.expect(r.range.lo() <= r.cv + t && r.cv <= fx + t && fx <= r.cc + t &&
                     r.cc <= r.range.hi() + t,
                 0.0, w.str());
        if (p % 5 == 0) {
          for (int k = 0; k < 20; ++k) {
            const double qx = g.in(bx), qy = g.in(by), fq = e.f(qx, qy);
            const double under = r.cv + r.cv_sub[0] * (qx - x) + r.cv_sub[1] * (qy - y);
            const double over = r.cc + r.cc_sub[0] * (qx - x) + r.cc_sub[1] * (qy - y);
            const double tq = scaled_tol(kTol, fq) * (1.0 + std::abs(qx - x) + std::abs(qy - y));
            c.expect(under <= fq + tq, under - fq, w.str() + " cv plane");
            c.expect(over >= fq - tq, fq - over, w.str() + " cc plane");
          }
        }
      }
    }
  }
  return c;
}

// Posterior mean/variance relaxations of random GPs (D <= 3, N <= 30).
inline Check fuzz_gp(std::uint64_t seed, int models, int boxes, int points,
                     bool use_envelopes = true) {
  Gen g(seed);
  Check c;
  constexpr double tol = 1e-8;
  for (int mi = 0; mi < models; ++mi) {
    const int D = g.integer(1, 3), N = g.integer(1, 30);
    const auto m = random_model(g, D, N, random_kernel(g));
    for (int b = 0; b < boxes; ++b) {
      const std::vector<Interval> box = random_subbox(g, m->input_bounds);
      for (int p = 0; p < points; ++p) {
        const std::vector<double> x = random_point(g, box);
        const PosteriorRelaxation r = relax_posterior(*m, box, x, use_envelopes);
        const double mu = predict_mean(*m, x);
        const double var = predict_variance(*m, x);
        const double tm = scaled_tol(tol, mu), tv = scaled_tol(tol, var);
        std::ostringstream w;
        w << "model " << mi << " (D=" << D << ", N=" << N << ", nu=" << kernel_name(m->nu)
          << ") box " << b << " point " << p;
        c.expect(r.mean.cv <= mu + tm && mu <= r.mean.cc + tm, 0.0, w.str() + " mean");
        c.expect(r.mean.range.lo() <= mu + tm && mu <= r.mean.range.hi() + tm, 0.0,
                 w.str() + " mean range");
        c.expect(r.variance.cv <= var + tv && var <= r.variance.cc + tv, 0.0,
                 w.str() + " variance");
        c.expect(r.variance.range.lo() >= 0.0, -r.variance.range.lo(),
                 w.str() + " variance range below 0");
        if (p % 10 == 0) {
          for (int k = 0; k < 5; ++k) {
            const std::vector<double> q = random_point(g, box);
            const double fq = predict_mean(*m, q), vq = predict_variance(*m, q);
            double dm = r.mean.cv, dM = r.mean.cc, dv = r.variance.cv, dV = r.variance.cc;
            double dist = 0.0;
            for (int j = 0; j < D; ++j) {
              dm += r.mean.cv_sub[j] * (q[j] - x[j]);
              dM += r.mean.cc_sub[j] * (q[j] - x[j]);
              dv += r.variance.cv_sub[j] * (q[j] - x[j]);
              dV += r.variance.cc_sub[j] * (q[j] - x[j]);
              dist += std::abs(q[j] - x[j]);
            }
            const double s = 1.0 + dist;
            c.expect(dm <= fq + scaled_tol(tol, fq) * s, dm - fq, w.str() + " mean cv plane");
            c.expect(dM >= fq - scaled_tol(tol, fq) * s, fq - dM, w.str() + " mean cc plane");
            c.expect(dv <= vq + scaled_tol(tol, vq) * s, dv - vq, w.str() + " var cv plane");
            c.expect(dV >= vq - scaled_tol(tol, vq) * s, vq - dV, w.str() + " var cc plane");
          }
        }
      }
    }
  }
  return c;
}

// relax_box over RS acquisition, chance and FS mean problems: objective and
// constraint relaxations bracket the exact values at sampled points.
inline Check fuzz_problem(std::uint64_t seed, int problems, int boxes, int points) {
  Gen g(seed);
  Check c;
  constexpr double tol = 1e-8;
  for (int pi = 0; pi < problems; ++pi) {
    const int D = g.integer(1, 2), N = g.integer(2, 12);
    const auto m = random_model(g, D, N, random_kernel(g));
    const int kind = pi % 5;
    Problem p;
    std::string name;
    if (kind < 3) {
      AcquisitionSpec spec;
      spec.kind = kind == 0 ? AcquisitionKind::ei : kind == 1 ? AcquisitionKind::pi
                                                              : AcquisitionKind::lcb;
      spec.f_min = raw_outputs(*m).minCoeff() + g.uniform(-0.5, 0.5);
      spec.kappa = g.uniform(0.0, 3.0);
      p = build_acquisition(m, spec);
      name = acquisition_name(spec.kind);
    } else if (kind == 3) {
      const auto con = std::make_shared<const GPModel>(*random_model(g, D, N, m->nu));
      GPModel con2 = *con;
      con2.input_bounds = m->input_bounds;
      p = build_chance_constrained(m, std::make_shared<const GPModel>(con2), 3.0, 1.96);
      name = "chance";
    } else {
      p = build_fs_mean(m);
      name = "fs";
    }
    for (int b = 0; b < boxes; ++b) {
      std::vector<Interval> box = p.box;
      const std::vector<Interval> sub = random_subbox(g, m->input_bounds);
      for (int j = 0; j < D; ++j) box[j] = sub[j];
      if (!propagate_bounds(p, box, true)) {
        c.expect(false, 0.0, name + ": propagation reported an empty box");
        continue;
      }
      for (int k = 0; k < points; ++k) {
        std::vector<double> x = midpoint_of(box);
        for (int j = 0; j < D; ++j) x[j] = g.in(box[j]);
        x = complete_point(p, x);
        for (int j = 0; j < p.n_vars; ++j) x[j] = box[j].clamp(x[j]);
        const EvalResult e = eval_point(p, x);
        const RelaxResult r = relax_box(p, box, x, true);
        std::ostringstream w;
        w << name << " problem " << pi << " box " << b << " point " << k;
        const double t = scaled_tol(tol, e.objective);
        c.expect(r.objective.cv <= e.objective + t && e.objective <= r.objective.cc + t,
                 0.0, w.str() + " objective");
        for (std::size_t i = 0; i < e.inequalities.size(); ++i) {
          const double v = e.inequalities[i], ti = scaled_tol(tol, v);
          c.expect(r.inequalities[i].cv <= v + ti && v <= r.inequalities[i].cc + ti, 0.0,
                   w.str() + " inequality");
        }
        for (std::size_t i = 0; i < e.equalities.size(); ++i) {
          const double v = e.equalities[i], ti = 1e-7;
          c.expect(r.equalities[i].cv <= v + ti && v <= r.equalities[i].cc + ti, 0.0,
                   w.str() + " equality " + std::to_string(i));
        }
      }
    }
  }
  return c;
}

// Finite-difference check of envelope slopes at smooth interior points. A
// point counts as smooth on one side when the forward and backward
// differences agree; kinks are skipped. Returns the checks performed.
struct SlopeCheck {
  Check check;
  long smooth = 0;
};

inline void fd_slope(SlopeCheck& out, const std::string& tag,
                     const std::function<double(double)>& f, double x, double slope) {
  const double h = 1e-6;
  const double f0 = f(x);
  const double fwd = (f(x + h) - f0) / h;
  const double bwd = (f0 - f(x - h)) / h;
  if (std::abs(fwd - bwd) > 1e-3 * (1.0 + std::abs(fwd))) return;
  ++out.smooth;
  const double fd = (f(x + h) - f(x - h)) / (2.0 * h);
  const double tol = 1e-4 * std::max(std::abs(fd), std::abs(slope)) + 1e-7;
  std::ostringstream w;
  w.precision(17);
  w << tag << " at " << x << ": fd " << fd << " vs slope " << slope;
  out.check.expect(std::abs(fd - slope) <= tol, std::abs(fd - slope), w.str());
}

inline SlopeCheck fd_subgradients(std::uint64_t seed, int points) {
  Gen g(seed);
  SlopeCheck out;
  auto interior = [&](const Interval& b) {
    const double m = 1e-5 * b.width();
    return g.uniform(b.lo() + m, b.hi() - m);
  };
  auto wide = [&](double lo, double hi) {
    for (;;) {
      const double a = g.uniform(lo, hi), b = g.uniform(lo, hi);
      if (std::abs(a - b) > 1e-2 * (hi - lo)) return Interval(std::min(a, b), std::max(a, b));
    }
  };
  auto univariate = [&](const std::string& tag, const UnivariateEnvelope& e) {
    const double x = interior(e.box());
    fd_slope(out, tag + " cv", [&](double q) { return e.cv(q).value; }, x, e.cv(x).slope);
    fd_slope(out, tag + " cc", [&](double q) { return e.cc(q).value; }, x, e.cc(x).slope);
  };
  const KernelKind kinds[] = {KernelKind::matern12, KernelKind::matern32,
                              KernelKind::matern52, KernelKind::squared_exponential};
  for (int i = 0; i < points; ++i) {
    switch (i % 13) {
      case 0: case 1: case 2: case 3: {
        const KernelKind nu = kinds[i % 13];
        univariate("kernel " + kernel_name(nu), kernel_env(nu, wide(0.0, 20.0)));
        break;
      }
      case 4: univariate("pdf", pdf_env(wide(-6.0, 6.0))); break;
      case 5: univariate("cdf", cdf_env(wide(-6.0, 6.0))); break;
      case 6: univariate("erf", erf_env(wide(-4.0, 4.0))); break;
      case 7: {
        univariate("sqr", sqr_env(wide(-5.0, 5.0)));
        univariate("exp", exp_env(wide(-5.0, 5.0)));
        univariate("sqrt", sqrt_env(wide(0.0, 10.0)));
        univariate("reciprocal", reciprocal_env(wide(0.05, 10.0)));
        break;
      }
      case 8: {
        const double f_min = g.uniform(-2.0, 2.0);
        univariate("pi mu-facet", pi_mu_facet_env(g.uniform(0.05, 3.0), wide(-6.0, 6.0), f_min));
        univariate("pi sigma-facet",
                   pi_sigma_facet_env(g.uniform(-4.0, 4.0), wide(1e-2, 5.0), f_min));
        break;
      }
      case 9: case 10: {
        const bool ei = i % 13 == 9;
        const double f_min = g.uniform(-2.0, 2.0);
        const Interval mu = wide(-5.0, 5.0), sg = wide(0.0, 3.0);
        const double m = interior(mu), sv = interior(sg);
        auto rel = [&](double a, double b) {
          return ei ? ei_relax(mu, sg, a, b, f_min) : pi_relax(mu, sg, a, b, f_min);
        };
        const BivariateRelaxationResult r = rel(m, sv);
        const std::string tag = ei ? "ei" : "pi";
        fd_slope(out, tag + " cv d/dmu", [&](double q) { return rel(q, sv).cv; }, m, r.cv_sub[0]);
        fd_slope(out, tag + " cv d/dsigma", [&](double q) { return rel(m, q).cv; }, sv, r.cv_sub[1]);
        fd_slope(out, tag + " cc d/dmu", [&](double q) { return rel(q, sv).cc; }, m, r.cc_sub[0]);
        fd_slope(out, tag + " cc d/dsigma", [&](double q) { return rel(m, q).cc; }, sv, r.cc_sub[1]);
        break;
      }
      default: {
        // Kernel of a squared distance, composed through two envelopes.
        const KernelKind nu = kinds[g.integer(0, 3)];
        const Interval bx = wide(-3.0, 3.0);
        const double x = interior(bx);
        auto rel = [&](double q) {
          const Relaxation v = mc_variable(0, bx, q, 1);
          const Relaxation d = mc_compose(v, sqr_env(bx));
          return mc_compose(d, kernel_env(nu, d.range));
        };
        const Relaxation r = rel(x);
        fd_slope(out, "k(x^2) cv", [&](double q) { return rel(q).cv; }, x, r.cv_sub[0]);
        fd_slope(out, "k(x^2) cc", [&](double q) { return rel(q).cc; }, x, r.cc_sub[0]);
      }
    }
  }
  return out;
}

// Smallest eigenvalue of the finite-difference Hessian of EI in (mu, sigma),
// central differences with one Richardson step.
inline double ei_min_hessian_eigenvalue(double mu, double sigma, double f_min) {
  auto f = [&](double a, double b) { return ei_value(a, b, f_min); };
  auto hessian = [&](double h, double& haa, double& hbb, double& hab) {
    const double f0 = f(mu, sigma);
    haa = (f(mu + h, sigma) - 2.0 * f0 + f(mu - h, sigma)) / (h * h);
    hbb = (f(mu, sigma + h) - 2.0 * f0 + f(mu, sigma - h)) / (h * h);
    hab = (f(mu + h, sigma + h) - f(mu + h, sigma - h) - f(mu - h, sigma + h) +
           f(mu - h, sigma - h)) /
          (4.0 * h * h);
  };
  const double h = 1e-2 * sigma;
  double a1, b1, c1, a2, b2, c2;
  hessian(h, a1, b1, c1);
  hessian(2.0 * h, a2, b2, c2);
  const double haa = (4.0 * a1 - a2) / 3.0, hbb = (4.0 * b1 - b2) / 3.0,
               hab = (4.0 * c1 - c2) / 3.0;
  const double tr = haa + hbb, det = haa * hbb - hab * hab;
  return 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
}

inline Check ei_convexity(std::uint64_t seed, int points) {
  Gen g(seed);
  Check c;
  for (int i = 0; i < points; ++i) {
    const double f_min = g.uniform(-2.0, 2.0);
    const double mu = g.uniform(-5.0, 5.0), sigma = g.uniform(0.05, 3.0);
    const double e = ei_min_hessian_eigenvalue(mu, sigma, f_min);
    std::ostringstream w;
    w << "EI Hessian eigenvalue " << e << " at (" << mu << "," << sigma << ") f_min " << f_min;
    c.expect(e >= -1e-6, -e, w.str());
  }
  return c;
}

// f~ <= PI on boxes where f_min lies inside the mu range.
inline Check f_tilde_lemma(std::uint64_t seed, int boxes, int points) {
  Gen g(seed);
  Check c;
  for (int b = 0; b < boxes; ++b) {
    const double f_min = g.uniform(-2.0, 2.0);
    const Interval mu(f_min - g.uniform(1e-3, 4.0), f_min + g.uniform(1e-3, 4.0));
    const double s0 = g.uniform(0.0, 2.0);
    const Interval sg(s0, s0 + g.uniform(1e-3, 3.0));
    for (int i = 0; i < points; ++i) {
      const double m = g.in(mu), s = g.in(sg);
      const double ft = pi_f_tilde(m, mu, sg, f_min), pv = pi_value(m, s, f_min);
      const double gt = pi_g_tilde(m, mu, sg, f_min);
      std::ostringstream w;
      w.precision(17);
      w << "mu [" << mu.lo() << "," << mu.hi() << "] sigma [" << sg.lo() << "," << sg.hi()
        << "] at (" << m << "," << s << ")";
      c.expect(ft <= pv + kTol, ft - pv, w.str() + " f~ > PI");
      c.expect(gt >= pv - kTol, pv - gt, w.str() + " g~ < PI");
    }
  }
  return c;
}

// Synthetic MAP recovery: D = 1, N = 40 LHS inputs on [0, 1], outputs drawn
// from a nu = 5/2 GP with lambda = 2, sigma_f = 1, sigma_n = 0.1. Errors are
// in log space against the generating values after output standardization.
struct Recovery {
  TrainResult result;
  std::array<double, 3> error{};
  bool ok = false;
};

inline Recovery recovery_example(std::uint64_t seed) {
  const std::vector<Interval> b{Interval(0, 1)};
  const int N = 40;
  const Eigen::MatrixXd X = lhs_sample(1, N, b, seed);
  const std::vector<double> th{std::log(2.0), 0.0, std::log(0.1)};
  const Eigen::MatrixXd K = covariance_matrix(KernelKind::matern52, th, X);
  const Eigen::LLT<Eigen::MatrixXd> llt(K);
  std::mt19937_64 rng(100 + seed);
  std::normal_distribution<double> n01;
  Eigen::VectorXd z(N);
  for (int i = 0; i < N; ++i) z[i] = n01(rng);
  const Eigen::VectorXd y = llt.matrixL() * z;
  const double m = y.mean();
  const double sd = std::sqrt((y.array() - m).square().mean());
  TrainOptions opt;
  opt.restarts = 10;
  opt.seed = seed;
  Recovery out{map_train(X, y, b, KernelKind::matern52, PriorSpec::defaults(1), opt), {}, false};
  const auto& lt = out.result.model.log_theta;
  out.error = {lt[0] - std::log(2.0), lt[1] - std::log(1.0 / sd), lt[2] - std::log(0.1 / sd)};
  out.ok = std::abs(out.error[0]) <= 0.5 && std::abs(out.error[1]) <= 0.5 &&
           std::abs(out.error[2]) <= 0.5;
  return out;
}

}  // namespace gpopt::testing
