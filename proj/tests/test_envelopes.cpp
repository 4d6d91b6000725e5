#include <doctest.h>

#include "support.hpp"

using namespace gpopt;
using namespace gpopt::testing;

TEST_CASE("kernel values") {
  CHECK(kernel_value(KernelKind::squared_exponential, 0.0) == 1.0);
  CHECK(kernel_value(KernelKind::matern12, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  for (KernelKind nu : {KernelKind::matern12, KernelKind::matern32, KernelKind::matern52,
                        KernelKind::squared_exponential}) {
    CHECK(kernel_value(nu, 0.0) == 1.0);
    for (double d : {0.01, 0.3, 1.0, 4.0, 25.0})
      CHECK(kernel_value(nu, d) == doctest::Approx(oracle_kernel(nu, d)).epsilon(1e-14));
    CHECK(parse_kernel(kernel_name(nu)) == nu);
  }
  CHECK_THROWS_AS(parse_kernel("7/2"), DomainError);
}

TEST_CASE("kernel envelope on [0, 4]") {
  const SegmentEnvelope e = kernel_env(KernelKind::squared_exponential, Interval(0, 4));
  const double expected = 0.5 * (1.0 + std::exp(-2.0));
  CHECK(e.cc(2.0).value == doctest::Approx(expected).epsilon(1e-15));
  CHECK(e.cc(2.0).value >= std::exp(-1.0));
  CHECK(e.cv(2.0).value == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(e.exact_range().lo() == doctest::Approx(std::exp(-2.0)));
  CHECK(e.exact_range().hi() == 1.0);
  CHECK(e.argmin_of_cv() == 4.0);
  CHECK_THROWS_AS(kernel_env(KernelKind::matern32, Interval(-1, 1)), DomainError);
}

TEST_CASE("kernel envelope of matern12 touching zero has finite slopes") {
  // The slope is unbounded at 0; the constant lower bound stands in.
  const SegmentEnvelope e = kernel_env(KernelKind::matern12, Interval(0, 2));
  const Linearization l = e.cv(0.0);
  CHECK(l.value == doctest::Approx(std::exp(-std::sqrt(2.0))));
  CHECK(l.slope == 0.0);
  CHECK(e.cv(0.5).value == doctest::Approx(std::exp(-std::sqrt(0.5))));
  // The slope at 0 must still give a valid support line.
  for (double q : {1e-8, 1e-4, 0.1, 1.0, 2.0})
    CHECK(l.value + l.slope * q <= std::exp(-std::sqrt(q)) + 1e-12);
}

TEST_CASE("secant") {
  const Interval b(1, 3);
  CHECK(secant(2.0, 6.0, b, 1.0) == 2.0);
  CHECK(secant(2.0, 6.0, b, 3.0) == 6.0);
  CHECK(secant(2.0, 6.0, b, 2.0) == 4.0);
  CHECK(secant(2.0, 6.0, Interval(1, 1), 1.0) == 2.0);
}

TEST_CASE("newton_1d") {
  const double r = newton_1d([](double x) { return x * x - 2.0; }, [](double x) { return 2.0 * x; },
                             Interval(1, 2), 1.5);
  CHECK(r == doctest::Approx(1.41421356).epsilon(1e-8));

  int calls = 0;
  const double a = newton_1d(
      [&](double x) {
        ++calls;
        return 3.0 * x - 1.5;
      },
      [](double) { return 3.0; }, Interval(0, 2), 1.9);
  CHECK(a == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(calls <= 3);

  // Newton on atan diverges from a start beyond ~1.39.
  auto g = [](double x) { return std::atan(x - 0.25); };
  auto dg = [](double x) { return 1.0 / (1.0 + (x - 0.25) * (x - 0.25)); };
  const Interval bracket(-1, 3);
  const double f = newton_1d(g, dg, bracket, 2.9);
  double lo = bracket.lo(), hi = bracket.hi();
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (g(m) < 0 ? lo : hi) = m;
  }
  CHECK(bracket.contains(f));
  CHECK(f == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-6));

  CHECK_THROWS_AS(newton_1d([](double x) { return x * x + 1.0; }, [](double x) { return 2.0 * x; },
                            Interval(-1, 1), 0.5),
                  RootFindError);
}

TEST_CASE("normal density envelopes") {
  CHECK(normal_pdf(0.0) == doctest::Approx(0.398942).epsilon(1e-6));
  const SegmentEnvelope inner = pdf_env(Interval(-1, 1));
  for (double x : {-1.0, -0.4, 0.0, 0.7, 1.0}) {
    CHECK(inner.cc(x).value == doctest::Approx(normal_pdf(x)).epsilon(1e-14));
    CHECK(inner.cv(x).value == doctest::Approx(normal_pdf(1.0)).epsilon(1e-14));
  }
  const SegmentEnvelope outer = pdf_env(Interval(1, 3));
  for (double x : {1.0, 1.5, 2.2, 3.0}) {
    CHECK(outer.cv(x).value == doctest::Approx(normal_pdf(x)).epsilon(1e-14));
    CHECK(outer.cc(x).value ==
          doctest::Approx(secant(normal_pdf(1.0), normal_pdf(3.0), Interval(1, 3), x)).epsilon(1e-14));
  }
  // Symmetric mixed box: both tangents meet the curve symmetrically.
  const SegmentEnvelope sym = pdf_env(Interval(-3, 3));
  CHECK(sym.cv(-0.5).value == doctest::Approx(sym.cv(0.5).value).epsilon(1e-12));
  CHECK(sym.cv(0.0).value <= normal_pdf(0.0));
  CHECK(sym.exact_range().hi() == doctest::Approx(normal_pdf(0.0)));
}

TEST_CASE("normal distribution envelopes") {
  CHECK(normal_cdf(0.0) == 0.5);
  const AffineEnvelope left = cdf_env(Interval(-2, -0.5));
  for (double x : {-2.0, -1.3, -0.5}) {
    CHECK(left.cv(x).value == doctest::Approx(oracle_cdf(x)).epsilon(1e-14));
    CHECK(left.cc(x).value ==
          doctest::Approx(secant(oracle_cdf(-2), oracle_cdf(-0.5), Interval(-2, -0.5), x))
              .epsilon(1e-14));
  }
  const AffineEnvelope mixed = cdf_env(Interval(-1, 1));
  CHECK(mixed.cv(1.0).value == doctest::Approx(oracle_cdf(1.0)).epsilon(1e-13));
  CHECK(mixed.cc(-1.0).value == doctest::Approx(oracle_cdf(-1.0)).epsilon(1e-13));
  CHECK(mixed.cv(0.0).value < 0.5);
  CHECK(mixed.cc(0.0).value > 0.5);
  CHECK(mixed.exact_range().lo() == doctest::Approx(oracle_cdf(-1.0)));
}

TEST_CASE("erf envelopes on one-sided boxes") {
  const SegmentEnvelope neg = erf_env(Interval(-3, -1));
  CHECK(neg.cv(-2.0).value == doctest::Approx(std::erf(-2.0)).epsilon(1e-14));
  const SegmentEnvelope pos = erf_env(Interval(1, 3));
  CHECK(pos.cc(2.0).value == doctest::Approx(std::erf(2.0)).epsilon(1e-14));
}

TEST_CASE("elementary envelopes") {
  const SegmentEnvelope s = sqr_env(Interval(-1, 2));
  CHECK(s.exact_range() == Interval(0, 4));
  CHECK(s.cv(0.5).value == 0.25);
  CHECK(s.cc(0.5).value == doctest::Approx(2.5));
  const SegmentEnvelope r = sqrt_env(Interval(0, 4));
  CHECK(r.cv(1.0).value == doctest::Approx(0.5));
  CHECK(r.cc(1.0).value == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::isfinite(r.cc(0.0).slope));
  CHECK_THROWS_AS(reciprocal_env(Interval(-1, 1)), DomainError);
}

TEST_CASE("univariate envelopes: validity, exact range, convexity, support lines") {
  const Check c = fuzz_univariate_envelopes(11, 40, 40);
  INFO(c.summary());
  CHECK(c.ok());
}

TEST_CASE("generic kernel and density relaxations are valid but not tighter") {
  Gen g(3);
  for (int t = 0; t < 300; ++t) {
    const Interval b = g.box(0.0, 9.0);
    const double p = g.in(b);
    const Relaxation d = mc_variable(0, b, p, 1);
    const KernelKind nu = random_kernel(g);
    const Relaxation gen = kernel_generic(nu, d);
    const Relaxation env = mc_compose(d, kernel_env(nu, b));
    const double k = oracle_kernel(nu, p);
    CHECK(gen.cv <= k + 1e-9);
    CHECK(gen.cc >= k - 1e-9);
    CHECK(gen.cv <= env.cv + 1e-9);
    CHECK(gen.cc >= env.cc - 1e-9);

    const Interval xb = g.box(-4.0, 4.0);
    const double xp = g.in(xb);
    const Relaxation x = mc_variable(0, xb, xp, 1);
    const Relaxation pg = pdf_generic(x);
    CHECK(pg.cv <= oracle_pdf(xp) + 1e-9);
    CHECK(pg.cc >= oracle_pdf(xp) - 1e-9);
  }
}
