#pragma once

#include <array>
#include <string>

#include "gpopt/envelopes.hpp"

namespace gpopt {

enum class AcquisitionKind { ei, pi, lcb };

/// Acquisition function settings. f_min is the incumbent for EI and PI,
/// kappa the exploration weight for LCB (mu - kappa * sigma).
struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::ei;
  double f_min = 0.0;
  double kappa = 2.0;

  void validate() const;
};

std::string acquisition_name(AcquisitionKind kind);
AcquisitionKind parse_acquisition(const std::string& name);

/// Which construction produced a probability-of-improvement relaxation.
enum class PiRegime {
  mccormick_i1i2,  ///< |mu - f_min| <= sqrt(2) sigma on the whole box
  componentwise,   ///< vertex-polyhedral side plus monotone facets
  facet_monotone,  ///< mu box entirely on one side of f_min
  general,         ///< f_min strictly inside the mu box
  constant,        ///< sigma box is [0, 0]
};

/// Relaxation of a bivariate function of (mu, sigma) at one point, with
/// gradients in (mu, sigma).
struct BivariateRelaxationResult {
  double cv = 0.0;
  double cc = 0.0;
  std::array<double, 2> cv_sub{};
  std::array<double, 2> cc_sub{};
  Interval range;
  PiRegime regime = PiRegime::mccormick_i1i2;
};

/// Expected improvement (f_min - mu) Phi(z) + sigma phi(z), z = (f_min - mu) /
/// sigma; max(f_min - mu, 0) at sigma = 0.
double ei_value(double mu, double sigma, double f_min);
/// (dEI/dmu, dEI/dsigma). At sigma = 0 the one-sided limits are used.
std::array<double, 2> ei_gradient(double mu, double sigma, double f_min);

/// Probability of improvement Phi((f_min - mu) / sigma); at sigma = 0 it is 1
/// for mu < f_min and 0 otherwise.
double pi_value(double mu, double sigma, double f_min);

/// Relaxations over a (mu, sigma) box, evaluated at (mu, sigma).
BivariateRelaxationResult ei_relax(const Interval& mu_box,
                                   const Interval& sigma_box, double mu,
                                   double sigma, double f_min);
BivariateRelaxationResult pi_relax(const Interval& mu_box,
                                   const Interval& sigma_box, double mu,
                                   double sigma, double f_min);

/// Compositions with relaxations of mu(x) and sigma(x).
Relaxation ei_compose(const Relaxation& mu, const Relaxation& sigma,
                      double f_min);
Relaxation pi_compose(const Relaxation& mu, const Relaxation& sigma,
                      double f_min);
/// mu - kappa * sigma.
Relaxation lcb_relax(const Relaxation& mu, const Relaxation& sigma,
                     double kappa);

/// Compositions without the dedicated bivariate constructions: plain
/// McCormick arithmetic on the defining formulas.
Relaxation ei_generic(const Relaxation& mu, const Relaxation& sigma,
                      double f_min);
Relaxation pi_generic(const Relaxation& mu, const Relaxation& sigma,
                      double f_min);

/// Exact image of the mu/sigma box under EI and PI.
Interval ei_range(const Interval& mu_box, const Interval& sigma_box,
                  double f_min);
Interval pi_range(const Interval& mu_box, const Interval& sigma_box,
                  double f_min);

/// Univariate facets PI(., sigma) on a mu box and PI(mu, .) on a sigma box.
SegmentEnvelope pi_mu_facet_env(double sigma, const Interval& mu_box,
                                double f_min);
SegmentEnvelope pi_sigma_facet_env(double mu, const Interval& sigma_box,
                                   double f_min);

/// Auxiliary function for the convex side when f_min lies inside the mu box:
/// linear from (mu_lo, PI(mu_lo, sigma_hi)) to (f_min, PI(f_min, sigma_lo)),
/// then PI(mu, sigma_lo). Its convex envelope underestimates PI on the box.
double pi_f_tilde(double mu, const Interval& mu_box, const Interval& sigma_box,
                  double f_min);
/// Counterpart for the concave side: PI(mu, sigma_lo) left of f_min, then
/// linear from (f_min, 1/2) to (mu_hi, PI(mu_hi, sigma_hi)).
double pi_g_tilde(double mu, const Interval& mu_box, const Interval& sigma_box,
                  double f_min);
SegmentEnvelope pi_f_tilde_env(const Interval& mu_box,
                               const Interval& sigma_box, double f_min);
SegmentEnvelope pi_g_tilde_env(const Interval& mu_box,
                               const Interval& sigma_box, double f_min);

/// Which regime pi_compose() uses for the given boxes.
PiRegime pi_regime(const Interval& mu_box, const Interval& sigma_box,
                   double f_min);

}  // namespace gpopt
