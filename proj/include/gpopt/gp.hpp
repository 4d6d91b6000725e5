#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpopt/envelopes.hpp"

namespace gpopt {

/// Hyperparameters at or below this log value mean exactly zero noise.
inline constexpr double kNoiselessLogSigmaN = -50.0;

/// Trained Gaussian process with scaled inputs ([0,1]^D) and standardized
/// outputs. Immutable after build_model()/load.
struct GPModel {
  KernelKind nu = KernelKind::matern52;
  int D = 0;
  int N = 0;
  /// [log lambda_1..log lambda_D, log sigma_f, log sigma_n]
  std::vector<double> log_theta;
  Eigen::MatrixXd X_scaled;  ///< N x D
  Eigen::VectorXd y_scaled;
  Eigen::MatrixXd L;         ///< lower Cholesky factor of K + sigma_n^2 I
  Eigen::VectorXd alpha;     ///< (K + sigma_n^2 I)^{-1} y_scaled
  std::vector<Interval> input_bounds;
  double output_mean = 0.0;
  double output_std = 1.0;

  /// L^{-1}, derived from L.
  Eigen::MatrixXd L_inv;

  double lambda2(int j) const;
  double sigma_f2() const;
  double sigma_n2() const;

  /// Raw input to [0,1] coordinates.
  double scale_input(int j, double x) const;
};

/// Weighted squared distance between scaled points.
double weighted_sq_distance(const GPModel& m, const double* xs,
                            const double* x_train);

/// K(X, X) + sigma_n^2 I for scaled inputs.
Eigen::MatrixXd covariance_matrix(KernelKind nu, const std::vector<double>& log_theta,
                                  const Eigen::MatrixXd& X_scaled);

/// Fits the posterior for fixed hyperparameters. X_raw is N x D in raw units.
GPModel build_model(KernelKind nu, const std::vector<double>& log_theta,
                    const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
                    const std::vector<Interval>& input_bounds);

/// Completes L_inv from L and checks consistency of the stored fields.
void finalize_model(GPModel& m);

/// Posterior mean at a raw input, in output units.
double predict_mean(const GPModel& m, const std::vector<double>& x);
/// Posterior variance at a raw input, in output units squared, clamped at 0.
double predict_variance(const GPModel& m, const std::vector<double>& x);
/// Variance before clamping, in scaled units.
double predict_variance_scaled_raw(const GPModel& m, const std::vector<double>& x);

/// Relaxations of posterior mean and variance composed with relaxations of
/// the raw inputs.
struct PosteriorRelaxation {
  Relaxation mean;
  Relaxation variance;
};

/// inputs[j] relaxes raw input j. If want_variance is false the variance
/// field is left empty. use_envelopes selects the dedicated kernel envelope
/// over plain McCormick arithmetic.
PosteriorRelaxation relax_posterior_inputs(const GPModel& m,
                                           const std::vector<const Relaxation*>& inputs,
                                           bool want_variance,
                                           bool use_envelopes = true);

/// Relaxations over a raw-input box at a point, with the inputs as the
/// independent variables.
PosteriorRelaxation relax_posterior(const GPModel& m,
                                    const std::vector<Interval>& box,
                                    const std::vector<double>& point,
                                    bool use_envelopes = true);

/// JSON model document.
std::string model_to_json(const GPModel& m);
GPModel model_from_json(const std::string& text);
void save_model(const GPModel& m, const std::string& path);
GPModel load_model(const std::string& path);

}  // namespace gpopt
