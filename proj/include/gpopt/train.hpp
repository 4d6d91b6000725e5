#pragma once

#include <cstdint>
#include <vector>

#include "gpopt/gp.hpp"

namespace gpopt {

/// Independent Gaussian priors on the log-hyperparameters
/// [log lambda_1..log lambda_D, log sigma_f, log sigma_n].
struct PriorSpec {
  std::vector<double> mean;
  std::vector<double> var;

  /// mean 0 and variance 4 on length-scales and sigma_f; mean log(1e-2)
  /// and variance 1 on sigma_n.
  static PriorSpec defaults(int D);
  void validate(int D) const;
};

struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Value returned for hyperparameters whose covariance matrix is not PD.
inline constexpr double kNonPdPenalty = 1e10;

/// Negative log marginal likelihood plus negative log prior, with its
/// analytic gradient, on scaled data.
ObjectiveValue neg_log_posterior(const std::vector<double>& log_theta,
                                 const Eigen::MatrixXd& X_scaled,
                                 const Eigen::VectorXd& y_scaled, KernelKind nu,
                                 const PriorSpec& prior);

struct TrainOptions {
  int restarts = 10;
  std::uint64_t seed = 0;
  int max_iters = 200;
  double grad_tol = 1e-6;
  double armijo_c = 1e-4;
  double shrink = 0.5;
};

struct TrainResult {
  GPModel model;
  double objective = 0.0;
  /// Objective at each start point, for diagnostics.
  std::vector<double> start_objectives;
};

/// Descent with Armijo backtracking from `start` along BFGS directions;
/// returns the final point and writes its objective to `value`.
std::vector<double> descend(const std::vector<double>& start,
                            const Eigen::MatrixXd& X_scaled,
                            const Eigen::VectorXd& y_scaled, KernelKind nu,
                            const PriorSpec& prior, const TrainOptions& opt,
                            double& value);

/// Maximum a posteriori hyperparameters by multistart descent from
/// prior samples, then build_model() at the best point.
TrainResult map_train(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
                      const std::vector<Interval>& input_bounds, KernelKind nu,
                      const PriorSpec& prior, const TrainOptions& opt);

/// Latin hypercube design with stratum midpoints: n x D.
Eigen::MatrixXd lhs_sample(int D, int n, const std::vector<Interval>& bounds,
                           std::uint64_t seed);

/// Inputs scaled to [0,1] and outputs standardized exactly as build_model()
/// does.
void scale_training_data(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
                         const std::vector<Interval>& input_bounds,
                         Eigen::MatrixXd& X_scaled, Eigen::VectorXd& y_scaled);

}  // namespace gpopt
