#include "gpopt/train.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace gpopt {

PriorSpec PriorSpec::defaults(int D) {
  PriorSpec p;
  p.mean.assign(D + 2, 0.0);
  p.var.assign(D + 2, 4.0);
  p.mean[D + 1] = std::log(1e-2);
  p.var[D + 1] = 1.0;
  return p;
}

void PriorSpec::validate(int D) const {
  if (static_cast<int>(mean.size()) != D + 2 ||
      static_cast<int>(var.size()) != D + 2) {
    throw DomainError("prior must have D + 2 entries");
  }
  for (double v : var) {
    if (!(v > 0.0)) throw DomainError("prior variances must be positive");
  }
}

void scale_training_data(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
                         const std::vector<Interval>& input_bounds,
                         Eigen::MatrixXd& X_scaled, Eigen::VectorXd& y_scaled) {
  const Eigen::Index N = X_raw.rows(), D = X_raw.cols();
  X_scaled.resize(N, D);
  for (Eigen::Index j = 0; j < D; ++j) {
    const Interval& b = input_bounds[j];
    X_scaled.col(j) = (X_raw.col(j).array() - b.lo()) / b.width();
  }
  const double mean = y_raw.mean();
  const double var = (y_raw.array() - mean).square().mean();
  const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
  y_scaled = (y_raw.array() - mean) / sd;
}

ObjectiveValue neg_log_posterior(const std::vector<double>& log_theta,
                                 const Eigen::MatrixXd& X_scaled,
                                 const Eigen::VectorXd& y_scaled, KernelKind nu,
                                 const PriorSpec& prior) {
  const Eigen::Index N = X_scaled.rows(), D = X_scaled.cols();
  const std::size_t P = log_theta.size();
  ObjectiveValue out;
  out.gradient.assign(P, 0.0);

  double prior_term = 0.0;
  std::vector<double> prior_grad(P);
  for (std::size_t k = 0; k < P; ++k) {
    const double r = log_theta[k] - prior.mean[k];
    prior_term += r * r / (2.0 * prior.var[k]) +
                  0.5 * std::log(2.0 * std::numbers::pi * prior.var[k]);
    prior_grad[k] = r / prior.var[k];
  }

  const Eigen::MatrixXd K = covariance_matrix(nu, log_theta, X_scaled);
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  bool pd = llt.info() == Eigen::Success;
  if (pd) {
    const Eigen::MatrixXd& LL = llt.matrixLLT();
    for (Eigen::Index i = 0; i < N; ++i) {
      if (!(LL(i, i) > 0.0) || !std::isfinite(LL(i, i))) pd = false;
    }
  }
  if (!pd) {
    out.value = kNonPdPenalty;
    return out;
  }

  const Eigen::VectorXd alpha = llt.solve(y_scaled);
  const Eigen::MatrixXd Kinv = llt.solve(Eigen::MatrixXd::Identity(N, N));
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) logdet += std::log(llt.matrixLLT()(i, i));
  out.value = 0.5 * y_scaled.dot(alpha) + logdet +
              0.5 * static_cast<double>(N) * std::log(2.0 * std::numbers::pi) +
              prior_term;

  // d/dtheta_k = -1/2 tr((alpha alpha^T - K^{-1}) dK/dtheta_k).
  const Eigen::MatrixXd W = alpha * alpha.transpose() - Kinv;
  const double sf2 = std::exp(2.0 * log_theta[D]);
  const double ln = log_theta[D + 1];
  const double sn2 = ln <= kNoiselessLogSigmaN ? 0.0 : std::exp(2.0 * ln);
  std::vector<double> lam2(D);
  for (Eigen::Index j = 0; j < D; ++j) lam2[j] = std::exp(2.0 * log_theta[j]);

  std::vector<double> acc(D + 1, 0.0);
  std::vector<double> diff2(D);
  for (Eigen::Index a = 0; a < N; ++a) {
    acc[D] += W(a, a) * 2.0 * sf2;
    for (Eigen::Index b = 0; b < a; ++b) {
      double d = 0.0;
      for (Eigen::Index j = 0; j < D; ++j) {
        const double t = X_scaled(a, j) - X_scaled(b, j);
        diff2[j] = t * t;
        d += lam2[j] * diff2[j];
      }
      const double w = 2.0 * W(a, b);  // symmetric pair
      acc[D] += w * 2.0 * sf2 * kernel_value(nu, d);
      if (d == 0.0) continue;
      const double dk = sf2 * kernel_derivative(nu, d);
      for (Eigen::Index j = 0; j < D; ++j) {
        acc[j] += w * dk * 2.0 * lam2[j] * diff2[j];
      }
    }
  }
  for (Eigen::Index k = 0; k <= D; ++k) out.gradient[k] = -0.5 * acc[k];
  out.gradient[D + 1] = -0.5 * W.trace() * 2.0 * sn2;
  for (std::size_t k = 0; k < P; ++k) out.gradient[k] += prior_grad[k];
  return out;
}

std::vector<double> descend(const std::vector<double>& start,
                            const Eigen::MatrixXd& X_scaled,
                            const Eigen::VectorXd& y_scaled, KernelKind nu,
                            const PriorSpec& prior, const TrainOptions& opt,
                            double& value) {
  const Eigen::Index P = static_cast<Eigen::Index>(start.size());
  auto eval = [&](const Eigen::VectorXd& t, Eigen::VectorXd& grad) {
    const std::vector<double> tv(t.data(), t.data() + P);
    ObjectiveValue o = neg_log_posterior(tv, X_scaled, y_scaled, nu, prior);
    grad = Eigen::Map<Eigen::VectorXd>(o.gradient.data(), P);
    return o.value;
  };

  Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(start.data(), P);
  Eigen::VectorXd g, g_next;
  double f = eval(theta, g);
  // Inverse-Hessian approximation; the identity gives plain gradient descent.
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(P, P);
  for (int it = 0; it < opt.max_iters; ++it) {
    if (g.norm() <= opt.grad_tol) break;
    Eigen::VectorXd dir = -H * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      H.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }
    // Keep trial points within a sane distance in log space.
    const double max_move = 5.0;
    double step = std::min(1.0, max_move / dir.norm());
    bool accepted = false;
    Eigen::VectorXd trial;
    double f_next = 0.0;
    while (step > 1e-16) {
      trial = theta + step * dir;
      f_next = eval(trial, g_next);
      if (f_next <= f + opt.armijo_c * step * slope) {
        accepted = true;
        break;
      }
      step *= opt.shrink;
    }
    if (!accepted) break;
    const Eigen::VectorXd s = trial - theta;
    const Eigen::VectorXd y = g_next - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (it == 0) H *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(P, P);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    theta = trial;
    f = f_next;
    g = g_next;
  }
  value = f;
  return std::vector<double>(theta.data(), theta.data() + P);
}

TrainResult map_train(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
                      const std::vector<Interval>& input_bounds, KernelKind nu,
                      const PriorSpec& prior, const TrainOptions& opt) {
  const int D = static_cast<int>(X_raw.cols());
  if (opt.restarts < 1) throw DomainError("restarts must be >= 1");
  if (X_raw.rows() < 1) throw DomainError("training data is empty");
  if (static_cast<int>(input_bounds.size()) != D) {
    throw DomainError("input_bounds must have one interval per input");
  }
  prior.validate(D);

  Eigen::MatrixXd Xs;
  Eigen::VectorXd ys;
  scale_training_data(X_raw, y_raw, input_bounds, Xs, ys);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  TrainResult result;
  std::vector<double> best;
  double best_value = kNonPdPenalty;
  for (int r = 0; r < opt.restarts; ++r) {
    std::vector<double> start(D + 2);
    for (int k = 0; k < D + 2; ++k) {
      start[k] = prior.mean[k] + std::sqrt(prior.var[k]) * normal(rng);
    }
    result.start_objectives.push_back(
        neg_log_posterior(start, Xs, ys, nu, prior).value);
    double value = 0.0;
    std::vector<double> theta = descend(start, Xs, ys, nu, prior, opt, value);
    if (value < best_value) {
      best_value = value;
      best = std::move(theta);
    }
  }
  if (best.empty()) {
    throw NotPositiveDefinite();
  }
  result.model = build_model(nu, best, X_raw, y_raw, input_bounds);
  result.objective = best_value;
  return result;
}

Eigen::MatrixXd lhs_sample(int D, int n, const std::vector<Interval>& bounds,
                           std::uint64_t seed) {
  if (n < 1) throw DomainError("LHS needs n >= 1");
  if (static_cast<int>(bounds.size()) != D) {
    throw DomainError("LHS bounds must have D intervals");
  }
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd X(n, D);
  std::vector<int> perm(n);
  for (int j = 0; j < D; ++j) {
    for (int i = 0; i < n; ++i) perm[i] = i;
    // Fisher-Yates with the raw engine output so designs do not depend on
    // the standard library's distribution implementation.
    for (int i = n - 1; i > 0; --i) {
      const auto k = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[i], perm[k]);
    }
    for (int i = 0; i < n; ++i) {
      X(i, j) = bounds[j].lo() + (perm[i] + 0.5) / n * bounds[j].width();
    }
  }
  return X;
}

}  // namespace gpopt
