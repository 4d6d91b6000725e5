#include "gpopt/gp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gpopt {

namespace {

using nlohmann::json;

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-4;

bool try_cholesky(const Eigen::MatrixXd& K, Eigen::MatrixXd& L) {
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) return false;
  L = llt.matrixL();
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (!(L(i, i) > 0.0) || !std::isfinite(L(i, i))) return false;
  }
  return true;
}

void validate_log_theta(const std::vector<double>& log_theta, int D) {
  if (static_cast<int>(log_theta.size()) != D + 2) {
    throw DomainError("log_theta must have D + 2 = " + std::to_string(D + 2) +
                      " entries");
  }
  for (double v : log_theta) {
    if (!std::isfinite(v)) throw DomainError("log_theta entries must be finite");
  }
}

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
  throw SchemaError("model document: " + path + ": " + what);
}

const json& field(const json& doc, const char* name) {
  if (!doc.is_object()) schema_fail("<root>", "expected an object");
  auto it = doc.find(name);
  if (it == doc.end()) schema_fail(name, "missing field \"" + std::string(name) + "\"");
  return *it;
}

double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) schema_fail(path, "expected a number");
  return v.get<double>();
}

int int_at(const json& v, const std::string& path) {
  if (!v.is_number_integer()) schema_fail(path, "expected an integer");
  return v.get<int>();
}

std::vector<double> vector_at(const json& v, const std::string& path,
                              std::size_t expected) {
  if (!v.is_array()) schema_fail(path, "expected an array");
  if (v.size() != expected) {
    schema_fail(path, "expected " + std::to_string(expected) + " entries, got " +
                          std::to_string(v.size()));
  }
  std::vector<double> out;
  out.reserve(expected);
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number_at(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace

double GPModel::lambda2(int j) const { return std::exp(2.0 * log_theta[j]); }
double GPModel::sigma_f2() const { return std::exp(2.0 * log_theta[D]); }
double GPModel::sigma_n2() const {
  const double l = log_theta[D + 1];
  return l <= kNoiselessLogSigmaN ? 0.0 : std::exp(2.0 * l);
}

double GPModel::scale_input(int j, double x) const {
  const Interval& b = input_bounds[j];
  return x * (1.0 / b.width()) + (-b.lo() / b.width());
}

double weighted_sq_distance(const GPModel& m, const double* xs,
                            const double* x_train) {
  double d = 0.0;
  for (int j = 0; j < m.D; ++j) {
    const double diff = xs[j] - x_train[j];
    d += m.lambda2(j) * (diff * diff);
  }
  return d;
}

Eigen::MatrixXd covariance_matrix(KernelKind nu,
                                  const std::vector<double>& log_theta,
                                  const Eigen::MatrixXd& X_scaled) {
  const Eigen::Index N = X_scaled.rows(), D = X_scaled.cols();
  const double sf2 = std::exp(2.0 * log_theta[D]);
  const double ln = log_theta[D + 1];
  const double sn2 = ln <= kNoiselessLogSigmaN ? 0.0 : std::exp(2.0 * ln);
  Eigen::VectorXd lam2(D);
  for (Eigen::Index j = 0; j < D; ++j) lam2[j] = std::exp(2.0 * log_theta[j]);
  Eigen::MatrixXd K(N, N);
  for (Eigen::Index a = 0; a < N; ++a) {
    K(a, a) = sf2 + sn2;
    for (Eigen::Index b = 0; b < a; ++b) {
      const double d =
          (lam2.array() * (X_scaled.row(a) - X_scaled.row(b)).transpose().array().square())
              .sum();
      K(a, b) = K(b, a) = sf2 * kernel_value(nu, d);
    }
  }
  return K;
}

GPModel build_model(KernelKind nu, const std::vector<double>& log_theta,
                    const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
                    const std::vector<Interval>& input_bounds) {
  const int N = static_cast<int>(X_raw.rows());
  const int D = static_cast<int>(X_raw.cols());
  if (N < 1) throw DomainError("GP needs at least one training point");
  if (y_raw.size() != N) throw DomainError("X and y have different lengths");
  if (static_cast<int>(input_bounds.size()) != D) {
    throw DomainError("input_bounds must have one interval per input");
  }
  for (const Interval& b : input_bounds) {
    if (!(b.width() > 0.0)) throw DomainError("input bounds must have lo < hi");
  }
  validate_log_theta(log_theta, D);

  GPModel m;
  m.nu = nu;
  m.D = D;
  m.N = N;
  m.log_theta = log_theta;
  m.input_bounds = input_bounds;
  m.X_scaled.resize(N, D);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < D; ++j) m.X_scaled(i, j) = m.scale_input(j, X_raw(i, j));
  }
  m.output_mean = y_raw.mean();
  const double var = (y_raw.array() - m.output_mean).square().mean();
  m.output_std = var > 0.0 ? std::sqrt(var) : 1.0;
  m.y_scaled = (y_raw.array() - m.output_mean) / m.output_std;

  if (m.sigma_n2() == 0.0) {
    // A noiseless GP cannot condition on the same input twice.
    for (int a = 0; a < N; ++a) {
      for (int b = 0; b < a; ++b) {
        if (m.X_scaled.row(a) == m.X_scaled.row(b)) throw NotPositiveDefinite();
      }
    }
  }

  const Eigen::MatrixXd K = covariance_matrix(nu, log_theta, m.X_scaled);
  const double sf2 = m.sigma_f2();
  bool ok = try_cholesky(K, m.L);
  for (double jitter = kJitterStart; !ok && jitter <= kJitterMax * (1 + 1e-9);
       jitter *= 10.0) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter * sf2;
    ok = try_cholesky(Kj, m.L);
  }
  if (!ok) throw NotPositiveDefinite();

  m.alpha = m.L.triangularView<Eigen::Lower>().solve(m.y_scaled);
  m.L.triangularView<Eigen::Lower>().transpose().solveInPlace(m.alpha);
  finalize_model(m);
  return m;
}

void finalize_model(GPModel& m) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m.N, m.N);
  m.L_inv = m.L.triangularView<Eigen::Lower>().solve(I);
}

double predict_mean(const GPModel& m, const std::vector<double>& x) {
  std::vector<double> xs(m.D);
  for (int j = 0; j < m.D; ++j) xs[j] = m.scale_input(j, x[j]);
  const double sf2 = m.sigma_f2();
  double acc = 0.0;
  for (int i = 0; i < m.N; ++i) {
    Eigen::VectorXd row = m.X_scaled.row(i);
    acc += sf2 * m.alpha[i] *
           kernel_value(m.nu, weighted_sq_distance(m, xs.data(), row.data()));
  }
  return m.output_std * acc + m.output_mean;
}

double predict_variance_scaled_raw(const GPModel& m, const std::vector<double>& x) {
  std::vector<double> xs(m.D);
  for (int j = 0; j < m.D; ++j) xs[j] = m.scale_input(j, x[j]);
  const double sf2 = m.sigma_f2();
  Eigen::VectorXd k(m.N);
  for (int i = 0; i < m.N; ++i) {
    Eigen::VectorXd row = m.X_scaled.row(i);
    k[i] = kernel_value(m.nu, weighted_sq_distance(m, xs.data(), row.data()));
  }
  // Same arithmetic as the relaxation, so that the two agree on degenerate
  // boxes even when L is badly conditioned.
  double var = sf2;
  for (int r = 0; r < m.N; ++r) {
    double v = 0.0;
    for (int i = 0; i <= r; ++i) v += sf2 * m.L_inv(r, i) * k[i];
    var -= v * v;
  }
  return var;
}

double predict_variance(const GPModel& m, const std::vector<double>& x) {
  return std::max(0.0, predict_variance_scaled_raw(m, x)) * m.output_std *
         m.output_std;
}

PosteriorRelaxation relax_posterior_inputs(
    const GPModel& m, const std::vector<const Relaxation*>& inputs,
    bool want_variance, bool use_envelopes) {
  if (static_cast<int>(inputs.size()) != m.D) {
    throw DomainError("posterior relaxation needs one relaxation per input");
  }
  const std::size_t n = inputs[0]->n();
  const double sf2 = m.sigma_f2();

  std::vector<Relaxation> xs(m.D);
  std::vector<double> lam2(m.D);
  for (int j = 0; j < m.D; ++j) {
    const Interval& b = m.input_bounds[j];
    xs[j] = mc_affine(*inputs[j], nullptr, 1.0 / b.width(), 0.0,
                      -b.lo() / b.width());
    lam2[j] = m.lambda2(j);
  }

  std::vector<Relaxation> k(m.N);
  std::vector<Relaxation> sq(m.D);
  std::vector<const Relaxation*> sq_ptr(m.D);
  for (int i = 0; i < m.N; ++i) {
    for (int j = 0; j < m.D; ++j) {
      const Relaxation diff = xs[j] + (-m.X_scaled(i, j));
      sq[j] = mc_compose(diff, sqr_env(diff.range));
      sq_ptr[j] = &sq[j];
    }
    const Relaxation d = mc_lincomb(sq_ptr, lam2, 0.0, n);
    k[i] = use_envelopes ? mc_compose(d, kernel_env(m.nu, d.range))
                         : kernel_generic(m.nu, d);
  }

  std::vector<const Relaxation*> k_ptr(m.N);
  for (int i = 0; i < m.N; ++i) k_ptr[i] = &k[i];
  std::vector<double> coef(m.N);
  for (int i = 0; i < m.N; ++i) coef[i] = sf2 * m.alpha[i];

  PosteriorRelaxation out;
  out.mean = mc_affine(mc_lincomb(k_ptr, coef, 0.0, n), nullptr, m.output_std,
                       0.0, m.output_mean);
  if (!want_variance) return out;

  // v = sigma_f^2 L^{-1} k, variance = sigma_f^2 - |v|^2.
  std::vector<Relaxation> vsq(m.N);
  std::vector<const Relaxation*> vsq_ptr(m.N);
  for (int r = 0; r < m.N; ++r) {
    const std::span<const Relaxation* const> terms(k_ptr.data(), r + 1);
    for (int i = 0; i <= r; ++i) coef[i] = sf2 * m.L_inv(r, i);
    const Relaxation v =
        mc_lincomb(terms, std::span<const double>(coef.data(), r + 1), 0.0, n);
    vsq[r] = mc_compose(v, sqr_env(v.range));
    vsq_ptr[r] = &vsq[r];
  }
  const std::vector<double> minus_one(m.N, -1.0);
  Relaxation var = mc_lincomb(vsq_ptr, minus_one, sf2, n);
  Interval clipped;
  if (!intersect(var.range, Interval(0.0, sf2), clipped)) {
    clipped = var.range.hi() < 0.0 ? Interval(0.0) : Interval(sf2);
  }
  var.range = clipped;
  var = mc_cut(std::move(var));
  out.variance = m.output_std * m.output_std * var;
  return out;
}

PosteriorRelaxation relax_posterior(const GPModel& m,
                                    const std::vector<Interval>& box,
                                    const std::vector<double>& point,
                                    bool use_envelopes) {
  if (static_cast<int>(box.size()) != m.D || static_cast<int>(point.size()) != m.D) {
    throw DomainError("box and point must have D entries");
  }
  std::vector<Relaxation> seeds;
  seeds.reserve(m.D);
  std::vector<const Relaxation*> ptr;
  for (int j = 0; j < m.D; ++j) {
    seeds.push_back(mc_variable(j, box[j], point[j], m.D));
  }
  for (const Relaxation& s : seeds) ptr.push_back(&s);
  return relax_posterior_inputs(m, ptr, true, use_envelopes);
}

std::string model_to_json(const GPModel& m) {
  json doc;
  doc["nu"] = kernel_name(m.nu);
  doc["D"] = m.D;
  doc["N"] = m.N;
  doc["log_theta"] = m.log_theta;
  json X = json::array();
  for (int i = 0; i < m.N; ++i) {
    json row = json::array();
    for (int j = 0; j < m.D; ++j) row.push_back(m.X_scaled(i, j));
    X.push_back(std::move(row));
  }
  doc["X_scaled"] = std::move(X);
  doc["y_scaled"] = std::vector<double>(m.y_scaled.data(), m.y_scaled.data() + m.N);
  json L = json::array();
  for (int i = 0; i < m.N; ++i) {
    json row = json::array();
    for (int j = 0; j <= i; ++j) row.push_back(m.L(i, j));
    L.push_back(std::move(row));
  }
  doc["L"] = std::move(L);
  doc["alpha"] = std::vector<double>(m.alpha.data(), m.alpha.data() + m.N);
  json bounds = json::array();
  for (const Interval& b : m.input_bounds) bounds.push_back({b.lo(), b.hi()});
  doc["input_bounds"] = std::move(bounds);
  doc["output_mean"] = m.output_mean;
  doc["output_std"] = m.output_std;
  return doc.dump(1);
}

GPModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("model document is not valid JSON: ") + e.what());
  }
  GPModel m;
  const json& nu = field(doc, "nu");
  if (!nu.is_string()) schema_fail("nu", "expected a string");
  try {
    m.nu = parse_kernel(nu.get<std::string>());
  } catch (const DomainError& e) {
    schema_fail("nu", e.what());
  }
  m.D = int_at(field(doc, "D"), "D");
  m.N = int_at(field(doc, "N"), "N");
  if (m.D < 1) schema_fail("D", "must be >= 1");
  if (m.N < 1) schema_fail("N", "must be >= 1");
  m.log_theta = vector_at(field(doc, "log_theta"), "log_theta", m.D + 2);

  const json& X = field(doc, "X_scaled");
  if (!X.is_array() || static_cast<int>(X.size()) != m.N) {
    schema_fail("X_scaled", "expected N rows");
  }
  m.X_scaled.resize(m.N, m.D);
  for (int i = 0; i < m.N; ++i) {
    const std::string p = "X_scaled[" + std::to_string(i) + "]";
    const std::vector<double> row = vector_at(X[i], p, m.D);
    for (int j = 0; j < m.D; ++j) m.X_scaled(i, j) = row[j];
  }
  const std::vector<double> y = vector_at(field(doc, "y_scaled"), "y_scaled", m.N);
  m.y_scaled = Eigen::Map<const Eigen::VectorXd>(y.data(), m.N);

  const json& L = field(doc, "L");
  if (!L.is_array() || static_cast<int>(L.size()) != m.N) {
    schema_fail("L", "expected N rows");
  }
  m.L = Eigen::MatrixXd::Zero(m.N, m.N);
  for (int i = 0; i < m.N; ++i) {
    const std::string p = "L[" + std::to_string(i) + "]";
    if (!L[i].is_array() || static_cast<int>(L[i].size()) < i + 1) {
      schema_fail(p, "expected at least " + std::to_string(i + 1) + " entries");
    }
    for (int j = 0; j <= i; ++j) {
      m.L(i, j) = number_at(L[i][j], p + "[" + std::to_string(j) + "]");
    }
    if (!(m.L(i, i) > 0.0)) schema_fail(p, "diagonal entry must be positive");
  }
  const std::vector<double> alpha = vector_at(field(doc, "alpha"), "alpha", m.N);
  m.alpha = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m.N);

  const json& bounds = field(doc, "input_bounds");
  if (!bounds.is_array() || static_cast<int>(bounds.size()) != m.D) {
    schema_fail("input_bounds", "expected D intervals");
  }
  for (int j = 0; j < m.D; ++j) {
    const std::string p = "input_bounds[" + std::to_string(j) + "]";
    const std::vector<double> b = vector_at(bounds[j], p, 2);
    if (!(b[0] < b[1])) schema_fail(p, "expected lo < hi");
    m.input_bounds.emplace_back(b[0], b[1]);
  }
  m.output_mean = number_at(field(doc, "output_mean"), "output_mean");
  m.output_std = number_at(field(doc, "output_std"), "output_std");
  if (!(m.output_std > 0.0)) schema_fail("output_std", "must be positive");
  finalize_model(m);
  return m;
}

void save_model(const GPModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file " + path);
  out << model_to_json(m) << '\n';
}

GPModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace gpopt
