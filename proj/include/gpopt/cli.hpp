#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpopt/bnb.hpp"

namespace gpopt {

double peaks(double x1, double x2);

/// [-3, 3]^2
std::vector<Interval> peaks_bounds();

struct TrainingData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

/// Malformed training CSV; line() is 1-based.
class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Header row, then D input columns and one output column per row.
TrainingData read_training_csv(const std::string& path);

/// Peaks values at a midpoint Latin hypercube of n points.
TrainingData peaks_dataset(int n, std::uint64_t seed);

/// Synthetic reaction surfaces on four inputs
/// (ratio, residence time, catalyst fraction, temperature).
std::vector<Interval> chance_bounds();
double chance_yield(const std::vector<double>& x);
double chance_impurity(const std::vector<double>& x);

struct ChanceData {
  TrainingData yield;
  TrainingData impurity;
};
/// LHS design of n points; impurity carries N(0, noise_sd^2) measurement noise.
ChanceData chance_dataset(int n, std::uint64_t seed, double noise_sd = 0.05);

struct BenchmarkRow {
  int N = 0;
  KernelKind nu = KernelKind::matern52;
  Formulation formulation = Formulation::rs;
  bool use_envelopes = true;
  int rep = 0;
  double wall_time = 0.0;
  long iterations = 0;
  double time_per_iteration = 0.0;
  double ub = 0.0;
  double lb = 0.0;
  std::string status;
};

struct BenchmarkConfig {
  std::vector<int> Ns{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  int reps = 5;
  KernelKind nu = KernelKind::matern52;
  std::vector<Formulation> formulations{Formulation::rs, Formulation::fs};
  std::vector<bool> envelope_modes{true, false};
  double time_limit = 60.0;
  std::uint64_t seed = 0;
  int restarts = 10;
};

std::string benchmark_header();
std::string format_row(const BenchmarkRow& r);

/// Rows ordered by N, rep, formulation, envelope mode. One GP is trained per
/// (N, rep) and solved in every configuration. Progress goes to log if set.
std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& cfg, std::ostream* log);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

struct InnerSolve {
  std::vector<double> assignment;
  BnBResult result;
};

struct BayesoptResult {
  std::vector<double> x;
  double mean = 0.0;
  double sd = 0.0;
  double acquisition = 0.0;
  bool limit_reached = false;
  std::vector<InnerSolve> solves;
};

/// Acquisition-optimal next sample. Integer dimensions are enumerated over
/// the integers in their bounds, with one reduced-space solve per assignment.
BayesoptResult bayesopt_step(std::shared_ptr<const GPModel> model,
                             const AcquisitionSpec& spec,
                             const std::vector<int>& int_dims, const Settings& s);

/// Raw training outputs recovered from the model.
Eigen::VectorXd raw_outputs(const GPModel& m);

/// Entry point of the command-line tool; returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gpopt
