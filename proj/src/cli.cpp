#include "gpopt/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpopt/train.hpp"

namespace gpopt {

double peaks(double x1, double x2) {
  return 3.0 * (1.0 - x1) * (1.0 - x1) * std::exp(-x1 * x1 - (x2 + 1.0) * (x2 + 1.0)) -
         10.0 * (x1 / 5.0 - x1 * x1 * x1 - std::pow(x2, 5)) * std::exp(-x1 * x1 - x2 * x2) -
         std::exp(-(x1 + 1.0) * (x1 + 1.0) - x2 * x2) / 3.0;
}

std::vector<Interval> peaks_bounds() { return {Interval(-3.0, 3.0), Interval(-3.0, 3.0)}; }

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(std::string s, double& v) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return false;
  s = s.substr(b, e - b + 1);
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(v);
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

TrainingData read_training_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cols == 0) {
      cols = cells.size();
      if (cols < 2) throw CsvError(lineno, "need at least one input and one output column");
      continue;
    }
    if (cells.size() != cols) {
      throw CsvError(lineno, "expected " + std::to_string(cols) + " columns, found " +
                                 std::to_string(cells.size()));
    }
    std::vector<double> row(cols);
    for (std::size_t k = 0; k < cols; ++k) {
      if (!parse_double(cells[k], row[k])) {
        throw CsvError(lineno, "column " + std::to_string(k + 1) + " is not a number");
      }
    }
    rows.push_back(std::move(row));
  }
  if (cols == 0) throw CsvError(lineno == 0 ? 1 : lineno, "missing header row");
  if (rows.empty()) throw CsvError(lineno, "no data rows");
  TrainingData d;
  d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols - 1));
  d.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k + 1 < cols; ++k) d.X(i, k) = rows[i][k];
    d.y(i) = rows[i][cols - 1];
  }
  return d;
}

TrainingData peaks_dataset(int n, std::uint64_t seed) {
  TrainingData d;
  d.X = lhs_sample(2, n, peaks_bounds(), seed);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) d.y(i) = peaks(d.X(i, 0), d.X(i, 1));
  return d;
}

std::vector<Interval> chance_bounds() {
  return {Interval(1.0, 3.0), Interval(5.0, 30.0), Interval(0.01, 0.1),
          Interval(100.0, 140.0)};
}

namespace {
std::vector<double> chance_unit(const std::vector<double>& x) {
  const std::vector<Interval> b = chance_bounds();
  std::vector<double> s(4);
  for (int j = 0; j < 4; ++j) s[j] = (x[j] - b[j].lo()) / b[j].width();
  return s;
}
}  // namespace

double chance_yield(const std::vector<double>& x) {
  const std::vector<double> s = chance_unit(x);
  const double conversion = 1.0 - std::exp(-(1.0 + 2.0 * s[3]) * (0.3 + s[1]));
  return 60.0 + 25.0 * conversion + 8.0 * s[0] - 6.0 * (s[2] - 0.6) * (s[2] - 0.6) +
         4.0 * s[0] * s[3];
}

double chance_impurity(const std::vector<double>& x) {
  const std::vector<double> s = chance_unit(x);
  return 1.0 + 5.0 * s[3] * s[3] + 2.5 * s[0] * s[3] + 1.5 * s[1] - 1.0 * s[2];
}

ChanceData chance_dataset(int n, std::uint64_t seed, double noise_sd) {
  ChanceData d;
  const Eigen::MatrixXd X = lhs_sample(4, n, chance_bounds(), seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, 1.0);
  d.yield.X = d.impurity.X = X;
  d.yield.y.resize(n);
  d.impurity.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::vector<double> x{X(i, 0), X(i, 1), X(i, 2), X(i, 3)};
    d.yield.y(i) = chance_yield(x);
    d.impurity.y(i) = chance_impurity(x) + noise_sd * noise(rng);
  }
  return d;
}

std::string benchmark_header() {
  return "N,nu,formulation,envelopes,rep,wall_time_s,iterations,time_per_iter_s,ub,lb,status";
}

std::string format_row(const BenchmarkRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%s,%s,%s,%d,%.6f,%ld,%.6g,%.10g,%.10g,%s", r.N,
                kernel_name(r.nu).c_str(), formulation_name(r.formulation).c_str(),
                r.use_envelopes ? "on" : "off", r.rep, r.wall_time, r.iterations,
                r.time_per_iteration, r.ub, r.lb, r.status.c_str());
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& cfg, std::ostream* log) {
  std::vector<BenchmarkRow> rows;
  for (int N : cfg.Ns) {
    for (int rep = 0; rep < cfg.reps; ++rep) {
      const std::uint64_t seed = cfg.seed * 1000003ULL + 1000ULL * N + rep;
      std::shared_ptr<const GPModel> model;
      std::string train_error;
      try {
        const TrainingData d = peaks_dataset(N, seed);
        TrainOptions opt;
        opt.restarts = cfg.restarts;
        opt.seed = seed;
        model = std::make_shared<const GPModel>(
            map_train(d.X, d.y, peaks_bounds(), cfg.nu, PriorSpec::defaults(2), opt).model);
      } catch (const std::exception& e) {
        train_error = e.what();
      }
      for (Formulation f : cfg.formulations) {
        for (bool env : cfg.envelope_modes) {
          BenchmarkRow row;
          row.N = N;
          row.nu = cfg.nu;
          row.formulation = f;
          row.use_envelopes = env;
          row.rep = rep;
          row.ub = row.lb = std::numeric_limits<double>::quiet_NaN();
          if (!model) {
            row.status = "train_error";
          } else {
            try {
              const Problem p =
                  f == Formulation::rs ? build_rs_mean(model) : build_fs_mean(model);
              Settings s;
              s.max_time = cfg.time_limit;
              s.use_envelopes = env;
              s.seed = seed;
              const BnBResult r = solve(p, s);
              row.wall_time = r.wall_time;
              row.iterations = r.iterations;
              row.time_per_iteration = r.time_per_iteration;
              row.ub = r.ub;
              row.lb = r.lb;
              row.status = status_name(r.status);
            } catch (const std::exception&) {
              row.status = "solver_error";
            }
          }
          if (log != nullptr) *log << format_row(row) << '\n' << std::flush;
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

Eigen::VectorXd raw_outputs(const GPModel& m) {
  return (m.y_scaled.array() * m.output_std + m.output_mean).matrix();
}

BayesoptResult bayesopt_step(std::shared_ptr<const GPModel> model,
                             const AcquisitionSpec& spec,
                             const std::vector<int>& int_dims, const Settings& s) {
  const Problem base = build_acquisition(model, spec);
  std::vector<std::vector<double>> levels;
  std::size_t combos = 1;
  for (int j : int_dims) {
    if (j < 0 || j >= model->D) throw DomainError("integer dimension out of range");
    const Interval& b = model->input_bounds[j];
    std::vector<double> lv;
    for (double v = std::ceil(b.lo()); v <= b.hi(); v += 1.0) lv.push_back(v);
    if (lv.empty()) throw DomainError("integer dimension has no integer level");
    combos *= lv.size();
    if (combos > 1000) throw DomainError("more than 1000 integer assignments");
    levels.push_back(std::move(lv));
  }

  BayesoptResult out;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(int_dims.size(), 0);
  for (std::size_t c = 0; c < combos; ++c) {
    Problem p = base;
    InnerSolve inner;
    for (std::size_t k = 0; k < int_dims.size(); ++k) {
      const double v = levels[k][idx[k]];
      p.box[int_dims[k]] = Interval(v);
      inner.assignment.push_back(v);
    }
    inner.result = solve(p, s);
    if (inner.result.status == BnBStatus::time_limit ||
        inner.result.status == BnBStatus::iter_limit) {
      out.limit_reached = true;
    }
    if (inner.result.incumbent && inner.result.ub < best) {
      best = inner.result.ub;
      out.x = *inner.result.incumbent;
    }
    out.solves.push_back(std::move(inner));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (++idx[k] < levels[k].size()) break;
      idx[k] = 0;
    }
  }
  if (out.x.empty()) throw DomainError("no feasible point found");
  out.mean = predict_mean(*model, out.x);
  out.sd = std::sqrt(predict_variance(*model, out.x));
  out.acquisition = spec.kind == AcquisitionKind::lcb ? best : -best;
  return out;
}

namespace {

std::vector<Interval> pairs_to_bounds(const std::vector<double>& v) {
  if (v.size() % 2 != 0) throw DomainError("bounds need lo,hi pairs");
  std::vector<Interval> b;
  for (std::size_t k = 0; k < v.size(); k += 2) b.emplace_back(v[k], v[k + 1]);
  return b;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string join(const std::vector<double>& x) {
  std::string s;
  for (std::size_t k = 0; k < x.size(); ++k) s += (k ? " " : "") + fmt(x[k]);
  return s;
}

nlohmann::json result_json(const BnBResult& r, int n_show) {
  nlohmann::json j;
  j["status"] = status_name(r.status);
  j["ub"] = std::isfinite(r.ub) ? nlohmann::json(r.ub) : nlohmann::json(nullptr);
  j["lb"] = std::isfinite(r.lb) ? nlohmann::json(r.lb) : nlohmann::json(nullptr);
  j["iterations"] = r.iterations;
  j["wall_time_s"] = r.wall_time;
  if (r.incumbent) {
    j["incumbent"] = std::vector<double>(r.incumbent->begin(), r.incumbent->begin() + n_show);
  } else {
    j["incumbent"] = nullptr;
  }
  return j;
}

void print_result(std::ostream& out, const BnBResult& r, int n_show) {
  out << "status: " << status_name(r.status) << '\n';
  out << "ub: " << fmt(r.ub) << '\n';
  out << "lb: " << fmt(r.lb) << '\n';
  out << "gap: " << fmt(r.ub - r.lb) << '\n';
  out << "incumbent: "
      << (r.incumbent ? join(std::vector<double>(r.incumbent->begin(),
                                                 r.incumbent->begin() + n_show))
                      : std::string("none"))
      << '\n';
  out << "iterations: " << r.iterations << '\n';
  out << "time_s: " << fmt(r.wall_time) << '\n';
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << j.dump(1) << '\n';
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveFlags {
  double max_time = 60.0;
  long max_iter = 1000000;
  double abs_tol = 1e-3;
  double rel_tol = 1e-3;
  int multistart = 20;
  bool no_envelopes = false;
  std::uint64_t seed = 0;
  bool progress = false;

  void add(CLI::App* app) {
    app->add_option("--max-time", max_time, "time limit in seconds");
    app->add_option("--max-iter", max_iter, "iteration limit");
    app->add_option("--abs-tol", abs_tol, "absolute optimality tolerance");
    app->add_option("--rel-tol", rel_tol, "relative optimality tolerance");
    app->add_option("--multistart", multistart, "local searches at the root node");
    app->add_flag("--no-envelopes", no_envelopes, "use generic McCormick compositions");
    app->add_option("--seed", seed, "seed for the root multistart");
    app->add_flag("--progress", progress, "log progress to standard error");
  }
  Settings settings() const {
    Settings s;
    s.max_time = max_time;
    s.max_iter = max_iter;
    s.abs_tol = abs_tol;
    s.rel_tol = rel_tol;
    s.multistart_count = multistart;
    s.use_envelopes = !no_envelopes;
    s.seed = seed;
    s.log_progress = progress;
    return s;
  }
};

int exit_for(BnBStatus st) {
  return st == BnBStatus::time_limit || st == BnBStatus::iter_limit ? 1 : 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic global optimization with Gaussian processes embedded"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "MAP training of a GP from CSV data");
  std::string t_csv, t_out, t_nu = "5/2";
  std::vector<double> t_bounds;
  int t_restarts = 10;
  std::uint64_t t_seed = 0;
  train->add_option("--csv", t_csv, "training data (header, inputs, output)")->required();
  train->add_option("--out", t_out, "model file to write")->required();
  train->add_option("--nu", t_nu, "kernel: 1/2, 3/2, 5/2 or inf");
  train->add_option("--bounds", t_bounds, "input bounds lo,hi per input (default: data range)")
      ->delimiter(',');
  train->add_option("--restarts", t_restarts, "number of prior-sampled starts");
  train->add_option("--seed", t_seed, "random seed");

  // solve
  auto* slv = app.add_subcommand("solve", "global optimization over trained GPs");
  std::string s_model, s_con_model, s_mode = "mean-min", s_form = "rs", s_out;
  double s_c = 0.0, s_z = 1.96, s_kappa = 2.0;
  std::optional<double> s_fmin;
  SolveFlags s_flags;
  slv->add_option("--model", s_model, "model file (objective model in chance mode)")
      ->required();
  slv->add_option("--con-model", s_con_model, "constraint model file (chance mode)");
  slv->add_option("--mode", s_mode, "mean-min, chance, ei, pi or lcb");
  slv->add_option("--formulation", s_form, "rs or fs");
  auto* c_opt = slv->add_option("--c", s_c, "chance-constraint bound");
  slv->add_option("--z", s_z, "chance-constraint quantile");
  slv->add_option("--fmin", s_fmin, "incumbent for ei/pi (default: best training output)");
  slv->add_option("--kappa", s_kappa, "LCB exploration weight");
  slv->add_option("--out", s_out, "write the result as JSON");
  s_flags.add(slv);

  // benchmark-peaks
  auto* bench = app.add_subcommand("benchmark-peaks", "RS/FS scaling study on the peaks function");
  BenchmarkConfig b_cfg;
  std::string b_nu = "5/2", b_out = "benchmark.csv";
  std::vector<std::string> b_forms{"RS", "FS"}, b_envs{"on", "off"};
  bench->add_option("--Ns", b_cfg.Ns, "training set sizes")->delimiter(',');
  bench->add_option("--reps", b_cfg.reps, "repetitions per size");
  bench->add_option("--nu", b_nu, "kernel: 1/2, 3/2, 5/2 or inf");
  bench->add_option("--formulations", b_forms, "RS, FS")->delimiter(',');
  bench->add_option("--envelopes", b_envs, "on, off")->delimiter(',');
  bench->add_option("--time-limit", b_cfg.time_limit, "seconds per solve");
  bench->add_option("--restarts", b_cfg.restarts, "training restarts");
  bench->add_option("--seed", b_cfg.seed, "base seed");
  bench->add_option("--out", b_out, "CSV output path");

  // bayesopt-step
  auto* bo = app.add_subcommand("bayesopt-step", "next sample by global acquisition optimization");
  std::string bo_model, bo_csv, bo_acq = "ei", bo_nu = "5/2", bo_out;
  std::vector<double> bo_bounds;
  std::vector<int> bo_int;
  std::optional<double> bo_fmin;
  double bo_kappa = 2.0;
  int bo_restarts = 10;
  std::uint64_t bo_train_seed = 0;
  SolveFlags bo_flags;
  auto* bo_model_opt = bo->add_option("--model", bo_model, "model file");
  auto* bo_csv_opt = bo->add_option("--csv", bo_csv, "training data to fit a model from");
  bo_model_opt->excludes(bo_csv_opt);
  bo->add_option("--acquisition", bo_acq, "ei, pi or lcb");
  bo->add_option("--fmin", bo_fmin, "incumbent for ei/pi (default: best training output)");
  bo->add_option("--kappa", bo_kappa, "LCB exploration weight");
  bo->add_option("--int-dims", bo_int, "input indices restricted to integers")->delimiter(',');
  bo->add_option("--nu", bo_nu, "kernel when training from --csv");
  bo->add_option("--bounds", bo_bounds, "input bounds when training from --csv")->delimiter(',');
  bo->add_option("--restarts", bo_restarts, "training restarts when training from --csv");
  bo->add_option("--train-seed", bo_train_seed, "training seed when training from --csv");
  bo->add_option("--out", bo_out, "write the result as JSON");
  bo_flags.add(bo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  auto train_from_csv = [&](const std::string& csv, const std::string& nu,
                            const std::vector<double>& bounds, int restarts,
                            std::uint64_t seed, double& nlp) {
    const TrainingData d = read_training_csv(csv);
    std::vector<Interval> b;
    if (bounds.empty()) {
      for (Eigen::Index j = 0; j < d.X.cols(); ++j) {
        const double lo = d.X.col(j).minCoeff(), hi = d.X.col(j).maxCoeff();
        b.emplace_back(lo, hi > lo ? hi : lo + 1.0);
      }
    } else {
      b = pairs_to_bounds(bounds);
      if (static_cast<Eigen::Index>(b.size()) != d.X.cols()) {
        throw UsageError("--bounds needs one lo,hi pair per input column");
      }
    }
    TrainOptions opt;
    opt.restarts = restarts;
    opt.seed = seed;
    const TrainResult r = map_train(d.X, d.y, b, parse_kernel(nu),
                                    PriorSpec::defaults(static_cast<int>(d.X.cols())), opt);
    nlp = r.objective;
    return r.model;
  };

  try {
    if (train->parsed()) {
      double nlp = 0.0;
      const GPModel m = train_from_csv(t_csv, t_nu, t_bounds, t_restarts, t_seed, nlp);
      save_model(m, t_out);
      out << "negative log posterior: " << fmt(nlp) << '\n';
      return 0;
    }

    if (slv->parsed()) {
      auto model = std::make_shared<const GPModel>(load_model(s_model));
      const bool fs = s_form == "fs" || s_form == "FS";
      if (!fs && s_form != "rs" && s_form != "RS") throw UsageError("--formulation must be rs or fs");
      if (fs && s_mode != "mean-min") throw UsageError("fs is available for mean-min only");
      if (s_mode != "chance" && (!s_con_model.empty() || c_opt->count() > 0)) {
        throw UsageError("--con-model and --c belong to chance mode");
      }
      Problem p;
      if (s_mode == "mean-min") {
        p = fs ? build_fs_mean(model) : build_rs_mean(model);
      } else if (s_mode == "chance") {
        if (s_con_model.empty() || c_opt->count() == 0) {
          throw UsageError("chance mode needs --con-model and --c");
        }
        auto con = std::make_shared<const GPModel>(load_model(s_con_model));
        p = build_chance_constrained(model, con, s_c, s_z);
      } else if (s_mode == "ei" || s_mode == "pi" || s_mode == "lcb") {
        AcquisitionSpec spec;
        spec.kind = parse_acquisition(s_mode);
        spec.f_min = s_fmin ? *s_fmin : raw_outputs(*model).minCoeff();
        spec.kappa = s_kappa;
        p = build_acquisition(model, spec);
      } else {
        throw UsageError("unknown --mode '" + s_mode + "'");
      }
      const BnBResult r = solve(p, s_flags.settings());
      print_result(out, r, model->D);
      if (!s_out.empty()) write_json(s_out, result_json(r, model->D));
      return exit_for(r.status);
    }

    if (bench->parsed()) {
      b_cfg.nu = parse_kernel(b_nu);
      b_cfg.formulations.clear();
      for (const std::string& f : b_forms) {
        if (f == "RS" || f == "rs") {
          b_cfg.formulations.push_back(Formulation::rs);
        } else if (f == "FS" || f == "fs") {
          b_cfg.formulations.push_back(Formulation::fs);
        } else {
          throw UsageError("unknown formulation '" + f + "'");
        }
      }
      b_cfg.envelope_modes.clear();
      for (const std::string& e : b_envs) {
        if (e == "on") {
          b_cfg.envelope_modes.push_back(true);
        } else if (e == "off") {
          b_cfg.envelope_modes.push_back(false);
        } else {
          throw UsageError("--envelopes takes on and/or off");
        }
      }
      std::ofstream csv(b_out);
      if (!csv) throw std::runtime_error("cannot write '" + b_out + "'");
      const std::vector<BenchmarkRow> rows = run_benchmark(b_cfg, &err);
      csv << benchmark_header() << '\n';
      for (const BenchmarkRow& r : rows) csv << format_row(r) << '\n';

      out << "formulation envelopes N median_time_s median_iterations median_time_per_iter_s\n";
      for (Formulation f : b_cfg.formulations) {
        for (bool env : b_cfg.envelope_modes) {
          std::vector<double> ns, t, tpi;
          for (int N : b_cfg.Ns) {
            std::vector<double> wt, it, tp;
            for (const BenchmarkRow& r : rows) {
              if (r.N == N && r.formulation == f && r.use_envelopes == env &&
                  !r.status.ends_with("error")) {
                wt.push_back(r.wall_time);
                it.push_back(static_cast<double>(r.iterations));
                tp.push_back(r.time_per_iteration);
              }
            }
            out << formulation_name(f) << ' ' << (env ? "on" : "off") << ' ' << N << ' '
                << fmt(median(wt)) << ' ' << fmt(median(it)) << ' ' << fmt(median(tp)) << '\n';
            ns.push_back(N);
            t.push_back(median(wt));
            tpi.push_back(median(tp));
          }
          out << "slope " << formulation_name(f) << ' ' << (env ? "on" : "off")
              << ": time " << fmt(loglog_slope(ns, t)) << ", time per iteration "
              << fmt(loglog_slope(ns, tpi)) << '\n';
        }
      }
      out << "reference exponents: FS 2.958, RS 1.156\n";
      return 0;
    }

    if (bo->parsed()) {
      std::shared_ptr<const GPModel> model;
      if (!bo_model.empty()) {
        model = std::make_shared<const GPModel>(load_model(bo_model));
      } else if (!bo_csv.empty()) {
        double nlp = 0.0;
        model = std::make_shared<const GPModel>(
            train_from_csv(bo_csv, bo_nu, bo_bounds, bo_restarts, bo_train_seed, nlp));
      } else {
        throw UsageError("bayesopt-step needs --model or --csv");
      }
      AcquisitionSpec spec;
      spec.kind = parse_acquisition(bo_acq);
      spec.f_min = bo_fmin ? *bo_fmin : raw_outputs(*model).minCoeff();
      spec.kappa = bo_kappa;
      const BayesoptResult r = bayesopt_step(model, spec, bo_int, bo_flags.settings());
      for (const InnerSolve& s : r.solves) {
        if (bo_int.empty()) break;
        out << "assignment " << join(s.assignment) << ": " << status_name(s.result.status)
            << " ub " << fmt(s.result.ub) << '\n';
      }
      out << "x: " << join(r.x) << '\n';
      out << "mean: " << fmt(r.mean) << '\n';
      out << "sd: " << fmt(r.sd) << '\n';
      out << acquisition_name(spec.kind) << ": " << fmt(r.acquisition) << '\n';
      if (!bo_out.empty()) {
        nlohmann::json j;
        j["x"] = r.x;
        j["mean"] = r.mean;
        j["sd"] = r.sd;
        j["acquisition"] = r.acquisition;
        j["inner_solves"] = r.solves.size();
        write_json(bo_out, j);
      }
      return r.limit_reached ? 1 : 0;
    }
  } catch (const CsvError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace gpopt
