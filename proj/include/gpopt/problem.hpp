#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gpopt/acquisition.hpp"
#include "gpopt/gp.hpp"

namespace gpopt {

enum class Op {
  variable,
  constant,
  add,
  sub,
  mul,
  div,
  neg,
  sqr,
  sqrt,
  exp,
  lincomb,
  kernel,
  pdf,
  cdf,
  ei,
  pi,
  lcb,
  gp_mean,
  gp_var,
};

struct ExprNode {
  Op op = Op::constant;
  std::vector<int> args;
  /// constant value, lincomb constant, f_min for ei/pi, kappa for lcb
  double value = 0.0;
  std::vector<double> coeffs;  ///< lincomb coefficients
  int var_index = -1;
  KernelKind nu = KernelKind::matern52;
  std::shared_ptr<const GPModel> model;
};

/// Expression DAG. Nodes are stored in creation order, so every argument
/// index is smaller than the node using it.
class ExprGraph {
 public:
  int variable(int i);
  int constant(double c);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int div(int a, int b);
  int neg(int a);
  int sqr(int a);
  int sqrt(int a);
  int exp(int a);
  int lincomb(std::vector<int> terms, std::vector<double> coeffs, double constant);
  /// k_nu(d), unit variance.
  int kernel(KernelKind nu, int d);
  int pdf(int a);
  int cdf(int a);
  int ei(int mu, int sigma, double f_min);
  int pi(int mu, int sigma, double f_min);
  int lcb(int mu, int sigma, double kappa);
  int gp_mean(std::shared_ptr<const GPModel> model, std::vector<int> inputs);
  int gp_var(std::shared_ptr<const GPModel> model, std::vector<int> inputs);

  const std::vector<ExprNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  int push(ExprNode node);

  std::vector<ExprNode> nodes_;
  std::vector<int> var_nodes_;
};

enum class Formulation { rs, fs };
enum class Sense { min, max };

std::string formulation_name(Formulation f);

/// Minimize objective subject to inequalities <= 0 and equalities = 0 over a
/// box. Variables with a definition are functions of other variables (the
/// full-space intermediates); the definition node computes their value.
struct Problem {
  int n_vars = 0;
  std::vector<Interval> box;
  ExprGraph graph;
  int objective = -1;
  std::vector<int> inequalities;
  std::vector<int> equalities;
  Formulation formulation = Formulation::rs;
  /// Per variable: node defining it, or -1 for a degree of freedom.
  std::vector<int> definitions;
  std::vector<std::string> var_names;

  /// Degrees of freedom (variables without a definition).
  std::vector<int> free_variables() const;
  void validate() const;
};

Problem build_rs_mean(std::shared_ptr<const GPModel> m, Sense sense = Sense::min);
Problem build_fs_mean(std::shared_ptr<const GPModel> m, Sense sense = Sense::min);
/// min -mean_obj(x) s.t. mean_con(x) + z sqrt(var_con(x)) - c <= 0.
Problem build_chance_constrained(std::shared_ptr<const GPModel> obj_model,
                                 std::shared_ptr<const GPModel> con_model,
                                 double c, double z);
/// min -EI, -PI or LCB over the posterior of m.
Problem build_acquisition(std::shared_ptr<const GPModel> m,
                          const AcquisitionSpec& spec);

struct EvalResult {
  double objective = 0.0;
  std::vector<double> inequalities;
  std::vector<double> equalities;
};

/// Exact evaluation at a full variable vector.
EvalResult eval_point(const Problem& p, const std::vector<double>& x);

/// Overwrites defined variables with the values their definitions give for
/// the remaining entries of x.
std::vector<double> complete_point(const Problem& p, std::vector<double> x);

/// Largest constraint violation: max(ineq, |eq|, 0).
double max_violation(const EvalResult& r);

struct RelaxResult {
  Relaxation objective;
  std::vector<Relaxation> inequalities;
  std::vector<Relaxation> equalities;
};

/// McCormick relaxations of objective and constraints over box at point.
RelaxResult relax_box(const Problem& p, const std::vector<Interval>& box,
                      const std::vector<double>& point, bool use_envelopes = true);

/// Interval bounds of every node over box. Defined variables are tightened
/// in place to the range of their definition. Returns false when a
/// definition's range misses the variable's box (the box holds no feasible
/// point).
bool propagate_bounds(const Problem& p, std::vector<Interval>& box,
                      bool use_envelopes, std::vector<Interval>* node_ranges = nullptr);

}  // namespace gpopt
