#include "gpopt/problem.hpp"

#include <cmath>
#include <map>

namespace gpopt {

namespace {

constexpr double kSqrtNegTol = 1e-8;
constexpr double kUnboundedStart = 1e20;

// Posterior relaxations shared by gp_mean/gp_var nodes over the same inputs.
struct GpCacheEntry {
  const GPModel* model;
  std::vector<int> args;
  PosteriorRelaxation post;
};

bool needs_variance(const Problem& p, const GPModel* m, const std::vector<int>& args) {
  for (const ExprNode& nd : p.graph.nodes()) {
    if (nd.op == Op::gp_var && nd.model.get() == m && nd.args == args) return true;
  }
  return false;
}

// Nodes reachable from the objective and constraints.
std::vector<char> constraint_mask(const Problem& p) {
  const auto& nodes = p.graph.nodes();
  std::vector<char> mask(nodes.size(), 0);
  std::vector<int> stack;
  auto mark = [&](int id) {
    if (id >= 0 && !mask[id]) {
      mask[id] = 1;
      stack.push_back(id);
    }
  };
  mark(p.objective);
  for (int id : p.inequalities) mark(id);
  for (int id : p.equalities) mark(id);
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    for (int a : nodes[id].args) mark(a);
  }
  return mask;
}

Relaxation interval_variable(const Interval& box) {
  Relaxation r;
  r.range = box;
  r.cv = r.cc = box.mid();
  return r;
}

Relaxation clamp_nonnegative(Relaxation r) {
  if (r.range.lo() < 0.0) {
    if (r.range.lo() < -kSqrtNegTol * (1.0 + r.range.mag())) {
      throw DomainError("sqrt of a range with negative values");
    }
    r.range = Interval(0.0, std::max(0.0, r.range.hi()));
    r = mc_cut(std::move(r));
  }
  return r;
}

class Propagator {
 public:
  Propagator(const Problem& p, std::size_t n, bool use_envelopes)
      : p_(p), n_(n), env_(use_envelopes), rel_(p.graph.size()) {}

  // Computes relaxations of all nodes selected by mask (all if empty). With
  // tighten, defined variables are intersected with their definition range.
  bool run(std::vector<Interval>& box, const std::vector<double>* point,
           bool tighten, const std::vector<char>& mask) {
    const auto& nodes = p_.graph.nodes();
    for (std::size_t id = 0; id < nodes.size(); ++id) {
      if (!mask.empty() && !mask[id]) continue;
      const ExprNode& nd = nodes[id];
      if (nd.op == Op::variable) {
        const int j = nd.var_index;
        const int def = p_.definitions[j];
        if (tighten && def >= 0) {
          const Interval& r = rel_[def].range;
          const double tol = 1e-9 * (1.0 + box[j].mag());
          Interval out;
          if (!intersect(box[j], r, out)) {
            if (r.lo() > box[j].hi() + tol || r.hi() < box[j].lo() - tol) return false;
            out = Interval(r.lo() > box[j].hi() ? box[j].hi() : box[j].lo());
          }
          box[j] = out;
        }
        if (n_ == 0) {
          rel_[id] = interval_variable(box[j]);
        } else {
          rel_[id] = mc_variable(j, box[j], box[j].clamp((*point)[j]), n_);
        }
        continue;
      }
      rel_[id] = relax_node(nd);
    }
    return true;
  }

  const Relaxation& at(int id) const { return rel_[id]; }

 private:
  const Relaxation& arg(const ExprNode& nd, int k) const { return rel_[nd.args[k]]; }

  Relaxation relax_node(const ExprNode& nd) {
    const auto& nodes = p_.graph.nodes();
    switch (nd.op) {
      case Op::variable:
        break;
      case Op::constant:
        return mc_constant(nd.value, n_);
      case Op::add:
        return arg(nd, 0) + arg(nd, 1);
      case Op::sub:
        return arg(nd, 0) - arg(nd, 1);
      case Op::neg:
        return -arg(nd, 0);
      case Op::mul: {
        const ExprNode& a = nodes[nd.args[0]];
        const ExprNode& b = nodes[nd.args[1]];
        if (a.op == Op::constant) return a.value * arg(nd, 1);
        if (b.op == Op::constant) return b.value * arg(nd, 0);
        return mc_product(arg(nd, 0), arg(nd, 1));
      }
      case Op::div: {
        const Relaxation& den = arg(nd, 1);
        Relaxation inv;
        if (den.range.lo() > 0.0) {
          inv = mc_compose(den, reciprocal_env(den.range));
        } else if (den.range.hi() < 0.0) {
          const Relaxation m = -den;
          inv = -mc_compose(m, reciprocal_env(m.range));
        } else {
          throw DomainError("division by a range containing zero");
        }
        if (nodes[nd.args[0]].op == Op::constant) return nodes[nd.args[0]].value * inv;
        return mc_product(arg(nd, 0), inv);
      }
      case Op::sqr:
        return mc_compose(arg(nd, 0), sqr_env(arg(nd, 0).range));
      case Op::sqrt: {
        const Relaxation a = clamp_nonnegative(arg(nd, 0));
        return mc_compose(a, sqrt_env(a.range));
      }
      case Op::exp:
        return mc_compose(arg(nd, 0), exp_env(arg(nd, 0).range));
      case Op::lincomb: {
        std::vector<const Relaxation*> terms;
        terms.reserve(nd.args.size());
        for (int a : nd.args) terms.push_back(&rel_[a]);
        return mc_lincomb(terms, nd.coeffs, nd.value, n_);
      }
      case Op::kernel: {
        const Relaxation d = clamp_nonnegative(arg(nd, 0));
        return env_ ? mc_compose(d, kernel_env(nd.nu, d.range))
                    : kernel_generic(nd.nu, d);
      }
      case Op::pdf:
        return env_ ? mc_compose(arg(nd, 0), pdf_env(arg(nd, 0).range))
                    : pdf_generic(arg(nd, 0));
      case Op::cdf:
        return mc_compose(arg(nd, 0), cdf_env(arg(nd, 0).range));
      case Op::ei: {
        const Relaxation s = clamp_nonnegative(arg(nd, 1));
        return env_ ? ei_compose(arg(nd, 0), s, nd.value)
                    : ei_generic(arg(nd, 0), s, nd.value);
      }
      case Op::pi: {
        const Relaxation s = clamp_nonnegative(arg(nd, 1));
        return env_ ? pi_compose(arg(nd, 0), s, nd.value)
                    : pi_generic(arg(nd, 0), s, nd.value);
      }
      case Op::lcb:
        return lcb_relax(arg(nd, 0), arg(nd, 1), nd.value);
      case Op::gp_mean:
        return posterior(nd).mean;
      case Op::gp_var:
        return posterior(nd).variance;
    }
    throw DomainError("unknown expression node");
  }

  const PosteriorRelaxation& posterior(const ExprNode& nd) {
    for (const GpCacheEntry& e : cache_) {
      if (e.model == nd.model.get() && e.args == nd.args) return e.post;
    }
    std::vector<const Relaxation*> inputs;
    for (int a : nd.args) inputs.push_back(&rel_[a]);
    const bool var = nd.op == Op::gp_var || needs_variance(p_, nd.model.get(), nd.args);
    cache_.push_back(
        {nd.model.get(), nd.args, relax_posterior_inputs(*nd.model, inputs, var, env_)});
    return cache_.back().post;
  }

  const Problem& p_;
  std::size_t n_;
  bool env_;
  std::vector<Relaxation> rel_;
  std::vector<GpCacheEntry> cache_;
};

double eval_node(const ExprNode& nd, const std::vector<double>& v) {
  auto a = [&](int k) { return v[nd.args[k]]; };
  switch (nd.op) {
    case Op::variable:
      break;
    case Op::constant:
      return nd.value;
    case Op::add:
      return a(0) + a(1);
    case Op::sub:
      return a(0) - a(1);
    case Op::mul:
      return a(0) * a(1);
    case Op::div:
      if (a(1) == 0.0) throw DomainError("division by zero");
      return a(0) / a(1);
    case Op::neg:
      return -a(0);
    case Op::sqr:
      return a(0) * a(0);
    case Op::sqrt:
      if (a(0) < -kSqrtNegTol) throw DomainError("sqrt of a negative number");
      return std::sqrt(std::max(a(0), 0.0));
    case Op::exp:
      return std::exp(a(0));
    case Op::lincomb: {
      double s = nd.value;
      for (std::size_t k = 0; k < nd.args.size(); ++k) s += nd.coeffs[k] * a(k);
      return s;
    }
    case Op::kernel:
      if (a(0) < -kSqrtNegTol) throw DomainError("negative kernel distance");
      return kernel_value(nd.nu, std::max(a(0), 0.0));
    case Op::pdf:
      return normal_pdf(a(0));
    case Op::cdf:
      return normal_cdf(a(0));
    case Op::ei:
      return ei_value(a(0), std::max(a(1), 0.0), nd.value);
    case Op::pi:
      return pi_value(a(0), std::max(a(1), 0.0), nd.value);
    case Op::lcb:
      return a(0) - nd.value * a(1);
    case Op::gp_mean:
    case Op::gp_var: {
      std::vector<double> x(nd.args.size());
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = a(k);
      return nd.op == Op::gp_mean ? predict_mean(*nd.model, x)
                                  : predict_variance(*nd.model, x);
    }
  }
  throw DomainError("unknown expression node");
}

std::vector<double> eval_nodes(const Problem& p, std::vector<double>& x,
                               bool complete) {
  const auto& nodes = p.graph.nodes();
  std::vector<double> v(nodes.size());
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    const ExprNode& nd = nodes[id];
    if (nd.op == Op::variable) {
      const int j = nd.var_index;
      if (complete && p.definitions[j] >= 0) x[j] = v[p.definitions[j]];
      v[id] = x[j];
    } else {
      v[id] = eval_node(nd, v);
    }
  }
  return v;
}

std::vector<int> variable_nodes(ExprGraph& g, int first, int count) {
  std::vector<int> ids(count);
  for (int j = 0; j < count; ++j) ids[j] = g.variable(first + j);
  return ids;
}

Problem rs_base(const std::shared_ptr<const GPModel>& m) {
  Problem p;
  p.formulation = Formulation::rs;
  p.n_vars = m->D;
  p.box = m->input_bounds;
  p.definitions.assign(m->D, -1);
  for (int j = 0; j < m->D; ++j) p.var_names.push_back("x" + std::to_string(j));
  return p;
}

}  // namespace

int ExprGraph::push(ExprNode node) {
  for (int a : node.args) {
    if (a < 0 || a >= static_cast<int>(nodes_.size())) {
      throw DomainError("expression argument refers to a missing node");
    }
  }
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

int ExprGraph::variable(int i) {
  if (i < 0) throw DomainError("negative variable index");
  if (i < static_cast<int>(var_nodes_.size()) && var_nodes_[i] >= 0) {
    return var_nodes_[i];
  }
  ExprNode nd;
  nd.op = Op::variable;
  nd.var_index = i;
  const int id = push(std::move(nd));
  if (i >= static_cast<int>(var_nodes_.size())) var_nodes_.resize(i + 1, -1);
  var_nodes_[i] = id;
  return id;
}

int ExprGraph::constant(double c) {
  ExprNode nd;
  nd.op = Op::constant;
  nd.value = c;
  return push(std::move(nd));
}

namespace {
ExprNode make(Op op, std::vector<int> args) {
  ExprNode nd;
  nd.op = op;
  nd.args = std::move(args);
  return nd;
}
}  // namespace

int ExprGraph::add(int a, int b) { return push(make(Op::add, {a, b})); }
int ExprGraph::sub(int a, int b) { return push(make(Op::sub, {a, b})); }
int ExprGraph::mul(int a, int b) { return push(make(Op::mul, {a, b})); }
int ExprGraph::div(int a, int b) { return push(make(Op::div, {a, b})); }
int ExprGraph::neg(int a) { return push(make(Op::neg, {a})); }
int ExprGraph::sqr(int a) { return push(make(Op::sqr, {a})); }
int ExprGraph::sqrt(int a) { return push(make(Op::sqrt, {a})); }
int ExprGraph::exp(int a) { return push(make(Op::exp, {a})); }
int ExprGraph::pdf(int a) { return push(make(Op::pdf, {a})); }
int ExprGraph::cdf(int a) { return push(make(Op::cdf, {a})); }

int ExprGraph::lincomb(std::vector<int> terms, std::vector<double> coeffs,
                       double constant) {
  if (terms.size() != coeffs.size()) {
    throw DomainError("lincomb: term/coefficient count mismatch");
  }
  ExprNode nd = make(Op::lincomb, std::move(terms));
  nd.coeffs = std::move(coeffs);
  nd.value = constant;
  return push(std::move(nd));
}

int ExprGraph::kernel(KernelKind nu, int d) {
  ExprNode nd = make(Op::kernel, {d});
  nd.nu = nu;
  return push(std::move(nd));
}

int ExprGraph::ei(int mu, int sigma, double f_min) {
  ExprNode nd = make(Op::ei, {mu, sigma});
  nd.value = f_min;
  return push(std::move(nd));
}

int ExprGraph::pi(int mu, int sigma, double f_min) {
  ExprNode nd = make(Op::pi, {mu, sigma});
  nd.value = f_min;
  return push(std::move(nd));
}

int ExprGraph::lcb(int mu, int sigma, double kappa) {
  if (!(kappa >= 0.0)) throw DomainError("LCB requires kappa >= 0");
  ExprNode nd = make(Op::lcb, {mu, sigma});
  nd.value = kappa;
  return push(std::move(nd));
}

int ExprGraph::gp_mean(std::shared_ptr<const GPModel> model, std::vector<int> inputs) {
  if (static_cast<int>(inputs.size()) != model->D) {
    throw DomainError("gp_mean needs one input per model dimension");
  }
  ExprNode nd = make(Op::gp_mean, std::move(inputs));
  nd.model = std::move(model);
  return push(std::move(nd));
}

int ExprGraph::gp_var(std::shared_ptr<const GPModel> model, std::vector<int> inputs) {
  if (static_cast<int>(inputs.size()) != model->D) {
    throw DomainError("gp_var needs one input per model dimension");
  }
  ExprNode nd = make(Op::gp_var, std::move(inputs));
  nd.model = std::move(model);
  return push(std::move(nd));
}

std::string formulation_name(Formulation f) { return f == Formulation::rs ? "RS" : "FS"; }

std::vector<int> Problem::free_variables() const {
  std::vector<int> out;
  for (int j = 0; j < n_vars; ++j) {
    if (definitions[j] < 0) out.push_back(j);
  }
  return out;
}

void Problem::validate() const {
  if (static_cast<int>(box.size()) != n_vars ||
      static_cast<int>(definitions.size()) != n_vars) {
    throw DomainError("problem box/definitions must have n_vars entries");
  }
  const auto& nodes = graph.nodes();
  if (objective < 0 || objective >= static_cast<int>(nodes.size())) {
    throw DomainError("problem has no objective");
  }
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    const ExprNode& nd = nodes[id];
    if (nd.op == Op::variable) {
      if (nd.var_index >= n_vars) throw DomainError("variable index out of range");
      const int def = definitions[nd.var_index];
      if (def >= static_cast<int>(id)) {
        throw DomainError("definition of a variable must precede its use");
      }
    }
  }
}

Problem build_rs_mean(std::shared_ptr<const GPModel> m, Sense sense) {
  Problem p = rs_base(m);
  const std::vector<int> x = variable_nodes(p.graph, 0, m->D);
  const int mean = p.graph.gp_mean(m, x);
  p.objective = sense == Sense::min ? mean : p.graph.neg(mean);
  p.validate();
  return p;
}

Problem build_fs_mean(std::shared_ptr<const GPModel> m, Sense sense) {
  const int D = m->D, N = m->N;
  const int xs0 = D, k0 = 2 * D, v0 = 2 * D + N, mean_var = 2 * D + 2 * N;
  const int var_var = mean_var + 1;

  Problem p;
  p.formulation = Formulation::fs;
  p.n_vars = 2 * D + 2 * N + 2;
  p.definitions.assign(p.n_vars, -1);
  p.box.assign(p.n_vars, Interval(-kUnboundedStart, kUnboundedStart));
  for (int j = 0; j < D; ++j) p.box[j] = m->input_bounds[j];
  for (int j = 0; j < D; ++j) p.var_names.push_back("x" + std::to_string(j));
  for (int j = 0; j < D; ++j) p.var_names.push_back("xs" + std::to_string(j));
  for (int i = 0; i < N; ++i) p.var_names.push_back("k" + std::to_string(i));
  for (int i = 0; i < N; ++i) p.var_names.push_back("v" + std::to_string(i));
  p.var_names.push_back("mean");
  p.var_names.push_back("variance");

  ExprGraph& g = p.graph;
  const double sf2 = m->sigma_f2();
  std::vector<int> x(D), xs(D), k(N), v(N);
  for (int j = 0; j < D; ++j) x[j] = g.variable(j);

  // Every definition is created before the variable node it defines.
  for (int j = 0; j < D; ++j) {
    const Interval& b = m->input_bounds[j];
    const int rhs = g.lincomb({x[j]}, {1.0 / b.width()}, -b.lo() / b.width());
    p.definitions[xs0 + j] = rhs;
    xs[j] = g.variable(xs0 + j);
    p.equalities.push_back(g.sub(xs[j], rhs));
  }
  std::vector<double> lam2(D);
  for (int j = 0; j < D; ++j) lam2[j] = m->lambda2(j);
  for (int i = 0; i < N; ++i) {
    std::vector<int> sq(D);
    for (int j = 0; j < D; ++j) {
      const int diff = g.lincomb({xs[j]}, {1.0}, -m->X_scaled(i, j));
      sq[j] = g.sqr(diff);
    }
    const int d = g.lincomb(sq, lam2, 0.0);
    const int rhs = g.lincomb({g.kernel(m->nu, d)}, {sf2}, 0.0);
    p.definitions[k0 + i] = rhs;
    k[i] = g.variable(k0 + i);
    p.equalities.push_back(g.sub(k[i], rhs));
  }
  // v = L^{-1} k, with the defining equalities L v = k.
  for (int r = 0; r < N; ++r) {
    std::vector<int> terms(k.begin(), k.begin() + r + 1);
    std::vector<double> coeffs(r + 1);
    for (int i = 0; i <= r; ++i) coeffs[i] = m->L_inv(r, i);
    p.definitions[v0 + r] = g.lincomb(std::move(terms), std::move(coeffs), 0.0);
  }
  for (int r = 0; r < N; ++r) v[r] = g.variable(v0 + r);
  for (int r = 0; r < N; ++r) {
    std::vector<int> terms(v.begin(), v.begin() + r + 1);
    std::vector<double> coeffs(r + 1);
    for (int l = 0; l <= r; ++l) coeffs[l] = m->L(r, l);
    terms.push_back(k[r]);
    coeffs.push_back(-1.0);
    p.equalities.push_back(g.lincomb(std::move(terms), std::move(coeffs), 0.0));
  }
  {
    std::vector<double> coeffs(N);
    for (int i = 0; i < N; ++i) coeffs[i] = m->output_std * m->alpha[i];
    const int rhs = g.lincomb(k, coeffs, m->output_mean);
    p.definitions[mean_var] = rhs;
    const int mv = g.variable(mean_var);
    p.equalities.push_back(g.sub(mv, rhs));
  }
  {
    std::vector<int> sq(N);
    for (int r = 0; r < N; ++r) sq[r] = g.sqr(v[r]);
    const double s2 = m->output_std * m->output_std;
    const int rhs = g.lincomb(sq, std::vector<double>(N, -s2), s2 * sf2);
    p.definitions[var_var] = rhs;
    const int vv = g.variable(var_var);
    p.equalities.push_back(g.sub(vv, rhs));
  }
  const int mean_node = g.variable(mean_var);
  p.objective = sense == Sense::min ? mean_node : g.neg(mean_node);
  p.validate();

  // Intermediate bounds: one forward interval pass over the input box.
  if (!propagate_bounds(p, p.box, true)) {
    throw DomainError("full-space bound propagation failed");
  }
  return p;
}

Problem build_chance_constrained(std::shared_ptr<const GPModel> obj_model,
                                 std::shared_ptr<const GPModel> con_model,
                                 double c, double z) {
  if (obj_model->D != con_model->D) {
    throw DomainError("objective and constraint models differ in input dimension");
  }
  for (int j = 0; j < obj_model->D; ++j) {
    const Interval& a = obj_model->input_bounds[j];
    const Interval& b = con_model->input_bounds[j];
    const double tol = 1e-12 * (1.0 + a.mag());
    if (std::abs(a.lo() - b.lo()) > tol || std::abs(a.hi() - b.hi()) > tol) {
      throw DomainError("objective and constraint models have different input bounds");
    }
  }
  Problem p = rs_base(obj_model);
  const std::vector<int> x = variable_nodes(p.graph, 0, obj_model->D);
  ExprGraph& g = p.graph;
  p.objective = g.neg(g.gp_mean(obj_model, x));
  const int m = g.gp_mean(con_model, x);
  const int s = g.sqrt(g.gp_var(con_model, x));
  p.inequalities.push_back(g.lincomb({m, s}, {1.0, z}, -c));
  p.validate();
  return p;
}

Problem build_acquisition(std::shared_ptr<const GPModel> m, const AcquisitionSpec& spec) {
  spec.validate();
  Problem p = rs_base(m);
  const std::vector<int> x = variable_nodes(p.graph, 0, m->D);
  ExprGraph& g = p.graph;
  const int mu = g.gp_mean(m, x);
  const int sigma = g.sqrt(g.gp_var(m, x));
  switch (spec.kind) {
    case AcquisitionKind::ei:
      p.objective = g.neg(g.ei(mu, sigma, spec.f_min));
      break;
    case AcquisitionKind::pi:
      p.objective = g.neg(g.pi(mu, sigma, spec.f_min));
      break;
    case AcquisitionKind::lcb:
      p.objective = g.lcb(mu, sigma, spec.kappa);
      break;
  }
  p.validate();
  return p;
}

EvalResult eval_point(const Problem& p, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != p.n_vars) {
    throw DomainError("point dimension does not match the problem");
  }
  std::vector<double> xc = x;
  const std::vector<double> v = eval_nodes(p, xc, false);
  EvalResult r;
  r.objective = v[p.objective];
  for (int id : p.inequalities) r.inequalities.push_back(v[id]);
  for (int id : p.equalities) r.equalities.push_back(v[id]);
  return r;
}

std::vector<double> complete_point(const Problem& p, std::vector<double> x) {
  if (static_cast<int>(x.size()) != p.n_vars) {
    throw DomainError("point dimension does not match the problem");
  }
  eval_nodes(p, x, true);
  return x;
}

double max_violation(const EvalResult& r) {
  double v = 0.0;
  for (double g : r.inequalities) v = std::max(v, g);
  for (double h : r.equalities) v = std::max(v, std::abs(h));
  return v;
}

RelaxResult relax_box(const Problem& p, const std::vector<Interval>& box,
                      const std::vector<double>& point, bool use_envelopes) {
  if (static_cast<int>(box.size()) != p.n_vars ||
      static_cast<int>(point.size()) != p.n_vars) {
    throw DomainError("box/point dimension does not match the problem");
  }
  for (int j = 0; j < p.n_vars; ++j) {
    if (!box[j].contains(point[j])) throw DomainError("point outside the box");
  }
  std::vector<Interval> b = box;
  Propagator prop(p, static_cast<std::size_t>(p.n_vars), use_envelopes);
  prop.run(b, &point, false, constraint_mask(p));
  RelaxResult r;
  r.objective = prop.at(p.objective);
  for (int id : p.inequalities) r.inequalities.push_back(prop.at(id));
  for (int id : p.equalities) r.equalities.push_back(prop.at(id));
  return r;
}

bool propagate_bounds(const Problem& p, std::vector<Interval>& box,
                      bool use_envelopes, std::vector<Interval>* node_ranges) {
  Propagator prop(p, 0, use_envelopes);
  if (!prop.run(box, nullptr, true, {})) return false;
  if (node_ranges != nullptr) {
    node_ranges->clear();
    for (std::size_t id = 0; id < p.graph.size(); ++id) {
      node_ranges->push_back(prop.at(static_cast<int>(id)).range);
    }
  }
  return true;
}

}  // namespace gpopt
