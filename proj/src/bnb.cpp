#include "gpopt/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <queue>

#include "gpopt/train.hpp"

namespace gpopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kPhase1Tol = 1e-8;
constexpr int kDegenerateLimit = 50;

// Dense bounded-variable simplex tableau. Nonbasic variables sit at zero in a
// complemented space: a variable at its upper bound u is replaced by u - y.
class Tableau {
 public:
  Tableau(int m, int cols) : m_(m), cols_(cols), T_(static_cast<std::size_t>(m) * cols, 0.0),
                             r_(m, 0.0), d_(cols, 0.0), upper_(cols, kInf),
                             flipped_(cols, 0), basis_(m, -1), is_basic_(cols, 0) {}

  double& at(int i, int j) { return T_[static_cast<std::size_t>(i) * cols_ + j]; }
  double at(int i, int j) const { return T_[static_cast<std::size_t>(i) * cols_ + j]; }
  double& rhs(int i) { return r_[i]; }
  double& upper(int j) { return upper_[j]; }
  void set_basic(int i, int j) {
    basis_[i] = j;
    is_basic_[j] = 1;
  }

  void set_costs(const std::vector<double>& c) {
    for (int j = 0; j < cols_; ++j) d_[j] = flipped_[j] ? -c[j] : c[j];
    for (int i = 0; i < m_; ++i) {
      const int b = basis_[i];
      const double cb = flipped_[b] ? -c[b] : c[b];
      if (cb == 0.0) continue;
      for (int j = 0; j < cols_; ++j) d_[j] -= cb * at(i, j);
    }
  }

  // Runs simplex iterations until optimal. Throws LpError on breakdown.
  void optimize() {
    const long max_iter = 50L * (m_ + cols_) + 1000;
    int degenerate = 0;
    for (long it = 0; it < max_iter; ++it) {
      const bool bland = degenerate >= kDegenerateLimit;
      int q = -1;
      double best = -kCostTol;
      for (int j = 0; j < cols_; ++j) {
        if (is_basic_[j] || upper_[j] <= 0.0 || d_[j] >= -kCostTol) continue;
        if (bland) {
          q = j;
          break;
        }
        if (d_[j] < best) {
          best = d_[j];
          q = j;
        }
      }
      if (q < 0) return;

      double t = upper_[q];
      int p = -1;
      bool leave_upper = false;
      double piv = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = at(i, q);
        if (std::abs(a) <= kPivotTol) continue;
        double ti;
        bool up = false;
        if (a > 0.0) {
          ti = std::max(r_[i], 0.0) / a;
        } else {
          const double u = upper_[basis_[i]];
          if (u == kInf) continue;
          ti = std::max(u - r_[i], 0.0) / -a;
          up = true;
        }
        bool take = ti < t;
        if (!take && ti == t && p >= 0) {
          take = bland ? basis_[i] < basis_[p] : std::abs(a) > piv;
        }
        if (take) {
          t = ti;
          p = i;
          leave_upper = up;
          piv = std::abs(a);
        }
      }
      if (t == kInf) throw LpError("unbounded LP");
      degenerate = t <= 1e-12 ? degenerate + 1 : 0;

      if (p < 0) {
        flip_nonbasic(q);
        continue;
      }
      if (leave_upper) complement_basic(p);
      pivot(p, q);
    }
    throw LpError("simplex iteration limit reached");
  }

  double value(int j) const {
    double v = 0.0;
    if (is_basic_[j]) {
      for (int i = 0; i < m_; ++i) {
        if (basis_[i] == j) v = r_[i];
      }
    }
    return flipped_[j] ? upper_[j] - v : v;
  }

 private:
  void flip_nonbasic(int q) {
    const double u = upper_[q];
    for (int i = 0; i < m_; ++i) {
      r_[i] -= at(i, q) * u;
      at(i, q) = -at(i, q);
    }
    d_[q] = -d_[q];
    flipped_[q] ^= 1;
  }

  void complement_basic(int p) {
    const int b = basis_[p];
    for (int j = 0; j < cols_; ++j) {
      if (j != b) at(p, j) = -at(p, j);
    }
    r_[p] = upper_[b] - r_[p];
    flipped_[b] ^= 1;
  }

  void pivot(int p, int q) {
    const double a = at(p, q);
    if (!std::isfinite(a) || std::abs(a) <= kPivotTol) {
      throw LpError("simplex pivot breakdown");
    }
    for (int j = 0; j < cols_; ++j) at(p, j) /= a;
    r_[p] /= a;
    at(p, q) = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == p) continue;
      const double f = at(i, q);
      if (f == 0.0) continue;
      for (int j = 0; j < cols_; ++j) at(i, j) -= f * at(p, j);
      at(i, q) = 0.0;
      r_[i] -= f * r_[p];
    }
    const double dq = d_[q];
    if (dq != 0.0) {
      for (int j = 0; j < cols_; ++j) d_[j] -= dq * at(p, j);
      d_[q] = 0.0;
    }
    is_basic_[basis_[p]] = 0;
    basis_[p] = q;
    is_basic_[q] = 1;
  }

  int m_, cols_;
  std::vector<double> T_, r_, d_, upper_;
  std::vector<char> flipped_;
  std::vector<int> basis_;
  std::vector<char> is_basic_;
};

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> midpoint(const std::vector<Interval>& box) {
  std::vector<double> x(box.size());
  for (std::size_t j = 0; j < box.size(); ++j) x[j] = box[j].mid();
  return x;
}

bool inside(const std::vector<Interval>& box, const std::vector<double>& x) {
  for (std::size_t j = 0; j < box.size(); ++j) {
    if (!box[j].contains(x[j])) return false;
  }
  return true;
}

double sub_at(const std::vector<double>& sub, std::size_t j) {
  return j < sub.size() ? sub[j] : 0.0;
}

// Adds a cut  r.cv + r.cv_sub (x - ref) <= slack  (or the concave mirror)
// over the first n columns.
void add_cut(std::vector<std::vector<double>>& A, std::vector<double>& b, int cols,
             const Relaxation& r, const std::vector<double>& ref, bool concave,
             double slack, int eta_col) {
  const std::vector<double>& sub = concave ? r.cc_sub : r.cv_sub;
  const double sign = concave ? -1.0 : 1.0;
  const double val = concave ? r.cc : r.cv;
  std::vector<double> row(cols, 0.0);
  double rhs = slack - sign * val;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    const double g = sign * sub_at(sub, j);
    row[j] = g;
    rhs += g * ref[j];
  }
  if (eta_col >= 0) row[eta_col] = -1.0;
  if (!std::isfinite(rhs)) return;
  A.push_back(std::move(row));
  b.push_back(rhs);
}

struct Candidate {
  double obj = kInf;
  double viol = kInf;
  std::vector<double> x;
  EvalResult eval;
};

// Exact evaluation of a full point; nothing when the point is outside the
// function domains.
std::optional<Candidate> evaluate(const Problem& p, std::vector<double> x) {
  try {
    x = complete_point(p, std::move(x));
    const EvalResult e = eval_point(p, x);
    if (!std::isfinite(e.objective)) return std::nullopt;
    Candidate c;
    c.obj = e.objective;
    c.viol = max_violation(e);
    c.x = std::move(x);
    c.eval = e;
    return c;
  } catch (const DomainError&) {
    return std::nullopt;
  } catch (const NotPositiveDefinite&) {
    return std::nullopt;
  }
}

class LocalSearch {
 public:
  LocalSearch(const Problem& p, const Settings& s, const std::vector<double>& start)
      : p_(p), s_(s), base_(start), free_(p.free_variables()) {
    for (int j : free_) {
      base_[j] = p.box[j].clamp(base_[j]);
    }
  }

  std::optional<LocalResult> run() {
    const int nf = static_cast<int>(free_.size());
    std::vector<double> z(nf);
    for (int k = 0; k < nf; ++k) z[k] = base_[free_[k]];
    if (nf == 0) {
      penalized(z);
      return result();
    }
    double mu = 1e3;
    Candidate last;
    for (int e = 0; e <= 5; ++e) {
      z = nelder_mead(z, mu);
      // Restart from the converged vertex to escape collapsed simplices.
      z = nelder_mead(z, mu);
      last = candidate(z);
      if (last.viol <= s_.feas_tol) break;
      mu *= 10.0;
    }
    if (last.viol > s_.feas_tol && have_feasible_) restore(z);
    return result();
  }

 private:
  std::vector<double> full(const std::vector<double>& z) const {
    std::vector<double> x = base_;
    for (std::size_t k = 0; k < free_.size(); ++k) {
      x[free_[k]] = p_.box[free_[k]].clamp(z[k]);
    }
    return x;
  }

  Candidate candidate(const std::vector<double>& z) {
    std::optional<Candidate> c = evaluate(p_, full(z));
    if (!c) return Candidate{};
    if (c->viol <= s_.feas_tol && c->obj < best_.obj) {
      best_ = *c;
      best_z_ = z;
      have_feasible_ = true;
    }
    return *c;
  }

  double penalized(const std::vector<double>& z) {
    std::optional<Candidate> c = evaluate(p_, full(z));
    if (!c) return kInf;
    if (c->viol <= s_.feas_tol && c->obj < best_.obj) {
      best_ = *c;
      best_z_ = z;
      have_feasible_ = true;
    }
    const EvalResult& e = c->eval;
    double pen = 0.0;
    for (double g : e.inequalities) pen += g > 0.0 ? g * g : 0.0;
    for (double h : e.equalities) pen += h * h;
    return e.objective + mu_ * pen;
  }

  std::vector<double> nelder_mead(const std::vector<double>& z0, double mu) {
    mu_ = mu;
    const int n = static_cast<int>(z0.size());
    std::vector<std::vector<double>> v(n + 1, z0);
    for (int k = 0; k < n; ++k) {
      const Interval& b = p_.box[free_[k]];
      double step = 0.1 * b.width();
      if (z0[k] + step > b.hi()) step = -step;
      v[k + 1][k] += step;
    }
    std::vector<double> f(n + 1);
    for (int i = 0; i <= n; ++i) f[i] = penalized(v[i]);

    const int max_evals = 200 * (n + 1);
    int evals = n + 1;
    std::vector<int> order(n + 1);
    while (evals < max_evals) {
      for (int i = 0; i <= n; ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return f[a] < f[b]; });
      const int lo = order[0], hi = order[n], nh = order[n - 1 < 0 ? 0 : n - 1];
      double size = 0.0;
      for (int i = 0; i <= n; ++i) {
        for (int k = 0; k < n; ++k) size = std::max(size, std::abs(v[i][k] - v[lo][k]));
      }
      if (size <= 1e-10 || (std::isfinite(f[hi]) &&
                            f[hi] - f[lo] <= 1e-14 * (1.0 + std::abs(f[lo])) &&
                            size <= 1e-7)) {
        break;
      }
      std::vector<double> c(n, 0.0);
      for (int i = 0; i <= n; ++i) {
        if (i == hi) continue;
        for (int k = 0; k < n; ++k) c[k] += v[i][k] / n;
      }
      auto along = [&](double t) {
        std::vector<double> z(n);
        for (int k = 0; k < n; ++k) {
          z[k] = p_.box[free_[k]].clamp(c[k] + t * (v[hi][k] - c[k]));
        }
        return z;
      };
      std::vector<double> zr = along(-1.0);
      const double fr = penalized(zr);
      ++evals;
      if (fr < f[lo]) {
        std::vector<double> ze = along(-2.0);
        const double fe = penalized(ze);
        ++evals;
        if (fe < fr) {
          v[hi] = ze;
          f[hi] = fe;
        } else {
          v[hi] = zr;
          f[hi] = fr;
        }
      } else if (fr < f[nh]) {
        v[hi] = zr;
        f[hi] = fr;
      } else {
        std::vector<double> zc = fr < f[hi] ? along(-0.5) : along(0.5);
        const double fc = penalized(zc);
        ++evals;
        if (fc < std::min(fr, f[hi])) {
          v[hi] = zc;
          f[hi] = fc;
        } else {
          for (int i = 0; i <= n; ++i) {
            if (i == lo) continue;
            for (int k = 0; k < n; ++k) v[i][k] = v[lo][k] + 0.5 * (v[i][k] - v[lo][k]);
            f[i] = penalized(v[i]);
            ++evals;
          }
        }
      }
    }
    int best = 0;
    for (int i = 1; i <= n; ++i) {
      if (f[i] < f[best]) best = i;
    }
    return v[best];
  }

  // Bisection on the segment from the best feasible point towards z; keeps
  // the feasible end, which approaches the constraint boundary.
  void restore(const std::vector<double>& z) {
    std::vector<double> a = best_z_, b = z;
    for (int it = 0; it < 60; ++it) {
      std::vector<double> m(a.size());
      for (std::size_t k = 0; k < a.size(); ++k) m[k] = 0.5 * (a[k] + b[k]);
      const Candidate c = candidate(m);
      if (c.viol <= s_.feas_tol) {
        a = m;
      } else {
        b = m;
      }
    }
  }

  std::optional<LocalResult> result() const {
    if (!have_feasible_) return std::nullopt;
    return LocalResult{best_.obj, best_.x};
  }

  const Problem& p_;
  const Settings& s_;
  std::vector<double> base_;
  std::vector<int> free_;
  double mu_ = 1e3;
  Candidate best_;
  std::vector<double> best_z_;
  bool have_feasible_ = false;
};

double objective_interval_lo(const Problem& p, std::vector<Interval> box, bool env) {
  std::vector<Interval> ranges;
  try {
    if (!propagate_bounds(p, box, env, &ranges)) return kInf;
  } catch (const RootFindError&) {
    return -kInf;
  }
  return ranges[p.objective].lo();
}

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.lb != b.lb) return a.lb > b.lb;
    return a.id > b.id;
  }
};

}  // namespace

LpResult simplex_lp(const std::vector<double>& c, const std::vector<std::vector<double>>& A,
                    const std::vector<double>& b, const std::vector<Interval>& bounds) {
  const int n = static_cast<int>(c.size());
  if (static_cast<int>(bounds.size()) != n || A.size() != b.size()) {
    throw DomainError("simplex_lp: dimension mismatch");
  }
  // Shift to y = x - lo, scale rows, drop empty rows.
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (static_cast<int>(A[i].size()) != n) throw DomainError("simplex_lp: row length");
    double scale = 0.0, r = b[i];
    for (int j = 0; j < n; ++j) {
      scale = std::max(scale, std::abs(A[i][j]));
      if (A[i][j] != 0.0) r -= A[i][j] * bounds[j].lo();
    }
    if (scale == 0.0) {
      if (b[i] < -kPhase1Tol * (1.0 + std::abs(b[i]))) return LpResult{};
      continue;
    }
    std::vector<double> row(n);
    for (int j = 0; j < n; ++j) row[j] = A[i][j] / scale;
    rows.push_back(std::move(row));
    rhs.push_back(r / scale);
  }
  const int m = static_cast<int>(rows.size());
  int n_art = 0;
  for (int i = 0; i < m; ++i) n_art += rhs[i] < 0.0 ? 1 : 0;
  const int cols = n + m + n_art;

  Tableau tab(m, cols);
  for (int j = 0; j < n; ++j) tab.upper(j) = bounds[j].width();
  int art = n + m;
  for (int i = 0; i < m; ++i) {
    const double sign = rhs[i] < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) tab.at(i, j) = sign * rows[i][j];
    tab.at(i, n + i) = sign;
    tab.rhs(i) = sign * rhs[i];
    if (sign < 0.0) {
      tab.at(i, art) = 1.0;
      tab.set_basic(i, art);
      ++art;
    } else {
      tab.set_basic(i, n + i);
    }
  }

  if (n_art > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (int j = n + m; j < cols; ++j) phase1[j] = 1.0;
    tab.set_costs(phase1);
    tab.optimize();
    double infeas = 0.0;
    for (int j = n + m; j < cols; ++j) infeas += tab.value(j);
    if (infeas > kPhase1Tol) return LpResult{};
    for (int j = n + m; j < cols; ++j) tab.upper(j) = 0.0;
  }
  std::vector<double> cost(cols, 0.0);
  for (int j = 0; j < n; ++j) cost[j] = c[j];
  tab.set_costs(cost);
  tab.optimize();

  LpResult out;
  out.feasible = true;
  out.x.resize(n);
  out.value = 0.0;
  for (int j = 0; j < n; ++j) {
    out.x[j] = bounds[j].clamp(bounds[j].lo() + tab.value(j));
    out.value += c[j] * out.x[j];
  }
  if (!std::isfinite(out.value)) throw LpError("non-finite LP optimum");
  return out;
}

void Settings::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || !(feas_tol > 0.0)) {
    throw DomainError("tolerances must be positive");
  }
  if (!(max_time > 0.0) || max_iter < 1) throw DomainError("limits must be positive");
  if (multistart_count < 0) throw DomainError("multistart_count must be >= 0");
}

std::string status_name(BnBStatus s) {
  switch (s) {
    case BnBStatus::optimal:
      return "optimal";
    case BnBStatus::time_limit:
      return "time_limit";
    case BnBStatus::iter_limit:
      return "iter_limit";
    case BnBStatus::infeasible:
      return "infeasible";
  }
  return "unknown";
}

LowerBound lower_bound(const Problem& p, const Node& node, const Settings& s,
                       const std::vector<double>* incumbent) {
  const int n = p.n_vars;
  const int cols = n + 1;  // last column: objective epigraph variable
  std::vector<std::vector<double>> refs{node.reference_point};
  if (incumbent != nullptr && inside(node.box, *incumbent)) refs.push_back(*incumbent);

  try {
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    Interval obj_range;
    bool first = true;
    for (const std::vector<double>& ref : refs) {
      const RelaxResult rr = relax_box(p, node.box, ref, s.use_envelopes);
      if (first) {
        for (const Relaxation& g : rr.inequalities) {
          if (g.range.lo() > s.feas_tol) return {kInf, {}};
        }
        for (const Relaxation& h : rr.equalities) {
          if (h.range.lo() > s.feas_tol || h.range.hi() < -s.feas_tol) return {kInf, {}};
        }
        obj_range = rr.objective.range;
        first = false;
      } else {
        Interval both;
        if (intersect(obj_range, rr.objective.range, both)) obj_range = both;
      }
      add_cut(A, b, cols, rr.objective, ref, false, 0.0, n);
      for (const Relaxation& g : rr.inequalities) {
        add_cut(A, b, cols, g, ref, false, s.feas_tol, -1);
      }
      for (const Relaxation& h : rr.equalities) {
        add_cut(A, b, cols, h, ref, false, s.feas_tol, -1);
        add_cut(A, b, cols, h, ref, true, s.feas_tol, -1);
      }
    }
    std::vector<Interval> bounds = node.box;
    bounds.push_back(obj_range);
    std::vector<double> c(cols, 0.0);
    c[n] = 1.0;
    const LpResult lp = simplex_lp(c, A, b, bounds);
    if (!lp.feasible) return {kInf, {}};
    LowerBound out;
    out.lb = std::max(lp.value, obj_range.lo());
    out.lp_solution.assign(lp.x.begin(), lp.x.begin() + n);
    return out;
  } catch (const RootFindError&) {
  } catch (const LpError&) {
  }
  return {objective_interval_lo(p, node.box, s.use_envelopes), {}};
}

std::optional<LocalResult> upper_bound_local(const Problem& p,
                                             const std::vector<double>& start,
                                             const Settings& s) {
  if (static_cast<int>(start.size()) != p.n_vars) {
    throw DomainError("start point dimension does not match the problem");
  }
  return LocalSearch(p, s, start).run();
}

std::optional<std::pair<Node, Node>> branch(const Node& node,
                                            const std::vector<Interval>& root,
                                            const std::vector<int>& dims) {
  int best = -1;
  double best_rel = -1.0;
  for (int j : dims) {
    const double w = node.box[j].width();
    if (w < 1e-12) continue;
    const double rw = root[j].width();
    const double rel = rw > 0.0 ? w / rw : w;
    if (rel > best_rel) {
      best_rel = rel;
      best = j;
    }
  }
  if (best < 0) return std::nullopt;
  const double cut = node.box[best].mid();
  Node left = node, right = node;
  left.box[best] = Interval(node.box[best].lo(), cut);
  right.box[best] = Interval(cut, node.box[best].hi());
  left.depth = right.depth = node.depth + 1;
  left.reference_point = midpoint(left.box);
  right.reference_point = midpoint(right.box);
  return std::make_pair(std::move(left), std::move(right));
}

std::optional<std::pair<Node, Node>> branch(const Node& node,
                                            const std::vector<Interval>& root) {
  std::vector<int> dims(node.box.size());
  for (std::size_t j = 0; j < dims.size(); ++j) dims[j] = static_cast<int>(j);
  return branch(node, root, dims);
}

BnBResult solve(const Problem& p, const Settings& s) {
  s.validate();
  p.validate();
  const auto t0 = std::chrono::steady_clock::now();
  BnBResult res;
  const std::vector<int> dims = p.free_variables();

  std::vector<Interval> root_box = p.box;
  auto finish = [&](BnBStatus st) {
    res.status = st;
    res.wall_time = elapsed(t0);
    res.time_per_iteration = res.iterations > 0 ? res.wall_time / res.iterations : 0.0;
    if (res.incumbent && res.lb > res.ub) res.lb = res.ub;
    return res;
  };
  if (!propagate_bounds(p, root_box, s.use_envelopes)) {
    res.lb = kInf;
    return finish(BnBStatus::infeasible);
  }

  auto offer = [&](const std::optional<LocalResult>& r) {
    if (r && r->ub < res.ub) {
      res.ub = r->ub;
      res.incumbent = r->x;
    }
  };
  auto tol = [&]() { return std::max(s.abs_tol, s.rel_tol * std::abs(res.ub)); };

  // Root multistart from a Latin hypercube over the degrees of freedom.
  {
    std::vector<double> mid = midpoint(root_box);
    offer(upper_bound_local(p, mid, s));
    if (!dims.empty() && s.multistart_count > 0) {
      std::vector<Interval> fb;
      for (int j : dims) fb.push_back(root_box[j]);
      const Eigen::MatrixXd starts =
          lhs_sample(static_cast<int>(dims.size()), s.multistart_count, fb, s.seed);
      for (Eigen::Index r = 0; r < starts.rows(); ++r) {
        std::vector<double> x = mid;
        for (std::size_t k = 0; k < dims.size(); ++k) x[dims[k]] = starts(r, k);
        offer(upper_bound_local(p, x, s));
      }
    }
  }

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  Node root;
  root.box = root_box;
  root.reference_point = midpoint(root_box);
  root.id = next_id++;
  open.push(root);

  double closed_lb = kInf;  // smallest lb among fathomed nodes that were not pruned as infeasible
  double global_lb = -kInf;
  auto current_lb = [&]() {
    double lb = closed_lb;
    if (!open.empty()) lb = std::min(lb, open.top().lb);
    return lb;
  };

  std::optional<BnBStatus> stop;
  while (!open.empty()) {
    global_lb = std::max(global_lb, current_lb());
    if (res.incumbent && res.ub - global_lb <= tol()) break;
    if (elapsed(t0) > s.max_time) {
      stop = BnBStatus::time_limit;
      break;
    }
    if (res.iterations >= s.max_iter) {
      stop = BnBStatus::iter_limit;
      break;
    }
    Node node = open.top();
    open.pop();
    const std::vector<Interval> popped = s.observer ? node.box : std::vector<Interval>{};
    auto notify = [&](NodeFate fate, double lb) {
      if (s.observer) s.observer(NodeEvent{&popped, lb, fate, global_lb, res.ub});
    };
    if (node.lb >= res.ub - tol()) {
      closed_lb = std::min(closed_lb, node.lb);
      notify(NodeFate::bound, node.lb);
      continue;
    }
    ++res.iterations;
    if (s.log_progress && res.iterations % 100 == 0) {
      std::fprintf(stderr, "iter %ld open %zu lb %.10g ub %.10g gap %.3g\n", res.iterations,
                   open.size() + 1, global_lb, res.ub, res.ub - global_lb);
    }

    if (!propagate_bounds(p, node.box, s.use_envelopes)) {
      notify(NodeFate::infeasible, kInf);
      continue;
    }
    node.reference_point = midpoint(node.box);
    const LowerBound lbr =
        lower_bound(p, node, s, res.incumbent ? &*res.incumbent : nullptr);
    node.lb = std::max(node.lb, lbr.lb);
    if (node.lb == kInf) {
      notify(NodeFate::infeasible, kInf);
      continue;
    }

    const std::vector<double>& start =
        lbr.lp_solution.empty() ? node.reference_point : lbr.lp_solution;
    if (!lbr.lp_solution.empty()) {
      if (std::optional<Candidate> c = evaluate(p, lbr.lp_solution)) {
        if (c->viol <= s.feas_tol && c->obj < res.ub) {
          res.ub = c->obj;
          res.incumbent = c->x;
        }
      }
    }
    if (node.lb < res.ub - tol()) offer(upper_bound_local(p, start, s));

    if (node.lb >= res.ub - tol()) {
      closed_lb = std::min(closed_lb, node.lb);
      notify(NodeFate::bound, node.lb);
      continue;
    }
    auto kids = branch(node, root_box, dims);
    if (!kids) {
      closed_lb = std::min(closed_lb, node.lb);
      notify(NodeFate::exhausted, node.lb);
      continue;
    }
    notify(NodeFate::branched, node.lb);
    kids->first.id = next_id++;
    kids->second.id = next_id++;
    open.push(std::move(kids->first));
    open.push(std::move(kids->second));
  }

  global_lb = std::max(global_lb, current_lb());
  res.lb = global_lb;
  if (stop) return finish(*stop);
  if (!res.incumbent) {
    res.lb = kInf;
    return finish(BnBStatus::infeasible);
  }
  return finish(BnBStatus::optimal);
}

}  // namespace gpopt
