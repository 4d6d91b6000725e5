#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gpopt/problem.hpp"

namespace gpopt {

struct LpResult {
  bool feasible = false;
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
};

/// min c^T x s.t. A x <= b, x in bounds. A is row-major, rows of length
/// c.size(). Throws LpError on numerical breakdown.
LpResult simplex_lp(const std::vector<double>& c, const std::vector<std::vector<double>>& A,
                    const std::vector<double>& b, const std::vector<Interval>& bounds);

struct Node;

/// What happened to a node taken off the open list.
enum class NodeFate { bound, infeasible, exhausted, branched };

struct NodeEvent {
  const std::vector<Interval>* box = nullptr;  ///< as taken off the list
  double lb = 0.0;                             ///< +inf when infeasible
  NodeFate fate = NodeFate::bound;
  double global_lb = 0.0;
  double ub = 0.0;
};

struct Settings {
  double abs_tol = 1e-3;
  double rel_tol = 1e-3;
  double feas_tol = 1e-6;
  double max_time = 60.0;
  long max_iter = 1000000;
  int multistart_count = 20;
  bool use_envelopes = true;
  std::uint64_t seed = 0;
  bool log_progress = false;
  /// Optional observer, called once per node taken off the open list.
  std::function<void(const NodeEvent&)> observer;

  void validate() const;
};

enum class BnBStatus { optimal, time_limit, iter_limit, infeasible };
std::string status_name(BnBStatus s);

struct BnBResult {
  BnBStatus status = BnBStatus::infeasible;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  std::optional<std::vector<double>> incumbent;
  long iterations = 0;
  double wall_time = 0.0;
  double time_per_iteration = 0.0;
};

struct Node {
  std::vector<Interval> box;
  double lb = -std::numeric_limits<double>::infinity();
  int depth = 0;
  std::vector<double> reference_point;
  long id = 0;
};

struct LowerBound {
  double lb = -std::numeric_limits<double>::infinity();
  std::vector<double> lp_solution;  ///< empty when the LP was not solved
};

/// Linearizes the relaxations at the node reference point (and at the
/// incumbent when it lies in the box) and solves the resulting LP. +inf
/// means the node holds no feasible point.
LowerBound lower_bound(const Problem& p, const Node& node, const Settings& s,
                       const std::vector<double>* incumbent = nullptr);

struct LocalResult {
  double ub = std::numeric_limits<double>::infinity();
  std::vector<double> x;
};

/// Nelder-Mead over the free variables of p within p.box, quadratic penalty
/// on constraints. Returns only points feasible to s.feas_tol.
std::optional<LocalResult> upper_bound_local(const Problem& p,
                                             const std::vector<double>& start,
                                             const Settings& s);

/// Bisects the dimension with the largest width relative to root; ties go to
/// the lowest index. Returns nothing when all widths are below 1e-12.
std::optional<std::pair<Node, Node>> branch(const Node& node,
                                            const std::vector<Interval>& root);
/// As above, restricted to the candidate dimensions dims.
std::optional<std::pair<Node, Node>> branch(const Node& node,
                                            const std::vector<Interval>& root,
                                            const std::vector<int>& dims);

BnBResult solve(const Problem& p, const Settings& s);

}  // namespace gpopt
