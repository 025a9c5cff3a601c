#include "drmpc/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drmpc/parallel.hpp"
#include "drmpc/risk.hpp"

namespace drmpc {

namespace {
constexpr double kVertexTol = 1e-9;
constexpr double kDpFeasTol = 1e-9;
}  // namespace

void PlantModel::validate() const {
  const int d = mode_count();
  if (d < 1) throw Error("plant needs at least one mode");
  const int n = nx();
  const int m = nu();
  if (n < 1 || m < 1) throw Error("state and input must be nonempty");
  auto want = [&](bool ok, const char* what) {
    if (!ok) throw Error(std::string("plant dimension mismatch: ") + what);
  };
  want(static_cast<int>(b.size()) == d && static_cast<int>(c.size()) == d &&
           static_cast<int>(q_cost.size()) == d &&
           static_cast<int>(r_cost.size()) == d &&
           static_cast<int>(p_cost.size()) == d,
       "per-mode array lengths");
  for (int k = 0; k < d; ++k) {
    want(a[k].rows() == n && a[k].cols() == n, "A");
    want(b[k].rows() == n && b[k].cols() == m, "B");
    want(c[k].size() == n, "c");
    want(q_cost[k].cols() == n && q_cost[k].rows() >= 1, "Q");
    want(r_cost[k].cols() == m && r_cost[k].rows() >= 1, "R");
    want(p_cost[k].cols() == n && p_cost[k].rows() >= 1, "P");
    // Full column rank keeps the stage cost positive definite on rays,
    // which the stability argument needs.
    if (Eigen::ColPivHouseholderQR<Mat>(q_cost[k]).rank() < n ||
        Eigen::ColPivHouseholderQR<Mat>(r_cost[k]).rank() < m) {
      throw Error("stage-cost weights must have full column rank");
    }
  }
  for (const auto& g : constraints) {
    want(static_cast<int>(g.h_x.size()) == d &&
             static_cast<int>(g.l_u.size()) == d,
         "constraint mode arrays");
    for (int w = 0; w < d; ++w) {
      want(static_cast<int>(g.h_x[w].size()) == d &&
               static_cast<int>(g.l_u[w].size()) == d,
           "constraint successor arrays");
      for (int v = 0; v < d; ++v) {
        want(g.h_x[w][v].size() == n && g.l_u[w][v].size() == m,
             "constraint row dimensions");
      }
    }
    want(g.rhs.rows() == d && g.rhs.cols() == d, "constraint offsets");
    if (g.alpha < 0.0 || g.alpha > 1.0) {
      throw Error("constraint violation rate must lie in [0, 1]");
    }
  }
  want(terminal_f.cols() == n && terminal_f.rows() >= 1 &&
           terminal_bound.size() == terminal_f.rows(),
       "terminal set");
  if (terminal_vertices.empty()) {
    throw Error("terminal set needs an explicit vertex list");
  }
  for (const auto& v : terminal_vertices) {
    want(v.size() == n, "terminal vertex dimension");
    if (((terminal_f * v - terminal_bound).array() > kVertexTol).any()) {
      throw Error("terminal vertex violates the terminal halfspaces");
    }
  }
  if (region_radius < 0.0) throw Error("region radius must be nonnegative");
}

double stage_cost(const PlantModel& model, const Vec& x, const Vec& u, int w) {
  return (model.q_cost[w - 1] * x).lpNorm<1>() +
         (model.r_cost[w - 1] * u).lpNorm<1>();
}

double terminal_cost(const PlantModel& model, const Vec& x, int w) {
  return (model.p_cost[w - 1] * x).lpNorm<1>();
}

bool in_terminal_set(const PlantModel& model, const Vec& x, double tol) {
  return ((model.terminal_f * x - model.terminal_bound).array() <= tol).all();
}

Vec successor_state(const PlantModel& model, const Vec& x, const Vec& u,
                    int w_next) {
  return model.a[w_next - 1] * x + model.b[w_next - 1] * u +
         model.c[w_next - 1];
}

double constraint_value(const PlantModel& model, int i, const Vec& x,
                        const Vec& u, int w, int w_next) {
  const StageConstraint& g = model.constraints.at(i);
  return g.h_x[w - 1][w_next - 1].dot(x) + g.l_u[w - 1][w_next - 1].dot(u) -
         g.rhs(w - 1, w_next - 1);
}

AmbiguitySet AmbiguityPolicy::cost_set(const AugmentedState& z, int node_mode,
                                       double beta_cost) const {
  const int d = z.s.mode_count();
  switch (kind) {
    case Kind::kRobust:
      return {Vec::Constant(d, 1.0 / d), 2.0};
    case Kind::kNominal:
      if (!truth) throw Error("nominal policy needs the true kernel");
      return {truth->row(node_mode), 0.0};
    case Kind::kLearned:
    default: {
      AmbiguitySet set = ambiguity_set(z.s, node_mode, beta_cost);
      set.radius = std::clamp(set.radius * radius_scale, 0.0, 2.0);
      return set;
    }
  }
}

AmbiguityPolicy::ConstraintRisk AmbiguityPolicy::constraint_risk(
    const AugmentedState& z, int node_mode, double alpha_i,
    double beta_i) const {
  ConstraintRisk out;
  switch (kind) {
    case Kind::kRobust:
      out.set = {Vec::Constant(z.s.mode_count(), 1.0 / z.s.mode_count()), 2.0};
      out.alpha_hat = 0.0;
      return out;
    case Kind::kNominal:
      if (!truth) throw Error("nominal policy needs the true kernel");
      out.set = {truth->row(node_mode), 0.0};
      out.alpha_hat = alpha_i;
      return out;
    case Kind::kLearned:
    default:
      out.set = ambiguity_set(z.s, node_mode, beta_i);
      out.set.radius = std::clamp(out.set.radius * radius_scale, 0.0, 2.0);
      out.alpha_hat = adjusted_alpha(alpha_i, beta_i);
      out.clamped = out.alpha_hat == 0.0 && alpha_i > 0.0;
      return out;
  }
}

namespace {

void check_state(const AugmentedState& z, const PlantModel& model) {
  if (z.x.size() != model.nx()) throw Error("state dimension mismatch");
  if (z.s.mode_count() != model.mode_count()) {
    throw Error("learner mode count mismatch");
  }
  if (z.w < 1 || z.w > model.mode_count()) throw Error("mode out of range");
  if (z.beta.size() != model.constraints.size() + 1) {
    throw Error("confidence vector must have one cost and n_g entries");
  }
}

// Confidence values along the prediction horizon: entry k holds the
// k-times stepped vector.
std::vector<ConfidenceVector> stage_confidences(const ConfidenceVector& beta,
                                                int horizon) {
  std::vector<ConfidenceVector> out;
  out.reserve(horizon + 1);
  out.push_back(beta);
  for (int k = 0; k < horizon; ++k) out.push_back(out.back().stepped());
  return out;
}

}  // namespace

AssembledOcp assemble(const AugmentedState& z, const PlantModel& model,
                      int horizon, const AmbiguityPolicy& policy,
                      std::size_t node_cap) {
  model.validate();
  check_state(z, model);
  const int d = model.mode_count();
  const int n = model.nx();
  const int m = model.nu();
  const int n_g = model.constraint_count();

  AssembledOcp out{ConvexProgram{},
                   ScenarioTree::build(z.w, horizon, d, node_cap),
                   OcpIndexMap{},
                   {}};
  const ScenarioTree& tree = out.tree;
  ProgramBuilder builder;

  out.map.nx = n;
  out.map.nu = m;
  out.map.x_off.assign(tree.node_count(), -1);
  out.map.u_off.assign(tree.node_count(), -1);
  out.map.tau_off.assign(tree.node_count(), -1);
  for (const TreeNode& node : tree.nodes()) {
    out.map.x_off[node.id] = builder.new_variables(n).front();
    if (!node.children.empty()) {
      out.map.u_off[node.id] = builder.new_variables(m).front();
    }
    out.map.tau_off[node.id] =
        builder.new_variable(node.id == 0 ? 1.0 : 0.0);
  }

  const auto betas = stage_confidences(z.beta, horizon);

  // Constraint risk data is stage-independent: sets and adjusted levels
  // use the solve-time confidences.
  std::vector<AmbiguityPolicy::ConstraintRisk> risks;
  risks.reserve(static_cast<std::size_t>(d) * n_g);
  std::vector<bool> warned(n_g, false);
  for (int w = 1; w <= d; ++w) {
    for (int i = 0; i < n_g; ++i) {
      risks.push_back(policy.constraint_risk(
          z, w, model.constraints[i].alpha, z.beta.value(i + 1)));
      if (risks.back().clamped && policy.kind == AmbiguityPolicy::Kind::kLearned &&
          !warned[i]) {
        warned[i] = true;
        std::ostringstream msg;
        msg << "constraint " << (i + 1) << " enforced robustly: confidence "
            << z.beta.value(i + 1) << " is not below alpha "
            << model.constraints[i].alpha;
        out.warnings.push_back(msg.str());
      }
    }
  }

  // Root state pinned to the measured state.
  for (int r = 0; r < n; ++r) {
    builder.add_eq(LinearExpr::variable(out.map.x_off[0] + r), z.x[r]);
  }

  for (const TreeNode& node : tree.nodes()) {
    const int w = node.mode;
    const int x0 = out.map.x_off[node.id];
    const int tau = out.map.tau_off[node.id];

    if (node.children.empty()) {
      // tau >= |P_w x|_1 via absolute-value splitting, and x in the
      // terminal polytope.
      const Mat& p = model.p_cost[w - 1];
      const auto habs = builder.new_variables(static_cast<int>(p.rows()));
      LinearExpr total;
      for (int r = 0; r < p.rows(); ++r) {
        LinearExpr pos, neg;
        for (int cidx = 0; cidx < n; ++cidx) {
          if (p(r, cidx) != 0.0) {
            pos.add(x0 + cidx, p(r, cidx));
            neg.add(x0 + cidx, -p(r, cidx));
          }
        }
        pos.add(habs[r], -1.0);
        neg.add(habs[r], -1.0);
        builder.add_leq(pos, 0.0);
        builder.add_leq(neg, 0.0);
        total.add(habs[r], 1.0);
      }
      total.add(tau, -1.0);
      builder.add_leq(total, 0.0);
      for (int r = 0; r < model.terminal_f.rows(); ++r) {
        LinearExpr row;
        for (int cidx = 0; cidx < n; ++cidx) {
          if (model.terminal_f(r, cidx) != 0.0) {
            row.add(x0 + cidx, model.terminal_f(r, cidx));
          }
        }
        builder.add_leq(row, model.terminal_bound[r]);
      }
      continue;
    }

    const int u0 = out.map.u_off[node.id];

    // Stage cost |Q_w x|_1 + |R_w u|_1 by absolute-value splitting.
    LinearExpr cost_sum;
    const Mat& q = model.q_cost[w - 1];
    const auto qabs = builder.new_variables(static_cast<int>(q.rows()));
    for (int r = 0; r < q.rows(); ++r) {
      LinearExpr pos, neg;
      for (int cidx = 0; cidx < n; ++cidx) {
        if (q(r, cidx) != 0.0) {
          pos.add(x0 + cidx, q(r, cidx));
          neg.add(x0 + cidx, -q(r, cidx));
        }
      }
      pos.add(qabs[r], -1.0);
      neg.add(qabs[r], -1.0);
      builder.add_leq(pos, 0.0);
      builder.add_leq(neg, 0.0);
      cost_sum.add(qabs[r], 1.0);
    }
    const Mat& rw = model.r_cost[w - 1];
    const auto rabs = builder.new_variables(static_cast<int>(rw.rows()));
    for (int r = 0; r < rw.rows(); ++r) {
      LinearExpr pos, neg;
      for (int cidx = 0; cidx < m; ++cidx) {
        if (rw(r, cidx) != 0.0) {
          pos.add(u0 + cidx, rw(r, cidx));
          neg.add(u0 + cidx, -rw(r, cidx));
        }
      }
      pos.add(rabs[r], -1.0);
      neg.add(rabs[r], -1.0);
      builder.add_leq(pos, 0.0);
      builder.add_leq(neg, 0.0);
      cost_sum.add(rabs[r], 1.0);
    }

    // Dynamics equalities tie each child state to this node.
    for (int j = 0; j < d; ++j) {
      const int child = node.children[j];
      const Mat& aj = model.a[j];
      const Mat& bj = model.b[j];
      for (int r = 0; r < n; ++r) {
        LinearExpr row = LinearExpr::variable(out.map.x_off[child] + r);
        for (int cidx = 0; cidx < n; ++cidx) {
          if (aj(r, cidx) != 0.0) row.add(x0 + cidx, -aj(r, cidx));
        }
        for (int cidx = 0; cidx < m; ++cidx) {
          if (bj(r, cidx) != 0.0) row.add(u0 + cidx, -bj(r, cidx));
        }
        builder.add_eq(row, model.c[j][r]);
      }
    }

    // Cost-to-go recursion: ambiguous expectation of the children's
    // epigraph scalars within the stage-k budget.
    const AmbiguitySet cost_set =
        policy.cost_set(z, w, betas[node.stage].value(0));
    std::vector<LinearExpr> child_tau(d);
    for (int j = 0; j < d; ++j) {
      child_tau[j] = LinearExpr::variable(out.map.tau_off[node.children[j]]);
    }
    LinearExpr budget = LinearExpr::variable(tau);
    LinearExpr minus_cost = cost_sum;
    minus_cost *= -1.0;
    budget += minus_cost;
    add_support_epigraph(builder, cost_set, child_tau, budget);

    // Chance constraints, one DR-AVaR block per constraint.
    for (int i = 0; i < n_g; ++i) {
      const auto& risk = risks[static_cast<std::size_t>(w - 1) * n_g + i];
      const StageConstraint& g = model.constraints[i];
      std::vector<LinearExpr> gi(d);
      for (int j = 0; j < d; ++j) {
        LinearExpr expr(-g.rhs(w - 1, j));
        for (int cidx = 0; cidx < n; ++cidx) {
          if (g.h_x[w - 1][j][cidx] != 0.0) {
            expr.add(x0 + cidx, g.h_x[w - 1][j][cidx]);
          }
        }
        for (int cidx = 0; cidx < m; ++cidx) {
          if (g.l_u[w - 1][j][cidx] != 0.0) {
            expr.add(u0 + cidx, g.l_u[w - 1][j][cidx]);
          }
        }
        gi[j] = expr;
      }
      add_dr_avar_epigraph(builder, risk.set, risk.alpha_hat, gi,
                           LinearExpr(0.0));
    }
  }

  out.program = builder.build();
  return out;
}

OcpSolution solve_ocp(const AssembledOcp& ocp, const SolverSettings& settings,
                      const Vec* warm_x, const Vec* warm_y) {
  const Solution sol = solve(ocp.program, settings, warm_x, warm_y);
  if (sol.status == SolveStatus::kInfeasible) {
    throw InfeasibleOcpError("optimal control problem is infeasible");
  }
  if (sol.status == SolveStatus::kMaxIter) {
    std::ostringstream msg;
    msg << "solver stopped at iteration cap " << sol.iterations
        << " (primal residual " << sol.primal_residual << ", dual "
        << sol.dual_residual << ")";
    throw SolverMaxIterError(msg.str());
  }
  if (sol.status != SolveStatus::kOptimal) {
    throw Error("optimal control problem is unbounded");
  }
  const ScenarioTree& tree = ocp.tree;
  OcpSolution out;
  out.diagnostics = sol;
  out.value = sol.objective;
  out.states.resize(tree.node_count());
  out.inputs.resize(tree.node_count());
  for (const TreeNode& node : tree.nodes()) {
    out.states[node.id] = sol.x.segment(ocp.map.x_off[node.id], ocp.map.nx);
    if (ocp.map.u_off[node.id] >= 0) {
      out.inputs[node.id] = sol.x.segment(ocp.map.u_off[node.id], ocp.map.nu);
    }
  }
  out.root_input = out.inputs[0];
  return out;
}

OcpSolution mpc_law(const AugmentedState& z, const PlantModel& model,
                    int horizon, const AmbiguityPolicy& policy,
                    const SolverSettings& settings) {
  const AssembledOcp ocp = assemble(z, model, horizon, policy);
  return solve_ocp(ocp, settings);
}

double evaluate_nested_cost(const AugmentedState& z, const PlantModel& model,
                            const AssembledOcp& ocp,
                            const std::vector<Vec>& states,
                            const std::vector<Vec>& inputs,
                            const AmbiguityPolicy& policy) {
  const ScenarioTree& tree = ocp.tree;
  const auto betas = stage_confidences(z.beta, tree.horizon());
  std::vector<double> values(tree.node_count(), 0.0);
  // Children carry larger breadth-first ids, so a reverse sweep is a
  // leaves-to-root pass.
  for (int id = tree.node_count() - 1; id >= 0; --id) {
    const TreeNode& node = tree.node(id);
    if (node.children.empty()) {
      values[id] = terminal_cost(model, states[id], node.mode);
      continue;
    }
    Vec child_values(tree.mode_count());
    for (int j = 0; j < tree.mode_count(); ++j) {
      child_values[j] = values[node.children[j]];
    }
    const AmbiguitySet set =
        policy.cost_set(z, node.mode, betas[node.stage].value(0));
    values[id] = stage_cost(model, states[id], inputs[id], node.mode) +
                 support_function(set, child_values);
  }
  return values[0];
}

DpOracle::DpOracle(const AugmentedState& z, const PlantModel& model,
                   int horizon, std::vector<Vec> x_axes,
                   std::vector<Vec> u_axes, const AmbiguityPolicy& policy)
    : model_(&model),
      z_(z),
      horizon_(horizon),
      x_axes_(std::move(x_axes)),
      u_axes_(std::move(u_axes)),
      policy_(policy) {
  model.validate();
  check_state(z, model);
  if (horizon < 0) throw Error("horizon must be nonnegative");
  const int n = model.nx();
  if (n > 2 || static_cast<int>(x_axes_.size()) != n) {
    throw Error("grid oracle supports 1- or 2-dimensional states only");
  }
  if (static_cast<int>(u_axes_.size()) != model.nu() || model.nu() > 2) {
    throw Error("grid oracle supports 1- or 2-dimensional inputs only");
  }
  for (const Vec& axis : x_axes_) {
    if (axis.size() < 2) {
      throw Error("state axes need at least two points");
    }
    for (Eigen::Index i = 0; i + 1 < axis.size(); ++i) {
      if (axis[i + 1] <= axis[i]) {
        throw Error("state axes must be strictly ascending");
      }
    }
  }
  for (const Vec& axis : u_axes_) {
    if (axis.size() < 1) throw Error("input axes must be nonempty");
  }
  const int d = model.mode_count();
  const int n_g = model.constraint_count();

  const auto betas = stage_confidences(z.beta, horizon);
  cost_sets_.reserve(static_cast<std::size_t>(std::max(horizon, 0)) * d);
  for (int k = 1; k <= horizon; ++k) {
    for (int w = 1; w <= d; ++w) {
      // k steps to go sits at prediction stage horizon - k.
      cost_sets_.push_back(
          policy.cost_set(z, w, betas[horizon - k].value(0)));
    }
  }
  constraint_risks_.reserve(static_cast<std::size_t>(d) * n_g);
  for (int w = 1; w <= d; ++w) {
    for (int i = 0; i < n_g; ++i) {
      constraint_risks_.push_back(policy.constraint_risk(
          z, w, model.constraints[i].alpha, z.beta.value(i + 1)));
    }
  }

  // Flattened grid, row-major over the axes.
  std::size_t grid_size = 1;
  for (const Vec& axis : x_axes_) grid_size *= axis.size();
  const auto grid_point = [&](std::size_t flat) {
    Vec x(n);
    for (int dim = n - 1; dim >= 0; --dim) {
      const std::size_t len = x_axes_[dim].size();
      x[dim] = x_axes_[dim][flat % len];
      flat /= len;
    }
    return x;
  };

  tables_.resize(std::max(horizon, 1));
  tables_[0].assign(d, Vec::Constant(grid_size, kInf));
  for (int w = 1; w <= d; ++w) {
    Vec& table = tables_[0][w - 1];
    for (std::size_t g = 0; g < grid_size; ++g) {
      const Vec x = grid_point(g);
      if (in_terminal_set(model, x, kVertexTol)) {
        table[g] = terminal_cost(model, x, w);
      }
    }
  }
  for (int k = 1; k < horizon; ++k) {
    tables_[k].assign(d, Vec::Constant(grid_size, kInf));
    for (int w = 1; w <= d; ++w) {
      Vec& table = tables_[k][w - 1];
      parallel_for(static_cast<std::ptrdiff_t>(grid_size), 0,
                   [&](std::ptrdiff_t g) {
                     table[g] = bellman(grid_point(g), w, k);
                   });
    }
  }
}

double DpOracle::interpolate(int steps_to_go, const Vec& x, int w) const {
  const std::vector<Vec>& table_set = tables_[steps_to_go];
  const Vec& table = table_set[w - 1];
  const int n = static_cast<int>(x_axes_.size());
  // Cell index and barycentric weight per dimension; outside the grid
  // counts as infeasible.
  int cell[2] = {0, 0};
  double theta[2] = {0.0, 0.0};
  for (int dim = 0; dim < n; ++dim) {
    const Vec& axis = x_axes_[dim];
    const double v = x[dim];
    if (v < axis[0] || v > axis[axis.size() - 1]) return kInf;
    const double* begin = axis.data();
    const double* end = axis.data() + axis.size();
    const double* it = std::upper_bound(begin, end, v);
    std::ptrdiff_t hi = it - begin;
    if (hi >= axis.size()) hi = axis.size() - 1;
    if (hi < 1) hi = 1;
    cell[dim] = static_cast<int>(hi - 1);
    theta[dim] = (v - axis[cell[dim]]) / (axis[cell[dim] + 1] - axis[cell[dim]]);
  }
  if (n == 1) {
    const double v0 = table[cell[0]];
    const double v1 = table[cell[0] + 1];
    if (v0 == kInf || v1 == kInf) return kInf;
    return (1.0 - theta[0]) * v0 + theta[0] * v1;
  }
  const std::size_t len1 = x_axes_[1].size();
  const double v00 = table[cell[0] * len1 + cell[1]];
  const double v01 = table[cell[0] * len1 + cell[1] + 1];
  const double v10 = table[(cell[0] + 1) * len1 + cell[1]];
  const double v11 = table[(cell[0] + 1) * len1 + cell[1] + 1];
  if (v00 == kInf || v01 == kInf || v10 == kInf || v11 == kInf) return kInf;
  return (1.0 - theta[0]) * ((1.0 - theta[1]) * v00 + theta[1] * v01) +
         theta[0] * ((1.0 - theta[1]) * v10 + theta[1] * v11);
}

double DpOracle::table_value(int steps_to_go, const Vec& x, int w) const {
  if (steps_to_go < 0 || steps_to_go >= static_cast<int>(tables_.size())) {
    throw Error("steps-to-go outside table range");
  }
  return interpolate(steps_to_go, x, w);
}

double DpOracle::bellman(const Vec& x, int w, int steps_to_go) const {
  const PlantModel& model = *model_;
  const int d = model.mode_count();
  const int n_g = model.constraint_count();
  const int nu = model.nu();

  const double x_cost = (model.q_cost[w - 1] * x).lpNorm<1>();
  // Constraint and successor pieces that do not depend on u.
  std::vector<double> g_const(static_cast<std::size_t>(n_g) * d);
  for (int i = 0; i < n_g; ++i) {
    const StageConstraint& g = model.constraints[i];
    for (int j = 0; j < d; ++j) {
      g_const[static_cast<std::size_t>(i) * d + j] =
          g.h_x[w - 1][j].dot(x) - g.rhs(w - 1, j);
    }
  }
  std::vector<Vec> ax(d);
  for (int j = 0; j < d; ++j) ax[j] = model.a[j] * x + model.c[j];

  const AmbiguitySet& cost_set =
      cost_sets_[static_cast<std::size_t>(steps_to_go - 1) * d + (w - 1)];

  Vec u(nu), gi(d), child(d);
  Vec succ(model.nx());
  double best = kInf;
  const std::size_t u_count0 = u_axes_[0].size();
  const std::size_t u_count1 = nu > 1 ? u_axes_[1].size() : 1;
  for (std::size_t i0 = 0; i0 < u_count0; ++i0) {
    u[0] = u_axes_[0][i0];
    for (std::size_t i1 = 0; i1 < u_count1; ++i1) {
      if (nu > 1) u[1] = u_axes_[1][i1];

      bool feasible = true;
      for (int i = 0; i < n_g && feasible; ++i) {
        const StageConstraint& g = model.constraints[i];
        for (int j = 0; j < d; ++j) {
          gi[j] = g_const[static_cast<std::size_t>(i) * d + j] +
                  g.l_u[w - 1][j].dot(u);
        }
        const auto& risk =
            constraint_risks_[static_cast<std::size_t>(w - 1) * n_g + i];
        if (dr_avar(risk.set, risk.alpha_hat, gi) > kDpFeasTol) {
          feasible = false;
        }
      }
      if (!feasible) continue;

      const Mat& rw = model.r_cost[w - 1];
      double u_cost = 0.0;
      for (Eigen::Index r = 0; r < rw.rows(); ++r) {
        double acc = 0.0;
        for (int cidx = 0; cidx < nu; ++cidx) acc += rw(r, cidx) * u[cidx];
        u_cost += std::abs(acc);
      }
      double value = x_cost + u_cost;
      for (int j = 0; j < d && value < kInf; ++j) {
        succ.noalias() = ax[j] + model.b[j] * u;
        const double v = interpolate(steps_to_go - 1, succ, j + 1);
        if (v == kInf) {
          value = kInf;
          break;
        }
        child[j] = v;
      }
      if (value == kInf) continue;
      value += support_function(cost_set, child);
      best = std::min(best, value);
    }
  }
  return best;
}

double DpOracle::value(const Vec& x, int w) const {
  if (horizon_ == 0) {
    if (!in_terminal_set(*model_, x, kVertexTol)) return kInf;
    return terminal_cost(*model_, x, w);
  }
  return bellman(x, w, horizon_);
}

double dp_value_grid(const AugmentedState& z, const PlantModel& model,
                     int horizon, const std::vector<Vec>& x_axes,
                     const std::vector<Vec>& u_axes,
                     const AmbiguityPolicy& policy) {
  const DpOracle oracle(z, model, horizon, x_axes, u_axes, policy);
  return oracle.value(z.x, z.w);
}

}  // namespace drmpc
