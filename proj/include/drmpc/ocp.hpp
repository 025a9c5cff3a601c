#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drmpc/chain.hpp"
#include "drmpc/common.hpp"
#include "drmpc/learner.hpp"
#include "drmpc/solver.hpp"
#include "drmpc/tree.hpp"

namespace drmpc {

/// One affine constraint family g(x, u, w, w') <= 0 with data indexed by
/// the current mode w and successor mode w':
///   g = h_x[w-1][w'-1] . x + l_u[w-1][w'-1] . u - rhs(w-1, w'-1).
struct StageConstraint {
  std::vector<std::vector<Vec>> h_x;
  std::vector<std::vector<Vec>> l_u;
  Mat rhs;
  double alpha = 0.0;  // admissible violation rate
};

/// Mode-dependent affine plant with polyhedral costs:
///   x+ = a[w'-1] x + b[w'-1] u + c[w'-1],
///   stage cost |q_cost[w-1] x|_1 + |r_cost[w-1] u|_1,
///   terminal cost |p_cost[w-1] x|_1,
///   terminal set {x : terminal_f x <= terminal_bound}.
struct PlantModel {
  std::vector<Mat> a;
  std::vector<Mat> b;
  std::vector<Vec> c;
  std::vector<Mat> q_cost;
  std::vector<Mat> r_cost;
  std::vector<Mat> p_cost;
  std::vector<StageConstraint> constraints;
  Mat terminal_f;
  Vec terminal_bound;
  std::vector<Vec> terminal_vertices;
  double region_radius = 0.0;  // 2-norm radius of the operating region

  int mode_count() const { return static_cast<int>(a.size()); }
  int nx() const { return a.empty() ? 0 : static_cast<int>(a[0].rows()); }
  int nu() const { return b.empty() ? 0 : static_cast<int>(b[0].cols()); }
  int constraint_count() const { return static_cast<int>(constraints.size()); }

  void validate() const;
};

double stage_cost(const PlantModel& model, const Vec& x, const Vec& u, int w);
double terminal_cost(const PlantModel& model, const Vec& x, int w);
bool in_terminal_set(const PlantModel& model, const Vec& x, double tol = 1e-9);
Vec successor_state(const PlantModel& model, const Vec& x, const Vec& u,
                    int w_next);
double constraint_value(const PlantModel& model, int i, const Vec& x,
                        const Vec& u, int w, int w_next);

/// Controller information state: plant state, transition tally,
/// confidence levels, current mode.
struct AugmentedState {
  Vec x;
  LearnerState s;
  ConfidenceVector beta;
  int w = 1;
};

/// Selects how ambiguity sets and risk levels are derived when the
/// optimal control problem is assembled.
///  - kLearned: sets from the tally and confidence levels (the scheme).
///  - kRobust:  radius 2 everywhere and risk level 0 (pure min-max).
///  - kNominal: singleton sets at the true kernel rows with the raw
///    risk levels (oracle baseline; requires `truth`).
struct AmbiguityPolicy {
  enum class Kind { kLearned, kRobust, kNominal };
  Kind kind = Kind::kLearned;
  const TransitionKernel* truth = nullptr;
  double radius_scale = 1.0;  // diagnostic inflation knob, kLearned only

  AmbiguitySet cost_set(const AugmentedState& z, int node_mode,
                        double beta_cost) const;
  struct ConstraintRisk {
    AmbiguitySet set;
    double alpha_hat = 0.0;
    bool clamped = false;  // risk level hit zero: constraint went robust
  };
  ConstraintRisk constraint_risk(const AugmentedState& z, int node_mode,
                                 double alpha_i, double beta_i) const;
};

/// Variable offsets of the assembled program, per tree node id.
struct OcpIndexMap {
  int nx = 0;
  int nu = 0;
  std::vector<int> x_off;
  std::vector<int> u_off;  // -1 at leaves (no input)
  std::vector<int> tau_off;
};

struct AssembledOcp {
  ConvexProgram program;
  ScenarioTree tree;
  OcpIndexMap map;
  std::vector<std::string> warnings;
};

/// Builds the full risk-averse problem over the scenario tree as one
/// sparse LP: per-node epigraph scalars chain the stage cost through
/// the ambiguous-expectation blocks, every non-leaf node carries the
/// DR-AVaR constraint blocks, leaves carry terminal cost and set. One
/// input per node, so causality holds by construction.
AssembledOcp assemble(const AugmentedState& z, const PlantModel& model,
                      int horizon, const AmbiguityPolicy& policy = {},
                      std::size_t node_cap = 1000000);

struct OcpSolution {
  Vec root_input;
  std::vector<Vec> states;  // per node id
  std::vector<Vec> inputs;  // per node id; empty at leaves
  double value = 0.0;
  Solution diagnostics;
};

/// Solves an assembled problem and extracts the per-node trajectory.
/// Throws InfeasibleOcpError / SolverMaxIterError on failure.
OcpSolution solve_ocp(const AssembledOcp& ocp, const SolverSettings& settings,
                      const Vec* warm_x = nullptr, const Vec* warm_y = nullptr);

/// Receding-horizon control action: root input of an optimal solution.
OcpSolution mpc_law(const AugmentedState& z, const PlantModel& model,
                    int horizon, const AmbiguityPolicy& policy = {},
                    const SolverSettings& settings = {});

/// Re-evaluates the nested cost of a per-node policy with the greedy
/// risk evaluators (no LP involved); cross-check for the LP value.
double evaluate_nested_cost(const AugmentedState& z, const PlantModel& model,
                            const AssembledOcp& ocp,
                            const std::vector<Vec>& states,
                            const std::vector<Vec>& inputs,
                            const AmbiguityPolicy& policy = {});

/// Grid value tables for the Bellman recursion on 1- or 2-dimensional
/// state spaces; the dynamic-programming oracle behind dp_value_grid.
class DpOracle {
 public:
  /// Tables for k steps-to-go, k = 0..horizon-1; horizon >= 1. The cost
  /// confidence at k steps-to-go is the (horizon-k)-times stepped value,
  /// matching the stage indexing of assemble().
  DpOracle(const AugmentedState& z, const PlantModel& model, int horizon,
           std::vector<Vec> x_axes, std::vector<Vec> u_axes,
           const AmbiguityPolicy& policy = {});

  /// Final Bellman step evaluated exactly at the query state (only the
  /// successor values interpolate). +infinity when infeasible.
  double value(const Vec& x, int w) const;

  /// Table lookup of the k-steps-to-go value by interpolation.
  double table_value(int steps_to_go, const Vec& x, int w) const;

 private:
  double bellman(const Vec& x, int w, int steps_to_go) const;
  double interpolate(int steps_to_go, const Vec& x, int w) const;

  const PlantModel* model_;
  AugmentedState z_;
  int horizon_;
  std::vector<Vec> x_axes_, u_axes_;
  AmbiguityPolicy policy_;
  std::vector<std::vector<Vec>> tables_;  // [k][w-1], flattened grid
  std::vector<AmbiguitySet> cost_sets_;   // per steps-to-go 1..N, per mode
  std::vector<AmbiguityPolicy::ConstraintRisk> constraint_risks_;  // [w][i]
};

/// Bellman-recursion value at z over explicit grids; exhaustive input
/// minimization, multilinear state interpolation, +infinity propagation
/// outside the feasible domain.
double dp_value_grid(const AugmentedState& z, const PlantModel& model,
                     int horizon, const std::vector<Vec>& x_axes,
                     const std::vector<Vec>& u_axes,
                     const AmbiguityPolicy& policy = {});

}  // namespace drmpc
