#pragma once

#include <string>
#include <utility>
#include <vector>

#include "drmpc/ocp.hpp"

namespace drmpc {

struct RciReport {
  bool certified = false;
  bool inconclusive = false;  // a feasibility solve hit the iteration cap
  // (vertex index, mode) pairs lacking an admissible input.
  std::vector<std::pair<int, int>> counterexamples;
};

/// Certifies the terminal polytope as robustly control invariant: at
/// every vertex and mode there must be one input that satisfies the
/// worst-case (radius 2) constraints and maps into the polytope under
/// every successor mode. All rows are jointly affine in (x, u), so
/// feasible inputs interpolate along edges and vertex certification
/// extends to the whole polytope.
RciReport validate_terminal_rci(const PlantModel& model,
                                std::pair<double, double> beta_range = {0.0,
                                                                        0.5},
                                const SolverSettings& settings = {});

struct LyapunovReport {
  double max_residual = 0.0;     // max over grid of (T V_f)(x, w) - V_f(x, w)
  bool all_feasible = true;
  std::vector<int> infeasible_points;  // grid indices with no admissible input
  double c = 0.0;       // stage-cost curvature bound on the operating region
  double v_bar = 0.0;   // max terminal cost over the grid
  double r_bound = 0.0;  // max |x|^2 over the operating region
  int grid_points = 0;
};

/// Sampled check of the terminal-cost decrease condition on a grid
/// inside the terminal set: one-step problems under the fully robust
/// policy, so a pass holds for every learner state. A grid check is
/// evidence, not a proof; the report says which it is.
LyapunovReport validate_lyapunov(const PlantModel& model,
                                 const std::vector<Vec>& grid,
                                 double beta0 = 0.05,
                                 const SolverSettings& settings = {},
                                 int threads = 1);

/// Axis-aligned grid over the terminal polytope's bounding box, kept to
/// the points inside the polytope.
std::vector<Vec> make_terminal_grid(const PlantModel& model,
                                    int points_per_dim);

/// Combined JSON report {rci, counterexamples, lyapunov_max_residual,
/// c, Vbar, r, ...}.
std::string validation_report_json(const RciReport& rci,
                                   const LyapunovReport& lyapunov);

}  // namespace drmpc
