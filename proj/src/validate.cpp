#include "drmpc/validate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drmpc/parallel.hpp"
#include "drmpc/risk.hpp"

namespace drmpc {

namespace {

// One-step admissibility at (x, w) under the fully robust constraint
// set: worst-case chance constraints plus re-entry of every successor
// into the terminal polytope.
ConvexProgram rci_feasibility_program(const PlantModel& model, const Vec& x,
                                      int w, double alpha_hat_beta) {
  const int d = model.mode_count();
  const int m = model.nu();
  ProgramBuilder builder;
  const std::vector<int> u = builder.new_variables(m);
  const AmbiguitySet robust{Vec::Constant(d, 1.0 / d), 2.0};
  for (int i = 0; i < model.constraint_count(); ++i) {
    const StageConstraint& g = model.constraints[i];
    // At radius 2 the DR-AVaR equals the max over successor modes for
    // every risk level below one, so the adjusted level cannot weaken
    // the certificate; it is still derived from the given confidence.
    const double alpha_hat = adjusted_alpha(g.alpha, alpha_hat_beta);
    std::vector<LinearExpr> gi(d);
    for (int j = 0; j < d; ++j) {
      LinearExpr expr(g.h_x[w - 1][j].dot(x) - g.rhs(w - 1, j));
      for (int cidx = 0; cidx < m; ++cidx) {
        if (g.l_u[w - 1][j][cidx] != 0.0) {
          expr.add(u[cidx], g.l_u[w - 1][j][cidx]);
        }
      }
      gi[j] = expr;
    }
    add_dr_avar_epigraph(builder, robust, alpha_hat, gi, LinearExpr(0.0));
  }
  for (int j = 0; j < d; ++j) {
    const Vec base = model.a[j] * x + model.c[j];
    const Mat fb = model.terminal_f * model.b[j];
    const Vec rhs = model.terminal_bound - model.terminal_f * base;
    for (int r = 0; r < model.terminal_f.rows(); ++r) {
      LinearExpr row;
      for (int cidx = 0; cidx < m; ++cidx) {
        if (fb(r, cidx) != 0.0) row.add(u[cidx], fb(r, cidx));
      }
      builder.add_leq(row, rhs[r]);
    }
  }
  return builder.build();
}

}  // namespace

RciReport validate_terminal_rci(const PlantModel& model,
                                std::pair<double, double> beta_range,
                                const SolverSettings& settings) {
  model.validate();
  if (beta_range.first < 0.0 || beta_range.first > beta_range.second ||
      beta_range.second >= 1.0) {
    throw Error("confidence range must satisfy 0 <= lo <= hi < 1");
  }
  RciReport report;
  report.certified = true;
  const int d = model.mode_count();
  for (int v = 0; v < static_cast<int>(model.terminal_vertices.size()); ++v) {
    for (int w = 1; w <= d; ++w) {
      const ConvexProgram prog = rci_feasibility_program(
          model, model.terminal_vertices[v], w, beta_range.first);
      switch (feasibility(prog, settings)) {
        case FeasibilityStatus::kFeasible:
          break;
        case FeasibilityStatus::kInfeasible:
          report.certified = false;
          report.counterexamples.emplace_back(v, w);
          break;
        case FeasibilityStatus::kInconclusive:
          report.certified = false;
          report.inconclusive = true;
          report.counterexamples.emplace_back(v, w);
          break;
      }
    }
  }
  return report;
}

LyapunovReport validate_lyapunov(const PlantModel& model,
                                 const std::vector<Vec>& grid, double beta0,
                                 const SolverSettings& settings, int threads) {
  model.validate();
  if (grid.empty()) throw Error("validation grid is empty");
  const int d = model.mode_count();
  const int n_g = model.constraint_count();

  LyapunovReport report;
  report.grid_points = static_cast<int>(grid.size());

  // One-step value under the fully robust policy: a pass covers every
  // learner state and confidence level.
  AmbiguityPolicy robust;
  robust.kind = AmbiguityPolicy::Kind::kRobust;
  std::vector<ConfidenceParams> params(
      static_cast<std::size_t>(n_g) + 1,
      ConfidenceParams{beta0, 2.0, ConfidenceParams::Schedule::kPolynomial,
                       0.0});
  const ConfidenceVector beta = ConfidenceVector::initial(params);
  const LearnerState tally(d);

  struct PointResult {
    double residual = -kInf;
    bool infeasible = false;
  };
  std::vector<PointResult> results(grid.size() * static_cast<std::size_t>(d));

  parallel_for(
      static_cast<std::ptrdiff_t>(results.size()), threads,
      [&](std::ptrdiff_t idx) {
        const std::size_t g = static_cast<std::size_t>(idx) /
                              static_cast<std::size_t>(d);
        const int w = static_cast<int>(idx % d) + 1;
        const Vec& x = grid[g];
        if (!in_terminal_set(model, x, 1e-9)) {
          results[idx].infeasible = true;
          return;
        }
        const AugmentedState z{x, tally, beta, w};
        try {
          const OcpSolution sol = mpc_law(z, model, 1, robust, settings);
          results[idx].residual = sol.value - terminal_cost(model, x, w);
        } catch (const Error&) {
          results[idx].infeasible = true;
        }
      });

  report.max_residual = -kInf;
  for (std::size_t idx = 0; idx < results.size(); ++idx) {
    if (results[idx].infeasible) {
      report.all_feasible = false;
      report.infeasible_points.push_back(static_cast<int>(idx));
    } else {
      report.max_residual = std::max(report.max_residual, results[idx].residual);
    }
  }

  // Smallest singular value of each Q_w via the spectrum of Q'Q; the
  // l1 stage cost dominates c |x|^2 on the operating region with
  // c = min_w sigma_min(Q_w) / radius.
  double c = kInf;
  for (int w = 0; w < d; ++w) {
    const Mat gram = model.q_cost[w].transpose() * model.q_cost[w];
    Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
    c = std::min(c, std::sqrt(std::max(eig.eigenvalues().minCoeff(), 0.0)));
  }
  const double radius = model.region_radius;
  report.c = radius > 0.0 ? c / radius : c;
  report.r_bound = radius * radius;
  report.v_bar = 0.0;
  for (const Vec& x : grid) {
    for (int w = 1; w <= d; ++w) {
      report.v_bar = std::max(report.v_bar, terminal_cost(model, x, w));
    }
  }
  return report;
}

std::vector<Vec> make_terminal_grid(const PlantModel& model,
                                    int points_per_dim) {
  model.validate();
  if (points_per_dim < 2) throw Error("grid needs at least two points per dim");
  const int n = model.nx();
  Vec lo = model.terminal_vertices.front();
  Vec hi = lo;
  for (const Vec& v : model.terminal_vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  std::vector<Vec> grid;
  std::vector<int> idx(n, 0);
  while (true) {
    Vec x(n);
    for (int dim = 0; dim < n; ++dim) {
      const double theta =
          static_cast<double>(idx[dim]) / (points_per_dim - 1);
      x[dim] = lo[dim] + theta * (hi[dim] - lo[dim]);
    }
    if (in_terminal_set(model, x, 1e-9)) grid.push_back(x);
    int dim = n - 1;
    while (dim >= 0 && ++idx[dim] == points_per_dim) {
      idx[dim] = 0;
      --dim;
    }
    if (dim < 0) break;
  }
  return grid;
}

std::string validation_report_json(const RciReport& rci,
                                   const LyapunovReport& lyapunov) {
  std::ostringstream out;
  out.precision(17);
  out << "{\"rci\":" << (rci.certified ? "true" : "false")
      << ",\"rci_inconclusive\":" << (rci.inconclusive ? "true" : "false")
      << ",\"counterexamples\":[";
  for (std::size_t k = 0; k < rci.counterexamples.size(); ++k) {
    out << (k ? "," : "") << "{\"vertex\":" << rci.counterexamples[k].first
        << ",\"mode\":" << rci.counterexamples[k].second << "}";
  }
  out << "],\"lyapunov_max_residual\":" << lyapunov.max_residual
      << ",\"lyapunov_all_feasible\":"
      << (lyapunov.all_feasible ? "true" : "false")
      << ",\"lyapunov_grid_points\":" << lyapunov.grid_points
      << ",\"lyapunov_is_sampled_check\":true"
      << ",\"c\":" << lyapunov.c << ",\"Vbar\":" << lyapunov.v_bar
      << ",\"r\":" << lyapunov.r_bound << "}";
  return out.str();
}

}  // namespace drmpc
