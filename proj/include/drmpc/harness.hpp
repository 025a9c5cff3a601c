#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drmpc/chain.hpp"
#include "drmpc/mpc.hpp"
#include "drmpc/ocp.hpp"
#include "drmpc/validate.hpp"

namespace drmpc {

/// Experiment description: ground truth, plant, schedule, run plan.
/// See the repository README for the JSON schema.
struct ExperimentConfig {
  TransitionKernel kernel = TransitionKernel::from_matrix(Mat::Ones(1, 1));
  PlantModel model;
  Vec x0;
  int w0 = 1;
  CountMatrix initial_counts;  // zero by default
  std::vector<ConfidenceParams> beta;  // [cost, g_1, ..., g_ng]
  int horizon = 1;
  int steps = 0;
  int runs = 1;
  std::uint64_t base_seed = 1;
  std::vector<Variant> variants = {Variant::kDr};
  std::string output_dir = "out";
  int threads = 1;
  bool write_logs = false;
  SolverSettings solver;
  std::string config_hash;

  AugmentedState initial_state() const;
  void validate() const;
};

/// Parses and schema-checks a config; error messages carry the JSON
/// path of the offending key. The hash is FNV-1a over the canonical
/// serialization and is embedded in all outputs.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

struct ConstraintStats {
  double alpha = 0.0;
  // Exact conditional violation probability sum_w' P[w,w'] 1{g > 0},
  // evaluated at every realized (x_t, u_t, w_t).
  double max_exact_violation = 0.0;
  double mean_exact_violation = 0.0;
  // Realized violation frequency across runs and steps, with a normal-
  // approximation 95% confidence half width.
  double realized_rate = 0.0;
  double realized_ci_half_width = 0.0;
  std::int64_t realized_violations = 0;
  std::int64_t observations = 0;
};

struct VariantStats {
  Variant variant = Variant::kDr;
  int runs = 0;
  int infeasible_runs = 0;
  std::vector<std::uint64_t> infeasible_seeds;
  double mean_cumulative_cost = 0.0;
  std::vector<ConstraintStats> constraints;
  std::vector<double> mean_state_norm_sq;  // E|x_t|^2, t = 0..T
};

struct VerificationReport {
  RciReport rci;
  LyapunovReport lyapunov;
  std::vector<VariantStats> variants;
  // Mean-square summability bound: sum_t E|x_t|^2 against
  // V0/c + (Vbar/c + r) sum_t beta_t.
  double bound_lhs = 0.0;
  double bound_rhs = 0.0;
  double initial_value = 0.0;  // V0 of the learning variant
  double decay_ratio = 0.0;    // E|x_T|^2 / E|x_0|^2 of the learning variant
  std::string config_hash;

  bool guarantees_hold() const;
  std::string to_json() const;
};

/// Runs `runs` closed loops per configured variant (seeds base_seed +
/// k) and derives every statistic from the logs. Requires the terminal
/// certification to pass; reports list any violation.
VerificationReport monte_carlo_verify(const ExperimentConfig& cfg, int runs,
                                      std::vector<TrajectoryLog>* keep_logs =
                                          nullptr);

/// Per-run aggregate rows, ordered by variant then seed.
void write_summary_csv(const ExperimentConfig& cfg,
                       const std::vector<TrajectoryLog>& logs,
                       const std::string& path);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& text);

/// Entry point behind the command-line tool. Returns the process exit
/// code: 0 success, 1 usage/config error, 2 guarantee violation.
int run_cli(int argc, const char* const* argv);

}  // namespace drmpc
