#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drmpc/chain.hpp"
#include "drmpc/ocp.hpp"

namespace drmpc {

/// Closed-loop controller flavor: the learning scheme, the min-max
/// baseline, or the oracle that knows the true kernel.
enum class Variant { kDr, kRobust, kNominal };

std::string to_string(Variant variant);
Variant variant_from_string(const std::string& name);

/// The ambiguity policy a variant induces. `kernel` backs the nominal
/// oracle and may be null for the other variants.
AmbiguityPolicy make_policy(Variant variant, const TransitionKernel* kernel);

struct StepRecord {
  int t = 0;
  Vec x;
  int w = 1;
  Vec u;
  std::vector<double> beta;
  double value = 0.0;
  int iterations = 0;
  int w_next = 0;                   // 0 when no transition was taken
  std::vector<double> g_realized;   // g_i at (x, u, w, w_next)
  double cost_incurred = 0.0;       // stage cost at (x, u, w)
  bool feasible = true;
};

struct TrajectoryLog {
  std::vector<StepRecord> steps;
  std::uint64_t seed = 0;
  Variant variant = Variant::kDr;
  std::string config_hash;
  bool failed = false;
  std::string failure;
  Vec final_x;
  int final_w = 1;
};

/// Solver iterate pair carried between consecutive solves of the same
/// tree layout; purely a speedup, never changes results beyond solver
/// tolerances.
struct WarmStart {
  Vec x, y;
  bool valid = false;
};

/// One receding-horizon step: solve, apply the root input, sample the
/// mode transition, update tally and confidences. Throws
/// InfeasibleOcpError / SolverMaxIterError; callers mark the run failed.
std::pair<AugmentedState, StepRecord> closed_loop_step(
    const AugmentedState& z, const PlantModel& model,
    const TransitionKernel& kernel, int horizon, SplitMix64& rng,
    const AmbiguityPolicy& policy = {}, const SolverSettings& settings = {},
    WarmStart* warm = nullptr);

/// T closed-loop steps from z0 under the given variant. A failed step
/// ends the run with the log marked failed; T = 0 records the initial
/// solve only.
TrajectoryLog run_closed_loop(const AugmentedState& z0, const PlantModel& model,
                              const TransitionKernel& kernel, int horizon,
                              int steps, std::uint64_t seed, Variant variant,
                              const SolverSettings& settings = {},
                              const std::string& config_hash = "");

/// One JSON object per step.
void write_jsonl(const TrajectoryLog& log, const std::string& path);

/// Summary rows (t, |x|^2, value, feasible); fixed formatting so equal
/// runs produce byte-identical files.
void write_csv(const TrajectoryLog& log, const std::string& path);

std::string log_filename(const std::string& dir, Variant variant,
                         std::uint64_t seed, const std::string& extension);

}  // namespace drmpc
