#include "drmpc/mpc.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace drmpc {

namespace {

using nlohmann::json;

// Shortest round-trip decimal form; keeps files byte-stable across runs.
std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::kDr:
      return "dr";
    case Variant::kRobust:
      return "robust";
    case Variant::kNominal:
      return "nominal";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& name) {
  if (name == "dr") return Variant::kDr;
  if (name == "robust") return Variant::kRobust;
  if (name == "nominal") return Variant::kNominal;
  throw ConfigError("unknown variant '" + name +
                    "' (expected dr, robust or nominal)");
}

AmbiguityPolicy make_policy(Variant variant, const TransitionKernel* kernel) {
  AmbiguityPolicy policy;
  switch (variant) {
    case Variant::kDr:
      policy.kind = AmbiguityPolicy::Kind::kLearned;
      break;
    case Variant::kRobust:
      policy.kind = AmbiguityPolicy::Kind::kRobust;
      break;
    case Variant::kNominal:
      policy.kind = AmbiguityPolicy::Kind::kNominal;
      policy.truth = kernel;
      break;
  }
  return policy;
}

std::pair<AugmentedState, StepRecord> closed_loop_step(
    const AugmentedState& z, const PlantModel& model,
    const TransitionKernel& kernel, int horizon, SplitMix64& rng,
    const AmbiguityPolicy& policy, const SolverSettings& settings,
    WarmStart* warm) {
  const AssembledOcp ocp = assemble(z, model, horizon, policy);
  const OcpSolution sol =
      solve_ocp(ocp, settings, warm && warm->valid ? &warm->x : nullptr,
                warm && warm->valid ? &warm->y : nullptr);
  if (warm) {
    warm->x = sol.diagnostics.x;
    warm->y = sol.diagnostics.y;
    warm->valid = true;
  }

  StepRecord rec;
  rec.x = z.x;
  rec.w = z.w;
  rec.u = sol.root_input;
  rec.beta = z.beta.values();
  rec.value = sol.value;
  rec.iterations = sol.diagnostics.iterations;
  rec.cost_incurred = stage_cost(model, z.x, sol.root_input, z.w);

  const int w_next = sample_successor(kernel, z.w, rng);
  rec.w_next = w_next;
  rec.g_realized.reserve(model.constraint_count());
  for (int i = 0; i < model.constraint_count(); ++i) {
    rec.g_realized.push_back(
        constraint_value(model, i, z.x, sol.root_input, z.w, w_next));
  }

  AugmentedState next{successor_state(model, z.x, sol.root_input, w_next),
                      z.s.updated(z.w, w_next), z.beta.stepped(), w_next};
  return {std::move(next), std::move(rec)};
}

TrajectoryLog run_closed_loop(const AugmentedState& z0, const PlantModel& model,
                              const TransitionKernel& kernel, int horizon,
                              int steps, std::uint64_t seed, Variant variant,
                              const SolverSettings& settings,
                              const std::string& config_hash) {
  if (steps < 0) throw Error("step count must be nonnegative");
  TrajectoryLog log;
  log.seed = seed;
  log.variant = variant;
  log.config_hash = config_hash;

  const AmbiguityPolicy policy = make_policy(variant, &kernel);
  SplitMix64 rng(seed);
  WarmStart warm;
  AugmentedState z = z0;

  if (steps == 0) {
    StepRecord rec;
    rec.x = z.x;
    rec.w = z.w;
    rec.beta = z.beta.values();
    try {
      const OcpSolution sol = mpc_law(z, model, horizon, policy, settings);
      rec.u = sol.root_input;
      rec.value = sol.value;
      rec.iterations = sol.diagnostics.iterations;
      rec.cost_incurred = stage_cost(model, z.x, sol.root_input, z.w);
    } catch (const Error& err) {
      rec.feasible = false;
      log.failed = true;
      log.failure = err.what();
    }
    log.steps.push_back(std::move(rec));
    log.final_x = z.x;
    log.final_w = z.w;
    return log;
  }

  for (int t = 0; t < steps; ++t) {
    try {
      auto [next, rec] = closed_loop_step(z, model, kernel, horizon, rng,
                                          policy, settings, &warm);
      rec.t = t;
      log.steps.push_back(std::move(rec));
      z = std::move(next);
    } catch (const Error& err) {
      StepRecord rec;
      rec.t = t;
      rec.x = z.x;
      rec.w = z.w;
      rec.beta = z.beta.values();
      rec.feasible = false;
      log.steps.push_back(std::move(rec));
      log.failed = true;
      log.failure = err.what();
      break;
    }
  }
  log.final_x = z.x;
  log.final_w = z.w;
  return log;
}

void write_jsonl(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  for (const StepRecord& rec : log.steps) {
    json j;
    j["t"] = rec.t;
    j["x"] = std::vector<double>(rec.x.data(), rec.x.data() + rec.x.size());
    j["w"] = rec.w;
    j["u"] = std::vector<double>(rec.u.data(), rec.u.data() + rec.u.size());
    j["beta"] = rec.beta;
    j["value"] = rec.value;
    j["iterations"] = rec.iterations;
    j["w_next"] = rec.w_next;
    j["g"] = rec.g_realized;
    j["stage_cost"] = rec.cost_incurred;
    j["feasible"] = rec.feasible;
    j["seed"] = log.seed;
    j["variant"] = to_string(log.variant);
    j["config"] = log.config_hash;
    out << j.dump() << "\n";
  }
}

void write_csv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "t,x_norm_sq,value,feasible\n";
  for (const StepRecord& rec : log.steps) {
    out << rec.t << "," << format_double(rec.x.squaredNorm()) << ","
        << format_double(rec.value) << "," << (rec.feasible ? 1 : 0) << "\n";
  }
}

std::string log_filename(const std::string& dir, Variant variant,
                         std::uint64_t seed, const std::string& extension) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "run_%s_%" PRIu64 ".%s",
                to_string(variant).c_str(), seed, extension.c_str());
  return dir.empty() ? std::string(buf) : dir + "/" + buf;
}

}  // namespace drmpc
