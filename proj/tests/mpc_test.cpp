#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "drmpc/harness.hpp"
#include "drmpc/mpc.hpp"
#include "json.hpp"

using namespace drmpc;

namespace {

ExperimentConfig reference_1d() {
  return load_config(std::string(DRMPC_CONFIG_DIR) + "/reference_1d.json");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("closed-loop steps tally transitions and step confidences") {
  const ExperimentConfig cfg = reference_1d();
  AugmentedState z = cfg.initial_state();
  SplitMix64 rng(42);
  CountMatrix tally = CountMatrix::Zero(2, 2);
  for (int t = 0; t < 20; ++t) {
    const auto [next, rec] = closed_loop_step(z, cfg.model, cfg.kernel,
                                              cfg.horizon, rng);
    REQUIRE(rec.feasible);
    CHECK(rec.t == 0);  // the step itself carries no clock; callers stamp it
    REQUIRE(rec.w_next >= 1);
    tally(rec.w - 1, rec.w_next - 1) += 1;
    CHECK(next.w == rec.w_next);
    // Plant update is the recorded input pushed through the realized mode.
    const Vec expected =
        successor_state(cfg.model, z.x, rec.u, rec.w_next);
    CHECK((next.x - expected).cwiseAbs().maxCoeff() == 0.0);
    // Confidence follows the closed-form schedule.
    for (std::size_t i = 0; i < next.beta.size(); ++i) {
      CHECK(next.beta.value(i) ==
            doctest::Approx(confidence_closed_form(cfg.beta[i], t + 1))
                .epsilon(1e-9));
    }
    z = next;
  }
  CHECK((z.s.counts().array() == tally.array()).all());
  CHECK(tally.sum() == 20);
}

TEST_CASE("zero-step runs record the initial solve only") {
  const ExperimentConfig cfg = reference_1d();
  const TrajectoryLog log =
      run_closed_loop(cfg.initial_state(), cfg.model, cfg.kernel, cfg.horizon,
                      0, 7, Variant::kDr);
  CHECK_FALSE(log.failed);
  REQUIRE(log.steps.size() == 1);
  CHECK(log.steps[0].w_next == 0);  // sentinel: no transition taken
  CHECK(log.steps[0].t == 0);
  CHECK(log.steps[0].feasible);
  CHECK((log.final_x - cfg.x0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("runs are a pure function of the seed") {
  const ExperimentConfig cfg = reference_1d();
  const TrajectoryLog a = run_closed_loop(cfg.initial_state(), cfg.model,
                                          cfg.kernel, cfg.horizon, 15, 99,
                                          Variant::kDr);
  const TrajectoryLog b = run_closed_loop(cfg.initial_state(), cfg.model,
                                          cfg.kernel, cfg.horizon, 15, 99,
                                          Variant::kDr);
  const TrajectoryLog c = run_closed_loop(cfg.initial_state(), cfg.model,
                                          cfg.kernel, cfg.horizon, 15, 100,
                                          Variant::kDr);
  REQUIRE(a.steps.size() == b.steps.size());
  bool same_modes_c = a.steps.size() == c.steps.size();
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    CHECK(a.steps[t].w == b.steps[t].w);
    CHECK((a.steps[t].x - b.steps[t].x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.steps[t].u - b.steps[t].u).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.steps[t].value == b.steps[t].value);
    if (same_modes_c && t < c.steps.size() &&
        a.steps[t].w_next != c.steps[t].w_next) {
      same_modes_c = false;
    }
  }
  CHECK_FALSE(same_modes_c);  // different seed, different sample path
}

TEST_CASE("steps are stamped with consecutive times and incurred costs") {
  const ExperimentConfig cfg = reference_1d();
  const TrajectoryLog log = run_closed_loop(cfg.initial_state(), cfg.model,
                                            cfg.kernel, cfg.horizon, 12, 5,
                                            Variant::kDr);
  REQUIRE(log.steps.size() == 12);
  for (std::size_t t = 0; t < log.steps.size(); ++t) {
    const StepRecord& rec = log.steps[t];
    CHECK(rec.t == static_cast<int>(t));
    CHECK(rec.cost_incurred ==
          doctest::Approx(stage_cost(cfg.model, rec.x, rec.u, rec.w))
              .epsilon(1e-12));
    REQUIRE(rec.g_realized.size() == 1);
    REQUIRE(rec.w_next >= 1);
    CHECK(rec.g_realized[0] ==
          doctest::Approx(constraint_value(cfg.model, 0, rec.x, rec.u, rec.w,
                                           rec.w_next))
              .epsilon(1e-12));
  }
  CHECK(log.final_w == log.steps.back().w_next);
}

TEST_CASE("warm starts do not change the trajectory beyond tolerance") {
  const ExperimentConfig cfg = reference_1d();
  AugmentedState z_cold = cfg.initial_state();
  AugmentedState z_warm = cfg.initial_state();
  SplitMix64 rng_cold(314);
  SplitMix64 rng_warm(314);
  WarmStart warm;
  for (int t = 0; t < 10; ++t) {
    const auto [next_cold, rec_cold] = closed_loop_step(
        z_cold, cfg.model, cfg.kernel, cfg.horizon, rng_cold);
    const auto [next_warm, rec_warm] = closed_loop_step(
        z_warm, cfg.model, cfg.kernel, cfg.horizon, rng_warm, {}, {}, &warm);
    REQUIRE(rec_cold.w_next == rec_warm.w_next);
    CHECK((next_cold.x - next_warm.x).cwiseAbs().maxCoeff() <= 1e-5);
    CHECK(rec_warm.value ==
          doctest::Approx(rec_cold.value).epsilon(1e-5));
    z_cold = next_cold;
    z_warm = next_warm;
  }
  CHECK(warm.valid);
}

TEST_CASE("variant names round-trip and map to the right policies") {
  for (const Variant v : {Variant::kDr, Variant::kRobust, Variant::kNominal}) {
    CHECK(variant_from_string(to_string(v)) == v);
  }
  CHECK_THROWS_AS(variant_from_string("bogus"), Error);

  const ExperimentConfig cfg = reference_1d();
  CHECK(make_policy(Variant::kDr, nullptr).kind ==
        AmbiguityPolicy::Kind::kLearned);
  CHECK(make_policy(Variant::kRobust, nullptr).kind ==
        AmbiguityPolicy::Kind::kRobust);
  const AmbiguityPolicy nominal = make_policy(Variant::kNominal, &cfg.kernel);
  CHECK(nominal.kind == AmbiguityPolicy::Kind::kNominal);
  CHECK(nominal.truth == &cfg.kernel);
}

TEST_CASE("log files are deterministic and well-formed") {
  const ExperimentConfig cfg = reference_1d();
  const TrajectoryLog log = run_closed_loop(cfg.initial_state(), cfg.model,
                                            cfg.kernel, cfg.horizon, 8, 21,
                                            Variant::kDr, {}, "deadbeef");
  const std::string jsonl = log_filename("/tmp", Variant::kDr, 21, "jsonl");
  const std::string csv = log_filename("/tmp", Variant::kDr, 21, "csv");
  write_jsonl(log, jsonl);
  write_csv(log, csv);
  const std::string first_jsonl = slurp(jsonl);
  const std::string first_csv = slurp(csv);
  write_jsonl(log, jsonl);
  write_csv(log, csv);
  CHECK(slurp(jsonl) == first_jsonl);
  CHECK(slurp(csv) == first_csv);

  std::istringstream lines(first_jsonl);
  std::string line;
  int parsed = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("t"));
    CHECK(j.contains("x"));
    CHECK(j.contains("u"));
    CHECK(j.contains("w"));
    ++parsed;
  }
  CHECK(parsed == static_cast<int>(log.steps.size()));
  CHECK(first_csv.find(',') != std::string::npos);
  std::remove(jsonl.c_str());
  std::remove(csv.c_str());
}
