#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <string>

#include "doctest.h"
#include "drmpc/harness.hpp"
#include "drmpc/validate.hpp"
#include "json.hpp"

using namespace drmpc;

namespace {

ExperimentConfig reference_1d() {
  return load_config(std::string(DRMPC_CONFIG_DIR) + "/reference_1d.json");
}

}  // namespace

TEST_CASE("reference terminal set is certified invariant") {
  const ExperimentConfig cfg = reference_1d();
  const RciReport report = validate_terminal_rci(cfg.model);
  CHECK(report.certified);
  CHECK_FALSE(report.inconclusive);
  CHECK(report.counterexamples.empty());
}

TEST_CASE("an escaping terminal set fails certification with witnesses") {
  ExperimentConfig cfg = reference_1d();
  PlantModel model = cfg.model;
  // Cap the input at |u| <= 0.05 and inflate the box to +-1: at the
  // vertex x = 1 the unstable mode needs u <= -0.1, so no admissible
  // input keeps every successor inside.
  model.terminal_bound = Vec::Constant(2, 1.0);
  model.terminal_vertices = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
  const Vec zero_x = Vec::Zero(1);
  for (const double sign : {1.0, -1.0}) {
    StageConstraint cap;
    cap.h_x = {{zero_x, zero_x}, {zero_x, zero_x}};
    cap.l_u = {{Vec::Constant(1, sign), Vec::Constant(1, sign)},
               {Vec::Constant(1, sign), Vec::Constant(1, sign)}};
    cap.rhs = Mat::Constant(2, 2, 0.05);
    cap.alpha = 0.0;
    model.constraints.push_back(cap);
  }
  const RciReport report = validate_terminal_rci(model);
  CHECK_FALSE(report.certified);
  CHECK_FALSE(report.counterexamples.empty());
}

TEST_CASE("terminal grid stays inside the polytope") {
  const ExperimentConfig cfg = reference_1d();
  const std::vector<Vec> grid = make_terminal_grid(cfg.model, 15);
  REQUIRE_FALSE(grid.empty());
  for (const Vec& x : grid) {
    CHECK(((cfg.model.terminal_f * x - cfg.model.terminal_bound).array() <=
           1e-9)
              .all());
  }
}

TEST_CASE("terminal cost decreases on the reference grid") {
  const ExperimentConfig cfg = reference_1d();
  const std::vector<Vec> grid = make_terminal_grid(cfg.model, 21);
  const LyapunovReport report = validate_lyapunov(cfg.model, grid);
  CHECK(report.all_feasible);
  CHECK(report.infeasible_points.empty());
  CHECK(report.max_residual <= 1e-7);
  CHECK(report.grid_points == static_cast<int>(grid.size()));
  CHECK(report.c > 0.0);
  CHECK(report.v_bar > 0.0);
  CHECK(report.r_bound > 0.0);
}

TEST_CASE("a deflated terminal weight breaks the decrease condition") {
  ExperimentConfig cfg = reference_1d();
  PlantModel model = cfg.model;
  for (Mat& p : model.p_cost) p *= 0.01;  // terminal cost too small to decay
  const std::vector<Vec> grid = make_terminal_grid(model, 21);
  const LyapunovReport report = validate_lyapunov(model, grid);
  CHECK(report.max_residual > 1e-7);
}

TEST_CASE("validation report serializes both certificates") {
  const ExperimentConfig cfg = reference_1d();
  const RciReport rci = validate_terminal_rci(cfg.model);
  const std::vector<Vec> grid = make_terminal_grid(cfg.model, 11);
  const LyapunovReport lyapunov = validate_lyapunov(cfg.model, grid);
  const auto j = nlohmann::json::parse(validation_report_json(rci, lyapunov));
  CHECK(j["rci"].get<bool>());
  CHECK_FALSE(j["rci_inconclusive"].get<bool>());
  CHECK(j["lyapunov_max_residual"].get<double>() == lyapunov.max_residual);
  CHECK(j["lyapunov_all_feasible"].get<bool>());
  CHECK(j["lyapunov_is_sampled_check"].get<bool>());
  CHECK(j["c"].get<double>() == lyapunov.c);
  CHECK(j["Vbar"].get<double>() == lyapunov.v_bar);
  CHECK(j["r"].get<double>() == lyapunov.r_bound);
}
