#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "drmpc/risk.hpp"
#include "drmpc/solver.hpp"
#include "oracles.hpp"

using namespace drmpc;

namespace {

// Solves min b s.t. support_function(set, xi) <= b via the epigraph
// rows; the optimum equals the support value.
double support_via_lp(const AmbiguitySet& set, const Vec& xi) {
  ProgramBuilder builder;
  const int b = builder.new_variable(1.0);
  std::vector<LinearExpr> xi_expr;
  for (int j = 0; j < xi.size(); ++j) xi_expr.emplace_back(xi[j]);
  add_support_epigraph(builder, set, xi_expr, LinearExpr::variable(b));
  const Solution sol = solve(builder.build());
  REQUIRE(sol.status == SolveStatus::kOptimal);
  return sol.x[b];
}

double dr_avar_via_lp(const AmbiguitySet& set, double alpha_hat,
                      const Vec& xi) {
  ProgramBuilder builder;
  const int b = builder.new_variable(1.0);
  std::vector<LinearExpr> xi_expr;
  for (int j = 0; j < xi.size(); ++j) xi_expr.emplace_back(xi[j]);
  add_dr_avar_epigraph(builder, set, alpha_hat, xi_expr,
                       LinearExpr::variable(b));
  const Solution sol = solve(builder.build());
  REQUIRE(sol.status == SolveStatus::kOptimal);
  return sol.x[b];
}

AmbiguitySet random_set(SplitMix64& rng, int d) {
  AmbiguitySet set;
  set.center = oracles::random_simplex(rng, d);
  set.radius = 2.0 * rng.next_double();
  return set;
}

}  // namespace

TEST_CASE("support function agrees with the vertex-enumeration oracle") {
  SplitMix64 rng(101);
  for (int trial = 0; trial < 400; ++trial) {
    const int d = 2 + static_cast<int>(rng.next() % 5);
    const AmbiguitySet set = random_set(rng, d);
    const Vec xi = oracles::random_vector(rng, d, -5.0, 5.0);
    const double greedy = support_function(set, xi);
    const double oracle = oracles::support_oracle(set, xi);
    CHECK(std::abs(greedy - oracle) <= 1e-9 * std::max(1.0, std::abs(oracle)));
  }
}

TEST_CASE("worst-case distribution attains the support value") {
  SplitMix64 rng(102);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + static_cast<int>(rng.next() % 5);
    const AmbiguitySet set = random_set(rng, d);
    const Vec xi = oracles::random_vector(rng, d, -3.0, 3.0);
    const Vec p = worst_case_distribution(set, xi);
    CHECK(p.minCoeff() >= -1e-12);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((p - set.center).cwiseAbs().sum() <= set.radius + 1e-9);
    CHECK(p.dot(xi) == doctest::Approx(support_function(set, xi)).epsilon(1e-12));
  }
}

TEST_CASE("support epigraph LP route matches the greedy evaluator") {
  SplitMix64 rng(103);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 2 + static_cast<int>(rng.next() % 5);
    const AmbiguitySet set = random_set(rng, d);
    const Vec xi = oracles::random_vector(rng, d, -4.0, 4.0);
    const double lp = support_via_lp(set, xi);
    const double greedy = support_function(set, xi);
    CHECK(std::abs(lp - greedy) <= 1e-6 * std::max(1.0, std::abs(greedy)));
  }
}

TEST_CASE("avar agrees with the dense-scan oracle") {
  SplitMix64 rng(104);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 2 + static_cast<int>(rng.next() % 5);
    const Vec p = oracles::random_simplex(rng, d);
    const Vec xi = oracles::random_vector(rng, d, -5.0, 5.0);
    const double alpha = 0.02 + 0.96 * rng.next_double();
    const double mine = avar(p, alpha, xi);
    const double oracle = oracles::avar_oracle(p, alpha, xi);
    // The oracle includes the breakpoints, so agreement is exact.
    CHECK(std::abs(mine - oracle) <= 1e-9 * std::max(1.0, std::abs(oracle)));
  }
}

TEST_CASE("avar endpoints") {
  Vec p(3), xi(3);
  p << 0.5, 0.3, 0.2;
  xi << 1.0, -2.0, 4.0;
  CHECK(avar(p, 0.0, xi) == doctest::Approx(4.0));
  CHECK(avar(p, 1.0, xi) == doctest::Approx(p.dot(xi)).epsilon(1e-12));
  // Interpolation: AVaR at alpha covering exactly the top coordinate.
  CHECK(avar(p, 0.2, xi) == doctest::Approx(4.0));
  CHECK(avar(p, 0.4, xi) == doctest::Approx((0.2 * 4.0 + 0.2 * 1.0) / 0.4));
}

TEST_CASE("dr_avar agrees with the oracle and the LP route") {
  SplitMix64 rng(105);
  for (int trial = 0; trial < 120; ++trial) {
    const int d = 2 + static_cast<int>(rng.next() % 5);
    const AmbiguitySet set = random_set(rng, d);
    const Vec xi = oracles::random_vector(rng, d, -5.0, 5.0);
    const double alpha_hat = 0.02 + 0.9 * rng.next_double();
    const double mine = dr_avar(set, alpha_hat, xi);
    const double oracle = oracles::dr_avar_oracle(set, alpha_hat, xi);
    CHECK(std::abs(mine - oracle) <= 1e-9 * std::max(1.0, std::abs(oracle)));
    if (trial % 4 == 0) {
      const double lp = dr_avar_via_lp(set, alpha_hat, xi);
      CHECK(std::abs(lp - mine) <= 1e-6 * std::max(1.0, std::abs(mine)));
    }
  }
}

TEST_CASE("dr_avar dominates avar at the center and respects set growth") {
  SplitMix64 rng(106);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + static_cast<int>(rng.next() % 5);
    AmbiguitySet set = random_set(rng, d);
    const Vec xi = oracles::random_vector(rng, d, -5.0, 5.0);
    const double alpha_hat = 0.05 + 0.9 * rng.next_double();
    const double at_center = avar(set.center, alpha_hat, xi);
    const double robustified = dr_avar(set, alpha_hat, xi);
    CHECK(robustified >= at_center - 1e-9);
    AmbiguitySet larger = set;
    larger.radius = std::min(2.0, set.radius + 0.3);
    CHECK(dr_avar(larger, alpha_hat, xi) >= robustified - 1e-9);
  }
}

TEST_CASE("risk evaluators satisfy the coherence axioms") {
  SplitMix64 rng(107);
  for (int trial = 0; trial < 2500; ++trial) {
    const int d = 2 + static_cast<int>(rng.next() % 5);
    const AmbiguitySet set = random_set(rng, d);
    const double alpha_hat = 0.05 + 0.9 * rng.next_double();
    const Vec xi = oracles::random_vector(rng, d, -5.0, 5.0);
    const Vec eta = oracles::random_vector(rng, d, -5.0, 5.0);
    const double risk_xi = dr_avar(set, alpha_hat, xi);
    const double risk_eta = dr_avar(set, alpha_hat, eta);
    // Monotonicity.
    if ((xi.array() <= eta.array()).all()) {
      CHECK(risk_xi <= risk_eta + 1e-9);
    }
    // Translation equivariance.
    const double shift = -2.0 + 4.0 * rng.next_double();
    const double shifted =
        dr_avar(set, alpha_hat, Vec(xi.array() + shift));
    CHECK(shifted == doctest::Approx(risk_xi + shift).epsilon(1e-9));
    // Positive homogeneity.
    const double scale = 0.1 + 3.0 * rng.next_double();
    const double scaled = dr_avar(set, alpha_hat, Vec(scale * xi));
    CHECK(std::abs(scaled - scale * risk_xi) <=
          1e-9 * std::max(1.0, std::abs(scale * risk_xi)));
    // Subadditivity.
    const double joint = dr_avar(set, alpha_hat, Vec(xi + eta));
    CHECK(joint <= risk_xi + risk_eta + 1e-9);
  }
}

TEST_CASE("adjusted risk level") {
  CHECK(adjusted_alpha(0.1, 0.05) == doctest::Approx(1.0 / 19.0).epsilon(1e-15));
  CHECK(adjusted_alpha(0.1, 0.0) == doctest::Approx(0.1));
  CHECK(adjusted_alpha(0.1, 0.1) == 0.0);
  CHECK(adjusted_alpha(0.1, 0.3) == 0.0);  // clamped: robust constraint
  CHECK(adjusted_alpha(0.5, 0.25) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(adjusted_alpha(0.5, 1.0), Error);
}

TEST_CASE("degenerate parameters collapse to worst-case evaluators") {
  SplitMix64 rng(108);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + static_cast<int>(rng.next() % 5);
    const Vec xi = oracles::random_vector(rng, d, -5.0, 5.0);
    AmbiguitySet vacuous;
    vacuous.center = oracles::random_simplex(rng, d);
    vacuous.radius = 2.0;
    // Full-radius support is the plain maximum.
    CHECK(support_function(vacuous, xi) == doctest::Approx(xi.maxCoeff()));
    // Zero risk level is the robust evaluator regardless of the set.
    AmbiguitySet set = vacuous;
    set.radius = 0.7 * rng.next_double();
    CHECK(dr_avar(set, 0.0, xi) == doctest::Approx(xi.maxCoeff()));
    // Zero radius with alpha = 1 is the plain expectation.
    AmbiguitySet point = set;
    point.radius = 0.0;
    CHECK(dr_avar(point, 1.0, xi) ==
          doctest::Approx(point.center.dot(xi)).epsilon(1e-12));
  }
}

TEST_CASE("support ties break toward the lowest index") {
  AmbiguitySet set;
  set.center = Vec::Constant(3, 1.0 / 3.0);
  set.radius = 0.5;
  Vec xi(3);
  xi << 2.0, 2.0, -1.0;  // argmax tied between coordinates 0 and 1
  const Vec p = worst_case_distribution(set, xi);
  // Budget r/2 = 0.25 moves from the cheapest coordinate onto index 0.
  CHECK(p[0] == doctest::Approx(1.0 / 3.0 + 0.25));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0));
  CHECK(p[2] == doctest::Approx(1.0 / 3.0 - 0.25));
}
