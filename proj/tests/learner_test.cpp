#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "drmpc/chain.hpp"
#include "drmpc/learner.hpp"

using namespace drmpc;

namespace {

LearnerState state_with(int d, std::initializer_list<std::int64_t> rows) {
  CountMatrix counts(d, d);
  int k = 0;
  for (auto v : rows) counts(k / d, k % d) = v, ++k;
  return LearnerState::from_counts(counts);
}

double radius_reference(int d, std::int64_t n, double beta) {
  // sqrt(2 (ln(2^d - 2) - ln beta) / n) computed the direct way; valid
  // for the d and n used below (no overflow).
  const double inner = std::log(std::pow(2.0, d) - 2.0) - std::log(beta);
  return std::min(2.0, std::sqrt(2.0 * inner / static_cast<double>(n)));
}

}  // namespace

TEST_CASE("counts update immutably and tally per pair") {
  LearnerState s(3);
  CHECK(s.row_total(1) == 0);
  const LearnerState s2 = s.updated(1, 3).updated(1, 3).updated(2, 1);
  CHECK(s.count(1, 3) == 0);
  CHECK(s2.count(1, 3) == 2);
  CHECK(s2.count(2, 1) == 1);
  CHECK(s2.row_total(1) == 2);
  CHECK(s2.row_total(3) == 0);
}

TEST_CASE("empirical row is the normalized tally, uniform when empty") {
  const LearnerState s = state_with(2, {3, 1, 0, 0});
  const Vec row1 = s.empirical_row(1);
  CHECK(row1[0] == doctest::Approx(0.75));
  CHECK(row1[1] == doctest::Approx(0.25));
  const Vec row2 = s.empirical_row(2);
  CHECK(row2[0] == doctest::Approx(0.5));
  CHECK(row2[1] == doctest::Approx(0.5));
}

TEST_CASE("ambiguity radius matches the concentration formula") {
  const LearnerState s = state_with(3, {6, 3, 1, 0, 0, 0, 0, 0, 0});
  const RadiusResult r = ambiguity_radius(s, 1, 0.05);
  CHECK(!r.degenerate);
  CHECK(r.value == doctest::Approx(radius_reference(3, 10, 0.05)).epsilon(1e-12));
  // Frozen value, independent evaluation: sqrt(2 (ln 6 - ln 0.05) / 10).
  CHECK(r.value == doctest::Approx(0.97851844569042704).epsilon(1e-12));
}

TEST_CASE("radius edge cases") {
  SUBCASE("no observations give the vacuous radius") {
    const LearnerState s = state_with(2, {0, 0, 5, 5});
    CHECK(ambiguity_radius(s, 1, 0.1).value == 2.0);
  }
  SUBCASE("single mode gives the singleton simplex") {
    CountMatrix counts(1, 1);
    counts(0, 0) = 7;
    const LearnerState s = LearnerState::from_counts(counts);
    CHECK(ambiguity_radius(s, 1, 0.1).value == 0.0);
  }
  SUBCASE("nonpositive beta degenerates to the vacuous radius") {
    const LearnerState s = state_with(2, {50, 50, 0, 0});
    const RadiusResult r = ambiguity_radius(s, 1, 0.0);
    CHECK(r.value == 2.0);
    CHECK(r.degenerate);
  }
  SUBCASE("few samples cap at two") {
    const LearnerState s = state_with(6, {1, 0, 0, 0, 0, 0,  //
                                          0, 0, 0, 0, 0, 0,  //
                                          0, 0, 0, 0, 0, 0,  //
                                          0, 0, 0, 0, 0, 0,  //
                                          0, 0, 0, 0, 0, 0,  //
                                          0, 0, 0, 0, 0, 0});
    CHECK(ambiguity_radius(s, 1, 0.05).value == 2.0);
  }
  SUBCASE("radius shrinks with more data") {
    double prev = 2.0;
    for (std::int64_t n : {10, 100, 1000, 10000}) {
      const LearnerState s = state_with(2, {n, 0, 0, 0});
      const double r = ambiguity_radius(s, 1, 0.05).value;
      CHECK(r < prev);
      prev = r;
    }
  }
  SUBCASE("large mode counts stay finite") {
    // ln(2^d - 2) must not overflow for wide chains.
    CountMatrix counts = CountMatrix::Zero(40, 40);
    counts(0, 0) = 1000;
    const LearnerState s = LearnerState::from_counts(counts);
    const double r = ambiguity_radius(s, 1, 0.05).value;
    CHECK(std::isfinite(r));
    const double direct = std::sqrt(
        2.0 * (40 * std::log(2.0) + std::log1p(-std::pow(2.0, 1 - 40)) -
               std::log(0.05)) /
        1000.0);
    CHECK(r == doctest::Approx(std::min(2.0, direct)).epsilon(1e-12));
  }
}

TEST_CASE("ambiguity set composes center and radius") {
  const LearnerState s = state_with(2, {8, 2, 0, 0});
  const AmbiguitySet set = ambiguity_set(s, 1, 0.05);
  CHECK(set.center[0] == doctest::Approx(0.8));
  CHECK(set.center[1] == doctest::Approx(0.2));
  CHECK(set.radius == doctest::Approx(radius_reference(2, 10, 0.05)));
}

TEST_CASE("polynomial confidence recursion matches the closed form") {
  ConfidenceParams params;
  params.b = 0.05;
  params.q = 2.0;
  ConfidenceVector beta = ConfidenceVector::initial({params});
  for (long t = 0; t < 1000; ++t) {
    const double closed = confidence_closed_form(params, t);
    CHECK(std::abs(beta.value(0) - closed) <=
          1e-10 * std::max(closed, 1e-300));
    beta = beta.stepped();
  }
  CHECK(confidence_closed_form(params, 0) == doctest::Approx(0.05));
  CHECK(confidence_closed_form(params, 3) == doctest::Approx(0.05 / 16.0));
}

TEST_CASE("exponential confidence recursion matches the closed form") {
  ConfidenceParams params;
  params.b = 0.2;
  params.schedule = ConfidenceParams::Schedule::kExponential;
  params.tau = 0.05;
  ConfidenceVector beta = ConfidenceVector::initial({params});
  for (long t = 0; t < 200; ++t) {
    CHECK(beta.value(0) ==
          doctest::Approx(0.2 * std::exp(-0.05 * t)).epsilon(1e-10));
    beta = beta.stepped();
  }
}

TEST_CASE("confidence partial sums stay under the series bound") {
  ConfidenceParams params;
  params.b = 0.05;
  params.q = 2.0;
  // sum_t b (1+t)^{-q} <= b (1 + 1/(q-1)) = b q/(q-1).
  const double bound = params.b * (1.0 + 1.0 / (params.q - 1.0));
  double partial = 0.0;
  ConfidenceVector beta = ConfidenceVector::initial({params});
  for (long t = 0; t < 20000; ++t) {
    partial += beta.value(0);
    CHECK(partial <= bound + 1e-12);
    beta = beta.stepped();
  }
  // Not vacuous: the series converges to b zeta(2) = b pi^2/6, about
  // 82% of the integral bound.
  const double series = params.b * M_PI * M_PI / 6.0;
  CHECK(partial > 0.999 * series);
  CHECK(partial < series);
}

TEST_CASE("confidence vector components evolve independently") {
  ConfidenceParams cost;
  cost.b = 0.05;
  cost.q = 2.0;
  ConfidenceParams g1;
  g1.b = 0.2;
  g1.q = 3.0;
  ConfidenceVector beta = ConfidenceVector::initial({cost, g1});
  beta = beta.stepped().stepped();
  CHECK(beta.size() == 2);
  CHECK(beta.value(0) == doctest::Approx(confidence_closed_form(cost, 2)));
  CHECK(beta.value(1) == doctest::Approx(confidence_closed_form(g1, 2)));
}

TEST_CASE("empirical coverage respects the confidence level") {
  // Resample counts from a fixed row and verify that the true row lies
  // in the ambiguity set at least a 1 - beta fraction of the time
  // (quick version; the acceptance suite runs the full sweep).
  const int d = 3;
  Vec truth(d);
  truth << 0.5, 0.3, 0.2;
  const double beta = 0.2;
  const int resamples = 4000;
  const int n = 60;
  Mat kernel_rows = truth.transpose().replicate(d, 1);
  const TransitionKernel kernel = TransitionKernel::from_matrix(kernel_rows);
  int covered = 0;
  SplitMix64 rng(99);
  for (int trial = 0; trial < resamples; ++trial) {
    LearnerState s(d);
    for (int k = 0; k < n; ++k) {
      s = s.updated(1, sample_successor(kernel, 1, rng));
    }
    const AmbiguitySet set = ambiguity_set(s, 1, beta);
    if ((truth - set.center).cwiseAbs().sum() <= set.radius) ++covered;
  }
  const double rate = static_cast<double>(covered) / resamples;
  const double three_sigma =
      3.0 * std::sqrt(beta * (1 - beta) / resamples);
  CHECK(rate >= 1.0 - beta - three_sigma);
}
