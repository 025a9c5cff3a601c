#pragma once

#include <cstdint>
#include <vector>

#include "drmpc/common.hpp"

namespace drmpc {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Transition tally of the observed mode process. Value type: updates
/// return new states, so snapshots can be shared across workers.
class LearnerState {
 public:
  explicit LearnerState(int mode_count);
  static LearnerState from_counts(CountMatrix counts);

  int mode_count() const { return static_cast<int>(counts_.rows()); }
  const CountMatrix& counts() const { return counts_; }
  std::int64_t count(int w, int w_next) const;
  std::int64_t row_total(int w) const;

  /// New state with counts[w][w_next] incremented by one.
  LearnerState updated(int w, int w_next) const;

  /// Row-normalized counts; uniform when mode w was never left.
  Vec empirical_row(int w) const;

 private:
  CountMatrix counts_;
};

/// Parameters of one confidence component. The polynomial schedule
/// beta_t = b (1+t)^{-q} is realized by the recursion
/// beta' = b beta (beta^{1/q} + b^{1/q})^{-q}; the exponential schedule
/// beta_t = b e^{-tau t} by beta' = e^{-tau} beta.
struct ConfidenceParams {
  enum class Schedule { kPolynomial, kExponential };
  double b = 0.05;
  double q = 2.0;
  Schedule schedule = Schedule::kPolynomial;
  double tau = 0.0;  // exponential decay rate, used only by kExponential
};

/// Confidence levels (beta^(0), beta^(1), ..., beta^(n_g)): index 0 is
/// the cost component, index i >= 1 belongs to constraint i.
class ConfidenceVector {
 public:
  static ConfidenceVector initial(std::vector<ConfidenceParams> params);

  std::size_t size() const { return values_.size(); }
  double value(std::size_t i) const { return values_.at(i); }
  const std::vector<double>& values() const { return values_; }
  const std::vector<ConfidenceParams>& params() const { return params_; }

  /// One application of the confidence dynamics to every component.
  ConfidenceVector stepped() const;

 private:
  std::vector<double> values_;
  std::vector<ConfidenceParams> params_;
};

/// One application of the confidence dynamics (componentwise).
ConfidenceVector confidence_step(const ConfidenceVector& beta);

/// Closed form of the schedule after t steps from beta_0 = b.
double confidence_closed_form(const ConfidenceParams& params, long t);

/// l1 ball around an empirical row, intersected with the simplex.
/// radius = 2 covers the whole simplex (fully robust).
struct AmbiguitySet {
  Vec center;
  double radius = 2.0;
};

struct RadiusResult {
  double value = 2.0;
  bool degenerate = false;  // beta <= 0: bound degenerates, robust fallback
};

/// Concentration radius r = min(2, sqrt(2 (ln(2^d - 2) - ln beta) / N_w));
/// N_w = 0 gives r = 2, d = 1 gives r = 0 (singleton simplex).
RadiusResult ambiguity_radius(const LearnerState& s, int w, double beta);

/// Composes empirical_row and ambiguity_radius. The true row lies in the
/// returned set with probability at least 1 - beta.
AmbiguitySet ambiguity_set(const LearnerState& s, int w, double beta);

}  // namespace drmpc
