#include "drmpc/learner.hpp"

#include <cmath>
#include <utility>

namespace drmpc {

LearnerState::LearnerState(int mode_count) {
  if (mode_count < 1) throw Error("mode count must be at least 1");
  counts_ = CountMatrix::Zero(mode_count, mode_count);
}

LearnerState LearnerState::from_counts(CountMatrix counts) {
  if (counts.rows() != counts.cols() || counts.rows() < 1) {
    throw Error("count matrix must be square with d >= 1");
  }
  if ((counts.array() < 0).any()) throw Error("counts must be nonnegative");
  LearnerState s(static_cast<int>(counts.rows()));
  s.counts_ = std::move(counts);
  return s;
}

std::int64_t LearnerState::count(int w, int w_next) const {
  if (w < 1 || w > mode_count() || w_next < 1 || w_next > mode_count()) {
    throw Error("mode index out of range");
  }
  return counts_(w - 1, w_next - 1);
}

std::int64_t LearnerState::row_total(int w) const {
  if (w < 1 || w > mode_count()) throw Error("mode index out of range");
  return counts_.row(w - 1).sum();
}

LearnerState LearnerState::updated(int w, int w_next) const {
  if (w < 1 || w > mode_count() || w_next < 1 || w_next > mode_count()) {
    throw Error("mode index out of range");
  }
  LearnerState next = *this;
  next.counts_(w - 1, w_next - 1) += 1;
  return next;
}

Vec LearnerState::empirical_row(int w) const {
  const std::int64_t total = row_total(w);
  const int d = mode_count();
  if (total == 0) return Vec::Constant(d, 1.0 / d);
  return counts_.row(w - 1).cast<double>().transpose() /
         static_cast<double>(total);
}

ConfidenceVector ConfidenceVector::initial(
    std::vector<ConfidenceParams> params) {
  ConfidenceVector beta;
  beta.params_ = std::move(params);
  beta.values_.reserve(beta.params_.size());
  for (const auto& p : beta.params_) {
    if (p.b < 0.0 || p.b > 1.0) throw Error("confidence b must lie in [0, 1]");
    if (p.schedule == ConfidenceParams::Schedule::kPolynomial && p.q <= 1.0) {
      throw Error("confidence q must exceed 1 for a summable schedule");
    }
    if (p.schedule == ConfidenceParams::Schedule::kExponential && p.tau <= 0.0) {
      throw Error("confidence tau must be positive");
    }
    beta.values_.push_back(p.b);
  }
  return beta;
}

ConfidenceVector ConfidenceVector::stepped() const {
  ConfidenceVector next = *this;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const ConfidenceParams& p = params_[i];
    const double beta = values_[i];
    if (beta <= 0.0) {
      next.values_[i] = 0.0;
      continue;
    }
    if (p.schedule == ConfidenceParams::Schedule::kExponential) {
      next.values_[i] = std::exp(-p.tau) * beta;
    } else {
      const double base = std::pow(beta, 1.0 / p.q) + std::pow(p.b, 1.0 / p.q);
      next.values_[i] = p.b * beta * std::pow(base, -p.q);
    }
  }
  return next;
}

ConfidenceVector confidence_step(const ConfidenceVector& beta) {
  return beta.stepped();
}

double confidence_closed_form(const ConfidenceParams& params, long t) {
  if (params.schedule == ConfidenceParams::Schedule::kExponential) {
    return params.b * std::exp(-params.tau * static_cast<double>(t));
  }
  return params.b * std::pow(1.0 + static_cast<double>(t), -params.q);
}

RadiusResult ambiguity_radius(const LearnerState& s, int w, double beta) {
  const int d = s.mode_count();
  if (beta < 0.0 || beta > 1.0) throw Error("beta must lie in [0, 1]");
  if (d == 1) return {0.0, false};
  if (beta <= 0.0) return {2.0, true};
  const std::int64_t n = s.row_total(w);
  if (n == 0) return {2.0, false};
  // ln(2^d - 2), written to stay finite for large d.
  const double log_card =
      d * std::log(2.0) + std::log1p(-std::pow(2.0, 1.0 - d));
  const double raw =
      std::sqrt(2.0 * (log_card - std::log(beta)) / static_cast<double>(n));
  return {std::min(2.0, raw), false};
}

AmbiguitySet ambiguity_set(const LearnerState& s, int w, double beta) {
  return {s.empirical_row(w), ambiguity_radius(s, w, beta).value};
}

}  // namespace drmpc
