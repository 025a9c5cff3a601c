#include "drmpc/chain.hpp"

#include <cmath>
#include <sstream>

namespace drmpc {

namespace {
constexpr double kRowSumTol = 1e-9;
}

TransitionKernel TransitionKernel::from_matrix(const Mat& matrix) {
  if (matrix.rows() != matrix.cols() || matrix.rows() < 1) {
    throw NonStochasticRowError("transition matrix must be square with d >= 1");
  }
  Mat rows = matrix;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if ((rows.row(i).array() < 0.0).any()) {
      std::ostringstream msg;
      msg << "transition matrix row " << (i + 1) << " has a negative entry";
      throw NonStochasticRowError(msg.str());
    }
    const double sum = rows.row(i).sum();
    if (std::abs(sum - 1.0) > kRowSumTol) {
      std::ostringstream msg;
      msg << "transition matrix row " << (i + 1) << " sums to " << sum;
      throw NonStochasticRowError(msg.str());
    }
    rows.row(i) /= sum;
  }
  return TransitionKernel(std::move(rows));
}

Vec TransitionKernel::row(int w) const {
  if (w < 1 || w > mode_count()) throw Error("mode index out of range");
  return rows_.row(w - 1).transpose();
}

double TransitionKernel::prob(int w, int w_next) const {
  if (w < 1 || w > mode_count() || w_next < 1 || w_next > mode_count()) {
    throw Error("mode index out of range");
  }
  return rows_(w - 1, w_next - 1);
}

int sample_successor(const TransitionKernel& kernel, int w, SplitMix64& rng) {
  const double u = rng.next_double();
  double cum = 0.0;
  const int d = kernel.mode_count();
  for (int j = 1; j <= d; ++j) {
    cum += kernel.prob(w, j);
    if (u < cum) return j;
  }
  // u landed in the rounding slack above the final cumulative sum.
  return d;
}

ModePath sample_path(const TransitionKernel& kernel, int w0, int steps,
                     std::uint64_t seed) {
  if (w0 < 1 || w0 > kernel.mode_count()) throw Error("mode index out of range");
  if (steps < 0) throw Error("step count must be nonnegative");
  ModePath path;
  path.seed = seed;
  path.modes.reserve(static_cast<std::size_t>(steps) + 1);
  path.modes.push_back(w0);
  SplitMix64 rng(seed);
  for (int t = 0; t < steps; ++t) {
    path.modes.push_back(sample_successor(kernel, path.modes.back(), rng));
  }
  return path;
}

Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> count_transitions(
    const std::vector<int>& modes, int mode_count) {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts =
      Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(
          mode_count, mode_count);
  for (std::size_t t = 0; t + 1 < modes.size(); ++t) {
    counts(modes[t] - 1, modes[t + 1] - 1) += 1;
  }
  return counts;
}

}  // namespace drmpc
