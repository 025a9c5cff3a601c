#pragma once

#include <cstdint>
#include <vector>

#include "drmpc/common.hpp"

namespace drmpc {

/// SplitMix64 generator (Steele, Lea & Flood 2014). Chosen over
/// std::mt19937_64 so that streams are a documented pure function of the
/// 64-bit seed, identical across platforms and standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Row-stochastic transition matrix of a time-homogeneous Markov chain
/// on modes {1, ..., d}. Immutable after construction.
class TransitionKernel {
 public:
  /// Validates and admits `matrix` as a kernel. Rows whose sum deviates
  /// from one by at most 1e-9 are renormalized exactly; larger deviations
  /// or negative entries raise NonStochasticRowError.
  static TransitionKernel from_matrix(const Mat& matrix);

  int mode_count() const { return static_cast<int>(rows_.rows()); }

  /// Full matrix; row w-1 is the successor distribution of mode w.
  const Mat& matrix() const { return rows_; }

  /// Successor distribution of mode w (1-based).
  Vec row(int w) const;

  /// P[w -> w_next], both 1-based.
  double prob(int w, int w_next) const;

 private:
  explicit TransitionKernel(Mat rows) : rows_(std::move(rows)) {}
  Mat rows_;
};

/// A sampled mode trajectory together with the seed that produced it.
struct ModePath {
  std::vector<int> modes;  // 1-based, length = steps + 1
  std::uint64_t seed = 0;
};

/// Draws the successor of mode w by inverse CDF over row w in index
/// order, consuming one uniform variate from `rng`.
int sample_successor(const TransitionKernel& kernel, int w, SplitMix64& rng);

/// Samples a path of `steps` transitions starting at w0. Pure function
/// of (kernel, w0, steps, seed).
ModePath sample_path(const TransitionKernel& kernel, int w0, int steps,
                     std::uint64_t seed);

/// Tally of observed transitions: entry (i, j) counts i+1 -> j+1 steps.
Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> count_transitions(
    const std::vector<int>& modes, int mode_count);

}  // namespace drmpc
