#include "drmpc/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace drmpc {

namespace {

constexpr int kStackDim = 64;

void check_set(const AmbiguitySet& set) {
  if (set.center.size() < 1) throw Error("ambiguity set has empty center");
  if (set.radius < 0.0 || set.radius > 2.0) {
    throw Error("ambiguity radius must lie in [0, 2]");
  }
}

// Greedy mass transport: budget min(r/2, mass below the top) moves from
// the lowest-value coordinates onto the highest-value ones. Descending
// value order with ties broken by lowest index makes the result
// deterministic. Writes the maximizer to p_out when given; returns the
// support value. No heap use for d <= kStackDim.
double support_greedy(const double* center, const double* xi, double radius,
                      int d, double* p_out) {
  int order_stack[kStackDim];
  double p_stack[kStackDim];
  std::vector<int> order_heap;
  std::vector<double> p_heap;
  int* order = order_stack;
  double* p = p_out;
  if (d > kStackDim) {
    order_heap.resize(d);
    order = order_heap.data();
    if (!p) {
      p_heap.resize(d);
      p = p_heap.data();
    }
  } else if (!p) {
    p = p_stack;
  }
  for (int i = 0; i < d; ++i) order[i] = i;
  // Insertion sort: stable, so equal values keep index order.
  for (int i = 1; i < d; ++i) {
    const int key = order[i];
    int j = i - 1;
    while (j >= 0 && xi[order[j]] < xi[key]) {
      order[j + 1] = order[j];
      --j;
    }
    order[j + 1] = key;
  }
  for (int i = 0; i < d; ++i) p[i] = center[i];

  double budget = radius / 2.0;
  int donor = d;  // scans from the lowest-value end
  for (int k = 0; k < d && budget > 0.0; ++k) {
    const int receiver = order[k];
    double want = std::min(budget, 1.0 - p[receiver]);
    while (want > 0.0 && donor > k + 1) {
      const int giver = order[donor - 1];
      const double take = std::min(want, p[giver]);
      p[giver] -= take;
      p[receiver] += take;
      budget -= take;
      want -= take;
      if (p[giver] > 0.0) break;
      --donor;
    }
    if (donor <= k + 1) break;  // nothing left below the receiver
  }
  double value = 0.0;
  for (int i = 0; i < d; ++i) value += p[i] * xi[i];
  return value;
}

}  // namespace

Vec worst_case_distribution(const AmbiguitySet& set, const Vec& xi) {
  check_set(set);
  if (xi.size() != set.center.size()) throw Error("xi dimension mismatch");
  const int d = static_cast<int>(xi.size());
  Vec p(d);
  support_greedy(set.center.data(), xi.data(), set.radius, d, p.data());
  return p;
}

double support_function(const AmbiguitySet& set, const Vec& xi) {
  check_set(set);
  if (xi.size() != set.center.size()) throw Error("xi dimension mismatch");
  const int d = static_cast<int>(xi.size());
  return support_greedy(set.center.data(), xi.data(), set.radius, d, nullptr);
}

double avar(const Vec& p, double alpha, const Vec& xi) {
  if (p.size() != xi.size()) throw Error("dimension mismatch");
  if (alpha < 0.0 || alpha > 1.0) throw Error("alpha must lie in [0, 1]");
  if (alpha == 0.0) return xi.maxCoeff();
  // min_t t + E_p[(xi - t)+]/alpha attains its minimum at a kink t = xi_j.
  double best = kInf;
  for (Eigen::Index j = 0; j < xi.size(); ++j) {
    const double t = xi[j];
    double tail = 0.0;
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
      tail += p[i] * std::max(xi[i] - t, 0.0);
    }
    best = std::min(best, t + tail / alpha);
  }
  return best;
}

double dr_avar(const AmbiguitySet& set, double alpha_hat, const Vec& xi) {
  check_set(set);
  if (alpha_hat < 0.0 || alpha_hat > 1.0) {
    throw Error("alpha must lie in [0, 1]");
  }
  if (xi.size() != set.center.size()) throw Error("xi dimension mismatch");
  const int d = static_cast<int>(xi.size());
  if (alpha_hat == 0.0) return xi.maxCoeff();
  // The objective t + support(set, (xi - t)+)/alpha_hat is convex and
  // piecewise affine in t with kinks only at coordinate values, so the
  // breakpoint scan is exact.
  double tail_stack[kStackDim];
  std::vector<double> tail_heap;
  double* tail = tail_stack;
  if (d > kStackDim) {
    tail_heap.resize(d);
    tail = tail_heap.data();
  }
  double best = kInf;
  for (int j = 0; j < d; ++j) {
    const double t = xi[j];
    for (int i = 0; i < d; ++i) tail[i] = std::max(xi[i] - t, 0.0);
    const double sup =
        support_greedy(set.center.data(), tail, set.radius, d, nullptr);
    best = std::min(best, t + sup / alpha_hat);
  }
  return best;
}

double adjusted_alpha(double alpha, double beta) {
  if (alpha < 0.0 || alpha > 1.0) throw Error("alpha must lie in [0, 1]");
  if (beta < 0.0 || beta >= 1.0) throw Error("beta must lie in [0, 1)");
  return std::max(0.0, (alpha - beta) / (1.0 - beta));
}

void add_support_epigraph(ProgramBuilder& builder, const AmbiguitySet& set,
                          const std::vector<LinearExpr>& xi,
                          const LinearExpr& budget) {
  check_set(set);
  const int d = static_cast<int>(set.center.size());
  if (static_cast<int>(xi.size()) != d) throw Error("xi dimension mismatch");
  const int lambda = builder.new_variable(0.0, 0.0, kInf);
  const int nu = builder.new_variable();
  const std::vector<int> y = builder.new_variables(d);
  LinearExpr bound;  // lambda r + nu + sum center_j y_j - budget <= 0
  bound.add(lambda, set.radius).add(nu, 1.0);
  for (int j = 0; j < d; ++j) {
    LinearExpr above = xi[j];  // xi_j - nu - y_j <= 0
    above.add(nu, -1.0).add(y[j], -1.0);
    builder.add_leq(above, 0.0);
    LinearExpr below;  // -lambda - y_j <= 0
    below.add(lambda, -1.0).add(y[j], -1.0);
    builder.add_leq(below, 0.0);
    LinearExpr cap = xi[j];  // xi_j - nu - lambda <= 0
    cap.add(nu, -1.0).add(lambda, -1.0);
    builder.add_leq(cap, 0.0);
    bound.add(y[j], set.center[j]);
  }
  LinearExpr minus_budget = budget;
  minus_budget *= -1.0;
  bound += minus_budget;
  builder.add_leq(bound, 0.0);
}

void add_dr_avar_epigraph(ProgramBuilder& builder, const AmbiguitySet& set,
                          double alpha_hat, const std::vector<LinearExpr>& xi,
                          const LinearExpr& budget) {
  check_set(set);
  const int d = static_cast<int>(set.center.size());
  if (static_cast<int>(xi.size()) != d) throw Error("xi dimension mismatch");
  if (alpha_hat < 0.0 || alpha_hat > 1.0) {
    throw Error("alpha must lie in [0, 1]");
  }
  if (alpha_hat == 0.0) {
    for (int j = 0; j < d; ++j) {
      LinearExpr row = xi[j];
      LinearExpr minus_budget = budget;
      minus_budget *= -1.0;
      row += minus_budget;
      builder.add_leq(row, 0.0);
    }
    return;
  }
  const int t = builder.new_variable();
  const std::vector<int> s = builder.new_variables(d, 0.0, 0.0, kInf);
  std::vector<LinearExpr> tails(d);
  for (int j = 0; j < d; ++j) {
    LinearExpr above = xi[j];  // xi_j - t - s_j <= 0, s_j >= 0
    above.add(t, -1.0).add(s[j], -1.0);
    builder.add_leq(above, 0.0);
    tails[j] = LinearExpr::variable(s[j]);
  }
  // support_function(set, s) <= alpha_hat (budget - t)
  LinearExpr scaled_budget = budget;
  scaled_budget *= alpha_hat;
  scaled_budget.add(t, -alpha_hat);
  add_support_epigraph(builder, set, tails, scaled_budget);
}

}  // namespace drmpc
