#pragma once

#include <vector>

#include "drmpc/common.hpp"
#include "drmpc/learner.hpp"
#include "drmpc/solver.hpp"

namespace drmpc {

/// Exact maximum of p . xi over the simplex intersected with the l1
/// ball of the set: greedy mass transport of budget min(r/2, mass above
/// the argmax) from low-value onto high-value coordinates. Ties broken
/// by lowest index.
double support_function(const AmbiguitySet& set, const Vec& xi);

/// The maximizing distribution behind support_function.
Vec worst_case_distribution(const AmbiguitySet& set, const Vec& xi);

/// Average value-at-risk of xi under p at level alpha. alpha = 0 is the
/// essential maximum over every coordinate; alpha = 1 the expectation.
double avar(const Vec& p, double alpha, const Vec& xi);

/// Distributionally robust AVaR: max over the set of avar(p, alpha_hat,
/// xi). Evaluated by scanning the breakpoints t in {xi_j} of
/// t + (1/alpha_hat) * support_function(set, (xi - t)+), which is convex
/// piecewise linear in t with kinks only at coordinate values.
double dr_avar(const AmbiguitySet& set, double alpha_hat, const Vec& xi);

/// Confidence-adjusted risk level (alpha - beta)/(1 - beta), clamped at
/// zero (robust constraint) when beta >= alpha. Throws for beta >= 1.
double adjusted_alpha(double alpha, double beta);

/// Appends the exact LP epigraph of {support_function(set, xi) <= budget}
/// to the builder. Each xi_j and the budget may be affine in existing
/// variables. Auxiliary scalars lambda >= 0, nu and a vector y realize
/// the Lagrangian dual of the l1-ball/simplex support problem:
///   y_j >= xi_j - nu,  y_j >= -lambda,  xi_j - nu <= lambda,
///   lambda r + nu + sum_j center_j y_j <= budget.
void add_support_epigraph(ProgramBuilder& builder, const AmbiguitySet& set,
                          const std::vector<LinearExpr>& xi,
                          const LinearExpr& budget);

/// Appends the exact LP epigraph of {dr_avar(set, alpha_hat, xi) <=
/// budget}. For alpha_hat > 0: free shift t, slacks s_j >= (xi_j - t)+
/// and the support epigraph applied to s with row
/// t + (1/alpha_hat)(...) <= budget. For alpha_hat = 0: the robust rows
/// xi_j <= budget for every j.
void add_dr_avar_epigraph(ProgramBuilder& builder, const AmbiguitySet& set,
                          double alpha_hat, const std::vector<LinearExpr>& xi,
                          const LinearExpr& budget);

}  // namespace drmpc
