#pragma once

#include <Eigen/Sparse>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "drmpc/common.hpp"

namespace drmpc {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sparse program  min 1/2 x'Px + q'x  s.t.  l <= Ax <= u,  with P
/// diagonal positive semidefinite (zero for plain LPs). Rows with
/// l = u are equalities.
struct ConvexProgram {
  int n = 0;
  Vec q;
  Vec p_diag;  // empty means zero quadratic term
  Eigen::SparseMatrix<double> a;
  Vec l, u;

  int rows() const { return static_cast<int>(a.rows()); }
  void validate() const;

  /// Problem dump for offline debugging: fields n, q, A (triplets), l, u.
  std::string to_json() const;
};

/// Affine expression sum_k coeff_k x_{index_k} + constant over the
/// variables of a ProgramBuilder.
struct LinearExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinearExpr() = default;
  explicit LinearExpr(double c) : constant(c) {}
  static LinearExpr variable(int index, double coeff = 1.0) {
    LinearExpr e;
    e.terms.emplace_back(index, coeff);
    return e;
  }
  LinearExpr& add(int index, double coeff) {
    terms.emplace_back(index, coeff);
    return *this;
  }
  LinearExpr& operator+=(const LinearExpr& other);
  LinearExpr& operator*=(double scale);
};

/// Incremental assembly of a ConvexProgram. Variable bounds are encoded
/// as singleton rows so the solver sees one uniform constraint block.
class ProgramBuilder {
 public:
  int new_variable(double cost = 0.0, double lo = -kInf, double hi = kInf);
  std::vector<int> new_variables(int count, double cost = 0.0,
                                 double lo = -kInf, double hi = kInf);
  void add_objective(int index, double cost);

  /// Adds the row lo <= expr <= hi (the constant folds into the bounds).
  int add_row(const LinearExpr& expr, double lo, double hi);
  int add_leq(const LinearExpr& expr, double rhs) {
    return add_row(expr, -kInf, rhs);
  }
  int add_eq(const LinearExpr& expr, double rhs) {
    return add_row(expr, rhs, rhs);
  }

  int variable_count() const { return n_; }
  int row_count() const { return static_cast<int>(lower_.size()); }

  ConvexProgram build() const;

 private:
  int n_ = 0;
  std::vector<double> cost_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<double> lower_, upper_;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kMaxIter };

std::string to_string(SolveStatus status);

struct SolverSettings {
  double eps_abs = 1e-7;
  double eps_rel = 1e-7;
  double eps_infeas = 1e-6;  // relative certificate tolerance
  int max_iter = 50000;
  double rho = 0.1;           // base step size; equalities get 1e3 * rho
  double sigma = 1e-6;        // primal regularization
  double alpha = 1.6;         // over-relaxation
  int scaling_iters = 10;     // Ruiz equilibration passes
  bool adaptive_rho = true;
  int check_interval = 25;
  bool polish = false;
  double polish_delta = 1e-8;
};

struct Solution {
  SolveStatus status = SolveStatus::kMaxIter;
  Vec x;
  Vec y;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = kInf;
  double dual_residual = kInf;
  double infeas_certificate_norm = 0.0;
  bool polished = false;
};

/// Operator-splitting solve with over-relaxation; terminates when the
/// unscaled residuals satisfy eps_abs + eps_rel * scale, or when a
/// primal/dual infeasibility certificate accumulates. Deterministic:
/// identical program and settings give an identical iterate sequence.
Solution solve(const ConvexProgram& program, const SolverSettings& settings = {},
               const Vec* warm_x = nullptr, const Vec* warm_y = nullptr);

enum class FeasibilityStatus { kFeasible, kInfeasible, kInconclusive };

/// Zero-objective solve, status mapped to a feasibility verdict.
FeasibilityStatus feasibility(const ConvexProgram& program,
                              const SolverSettings& settings = {});

}  // namespace drmpc
