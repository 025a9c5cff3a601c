#include "drmpc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseCholesky>

namespace drmpc {

namespace {

constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqFactor = 1e3;
constexpr double kDivisionGuard = 1e-10;
constexpr int kMaxAdaptations = 10;
constexpr int kAdaptationSpacing = 8;  // in units of check_interval
constexpr int kStallWindow = 500;      // iterations per stall check
constexpr int kStallPatience = 2;      // windows without halving before abort
constexpr double kProxWeight = 1e-2;   // curvature added by the restart
constexpr int kProxMaxRestarts = 100;

double inf_norm(const Vec& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace

void ConvexProgram::validate() const {
  if (n < 0 || a.cols() != n) throw Error("program dimensions inconsistent");
  if (q.size() != n) throw Error("objective dimension mismatch");
  if (p_diag.size() != 0 && p_diag.size() != n) {
    throw Error("quadratic diagonal dimension mismatch");
  }
  if (p_diag.size() != 0 && (p_diag.array() < 0.0).any()) {
    throw Error("quadratic diagonal must be nonnegative");
  }
  if (l.size() != a.rows() || u.size() != a.rows()) {
    throw Error("bound dimensions mismatch");
  }
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    if (l[i] > u[i]) throw Error("row lower bound exceeds upper bound");
    if (std::isnan(l[i]) || std::isnan(u[i])) throw Error("NaN row bound");
  }
  if (!q.allFinite()) throw Error("objective must be finite");
}

std::string ConvexProgram::to_json() const {
  std::ostringstream out;
  out.precision(17);
  out << "{\"n\":" << n << ",\"q\":[";
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    out << (j ? "," : "") << q[j];
  }
  out << "],\"A\":[";
  bool first = true;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
      out << (first ? "" : ",") << "[" << it.row() << "," << it.col() << ","
          << it.value() << "]";
      first = false;
    }
  }
  out << "],\"l\":[";
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    out << (i ? "," : "");
    if (l[i] == -kInf) {
      out << "\"-inf\"";
    } else {
      out << l[i];
    }
  }
  out << "],\"u\":[";
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    out << (i ? "," : "");
    if (u[i] == kInf) {
      out << "\"inf\"";
    } else {
      out << u[i];
    }
  }
  out << "]}";
  return out.str();
}

LinearExpr& LinearExpr::operator+=(const LinearExpr& other) {
  terms.insert(terms.end(), other.terms.begin(), other.terms.end());
  constant += other.constant;
  return *this;
}

LinearExpr& LinearExpr::operator*=(double scale) {
  for (auto& [index, coeff] : terms) {
    (void)index;
    coeff *= scale;
  }
  constant *= scale;
  return *this;
}

int ProgramBuilder::new_variable(double cost, double lo, double hi) {
  const int index = n_++;
  cost_.push_back(cost);
  if (lo > -kInf || hi < kInf) {
    add_row(LinearExpr::variable(index), lo, hi);
  }
  return index;
}

std::vector<int> ProgramBuilder::new_variables(int count, double cost,
                                               double lo, double hi) {
  std::vector<int> indices;
  indices.reserve(count);
  for (int k = 0; k < count; ++k) indices.push_back(new_variable(cost, lo, hi));
  return indices;
}

void ProgramBuilder::add_objective(int index, double cost) {
  cost_.at(index) += cost;
}

int ProgramBuilder::add_row(const LinearExpr& expr, double lo, double hi) {
  const int row = row_count();
  for (const auto& [index, coeff] : expr.terms) {
    if (index < 0 || index >= n_) throw Error("row references unknown variable");
    if (coeff != 0.0) triplets_.emplace_back(row, index, coeff);
  }
  lower_.push_back(lo == -kInf ? -kInf : lo - expr.constant);
  upper_.push_back(hi == kInf ? kInf : hi - expr.constant);
  return row;
}

ConvexProgram ProgramBuilder::build() const {
  ConvexProgram p;
  p.n = n_;
  p.q = Eigen::Map<const Vec>(cost_.data(), n_);
  p.a.resize(row_count(), n_);
  p.a.setFromTriplets(triplets_.begin(), triplets_.end());
  p.a.makeCompressed();
  p.l = Eigen::Map<const Vec>(lower_.data(), row_count());
  p.u = Eigen::Map<const Vec>(upper_.data(), row_count());
  p.validate();
  return p;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kUnbounded:
      return "unbounded";
    case SolveStatus::kMaxIter:
      return "max_iter";
  }
  return "unknown";
}

namespace {

// Scaled copy of the problem data together with the diagonal scalings
// needed to map iterates back to the original units.
struct ScaledData {
  Vec p_diag;  // always length n (zeros for LPs)
  Vec q;
  Eigen::SparseMatrix<double> a;
  Vec l, u;
  Vec d;      // variable scaling, x = d .* x_scaled
  Vec e;      // row scaling, z = z_scaled ./ e
  double c = 1.0;  // cost scaling
};

// Modified Ruiz equilibration with per-pass cost normalization.
ScaledData scale_problem(const ConvexProgram& prog, int passes) {
  const int n = prog.n;
  const int m = prog.rows();
  ScaledData s;
  s.p_diag = prog.p_diag.size() ? prog.p_diag : Vec::Zero(n);
  s.q = prog.q;
  s.a = prog.a;
  s.l = prog.l;
  s.u = prog.u;
  s.d = Vec::Ones(n);
  s.e = Vec::Ones(m);
  s.c = 1.0;

  Vec col_norm(n), row_norm(m);
  for (int pass = 0; pass < passes; ++pass) {
    col_norm.setZero();
    row_norm.setZero();
    for (int k = 0; k < s.a.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(s.a, k); it; ++it) {
        const double v = std::abs(it.value());
        col_norm[it.col()] = std::max(col_norm[it.col()], v);
        row_norm[it.row()] = std::max(row_norm[it.row()], v);
      }
    }
    for (int j = 0; j < n; ++j) {
      col_norm[j] = std::max(col_norm[j], std::abs(s.p_diag[j]));
    }
    Vec dj(n), ei(m);
    for (int j = 0; j < n; ++j) {
      dj[j] = col_norm[j] > kDivisionGuard ? 1.0 / std::sqrt(col_norm[j]) : 1.0;
    }
    for (int i = 0; i < m; ++i) {
      ei[i] = row_norm[i] > kDivisionGuard ? 1.0 / std::sqrt(row_norm[i]) : 1.0;
    }
    for (int k = 0; k < s.a.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(s.a, k); it; ++it) {
        it.valueRef() *= ei[it.row()] * dj[it.col()];
      }
    }
    s.p_diag.array() *= dj.array().square();
    s.q.array() *= dj.array();
    s.d.array() *= dj.array();
    s.e.array() *= ei.array();

    // Cost normalization keeps the objective on the same footing as the
    // constraints; mean column norm of P stands in for its magnitude.
    double p_mean = 0.0;
    for (int j = 0; j < n; ++j) p_mean += std::abs(s.p_diag[j]);
    if (n > 0) p_mean /= n;
    const double cost_norm = std::max(p_mean, inf_norm(s.q));
    if (cost_norm > kDivisionGuard) {
      const double gamma = 1.0 / cost_norm;
      s.p_diag *= gamma;
      s.q *= gamma;
      s.c *= gamma;
    }
  }
  for (int i = 0; i < m; ++i) {
    if (s.l[i] > -kInf) s.l[i] *= s.e[i];
    if (s.u[i] < kInf) s.u[i] *= s.e[i];
  }
  return s;
}

Eigen::SparseMatrix<double> build_kkt(const ScaledData& s, double sigma,
                                      const Vec& rho) {
  const int n = static_cast<int>(s.q.size());
  const int m = static_cast<int>(s.l.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(n + m + s.a.nonZeros());
  for (int j = 0; j < n; ++j) {
    trips.emplace_back(j, j, s.p_diag[j] + sigma);
  }
  for (int k = 0; k < s.a.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(s.a, k); it; ++it) {
      trips.emplace_back(n + it.row(), it.col(), it.value());
    }
  }
  for (int i = 0; i < m; ++i) {
    trips.emplace_back(n + i, n + i, -1.0 / rho[i]);
  }
  Eigen::SparseMatrix<double> kkt(n + m, n + m);
  kkt.setFromTriplets(trips.begin(), trips.end());
  kkt.makeCompressed();
  return kkt;
}

Vec make_rho(const ConvexProgram& prog, double base) {
  Vec rho(prog.rows());
  for (int i = 0; i < prog.rows(); ++i) {
    const bool eq = prog.l[i] > -kInf && prog.u[i] < kInf &&
                    prog.u[i] - prog.l[i] < 1e-12;
    rho[i] = std::clamp(base * (eq ? kRhoEqFactor : 1.0), kRhoMin, kRhoMax);
  }
  return rho;
}

struct Residuals {
  double prim = kInf, dual = kInf;
  double eps_prim = 0.0, eps_dual = 0.0;
};

Residuals compute_residuals(const ConvexProgram& prog, const SolverSettings& st,
                            const Vec& x_u, const Vec& z_u, const Vec& y_u) {
  const Vec ax = prog.a * x_u;
  Vec px = Vec::Zero(prog.n);
  if (prog.p_diag.size()) px = prog.p_diag.cwiseProduct(x_u);
  const Vec aty = prog.a.transpose() * y_u;
  Residuals r;
  r.prim = inf_norm(ax - z_u);
  r.dual = inf_norm(px + prog.q + aty);
  r.eps_prim = st.eps_abs + st.eps_rel * std::max(inf_norm(ax), inf_norm(z_u));
  r.eps_dual = st.eps_abs + st.eps_rel * std::max({inf_norm(px), inf_norm(aty),
                                                   inf_norm(prog.q)});
  return r;
}

bool primal_infeasibility_certificate(const ConvexProgram& prog, double eps,
                                      const Vec& dy) {
  const double norm = inf_norm(dy);
  if (norm < kDivisionGuard) return false;
  if (inf_norm(prog.a.transpose() * dy) > eps * norm) return false;
  double support = 0.0;
  for (int i = 0; i < prog.rows(); ++i) {
    const double pos = std::max(dy[i], 0.0);
    const double neg = std::min(dy[i], 0.0);
    if (pos > eps * norm && prog.u[i] == kInf) return false;
    if (neg < -eps * norm && prog.l[i] == -kInf) return false;
    if (prog.u[i] < kInf) support += prog.u[i] * pos;
    if (prog.l[i] > -kInf) support += prog.l[i] * neg;
  }
  return support <= -eps * norm;
}

bool dual_infeasibility_certificate(const ConvexProgram& prog, double eps,
                                    const Vec& dx) {
  const double norm = inf_norm(dx);
  if (norm < kDivisionGuard) return false;
  Vec pdx = Vec::Zero(prog.n);
  if (prog.p_diag.size()) pdx = prog.p_diag.cwiseProduct(dx);
  if (inf_norm(pdx) > eps * norm) return false;
  if (prog.q.dot(dx) > -eps * norm) return false;
  const Vec adx = prog.a * dx;
  for (int i = 0; i < prog.rows(); ++i) {
    if (prog.l[i] > -kInf && adx[i] < -eps * norm) return false;
    if (prog.u[i] < kInf && adx[i] > eps * norm) return false;
  }
  return true;
}

// Active-set refinement: equality-solve on the rows the current iterate
// reports active, then verify the full KKT system (feasibility,
// stationarity, multiplier signs). Equality rows are always pinned; the
// guess is repaired between passes by adding violated rows and dropping
// wrong-sign multipliers. Returns true only when the polished point
// passes the optimality check; the solution is also overwritten when
// polish merely tightens both residuals of an already-optimal point.
bool try_polish(const ConvexProgram& prog, const SolverSettings& st,
                Solution* sol) {
  const int n = prog.n;
  const int m = prog.rows();
  const double ytol = std::max(1e-12, 1e-6 * inf_norm(sol->y));

  // side per row: -1 low bound, +1 up bound, 0 equality, INT_MIN inactive
  std::vector<int> side(m, std::numeric_limits<int>::min());
  for (int i = 0; i < m; ++i) {
    if (prog.u[i] - prog.l[i] < 1e-12) {
      side[i] = 0;
    } else if (sol->y[i] < -ytol && prog.l[i] > -kInf) {
      side[i] = -1;
    } else if (sol->y[i] > ytol && prog.u[i] < kInf) {
      side[i] = +1;
    }
  }
  const Eigen::SparseMatrix<double, Eigen::RowMajor> a_rows(prog.a);
  const Residuals before =
      compute_residuals(prog, st, sol->x, prog.a * sol->x, sol->y);

  for (int pass = 0; pass < 3; ++pass) {
    std::vector<int> active;
    for (int i = 0; i < m; ++i) {
      if (side[i] != std::numeric_limits<int>::min()) active.push_back(i);
    }
    const int ma = static_cast<int>(active.size());
    std::vector<Eigen::Triplet<double>> trips;
    for (int j = 0; j < n; ++j) {
      const double pj = prog.p_diag.size() ? prog.p_diag[j] : 0.0;
      trips.emplace_back(j, j, pj);
    }
    for (int r = 0; r < ma; ++r) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
               a_rows, active[r]);
           it; ++it) {
        trips.emplace_back(n + r, it.col(), it.value());
        trips.emplace_back(it.col(), n + r, it.value());
      }
    }
    // The regularized system stays factorizable for rank-deficient
    // active sets; escalate the shift until the no-pivot factorization
    // succeeds and remove the perturbation by iterative refinement.
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool factored = false;
    for (double delta = st.polish_delta; delta <= 1e-2; delta *= 100.0) {
      std::vector<Eigen::Triplet<double>> shifted = trips;
      for (int j = 0; j < n; ++j) shifted.emplace_back(j, j, delta);
      for (int r = 0; r < ma; ++r) shifted.emplace_back(n + r, n + r, -delta);
      Eigen::SparseMatrix<double> kkt(n + ma, n + ma);
      kkt.setFromTriplets(shifted.begin(), shifted.end());
      ldlt.compute(kkt);
      if (ldlt.info() == Eigen::Success) {
        factored = true;
        break;
      }
    }
    if (!factored) return false;
    Vec rhs(n + ma);
    rhs.head(n) = -prog.q;
    for (int r = 0; r < ma; ++r) {
      rhs[n + r] = side[active[r]] < 0 ? prog.l[active[r]] : prog.u[active[r]];
    }
    Vec sol_vec = ldlt.solve(rhs);
    Vec x_pol(n), y_pol(m), z_pol(m);
    for (int refine = 0; refine < 3; ++refine) {
      x_pol = sol_vec.head(n);
      y_pol.setZero();
      for (int r = 0; r < ma; ++r) y_pol[active[r]] = sol_vec[n + r];
      Vec top = prog.a.transpose() * y_pol;
      if (prog.p_diag.size()) top += prog.p_diag.cwiseProduct(x_pol);
      z_pol = prog.a * x_pol;
      Vec residual(n + ma);
      residual.head(n) = rhs.head(n) - top;
      for (int r = 0; r < ma; ++r) {
        residual[n + r] = rhs[n + r] - z_pol[active[r]];
      }
      sol_vec += ldlt.solve(residual);
    }
    x_pol = sol_vec.head(n);
    y_pol.setZero();
    for (int r = 0; r < ma; ++r) y_pol[active[r]] = sol_vec[n + r];
    z_pol = prog.a * x_pol;
    const Residuals after = compute_residuals(prog, st, x_pol, z_pol, y_pol);

    bool bounds_ok = true;
    bool signs_ok = true;
    bool changed = false;
    const double sign_tol = 1e-8 * std::max(1.0, inf_norm(y_pol));
    for (int i = 0; i < m; ++i) {
      if (side[i] == std::numeric_limits<int>::min()) {
        if (z_pol[i] > prog.u[i] + after.eps_prim) {
          bounds_ok = false;
          side[i] = +1;
          changed = true;
        } else if (z_pol[i] < prog.l[i] - after.eps_prim) {
          bounds_ok = false;
          side[i] = -1;
          changed = true;
        }
      } else if (side[i] == -1 && y_pol[i] > sign_tol) {
        signs_ok = false;
        side[i] = std::numeric_limits<int>::min();
        changed = true;
      } else if (side[i] == +1 && y_pol[i] < -sign_tol) {
        signs_ok = false;
        side[i] = std::numeric_limits<int>::min();
        changed = true;
      }
    }
    if (bounds_ok && signs_ok) {
      const bool optimal =
          after.prim <= after.eps_prim && after.dual <= after.eps_dual;
      const bool tightens =
          after.prim <= before.prim && after.dual <= before.dual;
      if (optimal || tightens) {
        sol->x = x_pol;
        sol->y = y_pol;
        sol->primal_residual = after.prim;
        sol->dual_residual = after.dual;
        sol->polished = true;
      }
      return optimal;
    }
    if (!changed) return false;
  }
  return false;
}

// One operator-splitting run. Stops early (status kMaxIter) when the
// residual score fails to halve over consecutive windows; the caller
// decides whether to restart with extra curvature.
Solution solve_core(const ConvexProgram& prog, const SolverSettings& st,
                    const Vec* warm_x, const Vec* warm_y) {
  const int n = prog.n;
  const int m = prog.rows();

  ScaledData s = scale_problem(prog, st.scaling_iters);
  Vec rho = make_rho(prog, st.rho);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  {
    Eigen::SparseMatrix<double> kkt = build_kkt(s, st.sigma, rho);
    ldlt.analyzePattern(kkt);
    ldlt.factorize(kkt);
    if (ldlt.info() != Eigen::Success) {
      throw Error("KKT factorization failed");
    }
  }

  Vec x = Vec::Zero(n), z = Vec::Zero(m), y = Vec::Zero(m);
  if (warm_x && warm_x->size() == n) {
    x = warm_x->cwiseQuotient(s.d);
  }
  if (warm_y && warm_y->size() == m) {
    y = s.c * warm_y->cwiseQuotient(s.e);
  }
  z = (s.a * x).cwiseMax(s.l).cwiseMin(s.u);

  Solution out;
  Vec rhs(n + m), sol_vec(n + m), x_new(n), z_new(m), y_new(m), z_pre(m);
  Vec x_u(n), z_u(m), y_u(m);

  int iter = 0;
  int adaptations = 0;
  int last_adaptation = 0;
  int last_window = 0;
  int stalled_windows = 0;
  double window_ref = kInf;
  while (iter < st.max_iter) {
    ++iter;
    rhs.head(n) = st.sigma * x - s.q;
    rhs.tail(m) = z - y.cwiseQuotient(rho);
    sol_vec = ldlt.solve(rhs);
    const auto x_tilde = sol_vec.head(n);
    const Vec z_tilde = z + (sol_vec.tail(m) - y).cwiseQuotient(rho);

    x_new = st.alpha * x_tilde + (1.0 - st.alpha) * x;
    z_pre = st.alpha * z_tilde + (1.0 - st.alpha) * z;
    z_new = (z_pre + y.cwiseQuotient(rho)).cwiseMax(s.l).cwiseMin(s.u);
    y_new = y + rho.cwiseProduct(z_pre - z_new);

    const bool check = (iter % st.check_interval == 0) || iter == st.max_iter;
    if (check) {
      x_u = s.d.cwiseProduct(x_new);
      z_u = z_new.cwiseQuotient(s.e);
      y_u = s.e.cwiseProduct(y_new) / s.c;
      const Residuals r = compute_residuals(prog, st, x_u, z_u, y_u);
      out.primal_residual = r.prim;
      out.dual_residual = r.dual;
      if (r.prim <= r.eps_prim && r.dual <= r.eps_dual) {
        out.status = SolveStatus::kOptimal;
        break;
      }
      const Vec dy_u = s.e.cwiseProduct(y_new - y) / s.c;
      if (primal_infeasibility_certificate(prog, st.eps_infeas, dy_u)) {
        out.status = SolveStatus::kInfeasible;
        out.infeas_certificate_norm = inf_norm(dy_u);
        break;
      }
      const Vec dx_u = s.d.cwiseProduct(x_new - x);
      if (dual_infeasibility_certificate(prog, st.eps_infeas, dx_u)) {
        out.status = SolveStatus::kUnbounded;
        out.infeas_certificate_norm = inf_norm(dx_u);
        break;
      }
      // Step-size adaptation is rate-limited and bounded in count:
      // each change perturbs the fixed-point map, so the signal must
      // settle between changes and plain ADMM must eventually take over.
      if (st.adaptive_rho && adaptations < kMaxAdaptations &&
          iter - last_adaptation >= kAdaptationSpacing * st.check_interval) {
        const Vec ax = prog.a * x_u;
        Vec px = Vec::Zero(n);
        if (prog.p_diag.size()) px = prog.p_diag.cwiseProduct(x_u);
        const Vec aty = prog.a.transpose() * y_u;
        const double prim_scale =
            std::max({inf_norm(ax), inf_norm(z_u), kDivisionGuard});
        const double dual_scale = std::max(
            {inf_norm(px), inf_norm(aty), inf_norm(prog.q), kDivisionGuard});
        const double ratio =
            std::sqrt((r.prim / prim_scale) /
                      std::max(r.dual / dual_scale, kDivisionGuard));
        if (ratio > 5.0 || ratio < 0.2) {
          rho *= std::clamp(ratio, 0.1, 10.0);
          for (int i = 0; i < m; ++i) {
            rho[i] = std::clamp(rho[i], kRhoMin, kRhoMax);
          }
          Eigen::SparseMatrix<double> kkt = build_kkt(s, st.sigma, rho);
          ldlt.factorize(kkt);
          if (ldlt.info() != Eigen::Success) {
            throw Error("KKT refactorization failed");
          }
          ++adaptations;
          last_adaptation = iter;
        }
      }
      // Degenerate programs can leave the iteration hovering near the
      // solution with sublinear residual decay; spending the whole
      // budget there is pointless. Give up after kStallPatience windows
      // without halving the residual score.
      if (iter - last_window >= kStallWindow) {
        const double score = r.prim + r.dual;
        if (score > 0.5 * window_ref) {
          if (++stalled_windows >= kStallPatience) break;
        } else {
          stalled_windows = 0;
        }
        window_ref = score;
        last_window = iter;
      }
    }
    x = x_new;
    z = z_new;
    y = y_new;
  }

  out.iterations = iter;
  out.x = s.d.cwiseProduct(x_new);
  out.y = s.e.cwiseProduct(y_new) / s.c;
  return out;
}

// Proximal-point restart for programs the plain iteration cannot close
// out (typically dual-degenerate LPs): repeatedly minimize the original
// objective plus kProxWeight/2 ||x - x_k||^2. Each subproblem is
// strongly convex, and the fixed point solves the original program;
// termination is checked on the original residuals. The remaining
// iteration budget is shared so the documented cap still holds.
Solution proximal_restart(const ConvexProgram& prog, const SolverSettings& st,
                          Solution base) {
  const double weight = kProxWeight * std::max(1.0, inf_norm(prog.q));
  ConvexProgram sub = prog;
  sub.p_diag = prog.p_diag.size() ? Vec(prog.p_diag.array() + weight)
                                  : Vec::Constant(prog.n, weight);
  int budget = st.max_iter - base.iterations;
  Vec xc = base.x;
  Vec yc = base.y;
  for (int restart = 0; restart < kProxMaxRestarts && budget > 0; ++restart) {
    sub.q = prog.q - weight * xc;
    SolverSettings inner = st;
    inner.max_iter = budget;
    inner.polish = false;
    inner.adaptive_rho = true;  // recovery mode favors robustness
    // Each step leaves an original dual-residual floor of the inner
    // tolerance plus weight times the step length, so the subproblems
    // must be solved tighter than the caller's target.
    inner.eps_abs = 0.2 * st.eps_abs;
    inner.eps_rel = 0.2 * st.eps_rel;
    const Solution s = solve_core(sub, inner, &xc, &yc);
    budget -= s.iterations;
    base.iterations = st.max_iter - budget;
    if (s.status == SolveStatus::kInfeasible ||
        s.status == SolveStatus::kUnbounded) {
      // Same constraint set, so the certificate transfers.
      Solution verdict = s;
      verdict.iterations = base.iterations;
      return verdict;
    }
    // A subproblem that ran out of patience still moved the iterate;
    // inexact steps are fine for the outer recursion.
    xc = s.x;
    yc = s.y;
    const Vec image = (prog.a * xc).cwiseMax(prog.l).cwiseMin(prog.u);
    const Residuals r = compute_residuals(prog, st, xc, image, yc);
    base.x = xc;
    base.y = yc;
    base.primal_residual = r.prim;
    base.dual_residual = r.dual;
    if (r.prim <= r.eps_prim && r.dual <= r.eps_dual) {
      base.status = SolveStatus::kOptimal;
      return base;
    }
  }
  return base;
}

}  // namespace

Solution solve(const ConvexProgram& prog, const SolverSettings& st,
               const Vec* warm_x, const Vec* warm_y) {
  prog.validate();
  Solution out = solve_core(prog, st, warm_x, warm_y);
  if (out.status == SolveStatus::kMaxIter) {
    out = proximal_restart(prog, st, std::move(out));
  } else if (out.status == SolveStatus::kOptimal && st.polish) {
    try_polish(prog, st, &out);
  }
  double quad = 0.0;
  if (prog.p_diag.size()) {
    quad = 0.5 * out.x.dot(prog.p_diag.cwiseProduct(out.x));
  }
  out.objective = quad + prog.q.dot(out.x);
  return out;
}

FeasibilityStatus feasibility(const ConvexProgram& prog,
                              const SolverSettings& settings) {
  ConvexProgram zero_obj = prog;
  zero_obj.q.setZero();
  zero_obj.p_diag.resize(0);
  const Solution sol = solve(zero_obj, settings);
  switch (sol.status) {
    case SolveStatus::kOptimal:
      return FeasibilityStatus::kFeasible;
    case SolveStatus::kInfeasible:
      return FeasibilityStatus::kInfeasible;
    default:
      return FeasibilityStatus::kInconclusive;
  }
}

}  // namespace drmpc
