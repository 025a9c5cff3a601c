#include "drmpc/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "drmpc/parallel.hpp"
#include "drmpc/risk.hpp"

namespace drmpc {

namespace {

using nlohmann::json;

// Solver tolerance slack: a constraint counts as violated only when the
// realized margin clearly exceeds the termination accuracy.
constexpr double kViolationTol = 1e-8;
// Sampled Lyapunov decrease may sit at equality (e.g. at the origin).
constexpr double kLyapunovTol = 1e-7;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config error at " + path + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing key");
  return *it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Vec parse_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] =
        as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Mat parse_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array");
  std::size_t cols = 0;
  Mat m;
  for (std::size_t r = 0; r < j.size(); ++r) {
    Vec row = parse_vector(j[r], path + "[" + std::to_string(r) + "]");
    if (r == 0) {
      cols = static_cast<std::size_t>(row.size());
      m.resize(static_cast<Eigen::Index>(j.size()),
               static_cast<Eigen::Index>(cols));
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      fail(path + "[" + std::to_string(r) + "]", "ragged matrix rows");
    }
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

std::vector<Mat> parse_mode_matrices(const json& j, int d,
                                     const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != d)
    fail(path, "expected one matrix per mode (" + std::to_string(d) + ")");
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(d));
  for (int w = 0; w < d; ++w)
    out.push_back(parse_matrix(j[static_cast<std::size_t>(w)],
                               path + "[" + std::to_string(w) + "]"));
  return out;
}

std::vector<Vec> parse_mode_vectors(const json& j, int d,
                                    const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != d)
    fail(path, "expected one vector per mode (" + std::to_string(d) + ")");
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(d));
  for (int w = 0; w < d; ++w)
    out.push_back(parse_vector(j[static_cast<std::size_t>(w)],
                               path + "[" + std::to_string(w) + "]"));
  return out;
}

// Accepts either a single vector (shared across every mode pair) or a
// d x d nested array of vectors indexed [w][w'].
std::vector<std::vector<Vec>> parse_pair_vectors(const json& j, int d, int dim,
                                                 const std::string& path) {
  std::vector<std::vector<Vec>> out(static_cast<std::size_t>(d));
  if (j.is_array() && !j.empty() && j[0].is_number()) {
    Vec shared = parse_vector(j, path);
    if (shared.size() != dim) fail(path, "expected length " +
                                             std::to_string(dim));
    for (auto& row : out) row.assign(static_cast<std::size_t>(d), shared);
    return out;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != d)
    fail(path, "expected a flat vector or a " + std::to_string(d) + " x " +
                   std::to_string(d) + " array of vectors");
  for (int w = 0; w < d; ++w) {
    const json& row = j[static_cast<std::size_t>(w)];
    const std::string rp = path + "[" + std::to_string(w) + "]";
    if (!row.is_array() || static_cast<int>(row.size()) != d)
      fail(rp, "expected " + std::to_string(d) + " vectors");
    out[static_cast<std::size_t>(w)].reserve(static_cast<std::size_t>(d));
    for (int wn = 0; wn < d; ++wn) {
      Vec v = parse_vector(row[static_cast<std::size_t>(wn)],
                           rp + "[" + std::to_string(wn) + "]");
      if (v.size() != dim)
        fail(rp + "[" + std::to_string(wn) + "]",
             "expected length " + std::to_string(dim));
      out[static_cast<std::size_t>(w)].push_back(std::move(v));
    }
  }
  return out;
}

// Accepts a scalar (shared bound) or a d x d matrix.
Mat parse_pair_bounds(const json& j, int d, const std::string& path) {
  if (j.is_number()) return Mat::Constant(d, d, j.get<double>());
  Mat m = parse_matrix(j, path);
  if (m.rows() != d || m.cols() != d)
    fail(path, "expected a scalar or a " + std::to_string(d) + " x " +
                   std::to_string(d) + " matrix");
  return m;
}

ConfidenceParams parse_confidence(const json& j, const std::string& path) {
  ConfidenceParams p;
  p.b = as_number(require(j, "b", path), path + ".b");
  if (j.contains("schedule")) {
    std::string s = as_string(j["schedule"], path + ".schedule");
    if (s == "polynomial") {
      p.schedule = ConfidenceParams::Schedule::kPolynomial;
    } else if (s == "exponential") {
      p.schedule = ConfidenceParams::Schedule::kExponential;
    } else {
      fail(path + ".schedule", "expected \"polynomial\" or \"exponential\"");
    }
  }
  if (p.schedule == ConfidenceParams::Schedule::kPolynomial) {
    p.q = as_number(require(j, "q", path), path + ".q");
  } else {
    p.tau = as_number(require(j, "tau", path), path + ".tau");
    if (j.contains("q")) p.q = as_number(j["q"], path + ".q");
  }
  return p;
}

StageConstraint parse_constraint(const json& j, int d, int nx, int nu,
                                 const std::string& path) {
  StageConstraint g;
  g.h_x = parse_pair_vectors(require(j, "H", path), d, nx, path + ".H");
  g.l_u = parse_pair_vectors(require(j, "L", path), d, nu, path + ".L");
  g.rhs = parse_pair_bounds(require(j, "h", path), d, path + ".h");
  g.alpha = as_number(require(j, "alpha", path), path + ".alpha");
  if (!(g.alpha > 0.0 && g.alpha < 1.0))
    fail(path + ".alpha", "expected a level in (0, 1)");
  return g;
}

SolverSettings parse_solver(const json& j, const std::string& path) {
  SolverSettings s;
  if (j.contains("eps_abs")) s.eps_abs = as_number(j["eps_abs"], path + ".eps_abs");
  if (j.contains("eps_rel")) s.eps_rel = as_number(j["eps_rel"], path + ".eps_rel");
  if (j.contains("eps_infeas"))
    s.eps_infeas = as_number(j["eps_infeas"], path + ".eps_infeas");
  if (j.contains("max_iter")) s.max_iter = as_int(j["max_iter"], path + ".max_iter");
  if (j.contains("rho")) s.rho = as_number(j["rho"], path + ".rho");
  if (j.contains("sigma")) s.sigma = as_number(j["sigma"], path + ".sigma");
  if (j.contains("alpha")) s.alpha = as_number(j["alpha"], path + ".alpha");
  if (j.contains("scaling_iters"))
    s.scaling_iters = as_int(j["scaling_iters"], path + ".scaling_iters");
  if (j.contains("adaptive_rho"))
    s.adaptive_rho = as_bool(j["adaptive_rho"], path + ".adaptive_rho");
  if (j.contains("check_interval"))
    s.check_interval = as_int(j["check_interval"], path + ".check_interval");
  if (j.contains("polish")) s.polish = as_bool(j["polish"], path + ".polish");
  if (j.contains("polish_delta"))
    s.polish_delta = as_number(j["polish_delta"], path + ".polish_delta");
  return s;
}

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json counts_to_json(const CountMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

AugmentedState ExperimentConfig::initial_state() const {
  const int d = kernel.mode_count();
  LearnerState s = initial_counts.rows() == d && initial_counts.cols() == d
                       ? LearnerState::from_counts(initial_counts)
                       : LearnerState(d);
  return AugmentedState{x0, std::move(s), ConfidenceVector::initial(beta), w0};
}

void ExperimentConfig::validate() const {
  model.validate();
  if (kernel.mode_count() != model.mode_count())
    throw ConfigError("kernel has " + std::to_string(kernel.mode_count()) +
                      " modes but the model has " +
                      std::to_string(model.mode_count()));
  if (x0.size() != model.nx())
    throw ConfigError("initial state dimension " + std::to_string(x0.size()) +
                      " does not match the plant (" +
                      std::to_string(model.nx()) + ")");
  if (w0 < 1 || w0 > kernel.mode_count())
    throw ConfigError("initial mode " + std::to_string(w0) +
                      " outside 1.." + std::to_string(kernel.mode_count()));
  if (static_cast<int>(beta.size()) != 1 + model.constraint_count())
    throw ConfigError("expected " +
                      std::to_string(1 + model.constraint_count()) +
                      " confidence components, got " +
                      std::to_string(beta.size()));
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  if (steps < 0) throw ConfigError("steps must be non-negative");
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (variants.empty()) throw ConfigError("variants must be non-empty");
  if (output_dir.empty()) throw ConfigError("output_dir must be non-empty");
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config error: invalid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  const Mat kernel_matrix = parse_matrix(require(j, "kernel", "$"), "$.kernel");
  if (kernel_matrix.rows() != kernel_matrix.cols())
    fail("$.kernel", "expected a square matrix");
  try {
    cfg.kernel = TransitionKernel::from_matrix(kernel_matrix);
  } catch (const NonStochasticRowError& e) {
    fail("$.kernel", e.what());
  }
  const int d = cfg.kernel.mode_count();

  const json& jm = require(j, "model", "$");
  cfg.model.a = parse_mode_matrices(require(jm, "A", "$.model"), d, "$.model.A");
  cfg.model.b = parse_mode_matrices(require(jm, "B", "$.model"), d, "$.model.B");
  cfg.model.c = parse_mode_vectors(require(jm, "c", "$.model"), d, "$.model.c");
  cfg.model.q_cost =
      parse_mode_matrices(require(jm, "Q", "$.model"), d, "$.model.Q");
  cfg.model.r_cost =
      parse_mode_matrices(require(jm, "R", "$.model"), d, "$.model.R");
  cfg.model.p_cost =
      parse_mode_matrices(require(jm, "P", "$.model"), d, "$.model.P");
  const int nx = cfg.model.nx();
  const int nu = cfg.model.nu();

  const json& jg = require(jm, "constraints", "$.model");
  if (!jg.is_array()) fail("$.model.constraints", "expected an array");
  for (std::size_t i = 0; i < jg.size(); ++i)
    cfg.model.constraints.push_back(
        parse_constraint(jg[i], d, nx, nu,
                         "$.model.constraints[" + std::to_string(i) + "]"));

  const json& jt = require(jm, "terminal", "$.model");
  cfg.model.terminal_f =
      parse_matrix(require(jt, "F", "$.model.terminal"), "$.model.terminal.F");
  cfg.model.terminal_bound =
      parse_vector(require(jt, "f", "$.model.terminal"), "$.model.terminal.f");
  const json& jv = require(jt, "vertices", "$.model.terminal");
  if (!jv.is_array() || jv.empty())
    fail("$.model.terminal.vertices", "expected a non-empty array");
  for (std::size_t i = 0; i < jv.size(); ++i)
    cfg.model.terminal_vertices.push_back(parse_vector(
        jv[i], "$.model.terminal.vertices[" + std::to_string(i) + "]"));
  if (jm.contains("region_radius"))
    cfg.model.region_radius =
        as_number(jm["region_radius"], "$.model.region_radius");

  const json& jb = require(j, "beta", "$");
  const int n_components = 1 + static_cast<int>(cfg.model.constraints.size());
  if (jb.contains("b")) {
    cfg.beta.assign(static_cast<std::size_t>(n_components),
                    parse_confidence(jb, "$.beta"));
  } else {
    cfg.beta.push_back(
        parse_confidence(require(jb, "cost", "$.beta"), "$.beta.cost"));
    const json& jc = require(jb, "constraints", "$.beta");
    if (!jc.is_array() || static_cast<int>(jc.size()) != n_components - 1)
      fail("$.beta.constraints", "expected one entry per constraint (" +
                                     std::to_string(n_components - 1) + ")");
    for (std::size_t i = 0; i < jc.size(); ++i)
      cfg.beta.push_back(parse_confidence(
          jc[i], "$.beta.constraints[" + std::to_string(i) + "]"));
  }

  const json& ji = require(j, "initial", "$");
  cfg.x0 = parse_vector(require(ji, "x", "$.initial"), "$.initial.x");
  cfg.w0 = as_int(require(ji, "w", "$.initial"), "$.initial.w");
  if (ji.contains("counts")) {
    Mat c = parse_matrix(ji["counts"], "$.initial.counts");
    if (c.rows() != d || c.cols() != d || (c.array() < 0).any())
      fail("$.initial.counts", "expected a non-negative " + std::to_string(d) +
                                   " x " + std::to_string(d) + " matrix");
    cfg.initial_counts = c.cast<std::int64_t>();
  }

  cfg.horizon = as_int(require(j, "horizon", "$"), "$.horizon");
  if (j.contains("steps")) cfg.steps = as_int(j["steps"], "$.steps");
  if (j.contains("runs")) cfg.runs = as_int(j["runs"], "$.runs");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0)
      fail("$.seed", "expected a non-negative integer");
    cfg.base_seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("variants")) {
    const json& jvar = j["variants"];
    if (!jvar.is_array() || jvar.empty())
      fail("$.variants", "expected a non-empty array");
    cfg.variants.clear();
    for (std::size_t i = 0; i < jvar.size(); ++i) {
      const std::string p = "$.variants[" + std::to_string(i) + "]";
      try {
        cfg.variants.push_back(variant_from_string(as_string(jvar[i], p)));
      } catch (const ConfigError& e) {
        fail(p, e.what());
      }
    }
  }
  if (j.contains("output_dir"))
    cfg.output_dir = as_string(j["output_dir"], "$.output_dir");
  if (j.contains("threads")) cfg.threads = as_int(j["threads"], "$.threads");
  if (j.contains("write_logs"))
    cfg.write_logs = as_bool(j["write_logs"], "$.write_logs");
  if (j.contains("solver")) cfg.solver = parse_solver(j["solver"], "$.solver");

  cfg.config_hash = fnv1a_hex(j.dump());
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

// Aggregates one variant's ensemble; logs are ordered by seed.
VariantStats collect_stats(const ExperimentConfig& cfg, Variant variant,
                           const std::vector<TrajectoryLog>& logs) {
  const PlantModel& model = cfg.model;
  const int ng = model.constraint_count();
  VariantStats st;
  st.variant = variant;
  st.runs = static_cast<int>(logs.size());
  st.constraints.resize(static_cast<std::size_t>(ng));
  for (int i = 0; i < ng; ++i)
    st.constraints[static_cast<std::size_t>(i)].alpha =
        model.constraints[static_cast<std::size_t>(i)].alpha;

  std::vector<double> norm_sum(static_cast<std::size_t>(cfg.steps) + 1, 0.0);
  std::vector<std::int64_t> norm_n(static_cast<std::size_t>(cfg.steps) + 1, 0);
  double cost_sum = 0.0;
  int completed = 0;
  std::vector<double> exact_sum(static_cast<std::size_t>(ng), 0.0);
  std::vector<std::int64_t> exact_n(static_cast<std::size_t>(ng), 0);

  for (const TrajectoryLog& log : logs) {
    if (log.failed) {
      ++st.infeasible_runs;
      st.infeasible_seeds.push_back(log.seed);
    }
    double cum = 0.0;
    for (const StepRecord& rec : log.steps) {
      if (!rec.feasible) break;
      const std::size_t t = static_cast<std::size_t>(rec.t);
      if (t < norm_sum.size()) {
        norm_sum[t] += rec.x.squaredNorm();
        ++norm_n[t];
      }
      cum += rec.cost_incurred;
      for (int i = 0; i < ng; ++i) {
        ConstraintStats& cs = st.constraints[static_cast<std::size_t>(i)];
        // Exact conditional violation probability of the next transition,
        // computable because the verifier knows the true kernel.
        double v = 0.0;
        for (int wn = 1; wn <= cfg.kernel.mode_count(); ++wn) {
          if (constraint_value(model, i, rec.x, rec.u, rec.w, wn) >
              kViolationTol)
            v += cfg.kernel.prob(rec.w, wn);
        }
        cs.max_exact_violation = std::max(cs.max_exact_violation, v);
        exact_sum[static_cast<std::size_t>(i)] += v;
        ++exact_n[static_cast<std::size_t>(i)];
        if (rec.w_next != 0) {
          ++cs.observations;
          if (rec.g_realized[static_cast<std::size_t>(i)] > kViolationTol)
            ++cs.realized_violations;
        }
      }
    }
    if (!log.failed) {
      cost_sum += cum;
      ++completed;
      const std::size_t t_end = static_cast<std::size_t>(cfg.steps);
      norm_sum[t_end] += log.final_x.squaredNorm();
      ++norm_n[t_end];
    }
  }

  st.mean_cumulative_cost = completed > 0 ? cost_sum / completed : 0.0;
  st.mean_state_norm_sq.resize(norm_sum.size(), 0.0);
  for (std::size_t t = 0; t < norm_sum.size(); ++t)
    if (norm_n[t] > 0)
      st.mean_state_norm_sq[t] = norm_sum[t] / static_cast<double>(norm_n[t]);
  for (int i = 0; i < ng; ++i) {
    ConstraintStats& cs = st.constraints[static_cast<std::size_t>(i)];
    if (exact_n[static_cast<std::size_t>(i)] > 0)
      cs.mean_exact_violation =
          exact_sum[static_cast<std::size_t>(i)] /
          static_cast<double>(exact_n[static_cast<std::size_t>(i)]);
    if (cs.observations > 0) {
      cs.realized_rate = static_cast<double>(cs.realized_violations) /
                         static_cast<double>(cs.observations);
      cs.realized_ci_half_width =
          1.96 * std::sqrt(cs.realized_rate * (1.0 - cs.realized_rate) /
                           static_cast<double>(cs.observations));
    }
  }
  return st;
}

}  // namespace

bool VerificationReport::guarantees_hold() const {
  if (!rci.certified) return false;
  if (!lyapunov.all_feasible || lyapunov.max_residual > kLyapunovTol)
    return false;
  for (const VariantStats& st : variants) {
    if (st.variant != Variant::kDr) continue;
    if (st.infeasible_runs > 0) return false;
    for (const ConstraintStats& cs : st.constraints)
      if (cs.max_exact_violation > cs.alpha + 1e-9) return false;
  }
  return bound_lhs <= bound_rhs + 1e-9;
}

std::string VerificationReport::to_json() const {
  json j;
  j["config"] = config_hash;
  j["rci_certified"] = rci.certified;
  j["rci_inconclusive"] = rci.inconclusive;
  json cex = json::array();
  for (const auto& [vertex, mode] : rci.counterexamples)
    cex.push_back({{"vertex", vertex}, {"mode", mode}});
  j["rci_counterexamples"] = std::move(cex);
  j["lyapunov"] = {{"max_residual", lyapunov.max_residual},
                   {"all_feasible", lyapunov.all_feasible},
                   {"grid_points", lyapunov.grid_points},
                   {"is_sampled_check", true},
                   {"c", lyapunov.c},
                   {"Vbar", lyapunov.v_bar},
                   {"r", lyapunov.r_bound}};
  json jv = json::array();
  for (const VariantStats& st : variants) {
    json e;
    e["variant"] = to_string(st.variant);
    e["runs"] = st.runs;
    e["infeasible_runs"] = st.infeasible_runs;
    e["infeasible_seeds"] = st.infeasible_seeds;
    e["mean_cumulative_cost"] = st.mean_cumulative_cost;
    json cons = json::array();
    for (const ConstraintStats& cs : st.constraints)
      cons.push_back({{"alpha", cs.alpha},
                      {"max_exact_violation", cs.max_exact_violation},
                      {"mean_exact_violation", cs.mean_exact_violation},
                      {"realized_rate", cs.realized_rate},
                      {"realized_ci_half_width", cs.realized_ci_half_width},
                      {"realized_violations", cs.realized_violations},
                      {"observations", cs.observations}});
    e["constraints"] = std::move(cons);
    e["mean_state_norm_sq"] = st.mean_state_norm_sq;
    jv.push_back(std::move(e));
  }
  j["variants"] = std::move(jv);
  j["bound_lhs"] = bound_lhs;
  j["bound_rhs"] = bound_rhs;
  j["initial_value"] = initial_value;
  j["decay_ratio"] = decay_ratio;
  j["guarantees_hold"] = guarantees_hold();
  return j.dump(2);
}

VerificationReport monte_carlo_verify(const ExperimentConfig& cfg, int runs,
                                      std::vector<TrajectoryLog>* keep_logs) {
  cfg.validate();
  if (runs < 1) throw ConfigError("runs must be at least 1");

  VerificationReport report;
  report.config_hash = cfg.config_hash;
  report.rci = validate_terminal_rci(cfg.model, {0.0, 0.5}, cfg.solver);
  const int points_per_dim = cfg.model.nx() == 1 ? 21 : 9;
  report.lyapunov =
      validate_lyapunov(cfg.model, make_terminal_grid(cfg.model, points_per_dim),
                        cfg.beta[0].b, cfg.solver, cfg.threads);

  for (Variant variant : cfg.variants) {
    std::vector<TrajectoryLog> logs(static_cast<std::size_t>(runs));
    const AugmentedState z0 = cfg.initial_state();
    parallel_for(runs, cfg.threads, [&](std::ptrdiff_t k) {
      logs[static_cast<std::size_t>(k)] = run_closed_loop(
          z0, cfg.model, cfg.kernel, cfg.horizon, cfg.steps,
          cfg.base_seed + static_cast<std::uint64_t>(k), variant, cfg.solver,
          cfg.config_hash);
    });
    report.variants.push_back(collect_stats(cfg, variant, logs));
    if (variant == Variant::kDr && report.initial_value == 0.0)
      for (const TrajectoryLog& log : logs)
        if (!log.steps.empty() && log.steps[0].feasible) {
          report.initial_value = log.steps[0].value;
          break;
        }
    if (keep_logs)
      for (auto& log : logs) keep_logs->push_back(std::move(log));
  }

  // Mean-square summability: sum_t E|x_t|^2 <= V0/c + (Vbar/c + r) sum beta_t.
  for (const VariantStats& st : report.variants) {
    if (st.variant != Variant::kDr) continue;
    double lhs = 0.0;
    double beta_sum = 0.0;
    for (int t = 0; t < cfg.steps; ++t) {
      lhs += st.mean_state_norm_sq[static_cast<std::size_t>(t)];
      beta_sum += confidence_closed_form(cfg.beta[0], t);
    }
    report.bound_lhs = lhs;
    if (report.lyapunov.c > 0.0)
      report.bound_rhs =
          report.initial_value / report.lyapunov.c +
          (report.lyapunov.v_bar / report.lyapunov.c + report.lyapunov.r_bound) *
              beta_sum;
    if (cfg.steps > 0 && st.mean_state_norm_sq.front() > 0.0)
      report.decay_ratio =
          st.mean_state_norm_sq.back() / st.mean_state_norm_sq.front();
    break;
  }
  return report;
}

void write_summary_csv(const ExperimentConfig& cfg,
                       const std::vector<TrajectoryLog>& logs,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << "seed,variant,steps,failed,cum_cost,max_g,final_x_norm_sq\n";
  for (const TrajectoryLog& log : logs) {
    double cum = 0.0;
    double max_g = -kInf;
    int steps_taken = 0;
    for (const StepRecord& rec : log.steps) {
      if (!rec.feasible) break;
      cum += rec.cost_incurred;
      ++steps_taken;
      for (double g : rec.g_realized) max_g = std::max(max_g, g);
    }
    out << log.seed << ',' << to_string(log.variant) << ',' << steps_taken
        << ',' << (log.failed ? 1 : 0) << ',' << format_double(cum) << ','
        << format_double(max_g == -kInf ? 0.0 : max_g) << ','
        << format_double(log.failed ? 0.0 : log.final_x.squaredNorm()) << '\n';
  }
  (void)cfg;
}

namespace {

std::string resolve_output_dir(const std::string& flag_value,
                               const ExperimentConfig& cfg) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("DRMPC_OUTPUT_DIR"); env && *env)
    return env;
  return cfg.output_dir;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << text << '\n';
}

int cmd_simulate(const std::string& config_path, int steps_flag,
                 std::int64_t seed_flag, const std::string& out_file) {
  ExperimentConfig cfg = load_config(config_path);
  const int steps = steps_flag >= 0 ? steps_flag : cfg.steps;
  const std::uint64_t seed =
      seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag) : cfg.base_seed;
  ModePath path = sample_path(cfg.kernel, cfg.w0, steps, seed);
  json j;
  j["config"] = cfg.config_hash;
  j["seed"] = path.seed;
  j["w0"] = cfg.w0;
  j["steps"] = steps;
  j["modes"] = path.modes;
  j["counts"] =
      counts_to_json(count_transitions(path.modes, cfg.kernel.mode_count()));
  if (out_file.empty()) {
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    write_text(out_file, j.dump(2));
    std::printf("wrote %s\n", out_file.c_str());
  }
  return 0;
}

int cmd_mpc_run(const std::string& config_path, std::int64_t seed_flag,
                const std::string& variant_name, int steps_flag,
                const std::string& out_dir_flag) {
  ExperimentConfig cfg = load_config(config_path);
  const std::uint64_t seed =
      seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag) : cfg.base_seed;
  const Variant variant = variant_name.empty() ? cfg.variants.front()
                                               : variant_from_string(variant_name);
  const int steps = steps_flag >= 0 ? steps_flag : cfg.steps;
  const std::string dir = resolve_output_dir(out_dir_flag, cfg);
  std::filesystem::create_directories(dir);

  TrajectoryLog log =
      run_closed_loop(cfg.initial_state(), cfg.model, cfg.kernel, cfg.horizon,
                      steps, seed, variant, cfg.solver, cfg.config_hash);
  write_jsonl(log, log_filename(dir, variant, seed, "jsonl"));
  write_csv(log, log_filename(dir, variant, seed, "csv"));

  double cum = 0.0;
  for (const StepRecord& rec : log.steps)
    if (rec.feasible) cum += rec.cost_incurred;
  std::printf("variant=%s seed=%" PRIu64 " steps=%zu cum_cost=%s %s\n",
              to_string(variant).c_str(), seed, log.steps.size(),
              format_double(cum).c_str(),
              log.failed ? ("FAILED: " + log.failure).c_str() : "ok");
  return log.failed ? 2 : 0;
}

int cmd_verify(const std::string& config_path, int runs_flag, int threads_flag,
               const std::string& out_dir_flag) {
  ExperimentConfig cfg = load_config(config_path);
  if (threads_flag > 0) cfg.threads = threads_flag;
  const int runs = runs_flag > 0 ? runs_flag : cfg.runs;
  const std::string dir = resolve_output_dir(out_dir_flag, cfg);
  std::filesystem::create_directories(dir);

  std::vector<TrajectoryLog> logs;
  VerificationReport report = monte_carlo_verify(cfg, runs, &logs);
  write_text(dir + "/report.json", report.to_json());
  write_summary_csv(cfg, logs, dir + "/summary.csv");
  if (cfg.write_logs)
    for (const TrajectoryLog& log : logs) {
      write_jsonl(log, log_filename(dir, log.variant, log.seed, "jsonl"));
      write_csv(log, log_filename(dir, log.variant, log.seed, "csv"));
    }

  const bool ok = report.guarantees_hold();
  std::printf("verify: %d runs/variant, report %s/report.json, guarantees %s\n",
              runs, dir.c_str(), ok ? "hold" : "VIOLATED");
  return ok ? 0 : 2;
}

int cmd_validate_terminal(const std::string& config_path,
                          const std::string& out_dir_flag) {
  ExperimentConfig cfg = load_config(config_path);
  const std::string dir = resolve_output_dir(out_dir_flag, cfg);
  std::filesystem::create_directories(dir);

  RciReport rci = validate_terminal_rci(cfg.model, {0.0, 0.5}, cfg.solver);
  const int points_per_dim = cfg.model.nx() == 1 ? 21 : 9;
  LyapunovReport lyap =
      validate_lyapunov(cfg.model, make_terminal_grid(cfg.model, points_per_dim),
                        cfg.beta[0].b, cfg.solver, cfg.threads);
  write_text(dir + "/validation.json", validation_report_json(rci, lyap));

  const bool ok =
      rci.certified && lyap.all_feasible && lyap.max_residual <= kLyapunovTol;
  std::printf("terminal set: invariance %s, decrease residual %s (%d points)\n",
              rci.certified ? "certified" : "REFUTED",
              format_double(lyap.max_residual).c_str(), lyap.grid_points);
  return ok ? 0 : 2;
}

int cmd_risk_eval(const std::string& input_path) {
  std::ifstream in(input_path);
  if (!in) throw ConfigError("cannot open input file: " + input_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  AmbiguitySet set;
  set.center = parse_vector(require(j, "center", "$"), "$.center");
  set.radius = as_number(require(j, "radius", "$"), "$.radius");
  const double alpha_hat =
      as_number(require(j, "alpha_hat", "$"), "$.alpha_hat");
  const Vec xi = parse_vector(require(j, "xi", "$"), "$.xi");
  if (xi.size() != set.center.size())
    fail("$.xi", "length must match center");
  if (set.radius < 0.0) fail("$.radius", "expected a non-negative radius");
  if (alpha_hat < 0.0 || alpha_hat > 1.0)
    fail("$.alpha_hat", "expected a level in [0, 1]");

  json out;
  out["support"] = support_function(set, xi);
  out["worst_case"] = vec_to_json(worst_case_distribution(set, xi));
  out["avar_at_center"] =
      alpha_hat > 0.0 ? avar(set.center, alpha_hat, xi) : xi.maxCoeff();
  out["dr_avar"] = dr_avar(set, alpha_hat, xi);
  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Distributionally robust MPC for Markov switching systems"};
  app.require_subcommand(1);

  std::string config_path, out_dir, out_file, variant_name, input_path;
  std::int64_t seed = -1;
  int steps = -1, runs = -1, threads = -1;

  CLI::App* sim = app.add_subcommand(
      "simulate", "Sample a mode path from the configured kernel");
  sim->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();
  sim->add_option("--steps", steps, "Number of transitions");
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--out", out_file, "Output file (default: stdout)");

  CLI::App* run = app.add_subcommand(
      "mpc-run", "One closed-loop run; writes JSONL and CSV logs");
  run->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();
  run->add_option("--seed", seed, "RNG seed");
  run->add_option("--variant", variant_name, "dr | robust | nominal");
  run->add_option("--steps", steps, "Closed-loop steps");
  run->add_option("--out-dir", out_dir, "Output directory");

  CLI::App* ver = app.add_subcommand(
      "verify", "Monte Carlo verification of the closed-loop guarantees");
  ver->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();
  ver->add_option("--runs", runs, "Runs per variant");
  ver->add_option("--threads", threads, "Worker threads");
  ver->add_option("--out-dir", out_dir, "Output directory");

  CLI::App* val = app.add_subcommand(
      "validate-terminal", "Certify the terminal set (invariance, decrease)");
  val->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();
  val->add_option("--out-dir", out_dir, "Output directory");

  CLI::App* risk = app.add_subcommand(
      "risk-eval", "Evaluate the risk functionals on explicit data");
  risk->add_option("--input", input_path,
                   "JSON file with center, radius, alpha_hat, xi")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(config_path, steps, seed, out_file);
    if (run->parsed())
      return cmd_mpc_run(config_path, seed, variant_name, steps, out_dir);
    if (ver->parsed()) return cmd_verify(config_path, runs, threads, out_dir);
    if (val->parsed()) return cmd_validate_terminal(config_path, out_dir);
    if (risk->parsed()) return cmd_risk_eval(input_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}

}  // namespace drmpc
