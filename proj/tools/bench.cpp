// Compares the serial and OpenMP execution paths of the parallel
// surfaces (Monte Carlo ensemble, Lyapunov grid validation) on one
// config. Results must match exactly; timings show the speedup.

#include <chrono>
#include <cstdio>
#include <vector>

#include "drmpc/harness.hpp"
#include "drmpc/parallel.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct EnsembleResult {
  double checksum = 0.0;
  double elapsed = 0.0;
};

EnsembleResult run_ensemble(const drmpc::ExperimentConfig& cfg, int runs,
                            int steps, int threads) {
  std::vector<double> slot(static_cast<std::size_t>(runs), 0.0);
  const drmpc::AugmentedState z0 = cfg.initial_state();
  const auto start = Clock::now();
  drmpc::parallel_for(runs, threads, [&](std::ptrdiff_t k) {
    drmpc::TrajectoryLog log = drmpc::run_closed_loop(
        z0, cfg.model, cfg.kernel, cfg.horizon, steps,
        cfg.base_seed + static_cast<std::uint64_t>(k), drmpc::Variant::kDr,
        cfg.solver, cfg.config_hash);
    double cum = 0.0;
    for (const auto& rec : log.steps) cum += rec.cost_incurred;
    slot[static_cast<std::size_t>(k)] =
        cum + (log.failed ? -1.0 : log.final_x.squaredNorm());
  });
  EnsembleResult out;
  out.elapsed = seconds_since(start);
  for (double v : slot) out.checksum += v;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const char* config_path = argc > 1 ? argv[1] : "configs/reference.json";
  drmpc::ExperimentConfig cfg;
  try {
    cfg = drmpc::load_config(config_path);
  } catch (const drmpc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  const int hw = drmpc::hardware_threads();
  std::printf("hardware threads: %d\n\n", hw);

  const int runs = 24;
  const int steps = 15;
  std::printf("Monte Carlo ensemble (%d runs x %d steps)\n", runs, steps);
  EnsembleResult serial = run_ensemble(cfg, runs, steps, 1);
  EnsembleResult parallel = run_ensemble(cfg, runs, steps, hw);
  std::printf("  serial    %8.3f s\n", serial.elapsed);
  std::printf("  parallel  %8.3f s  (speedup %.2fx)\n", parallel.elapsed,
              serial.elapsed / parallel.elapsed);
  const bool mc_equal = serial.checksum == parallel.checksum;
  std::printf("  results identical: %s\n\n", mc_equal ? "yes" : "NO");

  const std::vector<drmpc::Vec> grid = drmpc::make_terminal_grid(cfg.model, 15);
  std::printf("Lyapunov grid validation (%zu points)\n", grid.size());
  auto t0 = Clock::now();
  drmpc::LyapunovReport lyap_serial =
      drmpc::validate_lyapunov(cfg.model, grid, cfg.beta[0].b, cfg.solver, 1);
  const double lyap_serial_s = seconds_since(t0);
  t0 = Clock::now();
  drmpc::LyapunovReport lyap_parallel =
      drmpc::validate_lyapunov(cfg.model, grid, cfg.beta[0].b, cfg.solver, hw);
  const double lyap_parallel_s = seconds_since(t0);
  std::printf("  serial    %8.3f s\n", lyap_serial_s);
  std::printf("  parallel  %8.3f s  (speedup %.2fx)\n", lyap_parallel_s,
              lyap_serial_s / lyap_parallel_s);
  const bool lyap_equal =
      lyap_serial.max_residual == lyap_parallel.max_residual &&
      lyap_serial.all_feasible == lyap_parallel.all_feasible;
  std::printf("  results identical: %s\n", lyap_equal ? "yes" : "NO");

  return mc_equal && lyap_equal ? 0 : 1;
}
