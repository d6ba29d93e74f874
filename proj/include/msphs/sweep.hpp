#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msphs/bench.hpp"
#include "msphs/inference.hpp"

namespace msphs {

/// Config for a benchmark sweep over (system x method x noise x jitter x seed).
struct ExperimentConfig {
  std::vector<std::string> systems = {"mass-spring", "van-der-pol", "duffing"};
  std::vector<std::string> methods = {"ms-phs-ab-3", "ms-ode-ab-3", "gp-phs-loess-2"};
  int n_samples = 100;
  double t0 = 0.0;
  double t1 = 20.0;
  // Noise std-dev ladder; defaults are the square roots of the variance
  // ladder {1e-4, 1e-3, 0.01, 0.02, 0.05}.
  std::vector<double> sigma_x;
  std::vector<double> sigma_j = {0.0, 0.01, 0.02, 0.05, 0.10};
  std::vector<std::uint64_t> seeds;  // default 1..30
  int mesh_resolution = 25;
  double mesh_inflation = 0.1;
  double rk4_dt = 4e-3;
  double omega = 1.5;
  OptimizerConfig optimizer;

  static ExperimentConfig defaults();
  void validate() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const ExperimentConfig& config, const std::filesystem::path& path);

struct RunResult {
  int run_id = 0;
  std::string system;
  std::string method;
  double sigma_x = 0.0;
  double sigma_j = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double vf_mse = 0.0;
  double vf_cosine = 0.0;
  std::optional<double> h_mse;       // absent for ms-ode methods
  std::optional<double> h_mean_var;
  std::optional<double> h_ratio;
  double wall_time_s = 0.0;
  std::string fitted;  // compact hyperparameter echo
};

/// Append-only results store persisted as runs.csv inside the results dir.
class ResultsStore {
public:
  static ResultsStore load(const std::filesystem::path& dir);

  const std::vector<RunResult>& runs() const { return runs_; }
  void add(RunResult r) { runs_.push_back(std::move(r)); }
  void save(const std::filesystem::path& dir) const;

private:
  std::vector<RunResult> runs_;
};

/// Executes the full cross product; each run simulates, fits, predicts and
/// scores. Individual failures are recorded and excluded from aggregates.
/// Results are persisted incrementally to `out_dir/runs.csv` and mesh
/// dumps for the first seed of each cell go to `out_dir/mesh/`.
ResultsStore run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                       int jobs = 1);

/// Runs a single cell and returns the result (no persistence).
RunResult run_single(const ExperimentConfig& config, const std::string& system,
                     const std::string& method, double sigma_x, double sigma_j,
                     std::uint64_t seed, int run_id = 0);

/// Emits the report tables from recorded runs:
///   vf_mse.csv            per-cell mean/std/CI95/median/quartiles of field MSE
///   cosine.csv            systems x methods, "mean (std)" cells
///   calibration_noise.csv per-noise-level medians + IQR of h_mse and sigma_H^2
///   calibration_jitter.csv jitter rows, "median [Q1, Q3]" ratio cells
void write_reports(const ResultsStore& store, const std::filesystem::path& out_dir);

/// Aggregation helpers shared by the reports and the acceptance suite.
struct Aggregate {
  int n_ok = 0;
  int n_total = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;
};
Aggregate aggregate(std::vector<double> values, int n_total);

/// Median via type-7 linear interpolation (same convention as quartiles).
double median_of(std::vector<double> values);

/// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace msphs
