#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>

#include "msphs/errors.hpp"
#include "msphs/phs_models.hpp"

namespace msphs {

/// Fixed-step RK4 solution with stored node derivatives, so observation
/// times can be filled in by cubic Hermite interpolation.
struct DenseTrajectory {
  Eigen::VectorXd times;
  Eigen::MatrixXd states;  // num_points x n
  Eigen::MatrixXd derivs;  // xdot at each node

  int num_points() const { return static_cast<int>(times.size()); }
  double t_begin() const { return times(0); }
  double t_end() const { return times(times.size() - 1); }

  /// Cubic Hermite interpolation at t within the stored span.
  Eigen::VectorXd interpolate(double t) const;
};

using FieldFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& u, double t)>;
using InputFn = std::function<Eigen::VectorXd(double t)>;

/// Classical fixed-step RK4 over [t0, t1]; the input signal is evaluated
/// at the substep times. A shorter final step lands exactly on t1.
DenseTrajectory rk4_integrate(const FieldFn& field, const Eigen::VectorXd& x0,
                              double t0, double t1, double dt, const InputFn& input);

/// Uniform N-point grid on [t0, t1] plus i.i.d. Gaussian jitter, clipped
/// to the span, sorted, and de-tied by minimal increments. Deterministic
/// given the seed.
Eigen::VectorXd jittered_timestamps(double t0, double t1, int n, double sigma_j,
                                    std::uint64_t seed);

/// Noisy, irregularly sampled observations of a trajectory.
struct TrajectoryDataset {
  Eigen::VectorXd timestamps;
  Eigen::MatrixXd states;  // K x n, noisy
  Eigen::MatrixXd inputs;  // K x m, noiseless
  double noise_variance = 0.0;
  std::uint64_t seed = 0;

  int num_samples() const { return static_cast<int>(timestamps.size()); }
  int state_dim() const { return static_cast<int>(states.cols()); }
  int input_dim() const { return static_cast<int>(inputs.cols()); }
};

/// Samples the dense trajectory at the given timestamps and adds
/// N(0, sigma_x^2 I) noise to the states. Inputs are recorded noiselessly.
TrajectoryDataset observe(const DenseTrajectory& trajectory,
                          const Eigen::VectorXd& timestamps, const InputFn& input,
                          double sigma_x, std::uint64_t seed);

struct SimConfig {
  double t0 = 0.0;
  double t1 = 20.0;
  int n_samples = 100;
  double sigma_x = 0.0;   // observation noise std dev
  double sigma_j = 0.05;  // timestamp jitter std dev
  double dt = 4e-3;       // RK4 ground-truth step
  std::uint64_t seed = 0;
};

/// Ground-truth integration + jittered subsampling + noise, end to end.
TrajectoryDataset make_dataset(const BenchmarkSystem& system, const SimConfig& config);

/// Dense ground truth only (no sampling); used for mesh bounds and truth.
DenseTrajectory simulate_truth(const BenchmarkSystem& system, const SimConfig& config);

/// Columnar text format: header `t, x1..xn, u1..um`, one row per sample,
/// 17 significant digits so values round-trip bit-exactly.
void save_dataset(const TrajectoryDataset& dataset, const std::filesystem::path& path);
TrajectoryDataset load_dataset(const std::filesystem::path& path);

/// FNV-1a hash of a file's bytes, used as the dataset fingerprint inside
/// serialized models.
std::uint64_t file_fingerprint(const std::filesystem::path& path);

}  // namespace msphs
