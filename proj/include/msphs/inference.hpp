#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <utility>
#include <vector>

#include "msphs/kernels.hpp"
#include "msphs/multistep.hpp"
#include "msphs/phs_models.hpp"
#include "msphs/simulate.hpp"

namespace msphs {

/// Everything the marginal-likelihood optimizer moves: ARD kernel
/// hyperparameters, observation-noise variance (log-space), and the PHS
/// structure parameters theta (raw space).
struct HyperParams {
  ArdKernelParams kernel;
  double log_noise_variance = 0.0;
  Eigen::VectorXd theta;

  int num_free() const { return kernel.dim() + 2 + static_cast<int>(theta.size()); }
  Eigen::VectorXd pack() const;
  static HyperParams unpack(const Eigen::VectorXd& packed, int state_dim, int theta_dim);
  double noise_variance() const { return std::exp(log_noise_variance); }
};

struct OptimizerConfig {
  double learning_rate = 0.1;
  int iterations = 300;
  /// Deterministic multi-start count: restarts > 1 re-runs Adam from
  /// rescaled copies of the initialization and keeps the best final NLL.
  int restarts = 1;
  std::uint64_t seed = 0;
};

struct FitResult {
  HyperParams params;     // best-NLL iterate
  double nll = 0.0;       // NLL at the returned iterate
  double initial_nll = 0.0;
  int best_iteration = 0;
};

/// Posterior over the drift f(x*): mean vector and covariance block.
class FieldPosterior {
public:
  virtual ~FieldPosterior() = default;
  virtual int state_dim() const = 0;
  virtual void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& mean,
                        Eigen::MatrixXd& cov) const = 0;

  Eigen::VectorXd mean(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd covariance(const Eigen::VectorXd& x) const;
};

/// Posterior over the Hamiltonian surface, conditioned on the projected
/// trajectory labels plus a noiseless anchor H(x_anchor) = h_anchor.
class HamiltonianPosterior {
public:
  double mean(const Eigen::VectorXd& x) const;
  double variance(const Eigen::VectorXd& x) const;  // clamped at zero
  void evaluate(const Eigen::VectorXd& x, double& mean, double& variance) const;

  const Eigen::VectorXd& anchor_state() const;
  double anchor_value() const;

  struct State;
  explicit HamiltonianPosterior(std::shared_ptr<const State> state);

private:
  std::shared_ptr<const State> state_;
};

namespace detail {

struct AdamResult {
  Eigen::VectorXd best;
  double best_value = 0.0;
  double initial_value = 0.0;
  int best_iteration = 0;
};

/// Full-batch Adam with bias correction, returning the best iterate seen.
/// Objective evaluations that throw or return non-finite values roll the
/// iterate back to the best point and halve the learning rate.
AdamResult adam_minimize(
    const std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>& objective,
    Eigen::VectorXd x0, const OptimizerConfig& config);

/// Shared exact-inference engine for PHS-kernel GPs whose labels are a
/// linear projection B of stacked drift evaluations plus Gaussian noise
/// sigma^2 * noise_base:
///
///   labels = B f_vec(X) + eps,   eps ~ N(0, sigma^2 noise_base)
///
/// MS-PHS instantiates B = B_I (lifted multistep weights) and
/// noise_base = A_I A_I^T; the prefiltered GP-PHS baseline uses B = I and
/// noise_base = I. Training covariance, marginal likelihood and its
/// gradient, and both posteriors live here.
class ProjectedPhsGp {
public:
  struct Setup {
    Eigen::MatrixXd train_states;        // K x n kernel inputs
    Eigen::MatrixXd train_inputs;        // K x m port inputs
    Eigen::SparseMatrix<double> b_lift;  // label_dim x K*n
    Eigen::MatrixXd noise_base;          // label_dim x label_dim
    Eigen::VectorXd raw_labels;          // label_dim; input term not yet removed
  };

  ProjectedPhsGp(Setup setup, PhsStructure structure, HyperParams params);

  struct Assembly;  // immutable snapshot shared with the posteriors

  void set_params(const HyperParams& params);  // invalidates the assembly
  const HyperParams& params() const { return params_; }
  int label_dim() const { return static_cast<int>(setup_.raw_labels.size()); }
  int state_dim() const { return static_cast<int>(setup_.train_states.cols()); }

  void assemble();
  bool assembled() const { return assembled_; }

  double nll();
  /// NLL and its gradient in HyperParams::pack order.
  std::pair<double, Eigen::VectorXd> nll_with_gradient();

  FitResult fit(const OptimizerConfig& config);

  std::shared_ptr<const FieldPosterior> field_posterior();
  HamiltonianPosterior hamiltonian_posterior(const Eigen::VectorXd& anchor_state,
                                             double anchor_value,
                                             double epsilon_h_rel = 1e-8);

  /// Training covariance B K_phs B^T (no noise), for tests and diagnostics.
  Eigen::MatrixXd projected_gram();
  /// Full factorized matrix B K_phs B^T + sigma^2 noise_base + jitter I.
  const Eigen::MatrixXd& training_matrix();
  /// Labels with the known input contribution removed.
  const Eigen::VectorXd& labels();
  double jitter() const { return jitter_; }

private:
  void require_assembled();
  Eigen::VectorXd input_drift_vector(const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd phs_gram(const Eigen::VectorXd& theta) const;

  Setup setup_;
  PhsStructure structure_;
  HyperParams params_;
  bool assembled_ = false;
  double jitter_ = 0.0;
  std::shared_ptr<Assembly> assembly_;
};

}  // namespace detail

/// The multistep port-Hamiltonian GP: places a GP prior on H, projects the
/// induced drift prior through variable-step multistep constraints, and
/// conditions exactly on Y = A_I x_tilde.
class MsPhsModel {
public:
  MsPhsModel(TrajectoryDataset data, PhsStructure structure, MultistepScheme scheme,
             HyperParams init);

  /// Scale-aware default initialization from the data.
  static HyperParams default_init(const TrajectoryDataset& data,
                                  const PhsStructure& structure);

  void assemble() { engine_.assemble(); }
  double nll() { return engine_.nll(); }
  std::pair<double, Eigen::VectorXd> nll_with_gradient() {
    return engine_.nll_with_gradient();
  }
  FitResult fit(const OptimizerConfig& config);

  std::shared_ptr<const FieldPosterior> field_posterior() { return engine_.field_posterior(); }
  HamiltonianPosterior hamiltonian_posterior(const Eigen::VectorXd& anchor_state,
                                             double anchor_value,
                                             double epsilon_h_rel = 1e-8) {
    return engine_.hamiltonian_posterior(anchor_state, anchor_value, epsilon_h_rel);
  }

  const HyperParams& params() const { return engine_.params(); }
  void set_params(const HyperParams& p) { engine_.set_params(p); }
  const ConstraintMatrices& constraints() const { return constraints_; }
  detail::ProjectedPhsGp& engine() { return engine_; }

private:
  TrajectoryDataset data_;
  MultistepScheme scheme_;
  ConstraintMatrices constraints_;
  detail::ProjectedPhsGp engine_;
};

/// Central-difference consistency between the two posteriors: the gradient
/// of mu_H on a regular grid, mapped through J_R, against mu_f. Returns the
/// max deviation relative to the larger of the local and mesh-average field
/// magnitude. Zero labeled windows returns 0 by convention.
double field_from_surface_check(const FieldPosterior& field,
                                const HamiltonianPosterior& surface,
                                const PhsStructure& structure, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                int resolution, int label_dim);

}  // namespace msphs
