#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

#include "msphs/inference.hpp"
#include "msphs/simulate.hpp"

namespace msphs {

/// Smoothed states and estimated time-derivatives produced by a local
/// polynomial prefilter, evaluated at the observation times.
struct DerivativeEstimate {
  Eigen::VectorXd timestamps;
  Eigen::MatrixXd states;       // K x n smoothed
  Eigen::MatrixXd derivatives;  // K x n estimated xdot
  double span = 0.0;            // LOESS span fraction, 0 for Savitzky-Golay
  int window = 0;               // Savitzky-Golay window length, 0 for LOESS
  int degree = 0;
};

/// LOESS with tricube distance weights: per observation time, fits a
/// weighted degree-`degree` polynomial over the span-nearest samples and
/// reads off the local value and slope. Handles irregular grids.
DerivativeEstimate loess_smooth(const TrajectoryDataset& data, double span = 0.15,
                                int degree = 2);

/// Savitzky-Golay smoothing/differentiation. Requires a regular grid
/// (relative step deviation < 1e-9); shifted windows at the boundaries
/// keep polynomial reproduction exact everywhere.
DerivativeEstimate savgol_smooth(const TrajectoryDataset& data, int window = 11,
                                 int degree = 3);

/// GP-PHS baseline: fits the PHS kernel directly to prefiltered vector
/// field estimates (B = identity, homoscedastic label noise learned by
/// NLL), then conditions the Hamiltonian surface the same way MS-PHS does.
class GpPhsModel {
public:
  GpPhsModel(DerivativeEstimate estimate, Eigen::MatrixXd inputs, PhsStructure structure,
             HyperParams init);

  static HyperParams default_init(const DerivativeEstimate& estimate,
                                  const PhsStructure& structure);

  void assemble() { engine_.assemble(); }
  double nll() { return engine_.nll(); }
  FitResult fit(const OptimizerConfig& config);
  std::shared_ptr<const FieldPosterior> field_posterior() { return engine_.field_posterior(); }
  HamiltonianPosterior hamiltonian_posterior(const Eigen::VectorXd& anchor_state,
                                             double anchor_value,
                                             double epsilon_h_rel = 1e-8) {
    return engine_.hamiltonian_posterior(anchor_state, anchor_value, epsilon_h_rel);
  }
  const HyperParams& params() const { return engine_.params(); }
  void set_params(const HyperParams& p) { engine_.set_params(p); }
  detail::ProjectedPhsGp& engine() { return engine_; }

private:
  detail::ProjectedPhsGp engine_;
};

namespace detail {

/// Scalar GP over one drift component with multistep-projected labels:
/// training covariance B K B^T + sigma^2 A A^T, posterior by standard
/// conditioning. Backs MsOdeModel; also usable with an arbitrary kernel
/// functor for cross-checks against the lifted block path.
struct ScalarProjectedGp {
  using KernelFn =
      std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

  ScalarProjectedGp(const Eigen::MatrixXd& train_states, const Eigen::MatrixXd& a,
                    const Eigen::MatrixXd& b, Eigen::VectorXd labels, KernelFn kernel,
                    double noise_variance);

  double posterior_mean(const Eigen::VectorXd& x) const;
  double posterior_variance(const Eigen::VectorXd& x) const;
  double nll() const;

  Eigen::MatrixXd train_states;
  Eigen::MatrixXd b;
  Eigen::VectorXd labels;
  KernelFn kernel;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;
  double jitter = 0.0;
};

}  // namespace detail

/// Multistep GP without the physics prior: an independent ARD-SE prior on
/// each drift component, trained on the same projected labels.
class MsOdeModel {
public:
  struct Params {
    std::vector<ArdKernelParams> kernels;  // one per state dimension
    double log_noise_variance = 0.0;
    Eigen::VectorXd pack() const;
    static Params unpack(const Eigen::VectorXd& packed, int state_dim);
  };

  MsOdeModel(TrajectoryDataset data, PhsStructure structure, MultistepScheme scheme,
             Params init);

  struct Assembly;  // snapshot shared with the posterior

  static Params default_init(const TrajectoryDataset& data, const MultistepScheme& scheme);

  void assemble();
  double nll();
  std::pair<double, Eigen::VectorXd> nll_with_gradient();
  FitResult fit(const OptimizerConfig& config);  // FitResult.params left empty; see params()
  std::shared_ptr<const FieldPosterior> field_posterior();

  const Params& params() const { return params_; }
  void set_params(const Params& p);

private:
  TrajectoryDataset data_;
  PhsStructure structure_;
  MultistepScheme scheme_;
  ConstraintMatrices constraints_;
  Params params_;
  Eigen::MatrixXd component_labels_;  // (K-M) x n
  std::shared_ptr<Assembly> assembly_;
};

}  // namespace msphs
