#pragma once

#include <Eigen/Dense>

#include "msphs/errors.hpp"

namespace msphs {

/// ARD squared-exponential hyperparameters, stored in log-space so that
/// unconstrained optimizer updates keep lengthscales and signal variance
/// positive.
struct ArdKernelParams {
  Eigen::VectorXd log_lengthscales;
  double log_signal_variance = 0.0;

  static ArdKernelParams from_raw(const Eigen::VectorXd& lengthscales,
                                  double signal_variance);

  Eigen::VectorXd lengthscales() const { return log_lengthscales.array().exp(); }
  double signal_variance() const { return std::exp(log_signal_variance); }
  int dim() const { return static_cast<int>(log_lengthscales.size()); }
};

/// k_base(x, x2) = exp(-1/2 sum_i (x_i - x2_i)^2 / l_i^2). Unit variance;
/// the signal variance scales the energy prior, not the base kernel.
double base_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                 const ArdKernelParams& params);

/// Gradient of k_base with respect to its second argument.
/// Component i equals k_base(x, x2) * (x_i - x2_i) / l_i^2.
Eigen::VectorXd base_grad_x2(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                             const ArdKernelParams& params);

/// Mixed second-derivative block grad_x grad_x2 k_base(x, x2).
/// Entry (i,j) = k_base * (delta_ij / l_i^2 - d_i d_j / (l_i^2 l_j^2)),
/// d = x - x2. At x == x2 this is diag(1 / l_i^2).
Eigen::MatrixXd base_hessian_block(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                                   const ArdKernelParams& params);

/// Derivative of base_hessian_block with respect to log-lengthscale d.
/// Needed for the marginal-likelihood gradient.
Eigen::MatrixXd base_hessian_dlog_lengthscale(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& x2,
                                              const ArdKernelParams& params, int d);

/// Matrix-valued PHS kernel block:
///   k_phs(x, x2) = sigma_f^2 * JR(x) * grad_x grad_x2 k_base(x, x2) * JR(x2)^T
/// where JR(x) = J(x) - R(x) comes from the PHS structure. This is the
/// covariance Cov[f(x), f(x2)] induced by the GP prior on H.
Eigen::MatrixXd phs_kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                                const Eigen::MatrixXd& jr_x, const Eigen::MatrixXd& jr_x2,
                                const ArdKernelParams& params);

/// Relative jitter added to the diagonal before any factorization:
/// 1e-8 * trace / size. Returns the jitter magnitude used.
double add_jitter(Eigen::MatrixXd& m, double scale = 1e-8);

}  // namespace msphs
