#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>

#include "msphs/errors.hpp"

namespace msphs {

enum class MultistepFamily { AdamsBashforth };

/// Variable-step linear multistep scheme. For Adams-Bashforth the window
/// width M equals the order p: each labeled window consumes the p most
/// recent already-seen points.
struct MultistepScheme {
  MultistepFamily family = MultistepFamily::AdamsBashforth;
  int order = 1;

  int window_width() const { return order; }
  void validate() const;
};

/// Stacked constraint matrices A, B in R^{(K-M) x K} realizing
/// A X = B f(X) over all labeled windows of a timestamp grid.
struct ConstraintMatrices {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::VectorXd timestamps;
  double max_step_ratio = 1.0;  // largest ratio of consecutive steps seen

  int num_windows() const { return static_cast<int>(a.rows()); }
  int num_points() const { return static_cast<int>(a.cols()); }
};

/// Quadrature weights beta_j of the variable-step Adams-Bashforth rule:
/// integrals over [t_k, t_{k+1}] of the Lagrange basis polynomials through
/// the p past nodes t_k, t_{k-1}, ..., t_{k-p+1}.
///
/// step_history = (h_k, h_{k-1}, ..., h_{k-p+1}): the integration step
/// followed by the p-1 preceding gaps. Weights satisfy sum_j beta_j = h_k
/// and integrate polynomials of degree <= p-1 exactly.
Eigen::VectorXd ab_coefficients(const Eigen::VectorXd& step_history, int order);

/// Builds the stacked A/B constraint matrices for an increasing timestamp
/// grid. Row w (window ending at point index k+1, k = M-1 .. K-2, zero
/// based) has A[w,k] = -1, A[w,k+1] = +1 and B[w,k-j] = beta_j.
/// Warns on stderr when consecutive step ratios exceed 10.
ConstraintMatrices build_constraints(const Eigen::VectorXd& timestamps,
                                     const MultistepScheme& scheme);

/// Kronecker lift M -> M (x) I_n, mapping per-timestep stacked state
/// vectors through the scalar constraint matrix.
Eigen::SparseMatrix<double> kron_lift(const Eigen::MatrixXd& m, int state_dim);

struct LteCheckResult {
  double slope = 0.0;               // log-log regression slope of residual vs h
  Eigen::VectorXd mean_steps;
  Eigen::VectorXd residuals;        // max-window infinity-norm residual per level
};

/// Empirical local-truncation-error order check: integrates the given
/// zero-input field with a fine RK4 ladder, samples at uniform grids with
/// the requested mean steps, and regresses log ||A X - B f(X)||_inf
/// against log h. An order-p scheme yields slope ~ p+1.
LteCheckResult lte_order_check(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& field,
    const Eigen::VectorXd& x0, double t0, double t1,
    const MultistepScheme& scheme, const Eigen::VectorXd& step_grid);

}  // namespace msphs
