#include "msphs/multistep.hpp"

#include <cmath>
#include <iostream>
#include <vector>

#include "msphs/simulate.hpp"

namespace msphs {

void MultistepScheme::validate() const {
  if (family != MultistepFamily::AdamsBashforth) {
    throw Error(ErrorCode::InvalidArgument, "unsupported multistep family");
  }
  if (order < 1 || order > 3) {
    throw Error(ErrorCode::InvalidArgument,
                "Adams-Bashforth order must be in {1, 2, 3}, got " + std::to_string(order));
  }
}

Eigen::VectorXd ab_coefficients(const Eigen::VectorXd& step_history, int order) {
  if (order < 1 || order > 3) {
    throw Error(ErrorCode::InvalidArgument, "order must be in {1, 2, 3}");
  }
  if (step_history.size() < order) {
    throw Error(ErrorCode::InsufficientData,
                "need " + std::to_string(order) + " step sizes, got " +
                    std::to_string(step_history.size()));
  }
  if ((step_history.head(order).array() <= 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "step sizes must be positive");
  }

  const int p = order;
  const double h = step_history(0);

  // Past nodes relative to t_k: tau_0 = 0, tau_j = -(h_{k-1} + ... + h_{k-j}).
  std::vector<double> tau(p, 0.0);
  for (int j = 1; j < p; ++j) tau[j] = tau[j - 1] - step_history(j);

  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) {
    // Expand prod_{i != j} (s - tau_i) into monomial coefficients.
    std::vector<double> coef{1.0};
    double denom = 1.0;
    for (int i = 0; i < p; ++i) {
      if (i == j) continue;
      denom *= tau[j] - tau[i];
      std::vector<double> next(coef.size() + 1, 0.0);
      for (std::size_t m = 0; m < coef.size(); ++m) {
        next[m] -= coef[m] * tau[i];
        next[m + 1] += coef[m];
      }
      coef = std::move(next);
    }
    // Integrate monomials over [0, h].
    double integral = 0.0;
    double h_pow = h;
    for (std::size_t m = 0; m < coef.size(); ++m) {
      integral += coef[m] * h_pow / static_cast<double>(m + 1);
      h_pow *= h;
    }
    beta(j) = integral / denom;
  }
  return beta;
}

ConstraintMatrices build_constraints(const Eigen::VectorXd& timestamps,
                                     const MultistepScheme& scheme) {
  scheme.validate();
  const int k_points = static_cast<int>(timestamps.size());
  const int m_width = scheme.window_width();
  const int p = scheme.order;
  if (k_points < m_width + 1) {
    throw Error(ErrorCode::InsufficientData,
                "need at least " + std::to_string(m_width + 1) + " points, got " +
                    std::to_string(k_points));
  }
  for (int i = 1; i < k_points; ++i) {
    if (!(timestamps(i) > timestamps(i - 1))) {
      throw Error(ErrorCode::InvalidArgument,
                  "timestamps must be strictly increasing (index " + std::to_string(i) + ")");
    }
  }

  ConstraintMatrices out;
  out.timestamps = timestamps;
  const int windows = k_points - m_width;
  out.a = Eigen::MatrixXd::Zero(windows, k_points);
  out.b = Eigen::MatrixXd::Zero(windows, k_points);

  Eigen::VectorXd steps(k_points - 1);
  for (int i = 0; i + 1 < k_points; ++i) steps(i) = timestamps(i + 1) - timestamps(i);
  for (int i = 1; i + 1 < k_points; ++i) {
    const double ratio = std::max(steps(i) / steps(i - 1), steps(i - 1) / steps(i));
    out.max_step_ratio = std::max(out.max_step_ratio, ratio);
  }
  if (out.max_step_ratio > 10.0) {
    std::cerr << "multistep: consecutive step ratio " << out.max_step_ratio
              << " exceeds 10; the scheme's accuracy assumptions may not hold\n";
  }

  for (int w = 0; w < windows; ++w) {
    const int k = m_width - 1 + w;  // window integrates [t_k, t_{k+1}]
    out.a(w, k) = -1.0;
    out.a(w, k + 1) = 1.0;
    Eigen::VectorXd history(p);
    for (int j = 0; j < p; ++j) history(j) = steps(k - j);
    const Eigen::VectorXd beta = ab_coefficients(history, p);
    for (int j = 0; j < p; ++j) out.b(w, k - j) = beta(j);
  }
  return out;
}

Eigen::SparseMatrix<double> kron_lift(const Eigen::MatrixXd& m, int state_dim) {
  if (state_dim < 1) {
    throw Error(ErrorCode::InvalidArgument, "state dimension must be >= 1");
  }
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  Eigen::SparseMatrix<double> out(rows * state_dim, cols * state_dim);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (m(r, c) == 0.0) continue;
      for (int i = 0; i < state_dim; ++i) {
        triplets.emplace_back(r * state_dim + i, c * state_dim + i, m(r, c));
      }
    }
  }
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

LteCheckResult lte_order_check(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& field,
    const Eigen::VectorXd& x0, double t0, double t1,
    const MultistepScheme& scheme, const Eigen::VectorXd& step_grid) {
  scheme.validate();
  if (step_grid.size() < 4) {
    throw Error(ErrorCode::InsufficientData, "step ladder needs at least 4 levels");
  }

  const int n = static_cast<int>(x0.size());
  const Eigen::VectorXd zero_u = Eigen::VectorXd::Zero(1);
  const FieldFn full_field = [&](const Eigen::VectorXd& x, const Eigen::VectorXd&, double) {
    return field(x);
  };
  const InputFn zero_input = [&](double) { return zero_u; };

  LteCheckResult result;
  result.mean_steps = step_grid;
  result.residuals.resize(step_grid.size());

  for (int level = 0; level < step_grid.size(); ++level) {
    const double h = step_grid(level);
    if (h <= 0.0) throw Error(ErrorCode::InvalidArgument, "mean steps must be positive");
    const int refine = 100;  // RK4 substeps per sample interval
    const int samples = static_cast<int>(std::floor((t1 - t0) / h)) + 1;
    const double span = (samples - 1) * h;
    const DenseTrajectory fine =
        rk4_integrate(full_field, x0, t0, t0 + span, h / refine, zero_input);

    Eigen::VectorXd times(samples);
    Eigen::MatrixXd states(samples, n);
    Eigen::MatrixXd drift(samples, n);
    for (int i = 0; i < samples; ++i) {
      const int idx = i * refine;
      times(i) = fine.times(idx);
      states.row(i) = fine.states.row(idx);
      drift.row(i) = field(fine.states.row(idx).transpose()).transpose();
    }

    const ConstraintMatrices cons = build_constraints(times, scheme);
    const Eigen::MatrixXd residual = cons.a * states - cons.b * drift;
    result.residuals(level) = residual.cwiseAbs().maxCoeff();
  }

  // Least-squares slope of log residual against log h.
  const Eigen::ArrayXd lx = result.mean_steps.array().log();
  const Eigen::ArrayXd ly = result.residuals.array().max(1e-300).log();
  const double mx = lx.mean();
  const double my = ly.mean();
  result.slope = ((lx - mx) * (ly - my)).sum() / (lx - mx).square().sum();
  return result;
}

}  // namespace msphs
