#include "msphs/kernels.hpp"

#include <cmath>

namespace msphs {

namespace {

void check_dims(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                const ArdKernelParams& params, const char* where) {
  if (x.size() != x2.size() || x.size() != params.log_lengthscales.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(where) + ": state dims " + std::to_string(x.size()) + ", " +
                    std::to_string(x2.size()) + " vs " +
                    std::to_string(params.log_lengthscales.size()) + " lengthscales");
  }
}

}  // namespace

ArdKernelParams ArdKernelParams::from_raw(const Eigen::VectorXd& lengthscales,
                                          double signal_variance) {
  if ((lengthscales.array() <= 0.0).any() || signal_variance <= 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "ArdKernelParams: lengthscales and signal variance must be positive");
  }
  ArdKernelParams p;
  p.log_lengthscales = lengthscales.array().log();
  p.log_signal_variance = std::log(signal_variance);
  return p;
}

double base_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                 const ArdKernelParams& params) {
  check_dims(x, x2, params, "base_eval");
  const Eigen::ArrayXd inv_l = (-params.log_lengthscales.array()).exp();
  const double z = ((x - x2).array() * inv_l).square().sum();
  return std::exp(-0.5 * z);
}

Eigen::VectorXd base_grad_x2(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                             const ArdKernelParams& params) {
  check_dims(x, x2, params, "base_grad_x2");
  const Eigen::ArrayXd inv_l2 = (-2.0 * params.log_lengthscales.array()).exp();
  const Eigen::ArrayXd d = (x - x2).array();
  const double k = std::exp(-0.5 * (d.square() * inv_l2).sum());
  return k * (d * inv_l2);
}

Eigen::MatrixXd base_hessian_block(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                                   const ArdKernelParams& params) {
  check_dims(x, x2, params, "base_hessian_block");
  const Eigen::ArrayXd s = (-2.0 * params.log_lengthscales.array()).exp();  // 1/l_i^2
  const Eigen::ArrayXd d = (x - x2).array();
  const double k = std::exp(-0.5 * (d.square() * s).sum());
  const Eigen::VectorXd ds = (d * s).matrix();  // d_i / l_i^2
  Eigen::MatrixXd h = -ds * ds.transpose();
  h.diagonal() += s.matrix();
  return k * h;
}

Eigen::MatrixXd base_hessian_dlog_lengthscale(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& x2,
                                              const ArdKernelParams& params, int d) {
  check_dims(x, x2, params, "base_hessian_dlog_lengthscale");
  if (d < 0 || d >= params.dim()) {
    throw Error(ErrorCode::InvalidArgument, "lengthscale index out of range");
  }
  const int n = params.dim();
  const Eigen::ArrayXd s = (-2.0 * params.log_lengthscales.array()).exp();
  const Eigen::ArrayXd diff = (x - x2).array();
  const double k = std::exp(-0.5 * (diff.square() * s).sum());
  const Eigen::VectorXd ds = (diff * s).matrix();

  // H_ab = k (delta_ab s_b - ds_a ds_b); with u_d = log l_d:
  //   dk/du_d = k diff_d^2 s_d,  ds_i/du_d = -2 s_i delta_id.
  Eigen::MatrixXd base = -ds * ds.transpose();
  base.diagonal() += s.matrix();
  Eigen::MatrixXd out = (k * diff(d) * diff(d) * s(d)) * base;

  out(d, d) += k * (-2.0 * s(d));
  for (int a = 0; a < n; ++a) {
    out(a, d) += k * 2.0 * ds(a) * ds(d);
    out(d, a) += k * 2.0 * ds(d) * ds(a);
  }
  // both the delta_ad and delta_bd branches contribute at (d,d)
  return out;
}

Eigen::MatrixXd phs_kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                                const Eigen::MatrixXd& jr_x, const Eigen::MatrixXd& jr_x2,
                                const ArdKernelParams& params) {
  const auto n = x.size();
  if (jr_x.rows() != n || jr_x.cols() != n || jr_x2.rows() != n || jr_x2.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "phs_kernel_eval: JR blocks must be n x n with n = state dim");
  }
  const Eigen::MatrixXd hess = base_hessian_block(x, x2, params);
  return params.signal_variance() * jr_x * hess * jr_x2.transpose();
}

double add_jitter(Eigen::MatrixXd& m, double scale) {
  if (m.rows() == 0) return 0.0;
  const double jitter = scale * m.trace() / static_cast<double>(m.rows());
  m.diagonal().array() += jitter;
  return jitter;
}

}  // namespace msphs
