#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "msphs/errors.hpp"

namespace msphs {

/// Parametric port-Hamiltonian structure: J(x) skew-symmetric, R(x)
/// symmetric, G(x) the port map, all depending on an unknown parameter
/// vector theta. The Hamiltonian itself is not part of the structure;
/// it is what the GP learns.
struct PhsStructure {
  int state_dim = 0;
  int input_dim = 0;
  Eigen::VectorXd theta;

  std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& theta)> j;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& theta)> r;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& theta)> g;
  /// d(J - R)/d theta_j, required for marginal-likelihood gradients.
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& theta, int j)>
      jr_dtheta;
  /// dG/d theta_j; null means G does not depend on theta.
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& theta, int j)>
      g_dtheta;

  int num_params() const { return static_cast<int>(theta.size()); }
};

/// J(x) - R(x) at the given parameters.
Eigen::MatrixXd jr_eval(const PhsStructure& structure, const Eigen::VectorXd& theta,
                        const Eigen::VectorXd& x);

/// A benchmark system: PHS structure with its true parameters plus the
/// analytic ground truth used by simulators and metric code.
struct BenchmarkSystem {
  std::string name;
  double omega = 0.0;  // input frequency, 0 when the system takes no input
  PhsStructure structure;  // theta holds the true parameters
  std::function<double(const Eigen::VectorXd&)> true_hamiltonian;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> true_hamiltonian_grad;
  /// Full dynamics (x, u) -> xdot = [J - R] grad H + G u.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> true_field;
  /// Zero-input drift f(x) = [J - R] grad H, the quantity the GP learns.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> true_drift;
  std::function<Eigen::VectorXd(double)> input_signal;
  Eigen::VectorXd x0;  // default initial condition for experiments
};

/// Undamped harmonic oscillator (k = m = 1, d = 0), H = (p^2 + q^2)/2,
/// driven by u(t) = cos(omega t) through G = (0, 1)^T. theta = (d).
/// The default omega sits off the unit natural frequency so the forced
/// response stays bounded.
BenchmarkSystem mass_spring(double omega = 1.5);

/// Van der Pol oscillator (mu = 1), zero input. Written in PHS form with
/// H = (q^2 + p^2)/2 and R(x) = diag(0, -mu (1 - q^2)); R is indefinite
/// for |q| < 1, which is the system's self-excitation. theta = (mu).
BenchmarkSystem van_der_pol();

/// Duffing oscillator (alpha = 1, beta = 5, gamma = 0.5),
/// H = p^2/2 + alpha q^2/2 + beta q^4/4, driven by cos(omega t).
/// theta = (gamma).
BenchmarkSystem duffing(double omega = 1.5);

/// Lookup by id: "mass-spring" | "van-der-pol" | "duffing".
BenchmarkSystem benchmark_by_name(const std::string& name, double omega = 1.5);

/// Copy of a benchmark with the input forced to zero (for drift-only runs).
BenchmarkSystem with_zero_input(const BenchmarkSystem& system);

}  // namespace msphs
