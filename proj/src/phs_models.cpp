#include "msphs/phs_models.hpp"

#include <cmath>

namespace msphs {

Eigen::MatrixXd jr_eval(const PhsStructure& structure, const Eigen::VectorXd& theta,
                        const Eigen::VectorXd& x) {
  if (theta.size() != structure.theta.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "theta length " + std::to_string(theta.size()) + " does not match structure (" +
                    std::to_string(structure.theta.size()) + ")");
  }
  return structure.j(x, theta) - structure.r(x, theta);
}

namespace {

Eigen::MatrixXd canonical_j(const Eigen::VectorXd&, const Eigen::VectorXd&) {
  Eigen::MatrixXd j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  return j;
}

}  // namespace

BenchmarkSystem mass_spring(double omega) {
  constexpr double stiffness = 1.0;
  constexpr double mass = 1.0;

  BenchmarkSystem sys;
  sys.name = "mass-spring";
  sys.omega = omega;
  sys.structure.state_dim = 2;
  sys.structure.input_dim = 1;
  sys.structure.theta = Eigen::VectorXd::Zero(1);  // theta = (d), true damping 0
  sys.structure.j = canonical_j;
  sys.structure.r = [](const Eigen::VectorXd&, const Eigen::VectorXd& theta) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2, 2);
    r(1, 1) = theta(0);
    return r;
  };
  sys.structure.g = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    Eigen::MatrixXd g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  sys.structure.jr_dtheta = [](const Eigen::VectorXd&, const Eigen::VectorXd&, int) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(1, 1) = -1.0;
    return d;
  };

  sys.true_hamiltonian = [=](const Eigen::VectorXd& x) {
    return x(1) * x(1) / (2.0 * mass) + stiffness * x(0) * x(0) / 2.0;
  };
  sys.true_hamiltonian_grad = [=](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(2);
    g << stiffness * x(0), x(1) / mass;
    return g;
  };
  sys.true_drift = [=](const Eigen::VectorXd& x) {
    Eigen::VectorXd f(2);
    f << x(1) / mass, -stiffness * x(0);
    return f;
  };
  sys.true_field = [drift = sys.true_drift](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    Eigen::VectorXd f = drift(x);
    f(1) += u(0);
    return f;
  };
  sys.input_signal = [omega](double t) {
    Eigen::VectorXd u(1);
    u << std::cos(omega * t);
    return u;
  };
  sys.x0 = Eigen::VectorXd::Zero(2);
  sys.x0 << 1.0, 0.0;
  return sys;
}

BenchmarkSystem van_der_pol() {
  BenchmarkSystem sys;
  sys.name = "van-der-pol";
  sys.structure.state_dim = 2;
  sys.structure.input_dim = 1;
  sys.structure.theta = Eigen::VectorXd::Ones(1);  // theta = (mu)
  sys.structure.j = canonical_j;
  sys.structure.r = [](const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
    // Indefinite for |q| < 1: the self-excitation region.
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2, 2);
    r(1, 1) = -theta(0) * (1.0 - x(0) * x(0));
    return r;
  };
  sys.structure.g = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(2, 1);
  };
  sys.structure.jr_dtheta = [](const Eigen::VectorXd& x, const Eigen::VectorXd&, int) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(1, 1) = 1.0 - x(0) * x(0);
    return d;
  };

  sys.true_hamiltonian = [](const Eigen::VectorXd& x) { return 0.5 * x.squaredNorm(); };
  sys.true_hamiltonian_grad = [](const Eigen::VectorXd& x) { return x; };
  sys.true_drift = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd f(2);
    f << x(1), -x(0) + 1.0 * (1.0 - x(0) * x(0)) * x(1);
    return f;
  };
  sys.true_field = [drift = sys.true_drift](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
    return drift(x);
  };
  sys.input_signal = [](double) { return Eigen::VectorXd::Zero(1); };
  sys.x0 = Eigen::VectorXd::Zero(2);
  sys.x0 << 1.0, 0.0;
  return sys;
}

BenchmarkSystem duffing(double omega) {
  constexpr double alpha = 1.0;
  constexpr double beta = 5.0;
  constexpr double gamma = 0.5;

  BenchmarkSystem sys;
  sys.name = "duffing";
  sys.omega = omega;
  sys.structure.state_dim = 2;
  sys.structure.input_dim = 1;
  sys.structure.theta = Eigen::VectorXd::Constant(1, gamma);  // theta = (gamma)
  sys.structure.j = canonical_j;
  sys.structure.r = [](const Eigen::VectorXd&, const Eigen::VectorXd& theta) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2, 2);
    r(1, 1) = theta(0);
    return r;
  };
  sys.structure.g = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    Eigen::MatrixXd g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  sys.structure.jr_dtheta = [](const Eigen::VectorXd&, const Eigen::VectorXd&, int) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(1, 1) = -1.0;
    return d;
  };

  sys.true_hamiltonian = [=](const Eigen::VectorXd& x) {
    const double q = x(0);
    return x(1) * x(1) / 2.0 + alpha * q * q / 2.0 + beta * q * q * q * q / 4.0;
  };
  sys.true_hamiltonian_grad = [=](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(2);
    g << alpha * x(0) + beta * x(0) * x(0) * x(0), x(1);
    return g;
  };
  sys.true_drift = [=](const Eigen::VectorXd& x) {
    Eigen::VectorXd f(2);
    f << x(1), -alpha * x(0) - beta * x(0) * x(0) * x(0) - gamma * x(1);
    return f;
  };
  sys.true_field = [drift = sys.true_drift](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    Eigen::VectorXd f = drift(x);
    f(1) += u(0);
    return f;
  };
  sys.input_signal = [omega](double t) {
    Eigen::VectorXd u(1);
    u << std::cos(omega * t);
    return u;
  };
  // rest start: the forced response sweeps outward from the anchor region,
  // giving the surface posterior data where it is evaluated
  sys.x0 = Eigen::VectorXd::Zero(2);
  return sys;
}

BenchmarkSystem benchmark_by_name(const std::string& name, double omega) {
  if (name == "mass-spring") return mass_spring(omega);
  if (name == "van-der-pol") return van_der_pol();
  if (name == "duffing") return duffing(omega);
  throw Error(ErrorCode::InvalidArgument, "unknown benchmark system: " + name);
}

BenchmarkSystem with_zero_input(const BenchmarkSystem& system) {
  BenchmarkSystem out = system;
  const int m = system.structure.input_dim;
  out.input_signal = [m](double) { return Eigen::VectorXd::Zero(m); };
  return out;
}

}  // namespace msphs
