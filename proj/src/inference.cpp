#include "msphs/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace msphs {

Eigen::VectorXd HyperParams::pack() const {
  Eigen::VectorXd p(num_free());
  p.head(kernel.dim()) = kernel.log_lengthscales;
  p(kernel.dim()) = kernel.log_signal_variance;
  p(kernel.dim() + 1) = log_noise_variance;
  p.tail(theta.size()) = theta;
  return p;
}

HyperParams HyperParams::unpack(const Eigen::VectorXd& packed, int state_dim, int theta_dim) {
  if (packed.size() != state_dim + 2 + theta_dim) {
    throw Error(ErrorCode::DimensionMismatch, "packed hyperparameter size mismatch");
  }
  HyperParams p;
  p.kernel.log_lengthscales = packed.head(state_dim);
  p.kernel.log_signal_variance = packed(state_dim);
  p.log_noise_variance = packed(state_dim + 1);
  p.theta = packed.tail(theta_dim);
  return p;
}

Eigen::VectorXd FieldPosterior::mean(const Eigen::VectorXd& x) const {
  Eigen::VectorXd mu;
  Eigen::MatrixXd cov;
  evaluate(x, mu, cov);
  return mu;
}

Eigen::MatrixXd FieldPosterior::covariance(const Eigen::VectorXd& x) const {
  Eigen::VectorXd mu;
  Eigen::MatrixXd cov;
  evaluate(x, mu, cov);
  return cov;
}

namespace detail {
namespace {

Eigen::VectorXd stack_rows(const Eigen::MatrixXd& m) {
  Eigen::VectorXd out(m.rows() * m.cols());
  for (int i = 0; i < m.rows(); ++i) out.segment(i * m.cols(), m.cols()) = m.row(i);
  return out;
}

const char* param_name(int index, int state_dim, int theta_dim, std::string& storage) {
  if (index < state_dim) {
    storage = "log_lengthscale[" + std::to_string(index) + "]";
  } else if (index == state_dim) {
    storage = "log_signal_variance";
  } else if (index == state_dim + 1) {
    storage = "log_noise_variance";
  } else if (index < state_dim + 2 + theta_dim) {
    storage = "theta[" + std::to_string(index - state_dim - 2) + "]";
  } else {
    storage = "param[" + std::to_string(index) + "]";
  }
  return storage.c_str();
}

/// LLT after adding base_scale * trace/size jitter, escalating x10 up to
/// 1e-4 before failing with a condition estimate.
struct SpdFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd matrix;     // the matrix actually factorized
  double jitter_scale = 0.0;  // relative scale actually used
};

SpdFactor factorize_spd(Eigen::MatrixXd m, double trace, double base_scale,
                        const char* what) {
  const double unit = trace / std::max<Eigen::Index>(1, m.rows());
  double scale = 0.0;
  double target = base_scale;
  while (true) {
    if (target > scale) {
      m.diagonal().array() += (target - scale) * unit;
      scale = target;
    }
    SpdFactor f;
    f.llt.compute(m);
    if (f.llt.info() == Eigen::Success) {
      f.jitter_scale = scale;
      f.matrix = std::move(m);
      return f;
    }
    target = (scale == 0.0) ? 1e-8 : scale * 10.0;
    if (target > 1e-4) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
      const double emax = es.eigenvalues().maxCoeff();
      const double emin = es.eigenvalues().minCoeff();
      throw Error(ErrorCode::Factorization,
                  std::string(what) + ": not positive definite after jitter escalation; " +
                      "eigenvalue range [" + std::to_string(emin) + ", " +
                      std::to_string(emax) + "], condition ~" +
                      std::to_string(emax / std::max(std::abs(emin), 1e-300)));
    }
  }
}

}  // namespace

struct ProjectedPhsGp::Assembly {
  std::vector<Eigen::VectorXd> xs;        // training states
  std::vector<Eigen::MatrixXd> jr;        // J_R(x_k) at current theta
  Eigen::VectorXd gu;                     // stacked G(x_k) u_k
  Eigen::VectorXd labels;                 // raw_labels - B gu
  Eigen::MatrixXd gram_projected;         // B K_phs B^T
  Eigen::MatrixXd train_matrix;           // + sigma^2 noise_base + jitter I
  double core_trace = 0.0;
  double jitter_scale = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;
};

ProjectedPhsGp::ProjectedPhsGp(Setup setup, PhsStructure structure, HyperParams params)
    : setup_(std::move(setup)), structure_(std::move(structure)), params_(std::move(params)) {
  const int k = static_cast<int>(setup_.train_states.rows());
  const int n = static_cast<int>(setup_.train_states.cols());
  if (params_.kernel.dim() != n) {
    throw Error(ErrorCode::DimensionMismatch, "kernel lengthscale count must equal state dim");
  }
  if (setup_.b_lift.cols() != k * n) {
    throw Error(ErrorCode::DimensionMismatch, "projection width must equal K*n");
  }
  if (setup_.b_lift.rows() != setup_.raw_labels.size() ||
      setup_.noise_base.rows() != setup_.raw_labels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "label/projection/noise sizes disagree");
  }
}

void ProjectedPhsGp::set_params(const HyperParams& params) {
  params_ = params;
  assembled_ = false;
}

Eigen::VectorXd ProjectedPhsGp::input_drift_vector(const Eigen::VectorXd& theta) const {
  const int k = static_cast<int>(setup_.train_states.rows());
  const int n = state_dim();
  Eigen::VectorXd gu = Eigen::VectorXd::Zero(k * n);
  if (setup_.train_inputs.cols() == 0) return gu;
  for (int i = 0; i < k; ++i) {
    const Eigen::MatrixXd g = structure_.g(setup_.train_states.row(i).transpose(), theta);
    gu.segment(i * n, n) = g * setup_.train_inputs.row(i).transpose();
  }
  return gu;
}

Eigen::MatrixXd ProjectedPhsGp::phs_gram(const Eigen::VectorXd& theta) const {
  const int k = static_cast<int>(setup_.train_states.rows());
  const int n = state_dim();
  const double sf2 = params_.kernel.signal_variance();
  Eigen::MatrixXd gram(k * n, k * n);
  for (int a = 0; a < k; ++a) {
    const Eigen::VectorXd xa = setup_.train_states.row(a).transpose();
    const Eigen::MatrixXd jra = jr_eval(structure_, theta, xa);
    for (int b = a; b < k; ++b) {
      const Eigen::VectorXd xb = setup_.train_states.row(b).transpose();
      const Eigen::MatrixXd jrb = jr_eval(structure_, theta, xb);
      const Eigen::MatrixXd block =
          sf2 * jra * base_hessian_block(xa, xb, params_.kernel) * jrb.transpose();
      gram.block(a * n, b * n, n, n) = block;
      if (a != b) gram.block(b * n, a * n, n, n) = block.transpose();
    }
  }
  return gram;
}

void ProjectedPhsGp::assemble() {
  const int k = static_cast<int>(setup_.train_states.rows());
  const int m = label_dim();

  auto a = std::make_shared<Assembly>();
  a->xs.reserve(k);
  a->jr.reserve(k);
  for (int i = 0; i < k; ++i) {
    a->xs.push_back(setup_.train_states.row(i).transpose());
    a->jr.push_back(jr_eval(structure_, params_.theta, a->xs.back()));
  }
  a->gu = input_drift_vector(params_.theta);
  a->labels = setup_.raw_labels - setup_.b_lift * a->gu;

  if (m > 0) {
    const Eigen::MatrixXd gram = phs_gram(params_.theta);
    a->gram_projected = setup_.b_lift * gram * setup_.b_lift.transpose();
    Eigen::MatrixXd core =
        a->gram_projected + params_.noise_variance() * setup_.noise_base;
    core = 0.5 * (core + core.transpose());
    a->core_trace = core.trace();
    SpdFactor f = factorize_spd(std::move(core), a->core_trace, 1e-8, "training covariance");
    a->jitter_scale = f.jitter_scale;
    a->train_matrix = std::move(f.matrix);
    a->llt = std::move(f.llt);
    a->alpha = a->llt.solve(a->labels);
  } else {
    a->gram_projected.resize(0, 0);
    a->train_matrix.resize(0, 0);
    a->alpha.resize(0);
  }

  jitter_ = (m > 0) ? a->jitter_scale * a->core_trace / m : 0.0;
  assembly_ = std::move(a);
  assembled_ = true;
}

void ProjectedPhsGp::require_assembled() {
  if (!assembled_) assemble();
}

double ProjectedPhsGp::nll() {
  require_assembled();
  const auto& a = *assembly_;
  const int m = label_dim();
  if (m == 0) return 0.0;
  double logdet = 0.0;
  const auto& l = a.llt.matrixLLT();
  for (int i = 0; i < m; ++i) logdet += std::log(l(i, i));
  return 0.5 * a.labels.dot(a.alpha) + logdet +
         0.5 * m * std::log(2.0 * std::numbers::pi);
}

std::pair<double, Eigen::VectorXd> ProjectedPhsGp::nll_with_gradient() {
  require_assembled();
  const auto& asm_ = *assembly_;
  const int k = static_cast<int>(setup_.train_states.rows());
  const int n = state_dim();
  const int m = label_dim();
  const int n_theta = structure_.num_params();
  const int n_free = params_.num_free();

  const double value = nll();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_free);
  if (m == 0) return {value, grad};

  const double sf2 = params_.kernel.signal_variance();

  // Lengthscale- and theta-derivative Grams in one pass over the pairs.
  std::vector<Eigen::MatrixXd> d_grams(n + n_theta,
                                       Eigen::MatrixXd::Zero(k * n, k * n));
  std::vector<std::vector<Eigen::MatrixXd>> jrd(n_theta);
  for (int t = 0; t < n_theta; ++t) {
    jrd[t].reserve(k);
    for (int i = 0; i < k; ++i) {
      jrd[t].push_back(structure_.jr_dtheta(asm_.xs[i], params_.theta, t));
    }
  }
  for (int a = 0; a < k; ++a) {
    for (int b = a; b < k; ++b) {
      const Eigen::MatrixXd hess = base_hessian_block(asm_.xs[a], asm_.xs[b], params_.kernel);
      for (int d = 0; d < n; ++d) {
        const Eigen::MatrixXd dh =
            base_hessian_dlog_lengthscale(asm_.xs[a], asm_.xs[b], params_.kernel, d);
        const Eigen::MatrixXd block = sf2 * asm_.jr[a] * dh * asm_.jr[b].transpose();
        d_grams[d].block(a * n, b * n, n, n) = block;
        if (a != b) d_grams[d].block(b * n, a * n, n, n) = block.transpose();
      }
      for (int t = 0; t < n_theta; ++t) {
        const Eigen::MatrixXd block =
            sf2 * (jrd[t][a] * hess * asm_.jr[b].transpose() +
                   asm_.jr[a] * hess * jrd[t][b].transpose());
        d_grams[n + t].block(a * n, b * n, n, n) = block;
        if (a != b) d_grams[n + t].block(b * n, a * n, n, n) = block.transpose();
      }
    }
  }

  const Eigen::MatrixXd kinv =
      asm_.llt.solve(Eigen::MatrixXd::Identity(m, m));
  const Eigen::VectorXd& alpha = asm_.alpha;
  const double cj = asm_.jitter_scale / m;  // jitter = cj * trace(core)

  const auto accumulate = [&](int index, const Eigen::MatrixXd& d_core) {
    // d(train_matrix) = d_core + cj * tr(d_core) * I
    const double dtr = d_core.trace();
    double trace_term = kinv.cwiseProduct(d_core).sum() + cj * dtr * kinv.trace();
    double quad_term = alpha.dot(d_core * alpha) + cj * dtr * alpha.squaredNorm();
    grad(index) += 0.5 * trace_term - 0.5 * quad_term;
  };

  // log lengthscales
  for (int d = 0; d < n; ++d) {
    const Eigen::MatrixXd d_core =
        setup_.b_lift * d_grams[d] * setup_.b_lift.transpose();
    accumulate(d, d_core);
  }
  // log signal variance: K_phs scales linearly
  accumulate(n, asm_.gram_projected);
  // log noise variance
  accumulate(n + 1, params_.noise_variance() * setup_.noise_base);
  // theta
  for (int t = 0; t < n_theta; ++t) {
    const Eigen::MatrixXd d_core =
        setup_.b_lift * d_grams[n + t] * setup_.b_lift.transpose();
    accumulate(n + 2 + t, d_core);
    if (structure_.g_dtheta && setup_.train_inputs.cols() > 0) {
      Eigen::VectorXd dgu = Eigen::VectorXd::Zero(k * n);
      for (int i = 0; i < k; ++i) {
        const Eigen::MatrixXd dg = structure_.g_dtheta(asm_.xs[i], params_.theta, t);
        dgu.segment(i * n, n) = dg * setup_.train_inputs.row(i).transpose();
      }
      const Eigen::VectorXd dlabels = -(setup_.b_lift * dgu);
      grad(n + 2 + t) += dlabels.dot(alpha);
    }
  }

  return {value, grad};
}

AdamResult adam_minimize(
    const std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>& objective,
    Eigen::VectorXd x0, const OptimizerConfig& config) {
  auto [f0, g0] = objective(x0);
  if (!std::isfinite(f0)) {
    throw Error(ErrorCode::NonFinite, "non-finite objective at initialization");
  }

  AdamResult result;
  result.initial_value = f0;
  result.best_value = f0;
  result.best = x0;
  result.best_iteration = 0;

  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double adam_eps = 1e-8;
  double lr = config.learning_rate;
  Eigen::VectorXd p = x0;
  Eigen::VectorXd mom = Eigen::VectorXd::Zero(p.size());
  Eigen::VectorXd vel = Eigen::VectorXd::Zero(p.size());
  Eigen::VectorXd grad = g0;

  for (int it = 1; it <= config.iterations; ++it) {
    mom = beta1 * mom + (1.0 - beta1) * grad;
    vel = beta2 * vel + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1, it);
    const double bc2 = 1.0 - std::pow(beta2, it);
    p -= (lr / bc1) * mom.cwiseQuotient(((vel / bc2).cwiseSqrt().array() + adam_eps).matrix());

    double f = 0.0;
    Eigen::VectorXd g;
    bool bad = false;
    try {
      std::tie(f, g) = objective(p);
      bad = !std::isfinite(f) || !g.allFinite();
    } catch (const Error&) {
      bad = true;
    }
    if (bad) {
      // step landed on a non-finite or non-factorizable iterate: back off
      p = result.best;
      mom.setZero();
      vel.setZero();
      lr *= 0.5;
      if (lr < 1e-6) break;
      std::tie(f, g) = objective(p);
    }
    grad = g;
    if (f < result.best_value) {
      result.best_value = f;
      result.best = p;
      result.best_iteration = it;
    }
  }
  return result;
}

FitResult ProjectedPhsGp::fit(const OptimizerConfig& config) {
  const int n = state_dim();
  const int n_theta = structure_.num_params();

  const Eigen::VectorXd p = params_.pack();
  std::string name;
  for (int i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p(i))) {
      throw Error(ErrorCode::NonFinite,
                  std::string("non-finite initial hyperparameter: ") +
                      param_name(i, n, n_theta, name));
    }
  }

  const auto objective = [&](const Eigen::VectorXd& packed) {
    set_params(HyperParams::unpack(packed, n, n_theta));
    return nll_with_gradient();
  };

  // the NLL landscape has distinct short- and long-lengthscale basins;
  // restarts > 1 probes both sides of the initialization
  std::vector<Eigen::VectorXd> starts{p};
  if (config.restarts >= 2) {
    HyperParams wide = HyperParams::unpack(p, n, n_theta);
    wide.kernel.log_lengthscales.array() += std::log(4.0);
    wide.kernel.log_signal_variance += std::log(30.0);
    starts.push_back(wide.pack());
  }
  if (config.restarts >= 3) {
    HyperParams narrow = HyperParams::unpack(p, n, n_theta);
    narrow.kernel.log_lengthscales.array() += std::log(0.4);
    starts.push_back(narrow.pack());
  }

  FitResult result;
  bool have_result = false;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const AdamResult opt = adam_minimize(objective, starts[s], config);
    if (s == 0) result.initial_nll = opt.initial_value;
    if (!have_result || opt.best_value < result.nll) {
      result.params = HyperParams::unpack(opt.best, n, n_theta);
      result.nll = opt.best_value;
      result.best_iteration = opt.best_iteration;
      have_result = true;
    }
  }

  set_params(result.params);
  assemble();
  return result;
}

Eigen::MatrixXd ProjectedPhsGp::projected_gram() {
  require_assembled();
  return assembly_->gram_projected;
}

const Eigen::MatrixXd& ProjectedPhsGp::training_matrix() {
  require_assembled();
  return assembly_->train_matrix;
}

const Eigen::VectorXd& ProjectedPhsGp::labels() {
  require_assembled();
  return assembly_->labels;
}

namespace {

/// Field posterior backed by the projected PHS engine state.
class PhsFieldPosterior final : public FieldPosterior {
public:
  struct State {
    std::shared_ptr<const ProjectedPhsGp::Assembly> assembly;
    Eigen::SparseMatrix<double> b_lift;
    PhsStructure structure;
    HyperParams params;
  };

  explicit PhsFieldPosterior(State state) : state_(std::move(state)) {}

  int state_dim() const override { return state_.params.kernel.dim(); }

  void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& mean,
                Eigen::MatrixXd& cov) const override {
    const auto& a = *state_.assembly;
    const int n = state_dim();
    if (x.size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "test point dimension mismatch");
    }
    const double sf2 = state_.params.kernel.signal_variance();
    const Eigen::MatrixXd jr_star = jr_eval(state_.structure, state_.params.theta, x);
    const Eigen::MatrixXd prior =
        sf2 * jr_star * base_hessian_block(x, x, state_.params.kernel) * jr_star.transpose();

    const int m = static_cast<int>(a.labels.size());
    if (m == 0) {
      mean = Eigen::VectorXd::Zero(n);
      cov = prior;
      return;
    }

    const int k = static_cast<int>(a.xs.size());
    Eigen::MatrixXd stack(k * n, n);
    for (int i = 0; i < k; ++i) {
      stack.middleRows(i * n, n) =
          sf2 * a.jr[i] * base_hessian_block(a.xs[i], x, state_.params.kernel) *
          jr_star.transpose();
    }
    const Eigen::MatrixXd proj = state_.b_lift * stack;  // m x n
    mean = proj.transpose() * a.alpha;
    const Eigen::MatrixXd v = a.llt.solve(proj);
    cov = prior - proj.transpose() * v;
    cov = 0.5 * (cov + cov.transpose());
  }

private:
  State state_;
};

}  // namespace

std::shared_ptr<const FieldPosterior> ProjectedPhsGp::field_posterior() {
  require_assembled();
  PhsFieldPosterior::State state{assembly_, setup_.b_lift, structure_, params_};
  return std::make_shared<PhsFieldPosterior>(std::move(state));
}

}  // namespace detail

struct HamiltonianPosterior::State {
  Eigen::VectorXd anchor_state;
  double anchor_value = 0.0;
  std::shared_ptr<const detail::ProjectedPhsGp::Assembly> assembly;
  Eigen::SparseMatrix<double> b_lift;
  HyperParams params;
  Eigen::LLT<Eigen::MatrixXd> llt_aug;
  Eigen::VectorXd alpha_aug;

  /// Stacked Cov[H(z), f(x_k)] blocks, projected through B.
  Eigen::VectorXd projected_cross(const Eigen::VectorXd& z) const {
    const auto& a = *assembly;
    const int n = static_cast<int>(z.size());
    const int k = static_cast<int>(a.xs.size());
    const double sf2 = params.kernel.signal_variance();
    Eigen::VectorXd stack(k * n);
    for (int i = 0; i < k; ++i) {
      stack.segment(i * n, n) = sf2 * a.jr[i] * base_grad_x2(z, a.xs[i], params.kernel);
    }
    return b_lift * stack;
  }
};

HamiltonianPosterior::HamiltonianPosterior(std::shared_ptr<const State> state)
    : state_(std::move(state)) {}

const Eigen::VectorXd& HamiltonianPosterior::anchor_state() const {
  return state_->anchor_state;
}

double HamiltonianPosterior::anchor_value() const { return state_->anchor_value; }

void HamiltonianPosterior::evaluate(const Eigen::VectorXd& x, double& mean,
                                    double& variance) const {
  const auto& s = *state_;
  const int m = static_cast<int>(s.alpha_aug.size()) - 1;
  const double sf2 = s.params.kernel.signal_variance();

  Eigen::VectorXd cross(m + 1);
  cross(0) = sf2 * base_eval(x, s.anchor_state, s.params.kernel);
  if (m > 0) cross.tail(m) = s.projected_cross(x);

  mean = cross.dot(s.alpha_aug);
  const Eigen::VectorXd v = s.llt_aug.solve(cross);
  variance = std::max(0.0, sf2 - cross.dot(v));  // k_base(x, x) = 1
}

double HamiltonianPosterior::mean(const Eigen::VectorXd& x) const {
  double mu, var;
  evaluate(x, mu, var);
  return mu;
}

double HamiltonianPosterior::variance(const Eigen::VectorXd& x) const {
  double mu, var;
  evaluate(x, mu, var);
  return var;
}

namespace detail {

HamiltonianPosterior ProjectedPhsGp::hamiltonian_posterior(
    const Eigen::VectorXd& anchor_state, double anchor_value, double epsilon_h_rel) {
  require_assembled();
  if (anchor_state.size() != state_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "anchor state dimension mismatch");
  }

  auto s = std::make_shared<HamiltonianPosterior::State>();
  s->anchor_state = anchor_state;
  s->anchor_value = anchor_value;
  s->assembly = assembly_;
  s->b_lift = setup_.b_lift;
  s->params = params_;

  const int m = label_dim();
  const double sf2 = params_.kernel.signal_variance();
  const double eps_h = epsilon_h_rel * sf2;

  Eigen::MatrixXd k_gg(m + 1, m + 1);
  k_gg(0, 0) = sf2 + eps_h;  // k_base(x0, x0) = 1
  if (m > 0) {
    const Eigen::VectorXd cross = s->projected_cross(anchor_state);
    k_gg.block(0, 1, 1, m) = cross.transpose();
    k_gg.block(1, 0, m, 1) = cross;
    k_gg.block(1, 1, m, m) = assembly_->train_matrix;
  }

  Eigen::VectorXd y_aug(m + 1);
  y_aug(0) = anchor_value;
  if (m > 0) y_aug.tail(m) = assembly_->labels;

  const double trace_gg = k_gg.trace();
  SpdFactor f = factorize_spd(std::move(k_gg), trace_gg, 0.0, "augmented surface covariance");
  s->llt_aug = std::move(f.llt);
  s->alpha_aug = s->llt_aug.solve(y_aug);
  return HamiltonianPosterior(std::move(s));
}

}  // namespace detail

MsPhsModel::MsPhsModel(TrajectoryDataset data, PhsStructure structure, MultistepScheme scheme,
                       HyperParams init)
    : data_(std::move(data)),
      scheme_(scheme),
      constraints_(),
      engine_([&]() -> detail::ProjectedPhsGp {
        scheme.validate();
        const int k = data_.num_samples();
        const int n = data_.state_dim();
        const int width = scheme.window_width();
        detail::ProjectedPhsGp::Setup setup;
        setup.train_states = data_.states;
        setup.train_inputs = data_.inputs;
        if (k >= width + 1) {
          constraints_ = build_constraints(data_.timestamps, scheme);
          const Eigen::SparseMatrix<double> a_lift = kron_lift(constraints_.a, n);
          setup.b_lift = kron_lift(constraints_.b, n);
          setup.noise_base = Eigen::MatrixXd(a_lift * a_lift.transpose());
          setup.raw_labels = a_lift * detail::stack_rows(data_.states);
        } else {
          // degenerate zero-window model: posterior falls back to the prior
          setup.b_lift.resize(0, k * n);
          setup.noise_base.resize(0, 0);
          setup.raw_labels.resize(0);
        }
        return detail::ProjectedPhsGp(std::move(setup), std::move(structure), std::move(init));
      }()) {}

HyperParams MsPhsModel::default_init(const TrajectoryDataset& data,
                                     const PhsStructure& structure) {
  const int n = data.state_dim();
  HyperParams p;
  Eigen::VectorXd ls(n);
  double state_var = 0.0;
  for (int j = 0; j < n; ++j) {
    const double mean = data.states.col(j).mean();
    const double var = (data.states.col(j).array() - mean).square().mean();
    ls(j) = std::max(std::sqrt(var), 1e-2);
    state_var += var / n;
  }
  // crude per-sample energy proxy; its second moment sets the H-prior scale
  // (the variance alone degenerates on conserved orbits where e_k is constant)
  Eigen::VectorXd energy(data.num_samples());
  for (int i = 0; i < data.num_samples(); ++i) energy(i) = 0.5 * data.states.row(i).squaredNorm();
  const double escale = energy.array().square().mean();

  p.kernel.log_lengthscales = ls.array().log();
  p.kernel.log_signal_variance = std::log(std::max(escale, 1e-4));
  p.log_noise_variance = std::log(std::max(1e-2 * state_var, 1e-8));
  p.theta = Eigen::VectorXd::Constant(structure.theta.size(), 0.1);
  return p;
}

FitResult MsPhsModel::fit(const OptimizerConfig& config) { return engine_.fit(config); }

double field_from_surface_check(const FieldPosterior& field,
                                const HamiltonianPosterior& surface,
                                const PhsStructure& structure, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                int resolution, int label_dim) {
  const int n = static_cast<int>(lo.size());
  if (n != 2) {
    throw Error(ErrorCode::InvalidArgument, "surface consistency check expects 2-D state");
  }
  if (resolution < 3) {
    throw Error(ErrorCode::InvalidArgument, "mesh too coarse: need >= 3 points per axis");
  }
  if (label_dim == 0) return 0.0;  // both posteriors are priors; nothing to compare

  const double dx = (hi(0) - lo(0)) / (resolution - 1);
  const double dy = (hi(1) - lo(1)) / (resolution - 1);

  Eigen::MatrixXd h_mean(resolution, resolution);
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      Eigen::VectorXd x(2);
      x << lo(0) + i * dx, lo(1) + j * dy;
      h_mean(i, j) = surface.mean(x);
    }
  }

  double field_norm_sum = 0.0;
  std::vector<Eigen::VectorXd> mu_f((resolution - 2) * (resolution - 2));
  std::vector<Eigen::VectorXd> points(mu_f.size());
  int idx = 0;
  for (int i = 1; i + 1 < resolution; ++i) {
    for (int j = 1; j + 1 < resolution; ++j, ++idx) {
      Eigen::VectorXd x(2);
      x << lo(0) + i * dx, lo(1) + j * dy;
      points[idx] = x;
      mu_f[idx] = field.mean(x);
      field_norm_sum += mu_f[idx].norm();
    }
  }
  const double mean_norm = field_norm_sum / std::max<std::size_t>(1, mu_f.size());

  double max_dev = 0.0;
  idx = 0;
  for (int i = 1; i + 1 < resolution; ++i) {
    for (int j = 1; j + 1 < resolution; ++j, ++idx) {
      Eigen::VectorXd grad(2);
      grad << (h_mean(i + 1, j) - h_mean(i - 1, j)) / (2.0 * dx),
          (h_mean(i, j + 1) - h_mean(i, j - 1)) / (2.0 * dy);
      const Eigen::VectorXd f_surf =
          jr_eval(structure, theta, points[idx]) * grad;
      const double denom = std::max(mu_f[idx].norm(), mean_norm);
      if (denom > 0.0) {
        max_dev = std::max(max_dev, (f_surf - mu_f[idx]).norm() / denom);
      }
    }
  }
  return max_dev;
}

}  // namespace msphs
