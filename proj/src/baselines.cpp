#include "msphs/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace msphs {

DerivativeEstimate loess_smooth(const TrajectoryDataset& data, double span, int degree) {
  const int k = data.num_samples();
  const int n = data.state_dim();
  if (degree < 1) {
    throw Error(ErrorCode::InvalidArgument, "derivative estimation needs degree >= 1");
  }
  const int neighborhood = std::max(degree + 2, static_cast<int>(std::ceil(span * k)));
  if (span * k < degree + 2 || neighborhood > k) {
    throw Error(ErrorCode::InsufficientData,
                "LOESS span covers " + std::to_string(span * k) + " points; need >= " +
                    std::to_string(degree + 2));
  }

  DerivativeEstimate out;
  out.timestamps = data.timestamps;
  out.states.resize(k, n);
  out.derivatives.resize(k, n);
  out.span = span;
  out.degree = degree;

  std::vector<int> order(k);
  for (int c = 0; c < k; ++c) {
    const double tc = data.timestamps(c);
    std::iota(order.begin(), order.end(), 0);
    std::nth_element(order.begin(), order.begin() + neighborhood - 1, order.end(),
                     [&](int a, int b) {
                       return std::abs(data.timestamps(a) - tc) <
                              std::abs(data.timestamps(b) - tc);
                     });

    double dmax = 0.0;
    for (int i = 0; i < neighborhood; ++i) {
      dmax = std::max(dmax, std::abs(data.timestamps(order[i]) - tc));
    }
    if (dmax == 0.0) {
      throw Error(ErrorCode::InvalidArgument, "degenerate local design matrix: coincident times");
    }
    dmax *= 1.0 + 1e-9;  // keep the boundary point's tricube weight nonzero

    Eigen::MatrixXd design(neighborhood, degree + 1);
    Eigen::MatrixXd rhs(neighborhood, n);
    for (int i = 0; i < neighborhood; ++i) {
      const int j = order[i];
      const double dt = data.timestamps(j) - tc;
      const double u = std::abs(dt) / dmax;
      const double tri = std::pow(1.0 - u * u * u, 3);
      const double w = std::sqrt(tri);
      double basis = w;
      for (int r = 0; r <= degree; ++r) {
        design(i, r) = basis;
        basis *= dt;
      }
      rhs.row(i) = w * data.states.row(j);
    }

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < degree + 1) {
      throw Error(ErrorCode::InvalidArgument, "degenerate local design matrix");
    }
    const Eigen::MatrixXd coef = qr.solve(rhs);  // (degree+1) x n
    out.states.row(c) = coef.row(0);
    out.derivatives.row(c) = coef.row(1);
  }
  return out;
}

DerivativeEstimate savgol_smooth(const TrajectoryDataset& data, int window, int degree) {
  const int k = data.num_samples();
  const int n = data.state_dim();
  if (degree < 1) {
    throw Error(ErrorCode::InvalidArgument, "derivative estimation needs degree >= 1");
  }
  if (window <= degree || window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "Savitzky-Golay window must be odd and exceed the degree");
  }
  if (window > k) {
    throw Error(ErrorCode::InsufficientData, "window longer than the dataset");
  }

  // regular-grid requirement
  const double h = (data.timestamps(k - 1) - data.timestamps(0)) / (k - 1);
  for (int i = 0; i + 1 < k; ++i) {
    const double step = data.timestamps(i + 1) - data.timestamps(i);
    if (std::abs(step - h) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw Error(ErrorCode::InvalidArgument,
                  "irregular grid (step deviation at index " + std::to_string(i) +
                      "); use loess_smooth for irregular sampling");
    }
  }

  DerivativeEstimate out;
  out.timestamps = data.timestamps;
  out.states.resize(k, n);
  out.derivatives.resize(k, n);
  out.window = window;
  out.degree = degree;

  const int half = window / 2;
  for (int c = 0; c < k; ++c) {
    const int start = std::clamp(c - half, 0, k - window);
    const int offset = c - start - half;  // 0 in the interior, shifted at the edges

    Eigen::MatrixXd design(window, degree + 1);
    for (int i = 0; i < window; ++i) {
      const double s = static_cast<double>(i - half);
      double basis = 1.0;
      for (int r = 0; r <= degree; ++r) {
        design(i, r) = basis;
        basis *= s;
      }
    }
    const Eigen::MatrixXd block = data.states.middleRows(start, window);
    const Eigen::MatrixXd coef = design.colPivHouseholderQr().solve(block);

    // evaluate the local polynomial and its slope at the sample position;
    // s0 = 0 in the interior, nonzero in the shifted boundary windows
    const double s0 = static_cast<double>(offset);
    Eigen::RowVectorXd value = Eigen::RowVectorXd::Zero(n);
    Eigen::RowVectorXd slope = Eigen::RowVectorXd::Zero(n);
    double pow_s = 1.0;
    double pow_sm1 = 1.0;
    for (int r = 0; r <= degree; ++r) {
      value += pow_s * coef.row(r);
      if (r >= 1) {
        slope += r * pow_sm1 * coef.row(r);
        pow_sm1 *= s0;
      }
      pow_s *= s0;
    }
    out.states.row(c) = value;
    out.derivatives.row(c) = slope / h;
  }
  return out;
}

namespace detail {

ScalarProjectedGp::ScalarProjectedGp(const Eigen::MatrixXd& states, const Eigen::MatrixXd& a,
                                     const Eigen::MatrixXd& b_in, Eigen::VectorXd labels_in,
                                     KernelFn kernel_in, double noise_variance)
    : train_states(states), b(b_in), labels(std::move(labels_in)), kernel(std::move(kernel_in)) {
  const int k = static_cast<int>(states.rows());
  Eigen::MatrixXd gram(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) {
      gram(i, j) = kernel(states.row(i).transpose(), states.row(j).transpose());
      gram(j, i) = gram(i, j);
    }
  }
  Eigen::MatrixXd cov = b * gram * b.transpose() +
                        noise_variance * (a * a.transpose());
  cov = 0.5 * (cov + cov.transpose());
  jitter = cov.trace() / std::max<Eigen::Index>(1, cov.rows()) * 1e-8;
  cov.diagonal().array() += jitter;
  llt.compute(cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::Factorization, "scalar projected GP covariance not PD");
  }
  alpha = llt.solve(labels);
}

double ScalarProjectedGp::posterior_mean(const Eigen::VectorXd& x) const {
  const int k = static_cast<int>(train_states.rows());
  if (labels.size() == 0) return 0.0;
  Eigen::VectorXd kx(k);
  for (int i = 0; i < k; ++i) kx(i) = kernel(train_states.row(i).transpose(), x);
  return (b * kx).dot(alpha);
}

double ScalarProjectedGp::posterior_variance(const Eigen::VectorXd& x) const {
  const int k = static_cast<int>(train_states.rows());
  const double prior = kernel(x, x);
  if (labels.size() == 0) return prior;
  Eigen::VectorXd kx(k);
  for (int i = 0; i < k; ++i) kx(i) = kernel(train_states.row(i).transpose(), x);
  const Eigen::VectorXd q = b * kx;
  return prior - q.dot(llt.solve(q));
}

double ScalarProjectedGp::nll() const {
  const int m = static_cast<int>(labels.size());
  double logdet = 0.0;
  for (int i = 0; i < m; ++i) logdet += std::log(llt.matrixLLT()(i, i));
  return 0.5 * labels.dot(alpha) + logdet + 0.5 * m * std::log(2.0 * std::numbers::pi);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// MS-ODE: independent ARD-SE prior per drift component

Eigen::VectorXd MsOdeModel::Params::pack() const {
  const int n = static_cast<int>(kernels.size());
  const int per = kernels.empty() ? 0 : kernels[0].dim() + 1;
  Eigen::VectorXd p(n * per + 1);
  int at = 0;
  for (const auto& k : kernels) {
    p.segment(at, k.dim()) = k.log_lengthscales;
    p(at + k.dim()) = k.log_signal_variance;
    at += k.dim() + 1;
  }
  p(at) = log_noise_variance;
  return p;
}

MsOdeModel::Params MsOdeModel::Params::unpack(const Eigen::VectorXd& packed, int state_dim) {
  const int per = state_dim + 1;
  if (packed.size() != state_dim * per + 1) {
    throw Error(ErrorCode::DimensionMismatch, "packed MS-ODE parameter size mismatch");
  }
  Params out;
  out.kernels.resize(state_dim);
  for (int i = 0; i < state_dim; ++i) {
    out.kernels[i].log_lengthscales = packed.segment(i * per, state_dim);
    out.kernels[i].log_signal_variance = packed(i * per + state_dim);
  }
  out.log_noise_variance = packed(state_dim * per);
  return out;
}

struct MsOdeModel::Assembly {
  std::vector<Eigen::MatrixXd> grams;       // per-component B K_i B^T (pre-noise)
  std::vector<Eigen::MatrixXd> raw_grams;   // per-component K_i
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
  std::vector<Eigen::VectorXd> alphas;
  std::vector<double> jitter_scales;
  Eigen::MatrixXd noise_base;  // A A^T
};

MsOdeModel::MsOdeModel(TrajectoryDataset data, PhsStructure structure, MultistepScheme scheme,
                       Params init)
    : data_(std::move(data)),
      structure_(std::move(structure)),
      scheme_(scheme),
      params_(std::move(init)) {
  scheme_.validate();
  const int k = data_.num_samples();
  const int n = data_.state_dim();
  if (static_cast<int>(params_.kernels.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "need one kernel per state dimension");
  }
  const int width = scheme_.window_width();
  if (k >= width + 1) {
    constraints_ = build_constraints(data_.timestamps, scheme_);
  } else {
    constraints_.a.resize(0, k);
    constraints_.b.resize(0, k);
    constraints_.timestamps = data_.timestamps;
  }

  // labels per component: A x_i - B (G(x) u)_i
  const int windows = constraints_.num_windows();
  Eigen::MatrixXd gu(k, n);
  for (int i = 0; i < k; ++i) {
    const Eigen::MatrixXd g = structure_.g(data_.states.row(i).transpose(), structure_.theta);
    gu.row(i) = (g * data_.inputs.row(i).transpose()).transpose();
  }
  component_labels_.resize(windows, n);
  if (windows > 0) {
    component_labels_ = constraints_.a * data_.states - constraints_.b * gu;
  }
}

MsOdeModel::Params MsOdeModel::default_init(const TrajectoryDataset& data,
                                            const MultistepScheme&) {
  const int n = data.state_dim();
  const int k = data.num_samples();
  Params p;
  p.kernels.resize(n);
  Eigen::VectorXd ls(n);
  double state_var = 0.0;
  for (int j = 0; j < n; ++j) {
    const double mean = data.states.col(j).mean();
    const double var = (data.states.col(j).array() - mean).square().mean();
    ls(j) = std::max(std::sqrt(var), 1e-2);
    state_var += var / n;
  }
  for (int j = 0; j < n; ++j) {
    // finite-difference slope proxy sets each component's signal scale
    double var = 1.0;
    if (k >= 2) {
      Eigen::VectorXd slope(k - 1);
      for (int i = 0; i + 1 < k; ++i) {
        slope(i) = (data.states(i + 1, j) - data.states(i, j)) /
                   (data.timestamps(i + 1) - data.timestamps(i));
      }
      const double mean = slope.mean();
      var = (slope.array() - mean).square().mean();
    }
    p.kernels[j].log_lengthscales = ls.array().log();
    p.kernels[j].log_signal_variance = std::log(std::max(var, 1e-4));
  }
  p.log_noise_variance = std::log(std::max(1e-2 * state_var, 1e-8));
  return p;
}

void MsOdeModel::set_params(const Params& p) {
  params_ = p;
  assembly_.reset();
}

namespace {

double se_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                 const ArdKernelParams& k) {
  return k.signal_variance() * base_eval(x, x2, k);
}

}  // namespace

void MsOdeModel::assemble() {
  const int k = data_.num_samples();
  const int n = data_.state_dim();
  const int windows = constraints_.num_windows();

  auto a = std::make_shared<Assembly>();
  a->noise_base = constraints_.a * constraints_.a.transpose();
  a->grams.resize(n);
  a->raw_grams.resize(n);
  a->llts.resize(n);
  a->alphas.resize(n);
  a->jitter_scales.resize(n);

  for (int c = 0; c < n; ++c) {
    Eigen::MatrixXd gram(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = i; j < k; ++j) {
        gram(i, j) = se_kernel(data_.states.row(i).transpose(),
                               data_.states.row(j).transpose(), params_.kernels[c]);
        gram(j, i) = gram(i, j);
      }
    }
    a->raw_grams[c] = gram;
    if (windows == 0) continue;
    a->grams[c] = constraints_.b * gram * constraints_.b.transpose();
    Eigen::MatrixXd cov =
        a->grams[c] + std::exp(params_.log_noise_variance) * a->noise_base;
    cov = 0.5 * (cov + cov.transpose());
    const double trace = cov.trace();
    const double scale = 1e-8;
    cov.diagonal().array() += scale * trace / windows;
    a->llts[c].compute(cov);
    double used = scale;
    while (a->llts[c].info() != Eigen::Success) {
      const double next = used * 10.0;
      if (next > 1e-4) {
        throw Error(ErrorCode::Factorization,
                    "MS-ODE component " + std::to_string(c) + " covariance not PD");
      }
      cov.diagonal().array() += (next - used) * trace / windows;
      used = next;
      a->llts[c].compute(cov);
    }
    a->jitter_scales[c] = used;
    a->alphas[c] = a->llts[c].solve(component_labels_.col(c));
  }
  assembly_ = std::move(a);
}

double MsOdeModel::nll() {
  if (!assembly_) assemble();
  const int n = data_.state_dim();
  const int windows = constraints_.num_windows();
  if (windows == 0) return 0.0;
  double total = 0.0;
  for (int c = 0; c < n; ++c) {
    double logdet = 0.0;
    for (int i = 0; i < windows; ++i) logdet += std::log(assembly_->llts[c].matrixLLT()(i, i));
    total += 0.5 * component_labels_.col(c).dot(assembly_->alphas[c]) + logdet +
             0.5 * windows * std::log(2.0 * std::numbers::pi);
  }
  return total;
}

std::pair<double, Eigen::VectorXd> MsOdeModel::nll_with_gradient() {
  if (!assembly_) assemble();
  const int k = data_.num_samples();
  const int n = data_.state_dim();
  const int windows = constraints_.num_windows();
  const int per = n + 1;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n * per + 1);
  const double value = nll();
  if (windows == 0) return {value, grad};

  const double noise_var = std::exp(params_.log_noise_variance);
  for (int c = 0; c < n; ++c) {
    const Eigen::MatrixXd kinv =
        assembly_->llts[c].solve(Eigen::MatrixXd::Identity(windows, windows));
    const Eigen::VectorXd& alpha = assembly_->alphas[c];
    const double cj = assembly_->jitter_scales[c] / windows;

    const auto accumulate = [&](int index, const Eigen::MatrixXd& d_core) {
      const double dtr = d_core.trace();
      grad(index) += 0.5 * (kinv.cwiseProduct(d_core).sum() + cj * dtr * kinv.trace()) -
                     0.5 * (alpha.dot(d_core * alpha) + cj * dtr * alpha.squaredNorm());
    };

    const Eigen::ArrayXd inv_l2 =
        (-2.0 * params_.kernels[c].log_lengthscales.array()).exp();
    for (int d = 0; d < n; ++d) {
      Eigen::MatrixXd dgram(k, k);
      for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) {
          const double diff = data_.states(i, d) - data_.states(j, d);
          dgram(i, j) = assembly_->raw_grams[c](i, j) * diff * diff * inv_l2(d);
          dgram(j, i) = dgram(i, j);
        }
      }
      accumulate(c * per + d, constraints_.b * dgram * constraints_.b.transpose());
    }
    accumulate(c * per + n, assembly_->grams[c]);
    accumulate(n * per, noise_var * assembly_->noise_base);
  }
  return {value, grad};
}

FitResult MsOdeModel::fit(const OptimizerConfig& config) {
  const int n = data_.state_dim();
  const auto objective = [&](const Eigen::VectorXd& packed) {
    set_params(Params::unpack(packed, n));
    return nll_with_gradient();
  };

  std::vector<Eigen::VectorXd> starts{params_.pack()};
  if (config.restarts >= 2) {
    Params wide = params_;
    for (auto& k : wide.kernels) {
      k.log_lengthscales.array() += std::log(4.0);
      k.log_signal_variance += std::log(30.0);
    }
    starts.push_back(wide.pack());
  }
  if (config.restarts >= 3) {
    Params narrow = params_;
    for (auto& k : narrow.kernels) k.log_lengthscales.array() += std::log(0.4);
    starts.push_back(narrow.pack());
  }

  FitResult result;
  Eigen::VectorXd best_packed;
  bool have_result = false;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const detail::AdamResult opt = detail::adam_minimize(objective, starts[s], config);
    if (s == 0) result.initial_nll = opt.initial_value;
    if (!have_result || opt.best_value < result.nll) {
      result.nll = opt.best_value;
      result.best_iteration = opt.best_iteration;
      best_packed = opt.best;
      have_result = true;
    }
  }
  set_params(Params::unpack(best_packed, n));
  assemble();
  return result;
}

namespace {

class ComponentwiseFieldPosterior final : public FieldPosterior {
public:
  struct State {
    Eigen::MatrixXd train_states;
    Eigen::MatrixXd b;
    std::vector<ArdKernelParams> kernels;
    std::shared_ptr<const MsOdeModel::Assembly> assembly;
    int windows = 0;
  };

  explicit ComponentwiseFieldPosterior(State s) : s_(std::move(s)) {}

  int state_dim() const override { return static_cast<int>(s_.kernels.size()); }

  void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& mean,
                Eigen::MatrixXd& cov) const override {
    const int n = state_dim();
    const int k = static_cast<int>(s_.train_states.rows());
    mean = Eigen::VectorXd::Zero(n);
    cov = Eigen::MatrixXd::Zero(n, n);
    for (int c = 0; c < n; ++c) {
      const double prior = s_.kernels[c].signal_variance();
      if (s_.windows == 0) {
        cov(c, c) = prior;
        continue;
      }
      Eigen::VectorXd kx(k);
      for (int i = 0; i < k; ++i) {
        kx(i) = se_kernel(s_.train_states.row(i).transpose(), x, s_.kernels[c]);
      }
      const Eigen::VectorXd q = s_.b * kx;
      mean(c) = q.dot(s_.assembly->alphas[c]);
      cov(c, c) = prior - q.dot(s_.assembly->llts[c].solve(q));
    }
  }

private:
  State s_;
};

}  // namespace

std::shared_ptr<const FieldPosterior> MsOdeModel::field_posterior() {
  if (!assembly_) assemble();
  ComponentwiseFieldPosterior::State s;
  s.train_states = data_.states;
  s.b = constraints_.b;
  s.kernels = params_.kernels;
  s.assembly = assembly_;
  s.windows = constraints_.num_windows();
  return std::make_shared<ComponentwiseFieldPosterior>(std::move(s));
}

// ---------------------------------------------------------------------------
// GP-PHS: PHS kernel on prefiltered derivative estimates (B = identity)

namespace {

detail::ProjectedPhsGp::Setup gp_phs_setup(const DerivativeEstimate& estimate,
                                           const Eigen::MatrixXd& inputs) {
  const int k = static_cast<int>(estimate.states.rows());
  const int n = static_cast<int>(estimate.states.cols());
  detail::ProjectedPhsGp::Setup setup;
  setup.train_states = estimate.states;
  setup.train_inputs = inputs;
  Eigen::SparseMatrix<double> identity(k * n, k * n);
  identity.setIdentity();
  setup.b_lift = identity;
  setup.noise_base = Eigen::MatrixXd::Identity(k * n, k * n);
  setup.raw_labels.resize(k * n);
  for (int i = 0; i < k; ++i) {
    setup.raw_labels.segment(i * n, n) = estimate.derivatives.row(i);
  }
  return setup;
}

}  // namespace

GpPhsModel::GpPhsModel(DerivativeEstimate estimate, Eigen::MatrixXd inputs,
                       PhsStructure structure, HyperParams init)
    : engine_(gp_phs_setup(estimate, inputs), std::move(structure), std::move(init)) {}

HyperParams GpPhsModel::default_init(const DerivativeEstimate& estimate,
                                     const PhsStructure& structure) {
  const int n = static_cast<int>(estimate.states.cols());
  HyperParams p;
  Eigen::VectorXd ls(n);
  for (int j = 0; j < n; ++j) {
    const double mean = estimate.states.col(j).mean();
    const double var = (estimate.states.col(j).array() - mean).square().mean();
    ls(j) = std::max(std::sqrt(var), 1e-2);
  }
  Eigen::VectorXd energy(estimate.states.rows());
  for (int i = 0; i < estimate.states.rows(); ++i) {
    energy(i) = 0.5 * estimate.states.row(i).squaredNorm();
  }
  const double escale = energy.array().square().mean();

  double deriv_var = 0.0;
  for (int j = 0; j < n; ++j) {
    const double mean = estimate.derivatives.col(j).mean();
    deriv_var += (estimate.derivatives.col(j).array() - mean).square().mean() / n;
  }

  p.kernel.log_lengthscales = ls.array().log();
  p.kernel.log_signal_variance = std::log(std::max(escale, 1e-4));
  p.log_noise_variance = std::log(std::max(1e-2 * deriv_var, 1e-8));
  p.theta = Eigen::VectorXd::Constant(structure.theta.size(), 0.1);
  return p;
}

FitResult GpPhsModel::fit(const OptimizerConfig& config) { return engine_.fit(config); }

}  // namespace msphs
