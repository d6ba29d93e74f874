#include "msphs/bench.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace msphs {

std::vector<Eigen::VectorXd> eval_mesh(const MeshSpec& spec) {
  const int n = spec.dim();
  if (n == 0 || spec.hi.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "mesh bounds must be non-empty and consistent");
  }
  if (spec.resolution < 5) {
    throw Error(ErrorCode::InvalidArgument, "mesh resolution must be >= 5 per axis");
  }
  for (int d = 0; d < n; ++d) {
    if (!std::isfinite(spec.lo(d)) || !std::isfinite(spec.hi(d)) || spec.hi(d) <= spec.lo(d)) {
      throw Error(ErrorCode::InvalidArgument, "mesh bounds must be finite with hi > lo");
    }
  }

  std::size_t total = 1;
  for (int d = 0; d < n; ++d) total *= spec.resolution;
  std::vector<Eigen::VectorXd> points;
  points.reserve(total);
  std::vector<int> idx(n, 0);
  while (true) {
    Eigen::VectorXd x(n);
    for (int d = 0; d < n; ++d) {
      x(d) = spec.lo(d) + (spec.hi(d) - spec.lo(d)) * idx[d] / (spec.resolution - 1);
    }
    points.push_back(std::move(x));
    int d = n - 1;
    while (d >= 0 && ++idx[d] == spec.resolution) idx[d--] = 0;
    if (d < 0) break;
  }
  return points;
}

MeshSpec default_mesh(const DenseTrajectory& truth, int resolution, double inflation) {
  const int n = static_cast<int>(truth.states.cols());
  MeshSpec spec;
  spec.lo = truth.states.colwise().minCoeff().transpose();
  spec.hi = truth.states.colwise().maxCoeff().transpose();
  for (int d = 0; d < n; ++d) {
    const double width = spec.hi(d) - spec.lo(d);
    const double pad = inflation * std::max(width, 1e-6);
    spec.lo(d) -= pad;
    spec.hi(d) += pad;
  }
  spec.resolution = resolution;
  return spec;
}

VfMetrics vf_metrics(const std::vector<Eigen::VectorXd>& predicted,
                     const std::vector<Eigen::VectorXd>& truth) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw Error(ErrorCode::InvalidArgument, "prediction/truth size mismatch or empty mesh");
  }
  constexpr double norm_floor = 1e-10;
  VfMetrics out;
  double cos_sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    out.mse += (predicted[i] - truth[i]).squaredNorm();
    const double np = predicted[i].norm();
    const double nt = truth[i].norm();
    if (np >= norm_floor && nt >= norm_floor) {
      cos_sum += 1.0 - predicted[i].dot(truth[i]) / (np * nt);
      ++out.n_cosine_used;
    }
  }
  out.mse /= static_cast<double>(predicted.size());
  if (out.n_cosine_used == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "all mesh points excluded from the cosine average");
  }
  out.cosine_distance = cos_sum / out.n_cosine_used;
  return out;
}

HMetrics h_metrics(const std::vector<double>& predicted_mean,
                   const std::vector<double>& predicted_variance,
                   const std::vector<double>& truth) {
  if (predicted_mean.size() != truth.size() || predicted_mean.size() != predicted_variance.size() ||
      truth.empty()) {
    throw Error(ErrorCode::InvalidArgument, "surface metric size mismatch or empty mesh");
  }
  HMetrics out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double err = truth[i] - predicted_mean[i];
    out.h_mse += err * err;
    out.mean_variance += predicted_variance[i];
  }
  out.h_mse /= static_cast<double>(truth.size());
  out.mean_variance /= static_cast<double>(truth.size());
  if (out.mean_variance <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "zero mean posterior variance");
  }
  out.ratio = out.h_mse / out.mean_variance;
  return out;
}

// ---------------------------------------------------------------------------
// model documents

namespace {

nlohmann::json to_json(const HyperParams& p) {
  return {
      {"log_lengthscales",
       std::vector<double>(p.kernel.log_lengthscales.begin(), p.kernel.log_lengthscales.end())},
      {"log_signal_variance", p.kernel.log_signal_variance},
      {"log_noise_variance", p.log_noise_variance},
      {"theta", std::vector<double>(p.theta.begin(), p.theta.end())},
  };
}

HyperParams hyper_from_json(const nlohmann::json& j) {
  HyperParams p;
  const auto ls = j.at("log_lengthscales").get<std::vector<double>>();
  p.kernel.log_lengthscales = Eigen::Map<const Eigen::VectorXd>(ls.data(), ls.size());
  p.kernel.log_signal_variance = j.at("log_signal_variance").get<double>();
  p.log_noise_variance = j.at("log_noise_variance").get<double>();
  const auto th = j.at("theta").get<std::vector<double>>();
  p.theta = Eigen::Map<const Eigen::VectorXd>(th.data(), th.size());
  return p;
}

}  // namespace

void save_model(const ModelDocument& doc, const std::filesystem::path& path) {
  nlohmann::json j;
  j["method"] = doc.method;
  j["system"] = doc.system;
  j["omega"] = doc.omega;
  j["order"] = doc.order;
  if (doc.phs_params) j["phs_params"] = to_json(*doc.phs_params);
  if (doc.ode_params) {
    nlohmann::json kernels = nlohmann::json::array();
    for (const auto& k : doc.ode_params->kernels) {
      kernels.push_back(
          {{"log_lengthscales",
            std::vector<double>(k.log_lengthscales.begin(), k.log_lengthscales.end())},
           {"log_signal_variance", k.log_signal_variance}});
    }
    j["ode_params"] = {{"kernels", kernels},
                       {"log_noise_variance", doc.ode_params->log_noise_variance}};
  }
  j["loess_span"] = doc.loess_span;
  j["savgol_window"] = doc.savgol_window;
  j["anchor_state"] = std::vector<double>(doc.anchor_state.begin(), doc.anchor_state.end());
  j["anchor_value"] = doc.anchor_value;
  j["epsilon_h_rel"] = doc.epsilon_h_rel;
  j["dataset_fingerprint"] = doc.dataset_fingerprint;

  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

ModelDocument load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, "malformed model file: " + std::string(e.what()));
  }

  ModelDocument doc;
  doc.method = j.at("method").get<std::string>();
  doc.system = j.at("system").get<std::string>();
  doc.omega = j.at("omega").get<double>();
  doc.order = j.at("order").get<int>();
  if (j.contains("phs_params")) doc.phs_params = hyper_from_json(j.at("phs_params"));
  if (j.contains("ode_params")) {
    MsOdeModel::Params p;
    for (const auto& kj : j.at("ode_params").at("kernels")) {
      ArdKernelParams k;
      const auto ls = kj.at("log_lengthscales").get<std::vector<double>>();
      k.log_lengthscales = Eigen::Map<const Eigen::VectorXd>(ls.data(), ls.size());
      k.log_signal_variance = kj.at("log_signal_variance").get<double>();
      p.kernels.push_back(std::move(k));
    }
    p.log_noise_variance = j.at("ode_params").at("log_noise_variance").get<double>();
    doc.ode_params = std::move(p);
  }
  doc.loess_span = j.value("loess_span", 0.15);
  doc.savgol_window = j.value("savgol_window", 11);
  const auto anchor = j.at("anchor_state").get<std::vector<double>>();
  doc.anchor_state = Eigen::Map<const Eigen::VectorXd>(anchor.data(), anchor.size());
  doc.anchor_value = j.at("anchor_value").get<double>();
  doc.epsilon_h_rel = j.at("epsilon_h_rel").get<double>();
  doc.dataset_fingerprint = j.at("dataset_fingerprint").get<std::uint64_t>();
  return doc;
}

MethodId parse_method(const std::string& id) {
  const auto order_of = [&](const std::string& prefix) {
    const std::string tail = id.substr(prefix.size());
    if (tail == "1" || tail == "2" || tail == "3") return tail[0] - '0';
    throw Error(ErrorCode::InvalidArgument, "unknown method id: " + id);
  };
  if (id.rfind("ms-phs-ab-", 0) == 0) return {MethodId::Kind::MsPhs, order_of("ms-phs-ab-")};
  if (id.rfind("ms-ode-ab-", 0) == 0) return {MethodId::Kind::MsOde, order_of("ms-ode-ab-")};
  if (id == "gp-phs-loess-2") return {MethodId::Kind::GpPhsLoess, 0};
  if (id == "gp-phs-savgol-3") return {MethodId::Kind::GpPhsSavgol, 0};
  throw Error(ErrorCode::InvalidArgument, "unknown method id: " + id);
}

FittedRun fit_method(const std::string& method, const TrajectoryDataset& data,
                     const BenchmarkSystem& system, const OptimizerConfig& opt) {
  const MethodId id = parse_method(method);
  const int n = data.state_dim();

  FittedRun run;
  run.doc.method = method;
  run.doc.system = system.name;
  run.doc.omega = system.omega;
  run.doc.order = id.order;
  run.doc.anchor_state = Eigen::VectorXd::Zero(n);
  run.doc.anchor_value = system.true_hamiltonian(run.doc.anchor_state);

  switch (id.kind) {
    case MethodId::Kind::MsPhs: {
      MultistepScheme scheme{MultistepFamily::AdamsBashforth, id.order};
      MsPhsModel model(data, system.structure, scheme,
                       MsPhsModel::default_init(data, system.structure));
      model.fit(opt);
      run.doc.phs_params = model.params();
      run.field = model.field_posterior();
      run.surface = model.hamiltonian_posterior(run.doc.anchor_state, run.doc.anchor_value,
                                                run.doc.epsilon_h_rel);
      break;
    }
    case MethodId::Kind::MsOde: {
      MultistepScheme scheme{MultistepFamily::AdamsBashforth, id.order};
      MsOdeModel model(data, system.structure, scheme,
                       MsOdeModel::default_init(data, scheme));
      model.fit(opt);
      run.doc.ode_params = model.params();
      run.field = model.field_posterior();
      break;
    }
    case MethodId::Kind::GpPhsLoess:
    case MethodId::Kind::GpPhsSavgol: {
      DerivativeEstimate est = (id.kind == MethodId::Kind::GpPhsLoess)
                                   ? loess_smooth(data, run.doc.loess_span, 2)
                                   : savgol_smooth(data, run.doc.savgol_window, 3);
      GpPhsModel model(est, data.inputs, system.structure,
                       GpPhsModel::default_init(est, system.structure));
      model.fit(opt);
      run.doc.phs_params = model.params();
      run.field = model.field_posterior();
      run.surface = model.hamiltonian_posterior(run.doc.anchor_state, run.doc.anchor_value,
                                                run.doc.epsilon_h_rel);
      break;
    }
  }
  return run;
}

FittedRun rebuild_from_doc(const ModelDocument& doc, const TrajectoryDataset& data) {
  const BenchmarkSystem system = benchmark_by_name(doc.system, doc.omega);
  const MethodId id = parse_method(doc.method);

  FittedRun run;
  run.doc = doc;
  switch (id.kind) {
    case MethodId::Kind::MsPhs: {
      MultistepScheme scheme{MultistepFamily::AdamsBashforth, id.order};
      if (!doc.phs_params) throw Error(ErrorCode::Io, "model document missing phs_params");
      MsPhsModel model(data, system.structure, scheme, *doc.phs_params);
      model.assemble();
      run.field = model.field_posterior();
      run.surface =
          model.hamiltonian_posterior(doc.anchor_state, doc.anchor_value, doc.epsilon_h_rel);
      break;
    }
    case MethodId::Kind::MsOde: {
      MultistepScheme scheme{MultistepFamily::AdamsBashforth, id.order};
      if (!doc.ode_params) throw Error(ErrorCode::Io, "model document missing ode_params");
      MsOdeModel model(data, system.structure, scheme, *doc.ode_params);
      model.assemble();
      run.field = model.field_posterior();
      break;
    }
    case MethodId::Kind::GpPhsLoess:
    case MethodId::Kind::GpPhsSavgol: {
      if (!doc.phs_params) throw Error(ErrorCode::Io, "model document missing phs_params");
      DerivativeEstimate est = (id.kind == MethodId::Kind::GpPhsLoess)
                                   ? loess_smooth(data, doc.loess_span, 2)
                                   : savgol_smooth(data, doc.savgol_window, 3);
      GpPhsModel model(est, data.inputs, system.structure, *doc.phs_params);
      model.assemble();
      run.field = model.field_posterior();
      run.surface =
          model.hamiltonian_posterior(doc.anchor_state, doc.anchor_value, doc.epsilon_h_rel);
      break;
    }
  }
  return run;
}

}  // namespace msphs
