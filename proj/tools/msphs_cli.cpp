// Benchmark CLI: simulate datasets, fit models, predict on meshes, run
// sweeps, and emit report tables.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "msphs/bench.hpp"
#include "msphs/sweep.hpp"

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int run_simulate(const std::string& system_name, double omega, bool zero_input,
                 msphs::SimConfig sim, const std::string& out) {
  msphs::BenchmarkSystem system = msphs::benchmark_by_name(system_name, omega);
  if (zero_input) system = msphs::with_zero_input(system);
  const msphs::TrajectoryDataset data = msphs::make_dataset(system, sim);
  msphs::save_dataset(data, out);
  std::cout << "wrote " << out << " (" << data.num_samples() << " samples)\n";
  return 0;
}

int run_fit(const std::string& data_path, const std::string& system_name, double omega,
            const std::string& method, const msphs::OptimizerConfig& opt,
            const std::string& out) {
  const msphs::TrajectoryDataset data = msphs::load_dataset(data_path);
  const msphs::BenchmarkSystem system = msphs::benchmark_by_name(system_name, omega);
  msphs::FittedRun run = msphs::fit_method(method, data, system, opt);
  run.doc.omega = omega;
  run.doc.dataset_fingerprint = msphs::file_fingerprint(data_path);
  msphs::save_model(run.doc, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_prefix, int resolution, std::vector<double> lo,
                std::vector<double> hi) {
  const msphs::ModelDocument doc = msphs::load_model(model_path);
  if (doc.dataset_fingerprint != msphs::file_fingerprint(data_path)) {
    throw msphs::Error(msphs::ErrorCode::InvalidArgument,
                       "dataset file does not match the fingerprint recorded in the model");
  }
  const msphs::TrajectoryDataset data = msphs::load_dataset(data_path);
  const msphs::FittedRun run = msphs::rebuild_from_doc(doc, data);

  const int n = data.state_dim();
  msphs::MeshSpec spec;
  if (!lo.empty() || !hi.empty()) {
    if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n) {
      throw msphs::Error(msphs::ErrorCode::InvalidArgument,
                         "--lo/--hi need one value per state dimension");
    }
    spec.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), n);
    spec.hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), n);
  } else {
    spec.lo = data.states.colwise().minCoeff().transpose();
    spec.hi = data.states.colwise().maxCoeff().transpose();
    for (int d = 0; d < n; ++d) {
      const double pad = 0.1 * std::max(spec.hi(d) - spec.lo(d), 1e-6);
      spec.lo(d) -= pad;
      spec.hi(d) += pad;
    }
  }
  spec.resolution = resolution;
  const auto mesh = msphs::eval_mesh(spec);

  const std::string field_path = out_prefix + "_field.csv";
  {
    std::ofstream out(field_path);
    for (int d = 0; d < n; ++d) out << (d ? "," : "") << "x" << (d + 1);
    for (int d = 0; d < n; ++d) out << ",f_mean" << (d + 1);
    out << ",f_var_trace\n";
    for (const auto& x : mesh) {
      Eigen::VectorXd mu;
      Eigen::MatrixXd cov;
      run.field->evaluate(x, mu, cov);
      for (int d = 0; d < n; ++d) out << (d ? "," : "") << fmt17(x(d));
      for (int d = 0; d < n; ++d) out << "," << fmt17(mu(d));
      out << "," << fmt17(cov.trace()) << "\n";
    }
  }
  std::cout << "wrote " << field_path << "\n";

  if (run.surface) {
    const std::string surface_path = out_prefix + "_surface.csv";
    std::ofstream out(surface_path);
    for (int d = 0; d < n; ++d) out << (d ? "," : "") << "x" << (d + 1);
    out << ",h_mean,h_var\n";
    for (const auto& x : mesh) {
      double mu, var;
      run.surface->evaluate(x, mu, var);
      for (int d = 0; d < n; ++d) out << (d ? "," : "") << fmt17(x(d));
      out << "," << fmt17(mu) << "," << fmt17(var) << "\n";
    }
    std::cout << "wrote " << surface_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multistep port-Hamiltonian GP benchmark harness"};
  app.require_subcommand(1);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "generate a noisy irregular dataset");
  std::string sim_system = "duffing", sim_out = "dataset.csv";
  msphs::SimConfig sim;
  double sim_omega = 1.5;
  bool sim_zero_input = false;
  sim_cmd->add_option("--system", sim_system, "mass-spring | van-der-pol | duffing");
  sim_cmd->add_option("--n", sim.n_samples, "number of samples");
  sim_cmd->add_option("--t0", sim.t0, "span start");
  sim_cmd->add_option("--t1", sim.t1, "span end");
  sim_cmd->add_option("--sigma-x", sim.sigma_x, "observation noise std dev");
  sim_cmd->add_option("--sigma-j", sim.sigma_j, "timestamp jitter std dev");
  sim_cmd->add_option("--dt", sim.dt, "RK4 ground-truth step");
  sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--omega", sim_omega, "input frequency (rad/s)");
  sim_cmd->add_flag("--zero-input", sim_zero_input, "force u(t) = 0");
  sim_cmd->add_option("--out", sim_out, "output dataset path");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a model to a dataset");
  std::string fit_data, fit_system = "duffing", fit_method = "ms-phs-ab-3",
              fit_out = "model.json";
  double fit_omega = 1.5;
  msphs::OptimizerConfig opt;
  fit_cmd->add_option("--data", fit_data, "dataset csv")->required();
  fit_cmd->add_option("--system", fit_system, "benchmark system id");
  fit_cmd->add_option("--method", fit_method,
                      "ms-phs-ab-{1,2,3} | ms-ode-ab-{1,2,3} | gp-phs-loess-2 | gp-phs-savgol-3");
  fit_cmd->add_option("--omega", fit_omega, "input frequency used when simulating");
  fit_cmd->add_option("--iters", opt.iterations, "optimizer iterations");
  fit_cmd->add_option("--lr", opt.learning_rate, "optimizer learning rate");
  fit_cmd->add_option("--seed", opt.seed, "optimizer seed");
  fit_cmd->add_option("--out", fit_out, "output model path");

  // predict
  auto* pred_cmd = app.add_subcommand("predict", "evaluate posteriors on a mesh");
  std::string pred_model, pred_data, pred_prefix = "prediction";
  int pred_res = 25;
  std::vector<double> pred_lo, pred_hi;
  pred_cmd->add_option("--model", pred_model, "model json")->required();
  pred_cmd->add_option("--data", pred_data, "dataset the model was fitted on")->required();
  pred_cmd->add_option("--out", pred_prefix, "output file prefix");
  pred_cmd->add_option("--res", pred_res, "mesh resolution per axis");
  pred_cmd->add_option("--lo", pred_lo, "mesh lower bounds (one per dimension)");
  pred_cmd->add_option("--hi", pred_hi, "mesh upper bounds");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "run a config-driven benchmark sweep");
  std::string sweep_config, sweep_out = "results";
  std::string sweep_emit_default;
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  sweep_cmd->add_option("--config", sweep_config, "experiment config json");
  sweep_cmd->add_option("--out", sweep_out, "results directory");
  sweep_cmd->add_option("--jobs", jobs, "worker pool width");
  sweep_cmd->add_option("--emit-default-config", sweep_emit_default,
                        "write the default config to this path and exit");

  // report
  auto* report_cmd = app.add_subcommand("report", "emit CSV tables from sweep results");
  std::string report_results = "results", report_out = "report";
  report_cmd->add_option("--results", report_results, "results directory (with runs.csv)");
  report_cmd->add_option("--out", report_out, "report output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) {
      return run_simulate(sim_system, sim_omega, sim_zero_input, sim, sim_out);
    }
    if (fit_cmd->parsed()) {
      return run_fit(fit_data, fit_system, fit_omega, fit_method, opt, fit_out);
    }
    if (pred_cmd->parsed()) {
      return run_predict(pred_model, pred_data, pred_prefix, pred_res, pred_lo, pred_hi);
    }
    if (sweep_cmd->parsed()) {
      if (!sweep_emit_default.empty()) {
        msphs::save_experiment_config(msphs::ExperimentConfig::defaults(), sweep_emit_default);
        std::cout << "wrote " << sweep_emit_default << "\n";
        return 0;
      }
      if (sweep_config.empty()) {
        throw msphs::Error(msphs::ErrorCode::InvalidArgument,
                           "sweep needs --config (or --emit-default-config)");
      }
      const msphs::ExperimentConfig config = msphs::load_experiment_config(sweep_config);
      const msphs::ResultsStore store = msphs::run_sweep(config, sweep_out, std::max(1, jobs));
      int failed = 0;
      for (const auto& r : store.runs()) failed += r.ok ? 0 : 1;
      std::cout << "completed " << store.runs().size() << " runs (" << failed
                << " failed); results in " << sweep_out << "\n";
      return 0;
    }
    if (report_cmd->parsed()) {
      const msphs::ResultsStore store = msphs::ResultsStore::load(report_results);
      msphs::write_reports(store, report_out);
      std::cout << "wrote report tables to " << report_out << "\n";
      return 0;
    }
  } catch (const msphs::Error& e) {
    nlohmann::json err{{"error", {{"code", e.code_name()}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", {{"code", "unexpected"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
