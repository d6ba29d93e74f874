#include "msphs/sweep.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace msphs {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

const char* kRunsHeader =
    "run_id,system,method,sigma_x,sigma_j,seed,ok,error,vf_mse,vf_cosine,"
    "h_mse,h_mean_var,h_ratio,wall_time_s,fitted";

std::string run_to_csv(const RunResult& r) {
  std::ostringstream out;
  out << r.run_id << ',' << r.system << ',' << r.method << ',' << fmt17(r.sigma_x) << ','
      << fmt17(r.sigma_j) << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ','
      << csv_quote(r.error) << ',' << fmt17(r.vf_mse) << ',' << fmt17(r.vf_cosine) << ','
      << (r.h_mse ? fmt17(*r.h_mse) : "") << ',' << (r.h_mean_var ? fmt17(*r.h_mean_var) : "")
      << ',' << (r.h_ratio ? fmt17(*r.h_ratio) : "") << ',' << fmt17(r.wall_time_s) << ','
      << csv_quote(r.fitted);
  return out.str();
}

RunResult run_from_csv(const std::string& line) {
  const auto f = csv_split(line);
  if (f.size() != 15) throw Error(ErrorCode::Io, "malformed runs.csv row: " + line);
  RunResult r;
  r.run_id = std::stoi(f[0]);
  r.system = f[1];
  r.method = f[2];
  r.sigma_x = std::stod(f[3]);
  r.sigma_j = std::stod(f[4]);
  r.seed = std::stoull(f[5]);
  r.ok = f[6] == "1";
  r.error = f[7];
  r.vf_mse = std::stod(f[8]);
  r.vf_cosine = std::stod(f[9]);
  if (!f[10].empty()) r.h_mse = std::stod(f[10]);
  if (!f[11].empty()) r.h_mean_var = std::stod(f[11]);
  if (!f[12].empty()) r.h_ratio = std::stod(f[12]);
  r.wall_time_s = std::stod(f[13]);
  r.fitted = f[14];
  return r;
}

std::string fitted_echo(const ModelDocument& doc) {
  std::ostringstream out;
  out.precision(6);
  if (doc.phs_params) {
    out << "ls=";
    const Eigen::VectorXd ls = doc.phs_params->kernel.lengthscales();
    for (int i = 0; i < ls.size(); ++i) out << (i ? ";" : "") << ls(i);
    out << " sf2=" << doc.phs_params->kernel.signal_variance()
        << " sx2=" << doc.phs_params->noise_variance() << " theta=";
    for (int i = 0; i < doc.phs_params->theta.size(); ++i) {
      out << (i ? ";" : "") << doc.phs_params->theta(i);
    }
  } else if (doc.ode_params) {
    out << "sx2=" << std::exp(doc.ode_params->log_noise_variance);
    for (std::size_t c = 0; c < doc.ode_params->kernels.size(); ++c) {
      const auto& k = doc.ode_params->kernels[c];
      out << " k" << c << "[ls=";
      const Eigen::VectorXd ls = k.lengthscales();
      for (int i = 0; i < ls.size(); ++i) out << (i ? ";" : "") << ls(i);
      out << " sf2=" << k.signal_variance() << "]";
    }
  }
  return out.str();
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.sigma_x = {std::sqrt(1e-4), std::sqrt(1e-3), std::sqrt(0.01), std::sqrt(0.02),
               std::sqrt(0.05)};
  for (std::uint64_t s = 1; s <= 30; ++s) c.seeds.push_back(s);
  c.optimizer.restarts = 3;
  return c;
}

void ExperimentConfig::validate() const {
  if (systems.empty() || methods.empty() || sigma_x.empty() || sigma_j.empty() ||
      seeds.empty()) {
    throw Error(ErrorCode::InvalidArgument, "every sweep ladder must be non-empty");
  }
  if (mesh_resolution < 5) {
    throw Error(ErrorCode::InvalidArgument, "mesh resolution must be >= 5 per axis");
  }
  for (const auto& m : methods) parse_method(m);
  for (const auto& s : systems) benchmark_by_name(s, omega);
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, "malformed config: " + std::string(e.what()));
  }

  ExperimentConfig c = ExperimentConfig::defaults();
  if (j.contains("systems")) c.systems = j["systems"].get<std::vector<std::string>>();
  if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
  if (j.contains("n_samples")) c.n_samples = j["n_samples"].get<int>();
  if (j.contains("t_span")) {
    const auto span = j["t_span"].get<std::vector<double>>();
    if (span.size() != 2) throw Error(ErrorCode::Io, "t_span must be [t0, t1]");
    c.t0 = span[0];
    c.t1 = span[1];
  }
  if (j.contains("sigma_x")) c.sigma_x = j["sigma_x"].get<std::vector<double>>();
  if (j.contains("sigma_j")) c.sigma_j = j["sigma_j"].get<std::vector<double>>();
  if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("mesh_resolution")) c.mesh_resolution = j["mesh_resolution"].get<int>();
  if (j.contains("mesh_inflation")) c.mesh_inflation = j["mesh_inflation"].get<double>();
  if (j.contains("rk4_dt")) c.rk4_dt = j["rk4_dt"].get<double>();
  if (j.contains("omega")) c.omega = j["omega"].get<double>();
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    if (o.contains("learning_rate")) c.optimizer.learning_rate = o["learning_rate"].get<double>();
    if (o.contains("iterations")) c.optimizer.iterations = o["iterations"].get<int>();
    if (o.contains("restarts")) c.optimizer.restarts = o["restarts"].get<int>();
    if (o.contains("seed")) c.optimizer.seed = o["seed"].get<std::uint64_t>();
  }
  c.validate();
  return c;
}

void save_experiment_config(const ExperimentConfig& c, const std::filesystem::path& path) {
  nlohmann::json j;
  j["systems"] = c.systems;
  j["methods"] = c.methods;
  j["n_samples"] = c.n_samples;
  j["t_span"] = {c.t0, c.t1};
  j["sigma_x"] = c.sigma_x;
  j["sigma_j"] = c.sigma_j;
  j["seeds"] = c.seeds;
  j["mesh_resolution"] = c.mesh_resolution;
  j["mesh_inflation"] = c.mesh_inflation;
  j["rk4_dt"] = c.rk4_dt;
  j["omega"] = c.omega;
  j["optimizer"] = {{"learning_rate", c.optimizer.learning_rate},
                    {"iterations", c.optimizer.iterations},
                    {"restarts", c.optimizer.restarts},
                    {"seed", c.optimizer.seed}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
}

ResultsStore ResultsStore::load(const std::filesystem::path& dir) {
  const auto file = dir / "runs.csv";
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + file.string());
  ResultsStore store;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    store.runs_.push_back(run_from_csv(line));
  }
  return store;
}

void ResultsStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::vector<RunResult> sorted = runs_;
  std::sort(sorted.begin(), sorted.end(),
            [](const RunResult& a, const RunResult& b) { return a.run_id < b.run_id; });
  std::ofstream out(dir / "runs.csv");
  if (!out) throw Error(ErrorCode::Io, "cannot write runs.csv");
  out << kRunsHeader << "\n";
  for (const auto& r : sorted) out << run_to_csv(r) << "\n";
}

namespace {

void dump_mesh_predictions(const BenchmarkSystem& system, const FittedRun& fitted,
                           const std::vector<Eigen::VectorXd>& mesh,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  const int n = system.structure.state_dim;
  for (int d = 0; d < n; ++d) out << (d ? "," : "") << "x" << (d + 1);
  for (int d = 0; d < n; ++d) out << ",f_true" << (d + 1);
  for (int d = 0; d < n; ++d) out << ",f_mean" << (d + 1);
  out << ",f_var_trace,h_true,h_mean,h_var\n";
  for (const auto& x : mesh) {
    Eigen::VectorXd mu;
    Eigen::MatrixXd cov;
    fitted.field->evaluate(x, mu, cov);
    const Eigen::VectorXd f_true = system.true_drift(x);
    for (int d = 0; d < n; ++d) out << (d ? "," : "") << fmt17(x(d));
    for (int d = 0; d < n; ++d) out << "," << fmt17(f_true(d));
    for (int d = 0; d < n; ++d) out << "," << fmt17(mu(d));
    out << "," << fmt17(cov.trace());
    if (fitted.surface) {
      double hm, hv;
      fitted.surface->evaluate(x, hm, hv);
      out << "," << fmt17(system.true_hamiltonian(x)) << "," << fmt17(hm) << "," << fmt17(hv);
    } else {
      out << "," << fmt17(system.true_hamiltonian(x)) << ",,";
    }
    out << "\n";
  }
}

RunResult execute_run(const ExperimentConfig& config, const std::string& system_name,
                      const std::string& method, double sigma_x, double sigma_j,
                      std::uint64_t seed, int run_id,
                      const std::filesystem::path* mesh_dump) {
  RunResult result;
  result.run_id = run_id;
  result.system = system_name;
  result.method = method;
  result.sigma_x = sigma_x;
  result.sigma_j = sigma_j;
  result.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  try {
    const BenchmarkSystem system = benchmark_by_name(system_name, config.omega);
    SimConfig sim;
    sim.t0 = config.t0;
    sim.t1 = config.t1;
    sim.n_samples = config.n_samples;
    sim.sigma_x = sigma_x;
    sim.sigma_j = sigma_j;
    sim.dt = config.rk4_dt;
    sim.seed = seed;

    const DenseTrajectory truth = simulate_truth(system, sim);
    const TrajectoryDataset data = make_dataset(system, sim);
    const MeshSpec mesh_spec = default_mesh(truth, config.mesh_resolution, config.mesh_inflation);
    const std::vector<Eigen::VectorXd> mesh = eval_mesh(mesh_spec);

    const FittedRun fitted = fit_method(method, data, system, config.optimizer);

    std::vector<Eigen::VectorXd> mu(mesh.size()), f_true(mesh.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      mu[i] = fitted.field->mean(mesh[i]);
      f_true[i] = system.true_drift(mesh[i]);
    }
    const VfMetrics vf = vf_metrics(mu, f_true);
    result.vf_mse = vf.mse;
    result.vf_cosine = vf.cosine_distance;

    if (fitted.surface) {
      std::vector<double> h_mu(mesh.size()), h_var(mesh.size()), h_true(mesh.size());
      for (std::size_t i = 0; i < mesh.size(); ++i) {
        fitted.surface->evaluate(mesh[i], h_mu[i], h_var[i]);
        h_true[i] = system.true_hamiltonian(mesh[i]);
      }
      const HMetrics hm = h_metrics(h_mu, h_var, h_true);
      result.h_mse = hm.h_mse;
      result.h_mean_var = hm.mean_variance;
      result.h_ratio = hm.ratio;
    }
    result.fitted = fitted_echo(fitted.doc);
    if (mesh_dump != nullptr) dump_mesh_predictions(system, fitted, mesh, *mesh_dump);
    result.ok = true;
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace

RunResult run_single(const ExperimentConfig& config, const std::string& system,
                     const std::string& method, double sigma_x, double sigma_j,
                     std::uint64_t seed, int run_id) {
  return execute_run(config, system, method, sigma_x, sigma_j, seed, run_id, nullptr);
}

ResultsStore run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                       int jobs) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  std::filesystem::create_directories(out_dir / "mesh");
  save_experiment_config(config, out_dir / "config.json");

  struct Cell {
    std::string system, method;
    double sigma_x, sigma_j;
    std::uint64_t seed;
    bool first_seed;
  };
  std::vector<Cell> cells;
  for (const auto& system : config.systems) {
    for (const auto& method : config.methods) {
      for (double sx : config.sigma_x) {
        for (double sj : config.sigma_j) {
          for (std::size_t si = 0; si < config.seeds.size(); ++si) {
            cells.push_back({system, method, sx, sj, config.seeds[si], si == 0});
          }
        }
      }
    }
  }

  std::vector<RunResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;
  std::ofstream incremental(out_dir / "runs.csv");
  incremental << kRunsHeader << "\n";

  const int workers = std::max(1, jobs);
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      const Cell& c = cells[i];
      std::filesystem::path dump_path;
      const std::filesystem::path* dump = nullptr;
      if (c.first_seed) {
        std::ostringstream name;
        name << c.system << "_" << c.method << "_sx" << c.sigma_x << "_sj" << c.sigma_j
             << ".csv";
        dump_path = out_dir / "mesh" / name.str();
        dump = &dump_path;
      }
      RunResult r = execute_run(config, c.system, c.method, c.sigma_x, c.sigma_j, c.seed,
                                static_cast<int>(i), dump);
      {
        std::lock_guard<std::mutex> lock(io_mutex);
        incremental << run_to_csv(r) << "\n";
        incremental.flush();
        std::cerr << "[" << (i + 1) << "/" << cells.size() << "] " << c.system << " "
                  << c.method << " sx=" << c.sigma_x << " sj=" << c.sigma_j
                  << " seed=" << c.seed << (r.ok ? " ok" : (" FAILED: " + r.error)) << " ("
                  << r.wall_time_s << " s)\n";
      }
      results[i] = std::move(r);
    }
  };

  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  incremental.close();

  ResultsStore store;
  for (auto& r : results) store.add(std::move(r));
  store.save(out_dir);  // rewrite sorted by run_id
  return store;
}

}  // namespace msphs
