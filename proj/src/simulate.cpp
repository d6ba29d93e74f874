#include "msphs/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace msphs {

Eigen::VectorXd DenseTrajectory::interpolate(double t) const {
  const int k = num_points();
  if (k == 0) throw Error(ErrorCode::InsufficientData, "empty trajectory");
  const double slack = 1e-9 * std::max(1.0, t_end() - t_begin());
  if (t < t_begin() - slack || t > t_end() + slack) {
    throw Error(ErrorCode::OutOfRange,
                "time " + std::to_string(t) + " outside trajectory span [" +
                    std::to_string(t_begin()) + ", " + std::to_string(t_end()) + "]");
  }
  t = std::clamp(t, t_begin(), t_end());

  // Locate the bracketing interval.
  const double* begin = times.data();
  const double* end = begin + k;
  int idx = static_cast<int>(std::upper_bound(begin, end, t) - begin) - 1;
  idx = std::clamp(idx, 0, k - 2);

  const double h = times(idx + 1) - times(idx);
  const double s = (t - times(idx)) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  // Cubic Hermite basis on [0, 1] with derivatives scaled by h.
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * states.row(idx).transpose() + h * h10 * derivs.row(idx).transpose() +
         h01 * states.row(idx + 1).transpose() + h * h11 * derivs.row(idx + 1).transpose();
}

DenseTrajectory rk4_integrate(const FieldFn& field, const Eigen::VectorXd& x0,
                              double t0, double t1, double dt, const InputFn& input) {
  if (dt <= 0.0) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (t1 <= t0) throw Error(ErrorCode::InvalidArgument, "t1 must exceed t0");

  const int n = static_cast<int>(x0.size());
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> derivs;

  double t = t0;
  Eigen::VectorXd x = x0;
  times.push_back(t);
  states.push_back(x);
  derivs.push_back(field(x, input(t), t));

  // step start times come from multiplication, not accumulation, so the
  // grid carries no floating-point drift; the last step lands exactly on t1
  const double tail = 1e-9 * std::max(1.0, std::abs(t1 - t0));
  std::size_t step_index = 0;
  while (t < t1 - tail) {
    const double t_next = std::min(t0 + static_cast<double>(step_index + 1) * dt, t1);
    const double h = t_next - t;
    const Eigen::VectorXd u1 = input(t);
    const Eigen::VectorXd u2 = input(t + 0.5 * h);
    const Eigen::VectorXd u3 = input(t_next);
    const Eigen::VectorXd k1 = field(x, u1, t);
    const Eigen::VectorXd k2 = field(x + 0.5 * h * k1, u2, t + 0.5 * h);
    const Eigen::VectorXd k3 = field(x + 0.5 * h * k2, u2, t + 0.5 * h);
    const Eigen::VectorXd k4 = field(x + h * k3, u3, t_next);
    x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t_next;
    ++step_index;
    if (!x.allFinite()) {
      throw Error(ErrorCode::NonFinite,
                  "non-finite state at step " + std::to_string(step_index) + ", t = " +
                      std::to_string(t));
    }
    times.push_back(t);
    states.push_back(x);
    derivs.push_back(field(x, input(t), t));
  }

  DenseTrajectory out;
  const int k = static_cast<int>(times.size());
  out.times.resize(k);
  out.states.resize(k, n);
  out.derivs.resize(k, n);
  for (int i = 0; i < k; ++i) {
    out.times(i) = times[i];
    out.states.row(i) = states[i].transpose();
    out.derivs.row(i) = derivs[i].transpose();
  }
  return out;
}

Eigen::VectorXd jittered_timestamps(double t0, double t1, int n, double sigma_j,
                                    std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 timestamps");
  if (sigma_j < 0.0) throw Error(ErrorCode::InvalidArgument, "sigma_j must be >= 0");

  Eigen::VectorXd t(n);
  const double step = (t1 - t0) / static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) t(i) = t0 + i * step;
  if (sigma_j > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma_j);
    for (int i = 0; i < n; ++i) t(i) = std::clamp(t(i) + gauss(rng), t0, t1);
  }
  std::sort(t.data(), t.data() + n);

  // De-tie by minimal increments, then walk back any overflow past t1.
  for (int i = 1; i < n; ++i) {
    if (t(i) <= t(i - 1)) t(i) = std::nextafter(t(i - 1), std::numeric_limits<double>::max());
  }
  if (t(n - 1) > t1) {
    t(n - 1) = t1;
    for (int i = n - 2; i >= 0; --i) {
      if (t(i) >= t(i + 1)) t(i) = std::nextafter(t(i + 1), std::numeric_limits<double>::lowest());
    }
  }
  return t;
}

TrajectoryDataset observe(const DenseTrajectory& trajectory,
                          const Eigen::VectorXd& timestamps, const InputFn& input,
                          double sigma_x, std::uint64_t seed) {
  const int k = static_cast<int>(timestamps.size());
  const int n = static_cast<int>(trajectory.states.cols());
  TrajectoryDataset out;
  out.timestamps = timestamps;
  out.noise_variance = sigma_x * sigma_x;
  out.seed = seed;
  out.states.resize(k, n);

  for (int i = 0; i < k; ++i) {
    out.states.row(i) = trajectory.interpolate(timestamps(i)).transpose();
  }
  if (sigma_x > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma_x);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < n; ++j) out.states(i, j) += gauss(rng);
    }
  }

  const int m = static_cast<int>(input(timestamps(0)).size());
  out.inputs.resize(k, m);
  for (int i = 0; i < k; ++i) out.inputs.row(i) = input(timestamps(i)).transpose();
  return out;
}

DenseTrajectory simulate_truth(const BenchmarkSystem& system, const SimConfig& config) {
  const FieldFn field = [&system](const Eigen::VectorXd& x, const Eigen::VectorXd& u, double) {
    return system.true_field(x, u);
  };
  return rk4_integrate(field, system.x0, config.t0, config.t1, config.dt, system.input_signal);
}

TrajectoryDataset make_dataset(const BenchmarkSystem& system, const SimConfig& config) {
  const DenseTrajectory truth = simulate_truth(system, config);
  // Independent streams for jitter and observation noise.
  const Eigen::VectorXd times = jittered_timestamps(
      config.t0, config.t1, config.n_samples, config.sigma_j, config.seed * 0x9e3779b97f4a7c15ULL + 1);
  return observe(truth, times, system.input_signal, config.sigma_x,
                 config.seed * 0x9e3779b97f4a7c15ULL + 2);
}

void save_dataset(const TrajectoryDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");

  const int n = dataset.state_dim();
  const int m = dataset.input_dim();
  out << "t";
  for (int j = 0; j < n; ++j) out << ", x" << (j + 1);
  for (int j = 0; j < m; ++j) out << ", u" << (j + 1);
  out << "\n";

  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", dataset.noise_variance);
  out << "# noise_variance = " << buf << "\n# seed = " << dataset.seed << "\n";
  const auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (int i = 0; i < dataset.num_samples(); ++i) {
    emit(dataset.timestamps(i));
    for (int j = 0; j < n; ++j) {
      out << ", ";
      emit(dataset.states(i, j));
    }
    for (int j = 0; j < m; ++j) {
      out << ", ";
      emit(dataset.inputs(i, j));
    }
    out << "\n";
  }
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

TrajectoryDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::Io, "empty dataset file");
  int n = 0, m = 0;
  {
    std::stringstream ss(header);
    std::string col;
    while (std::getline(ss, col, ',')) {
      const auto first = col.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      col = col.substr(first);
      if (col[0] == 'x') ++n;
      if (col[0] == 'u') ++m;
    }
  }
  if (n == 0) throw Error(ErrorCode::Io, "dataset header has no state columns");

  TrajectoryDataset out;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states, inputs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::stringstream ss(line);
      std::string token;
      while (ss >> token) {
        if (token == "noise_variance") {
          ss >> token >> out.noise_variance;  // consumes '='
        } else if (token == "seed") {
          ss >> token >> out.seed;
        }
      }
      continue;
    }
    std::stringstream ss(line);
    double t;
    char sep;
    ss >> t;
    Eigen::VectorXd x(n), u(m);
    for (int j = 0; j < n; ++j) ss >> sep >> x(j);
    for (int j = 0; j < m; ++j) ss >> sep >> u(j);
    if (ss.fail()) throw Error(ErrorCode::Io, "malformed dataset row: " + line);
    times.push_back(t);
    states.push_back(x);
    inputs.push_back(u);
  }

  const int k = static_cast<int>(times.size());
  out.timestamps.resize(k);
  out.states.resize(k, n);
  out.inputs.resize(k, m);
  for (int i = 0; i < k; ++i) {
    out.timestamps(i) = times[i];
    out.states.row(i) = states[i].transpose();
    out.inputs.row(i) = inputs[i].transpose();
  }
  return out;
}

std::uint64_t file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace msphs
