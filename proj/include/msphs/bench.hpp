#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msphs/baselines.hpp"
#include "msphs/inference.hpp"
#include "msphs/phs_models.hpp"
#include "msphs/simulate.hpp"

namespace msphs {

/// Axis-aligned regular evaluation grid.
struct MeshSpec {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  int resolution = 25;  // points per axis

  int dim() const { return static_cast<int>(lo.size()); }
};

std::vector<Eigen::VectorXd> eval_mesh(const MeshSpec& spec);

/// Default mesh: bounding box of the noiseless trajectory inflated by the
/// given fraction.
MeshSpec default_mesh(const DenseTrajectory& truth, int resolution, double inflation = 0.1);

struct VfMetrics {
  double mse = 0.0;
  double cosine_distance = 0.0;
  int n_cosine_used = 0;  // mesh points with both norms above threshold
};

/// Mean squared error and mean cosine distance between predicted and true
/// fields over a mesh. Points where either field norm falls below 1e-10
/// are excluded from the cosine average (direction undefined there).
VfMetrics vf_metrics(const std::vector<Eigen::VectorXd>& predicted,
                     const std::vector<Eigen::VectorXd>& truth);

struct HMetrics {
  double h_mse = 0.0;
  double mean_variance = 0.0;
  double ratio = 0.0;  // h_mse / mean_variance
};

HMetrics h_metrics(const std::vector<double>& predicted_mean,
                   const std::vector<double>& predicted_variance,
                   const std::vector<double>& truth);

/// Serialized fitted model: everything needed to reproduce predictions
/// bit-for-bit given the dataset file it was fitted on.
struct ModelDocument {
  std::string method;  // ms-phs-ab-{1,2,3} | ms-ode-ab-{1,2,3} | gp-phs-loess-2 | gp-phs-savgol-3
  std::string system;
  double omega = 1.0;
  int order = 0;  // multistep order, 0 for gp-phs methods
  // ms-phs / gp-phs hyperparameters
  std::optional<HyperParams> phs_params;
  // ms-ode hyperparameters
  std::optional<MsOdeModel::Params> ode_params;
  // prefilter configuration for gp-phs methods
  double loess_span = 0.15;
  int savgol_window = 11;
  // anchor used by the Hamiltonian posterior
  Eigen::VectorXd anchor_state;
  double anchor_value = 0.0;
  double epsilon_h_rel = 1e-8;
  std::uint64_t dataset_fingerprint = 0;
};

void save_model(const ModelDocument& doc, const std::filesystem::path& path);
ModelDocument load_model(const std::filesystem::path& path);

/// Parses a method id into its pieces; throws on unknown ids.
struct MethodId {
  enum class Kind { MsPhs, MsOde, GpPhsLoess, GpPhsSavgol } kind;
  int order = 0;  // multistep order for ms-* methods
};
MethodId parse_method(const std::string& id);

/// A fitted model of any supported method, reduced to its posteriors.
struct FittedRun {
  std::shared_ptr<const FieldPosterior> field;
  std::optional<HamiltonianPosterior> surface;  // absent for ms-ode
  ModelDocument doc;
};

/// Fit the given method on a dataset. The anchor defaults to the origin
/// with the benchmark's true H(0) (zero for all three systems).
FittedRun fit_method(const std::string& method, const TrajectoryDataset& data,
                     const BenchmarkSystem& system, const OptimizerConfig& opt);

/// Reinstantiates a serialized model against its dataset without refitting;
/// predictions reproduce the original run bit-for-bit.
FittedRun rebuild_from_doc(const ModelDocument& doc, const TrajectoryDataset& data);

}  // namespace msphs
