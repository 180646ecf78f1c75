#pragma once

// Experiment orchestration: JSON configs, seeded replication, the four
// competing methods, λ sweeps, aggregation, and table/figure-data emission.
//
// Seed scheme (all streams derive from base_seed via key hashing):
//   dataset noise, replicate r:        (base_seed, r, "shared", "noise")
//   initial-state jitter (optional):   (base_seed, r, "shared", "x0_jitter")
//   Adam init, replicate r, method M:  (base_seed, r, M, "adam_init")
//   prox init, r, M, grid point λ:     (base_seed, r, M, "prox_init", bits(λ))
// so adding or removing a method never perturbs another method's draws, the
// shared dataset is identical across methods within a replicate, and per-λ
// fits are independent of grid order.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aglnet/datagen.hpp"
#include "aglnet/network.hpp"
#include "aglnet/selection.hpp"
#include "aglnet/serialize.hpp"
#include "aglnet/types.hpp"

namespace aglnet {

enum class Method { adaptive_gl, group_lasso, plain_nn, dictionary };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

enum class DofMode { selected_plus_dense, selected_groups };

struct GridSpec {
  std::vector<Real> values;  // explicit values win over the log-spaced spec
  int count = 25;
  Real min = 1e-5;
  Real max = 1e1;

  LambdaGrid build() const;
};

struct ExperimentConfig {
  std::string name = "experiment";

  // target
  TargetId target_id = TargetId::lorenz_rhs;
  int target_k = 25;
  std::uint64_t combo_seed = 1;  // linear_combo matrix seed (base-seed independent)

  // data generation
  OdeConfig ode;       // x0 filled with default_x0(dim) when left empty
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  TimeWindow train_window{0.0, 80.0};
  TimeWindow test_window{80.0, 100.0};
  std::optional<TimeWindow> noise_scale_window;  // default: train_window
  bool redraw_initial_state = false;  // jitter x0 and re-integrate per replicate

  // network + training
  int hidden_layers = 3;
  int width = 20;
  Activation first_activation = Activation::tanh;
  int penalized_layer = 1;
  Real learning_rate = 0.005;
  Real gamma = 0.005;
  Real threshold = 1e-4;
  long adam_iters = 10000;
  long prox_epochs = 5000;
  bool warm_start = false;

  // dictionary
  int dictionary_degree = 2;
  long ista_iters = 20000;

  // selection
  GridSpec lambda_grid;                  // network methods
  std::optional<GridSpec> dict_lambda_grid;  // defaults to lambda_grid
  DofMode dof_mode = DofMode::selected_plus_dense;

  // replication and execution
  std::vector<Method> methods{Method::adaptive_gl};
  int replicates = 1;
  std::uint64_t base_seed = 1;
  int workers = 1;
  std::string output_dir = "out";

  void validate() const;
  Architecture architecture() const;
  TargetFunction target() const;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct RunReport {
  Method method = Method::adaptive_gl;
  int replicate = 0;
  std::uint64_t seed = 0;  // the replicate's dataset noise seed
  Real sensitivity = std::numeric_limits<Real>::quiet_NaN();
  Real specificity = std::numeric_limits<Real>::quiet_NaN();
  Real rel_error = std::numeric_limits<Real>::quiet_NaN();
  Real lambda = std::numeric_limits<Real>::quiet_NaN();  // NaN: not applicable
  IndexSet support;
  bool ok = true;
  std::string error;

  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& j);
};

struct MethodSummary {
  Method method = Method::adaptive_gl;
  int replicates = 0;  // successful
  int excluded = 0;
  Real mean_sensitivity = 0, std_sensitivity = 0;
  Real mean_specificity = 0, std_specificity = 0;
  Real mean_rel_error = 0, std_rel_error = 0;
};

struct MethodCurve {
  Method method;
  VectorXr t, f_true, f_hat;  // replicate 0's model on the test window
};

struct ExperimentResult {
  std::vector<RunReport> reports;        // sorted by (method, replicate)
  std::vector<MethodSummary> summaries;  // sorted by method
  std::vector<MethodCurve> curves;
  // per (method, replicate) λ paths; empty for plain_nn
  std::map<std::pair<std::string, int>, std::vector<BicRecord>> paths;
  std::map<std::string, ModelBundle> models;  // replicate 0 per method
  std::map<std::pair<std::string, int>, double> wall_times;
};

// The replicate's trajectory: the shared one, or jittered when
// redraw_initial_state is set.
Trajectory experiment_trajectory(const ExperimentConfig& cfg, int replicate);

struct ReplicateData {
  Dataset train, test;
  std::uint64_t noise_seed = 0;
};

ReplicateData build_replicate_data(const ExperimentConfig& cfg,
                                   const Trajectory& traj, int replicate);

// One (method, replicate) cell: fit, sweep, select, score.
struct MethodRun {
  RunReport report;
  std::vector<BicRecord> path;  // empty for plain_nn
  ModelBundle model;
  VectorXr test_predictions;  // raw units
  double wall_seconds = 0;
};

MethodRun run_method(const ExperimentConfig& cfg, Method method, int replicate,
                     const Dataset& train, const Dataset& test,
                     std::uint64_t noise_seed);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// summary.csv, runs.jsonl, curves.csv, timings.csv, paths/, models/
void emit_tables(const ExperimentResult& res, const ExperimentConfig& cfg,
                 const std::string& out_dir);

// Named presets for the shipped experiments.
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

std::uint64_t seed_for(std::uint64_t base, int replicate,
                       const std::string& method, const std::string& purpose);

// BIC effective dof for a group-sparsified network with `s` selected groups
// in `pen_layer`: either s·(fan-out) alone, or plus every parameter of the
// unpenalized layers and all biases.
long dof_network(const Architecture& arch, int pen_layer, std::size_t s,
                 DofMode mode);

}  // namespace aglnet
