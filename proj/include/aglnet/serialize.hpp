#pragma once

// CSV/JSON persistence: trajectories, datasets (+sidecar), model bundles
// (network or dictionary), and per-run report lines. All CSV floats use
// %.17g so round trips are lossless.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aglnet/datagen.hpp"
#include "aglnet/dictionary.hpp"
#include "aglnet/dynamics.hpp"
#include "aglnet/network.hpp"
#include "aglnet/types.hpp"

namespace aglnet {

std::string fmt_g17(double v);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

// data CSV (x1..xd,y; raw units) plus a JSON sidecar holding scales, noise
// spec, seed, and true support.
void write_dataset(const std::string& csv_path, const std::string& sidecar_path,
                   const Dataset& ds, const NoiseSpec& noise);
Dataset read_dataset(const std::string& csv_path,
                     const std::string& sidecar_path);

// A fitted model with everything needed to predict in original units.
struct ModelBundle {
  std::string kind;  // "network" or "dictionary"
  // network
  Architecture arch;
  MlpParams params;
  int penalized_layer = 1;
  // dictionary
  int degree = 0;
  std::vector<std::vector<int>> exponents;  // support terms only
  VectorXr coefficients;                    // aligned with exponents
  VectorXr coefficients_raw;                // de-standardized units
  // common
  Scales scales;
  Real threshold = 1e-4;
  IndexSet support;

  // Predictions in original units for raw (unstandardized) inputs.
  VectorXr predict_raw(const MatrixXr& raw_X) const;
};

nlohmann::json model_to_json(const ModelBundle& mb);
ModelBundle model_from_json(const nlohmann::json& j);
void write_model(const std::string& path, const ModelBundle& mb);
ModelBundle read_model(const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace aglnet
