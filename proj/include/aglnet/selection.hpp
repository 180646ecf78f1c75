#pragma once

// Regularization-path sweep with BIC scoring.
//
// BIC = m·ln(mse) + dof·ln(m). The sweep floors the MSE at 1e-15 before
// scoring so that machine-precision fits on noiseless data compare by
// parameter count instead of by meaningless ln(ε) differences; BicRecord.bic
// stores this selection-consistent (always finite) value, while bic_score
// itself keeps the exact formula with a −inf sentinel at mse = 0. Ties break
// toward the larger λ (sparser model), and the grid is canonicalized to
// descending order internally, so grid permutations cannot change the choice.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aglnet/errors.hpp"
#include "aglnet/types.hpp"

namespace aglnet {

inline constexpr Real kBicMseFloor = 1e-15;

struct LambdaGrid {
  std::vector<Real> values;

  void validate() const {
    if (values.empty()) throw InvalidConfigError("lambda grid is empty");
    for (Real v : values)
      if (!(v > 0.0) || !std::isfinite(v))
        throw InvalidConfigError("lambda grid values must be positive finite");
    auto sorted = values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InvalidConfigError("lambda grid values must be distinct");
  }

  std::vector<Real> descending() const {
    auto sorted = values;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    return sorted;
  }

  // `count` log-spaced points from hi down to lo (inclusive).
  static LambdaGrid log_spaced(int count, Real lo, Real hi) {
    if (count < 1) throw InvalidConfigError("grid needs at least one point");
    if (!(lo > 0.0) || !(hi > lo))
      throw InvalidConfigError("grid bounds must satisfy 0 < lo < hi");
    LambdaGrid g;
    if (count == 1) {
      g.values.push_back(hi);
      return g;
    }
    const double la = std::log10(hi), lb = std::log10(lo);
    for (int i = 0; i < count; ++i)
      g.values.push_back(
          std::pow(10.0, la + (lb - la) * static_cast<double>(i) /
                                 static_cast<double>(count - 1)));
    return g;
  }

  static LambdaGrid standard() { return log_spaced(25, 1e-5, 1e1); }
};

// m·ln(mse) + dof·ln(m); mse = 0 yields the −inf sentinel.
inline Real bic_score(Real mse, long dof, long m) {
  require(m > 0, "bic needs a positive sample count");
  require(dof >= 0, "bic needs nonnegative dof");
  require(mse >= 0.0, "bic needs nonnegative mse");
  if (mse == 0.0) return -std::numeric_limits<Real>::infinity();
  return static_cast<Real>(m) * std::log(mse) +
         static_cast<Real>(dof) * std::log(static_cast<Real>(m));
}

struct BicRecord {
  Real lambda = 0.0;
  Real mse = std::numeric_limits<Real>::quiet_NaN();
  long dof = 0;
  Real bic = std::numeric_limits<Real>::quiet_NaN();
  std::size_t support_size = 0;
  IndexSet support;
  bool ok = false;
  std::string error;
};

// What a sweep fitter must return per λ.
template <class Model>
struct Scored {
  Real mse = 0.0;
  long dof = 0;
  IndexSet support;
  Model model;
};

template <class Model>
struct SweepResult {
  std::vector<BicRecord> records;                   // descending-λ order
  std::vector<std::optional<Scored<Model>>> models; // aligned with records
  std::size_t chosen_index = 0;
  Real chosen_lambda = 0.0;

  const Scored<Model>& chosen() const { return *models[chosen_index]; }
};

// Runs `fit(λ)` over the grid (descending), scores with BIC, picks the
// argmin; per-λ failures are recorded and skipped, and only if every λ fails
// does the sweep throw. `m` is the training sample count entering the BIC.
template <class Model, class Fitter>
SweepResult<Model> sweep(Fitter&& fit, const LambdaGrid& grid, long m) {
  grid.validate();
  require(m > 0, "sweep needs a positive sample count");
  SweepResult<Model> res;
  const auto lambdas = grid.descending();
  res.records.resize(lambdas.size());
  res.models.resize(lambdas.size());

  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    BicRecord& rec = res.records[i];
    rec.lambda = lambdas[i];
    try {
      Scored<Model> out = fit(lambdas[i]);
      rec.mse = out.mse;
      rec.dof = out.dof;
      rec.support = out.support;
      rec.support_size = out.support.size();
      rec.bic = bic_score(std::max(out.mse, kBicMseFloor), out.dof, m);
      rec.ok = true;
      res.models[i] = std::move(out);
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  }

  bool any = false;
  Real best = std::numeric_limits<Real>::infinity();
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    if (!res.records[i].ok) continue;
    if (!any || res.records[i].bic < best) {  // ties keep the larger λ
      any = true;
      best = res.records[i].bic;
      res.chosen_index = i;
      res.chosen_lambda = res.records[i].lambda;
    }
  }
  if (!any) {
    std::string msg = "every lambda in the sweep failed:";
    for (const auto& r : res.records)
      msg += "\n  lambda=" + std::to_string(r.lambda) + ": " + r.error;
    throw SweepError(msg);
  }
  return res;
}

}  // namespace aglnet
