#pragma once

// Target functions, noise injection, and the standardization preprocessing
// that turns an integrated trajectory into train/test regression datasets.
//
// Noise model: x_i = x̃(t_i) + ε_x·M_x, y_i = f(x̃(t_i)) + ε_y·M_y, where
// ε_x ~ N(0, σ_x² I_d), ε_y ~ N(0, σ_y²), M_x is the max absolute entry of
// the noiseless states over the scale window (default: the data window) and
// M_y the max absolute noiseless output there. Output noise is added to the
// clean signal; noisy inputs are never fed through f. Standardization
// divides each input column by its sample standard deviation σ_j and the
// output by its sample standard deviation α (no centering).

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "aglnet/dynamics.hpp"
#include "aglnet/errors.hpp"
#include "aglnet/rng.hpp"
#include "aglnet/types.hpp"

namespace aglnet {

// x^(p/q), q odd, via the sign-preserving real q-th root raised to p.
inline double frac_pow(double x, int p, int q) {
  const double root = std::copysign(std::pow(std::abs(x), 1.0 / q), x);
  return std::pow(root, p);
}

enum class TargetId { lorenz_rhs, setting1, setting2, setting3, linear_combo };

std::string to_string(TargetId id);

struct TargetFunction {
  TargetId id = TargetId::lorenz_rhs;
  int dim = 40;            // ambient input dimension
  int k = 25;              // 1-based component index (lorenz_rhs only)
  double forcing = 8.0;    // additive constant F (lorenz_rhs only)
  MatrixXr combo_matrix;   // rows × dim (linear_combo only)
  IndexSet true_support;   // empty marker for linear_combo

  // Component k of the cyclic quadratic field: -x_{k-2}x_{k-1} + x_{k-1}x_{k+1} - x_k + F.
  static TargetFunction lorenz_rhs(int k, int dim, double forcing = 8.0);
  // The three fixed nonlinear benchmarks on variables {16,17,18,19}.
  static TargetFunction nonpoly(int which, int dim = 40);
  // f(x) = g(Ax), g(z) = (z4 - z1)z2 - z3 + 8, A seeded i.i.d. N(0,1),
  // drawn row-major. true_support is left empty (no sparse ground truth).
  static TargetFunction linear_combo(int rows, int dim, std::uint64_t seed);
};

double evaluate_target(const TargetFunction& tf, const VectorXr& x);

struct NoiseSpec {
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (sigma_x < 0.0 || sigma_y < 0.0)
      throw InvalidConfigError("noise levels must be nonnegative");
  }
};

struct Scales {
  VectorXr sigma_j;   // per input column
  double alpha = 1.0; // output
};

// Half-open time window (t_begin, t_end]: with t_i = t0 + i·dt this selects
// indices i with t_begin < t_i ≤ t_end, e.g. (0,80] -> 8000 samples at dt 0.01.
struct TimeWindow {
  double t_begin = 0.0;
  double t_end = 0.0;
};

struct Dataset {
  MatrixXr X;            // m × d, standardized
  VectorXr y;            // m, standardized
  Scales scales;
  IndexSet true_support;
  MatrixXr raw_X;        // pre-standardization (noisy for train sets)
  VectorXr raw_y;
  VectorXr times;        // sample times, for diagnostics/curves

  Index samples() const { return X.rows(); }
  Index dim() const { return X.cols(); }
};

namespace detail {

// Index range [i_lo, i_hi] of trajectory rows inside the half-open window.
inline std::pair<long, long> window_rows(const Trajectory& traj,
                                         const TimeWindow& w) {
  if (traj.samples() < 2)
    throw InvalidConfigError("trajectory has fewer than two samples");
  const double t0 = traj.times[0];
  const double dt = traj.times[1] - traj.times[0];
  const long n = traj.samples() - 1;
  const long i_lo =
      static_cast<long>(std::floor((w.t_begin - t0) / dt + 1e-9)) + 1;
  const long i_hi = static_cast<long>(std::floor((w.t_end - t0) / dt + 1e-9));
  if (i_lo < 0 || i_hi > n)
    throw InvalidConfigError("requested window exceeds the trajectory span");
  if (i_hi < i_lo) throw InvalidConfigError("requested time window is empty");
  return {i_lo, i_hi};
}

inline double sample_std(const VectorXr& v) {
  const Index n = v.size();
  if (n < 2) throw DegenerateDataError("sample std needs at least 2 values");
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() /
                   static_cast<double>(n - 1));
}

}  // namespace detail

inline double evaluate_target(const TargetFunction& tf, const VectorXr& x) {
  require(x.size() == tf.dim, "target evaluated at wrong dimension");
  auto at = [&](int j1) {  // 1-based cyclic access
    int j = ((j1 - 1) % tf.dim + tf.dim) % tf.dim;
    return x[j];
  };
  switch (tf.id) {
    case TargetId::lorenz_rhs:
      return -at(tf.k - 2) * at(tf.k - 1) + at(tf.k - 1) * at(tf.k + 1) -
             at(tf.k) + tf.forcing;
    case TargetId::setting1:
      return (frac_pow(at(19), 4, 3) - frac_pow(at(16), 4, 3)) *
                 frac_pow(at(17), 4, 3) -
             frac_pow(at(18), 4, 3) + 8.0;
    case TargetId::setting2:
      return (std::exp(at(19) / 50.0) - std::exp(at(16) / 50.0)) *
                 std::exp(at(17) / 50.0) -
             std::exp(at(18) / 50.0) + 8.0;
    case TargetId::setting3:
      return (std::exp(at(19) / 10.0) - frac_pow(at(16), 2, 3)) * at(17) -
             frac_pow(at(18), 4, 5) + 8.0;
    case TargetId::linear_combo: {
      require(tf.combo_matrix.cols() == tf.dim && tf.combo_matrix.rows() == 4,
              "combo matrix must be 4 × dim");
      VectorXr z = tf.combo_matrix * x;
      return (z[3] - z[0]) * z[1] - z[2] + 8.0;
    }
  }
  throw ContractViolation("unknown target id");
}

inline std::string to_string(TargetId id) {
  switch (id) {
    case TargetId::lorenz_rhs: return "lorenz_rhs";
    case TargetId::setting1: return "setting1";
    case TargetId::setting2: return "setting2";
    case TargetId::setting3: return "setting3";
    case TargetId::linear_combo: return "linear_combo";
  }
  return "?";
}

inline TargetFunction TargetFunction::lorenz_rhs(int k, int dim,
                                                 double forcing) {
  if (dim < 4) throw InvalidConfigError("lorenz_rhs target needs dim >= 4");
  if (k < 1 || k > dim)
    throw InvalidConfigError("rhs component index out of range");
  TargetFunction tf;
  tf.id = TargetId::lorenz_rhs;
  tf.dim = dim;
  tf.k = k;
  tf.forcing = forcing;
  auto wrap = [&](int j) { return ((j - 1) % dim + dim) % dim + 1; };
  for (int off : {-2, -1, 0, 1}) tf.true_support.insert(wrap(k + off));
  return tf;
}

inline TargetFunction TargetFunction::nonpoly(int which, int dim) {
  if (which < 1 || which > 3)
    throw InvalidConfigError("nonpoly setting must be 1, 2, or 3");
  if (dim < 19) throw InvalidConfigError("nonpoly targets need dim >= 19");
  TargetFunction tf;
  tf.id = which == 1   ? TargetId::setting1
          : which == 2 ? TargetId::setting2
                       : TargetId::setting3;
  tf.dim = dim;
  tf.true_support = {16, 17, 18, 19};
  return tf;
}

inline TargetFunction TargetFunction::linear_combo(int rows, int dim,
                                                   std::uint64_t seed) {
  if (rows != 4)
    throw InvalidConfigError("linear_combo target is defined for 4 rows");
  TargetFunction tf;
  tf.id = TargetId::linear_combo;
  tf.dim = dim;
  tf.combo_matrix.resize(rows, dim);
  RandomStream rs(derive_key({seed, hash_tag("combo_matrix")}));
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < dim; ++j) tf.combo_matrix(i, j) = rs.normal();
  return tf;
}

// Build the noisy, standardized training set from trajectory rows in `range`.
// Noise scales M_x, M_y are maxima over `scale_window` (defaults to `range`).
// The input-noise and output-noise streams are independently keyed off
// noise.seed; ε_x draws run row-major over (sample, coordinate).
inline Dataset make_dataset(const Trajectory& traj, const TargetFunction& tf,
                            const NoiseSpec& noise, const TimeWindow& range,
                            std::optional<TimeWindow> scale_window = {}) {
  noise.validate();
  require(traj.dim() == tf.dim, "trajectory/target dimension mismatch");
  const auto [i_lo, i_hi] = detail::window_rows(traj, range);
  const long m = i_hi - i_lo + 1;
  const Index d = traj.dim();

  Dataset ds;
  ds.true_support = tf.true_support;
  ds.times.resize(m);
  ds.raw_X.resize(m, d);
  ds.raw_y.resize(m);

  VectorXr clean_y(m);
  for (long r = 0; r < m; ++r) {
    ds.times[r] = traj.times[i_lo + r];
    clean_y[r] = evaluate_target(tf, traj.states.row(i_lo + r).transpose());
  }

  const auto [s_lo, s_hi] =
      detail::window_rows(traj, scale_window.value_or(range));
  double mx = 0.0, my = 0.0;
  for (long i = s_lo; i <= s_hi; ++i) {
    mx = std::max(mx, traj.states.row(i).cwiseAbs().maxCoeff());
    my = std::max(
        my, std::abs(evaluate_target(tf, traj.states.row(i).transpose())));
  }

  ds.raw_X = traj.states.middleRows(i_lo, m);
  if (noise.sigma_x > 0.0) {
    RandomStream xs(derive_key({noise.seed, hash_tag("x_noise")}));
    for (long r = 0; r < m; ++r)
      for (Index j = 0; j < d; ++j)
        ds.raw_X(r, j) += noise.sigma_x * mx * xs.normal();
  }
  ds.raw_y = clean_y;
  if (noise.sigma_y > 0.0) {
    RandomStream ys(derive_key({noise.seed, hash_tag("y_noise")}));
    for (long r = 0; r < m; ++r) ds.raw_y[r] += noise.sigma_y * my * ys.normal();
  }

  ds.scales.sigma_j.resize(d);
  for (Index j = 0; j < d; ++j) {
    const double s = detail::sample_std(ds.raw_X.col(j));
    if (!(s > 1e-12))
      throw DegenerateDataError("input column " + std::to_string(j + 1) +
                                " has (near-)zero variance");
    ds.scales.sigma_j[j] = s;
  }
  ds.scales.alpha = detail::sample_std(ds.raw_y);
  if (!(ds.scales.alpha > 1e-12))
    throw DegenerateDataError("output has (near-)zero variance");

  ds.X = ds.raw_X;
  for (Index j = 0; j < d; ++j) ds.X.col(j) /= ds.scales.sigma_j[j];
  ds.y = ds.raw_y / ds.scales.alpha;
  return ds;
}

// Noiseless test set on `range`, standardized with the TRAINING scales.
inline Dataset make_test_set(const Trajectory& traj, const TargetFunction& tf,
                             const Scales& train_scales,
                             const TimeWindow& range = {80.0, 100.0}) {
  require(traj.dim() == tf.dim, "trajectory/target dimension mismatch");
  require(train_scales.sigma_j.size() == traj.dim(),
          "training scales have wrong dimension");
  const auto [i_lo, i_hi] = detail::window_rows(traj, range);
  const long m = i_hi - i_lo + 1;

  Dataset ds;
  ds.true_support = tf.true_support;
  ds.scales = train_scales;
  ds.times.resize(m);
  ds.raw_X = traj.states.middleRows(i_lo, m);
  ds.raw_y.resize(m);
  for (long r = 0; r < m; ++r) {
    ds.times[r] = traj.times[i_lo + r];
    ds.raw_y[r] = evaluate_target(tf, traj.states.row(i_lo + r).transpose());
  }
  ds.X = ds.raw_X;
  for (Index j = 0; j < ds.X.cols(); ++j) ds.X.col(j) /= train_scales.sigma_j[j];
  ds.y = ds.raw_y / train_scales.alpha;
  return ds;
}

}  // namespace aglnet
