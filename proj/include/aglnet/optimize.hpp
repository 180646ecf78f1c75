#pragma once

// Training loops: full-batch Adam for the unpenalized initial estimator and
// the proximal-gradient loop for the group-penalized fits.
//
// Penalty on layer ℓ:  R(W_ℓ) = λ Σ_j w_j ‖W_ℓ[:,j]‖  with per-column
// multipliers w_j (adaptive: w_j = 1/‖W̃_ℓ[:,j]‖² from the initial
// estimator; all-ones gives the plain group-Lasso baseline). One proximal
// epoch is a gradient step of size γ on every parameter followed by the
// closed-form prox on the penalized layer only:
//   col_j ← max(0, ‖col_j‖ − λγw_j) · col_j/‖col_j‖.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "aglnet/datagen.hpp"
#include "aglnet/errors.hpp"
#include "aglnet/network.hpp"
#include "aglnet/types.hpp"

namespace aglnet {

template <class S>
struct AdamStateT {
  LayerStack<S> m, v;  // first/second moment accumulators
  long step = 0;
  S lr = S(0.005);
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);

  static AdamStateT shaped(const Architecture& arch, S lr = S(0.005)) {
    AdamStateT st;
    st.m = LayerStack<S>::shaped(arch);
    st.v = LayerStack<S>::shaped(arch);
    st.lr = lr;
    return st;
  }
};
using AdamState = AdamStateT<Real>;

// Standard bias-corrected Adam update, applied in place.
template <class S>
void adam_step(LayerStack<S>& params, const LayerStack<S>& grads,
               AdamStateT<S>& state) {
  require(params.layers() == grads.layers() &&
              params.layers() == state.m.layers(),
          "adam state/parameter shape mismatch");
  state.step += 1;
  const S c1 = S(1) - std::pow(state.beta1, static_cast<S>(state.step));
  const S c2 = S(1) - std::pow(state.beta2, static_cast<S>(state.step));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m.array() = state.beta1 * m.array() + (S(1) - state.beta1) * g.array();
    v.array() =
        state.beta2 * v.array() + (S(1) - state.beta2) * g.array().square();
    p.array() -=
        state.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
  };
  for (int l = 0; l < params.layers(); ++l) {
    update(params.weights[l], grads.weights[l], state.m.weights[l],
           state.v.weights[l]);
    update(params.biases[l], grads.biases[l], state.m.biases[l],
           state.v.biases[l]);
  }
}

template <class S>
struct InitialFitT {
  LayerStack<S> params;
  std::vector<S> loss_trace;  // loss before each iteration, plus final
};
using InitialFit = InitialFitT<Real>;

// Full-batch Adam from a fresh fan-balanced initialization.
template <class S>
InitialFitT<S> fit_initial(const Architecture& arch, const Matrix<S>& X,
                           const Vector<S>& y, long iter_max,
                           std::uint64_t seed, S lr = S(0.005)) {
  if (iter_max < 0) throw InvalidConfigError("iteration budget must be >= 0");
  InitialFitT<S> fit;
  fit.params = init_params<S>(arch, seed);
  if (iter_max == 0) return fit;

  MlpWorkspace<S> ws(arch, X);
  auto grads = LayerStack<S>::shaped(arch);
  auto state = AdamStateT<S>::shaped(arch, lr);
  fit.loss_trace.reserve(iter_max + 1);
  for (long it = 0; it < iter_max; ++it) {
    const S loss = ws.loss_and_gradient(fit.params, y, grads);
    if (!std::isfinite(loss))
      throw DivergenceError("non-finite loss in initial fit", it);
    fit.loss_trace.push_back(loss);
    adam_step(fit.params, grads, state);
  }
  const S final_loss = ws.loss(fit.params, y);
  if (!std::isfinite(final_loss))
    throw DivergenceError("non-finite loss in initial fit", iter_max);
  fit.loss_trace.push_back(final_loss);
  return fit;
}

template <class S>
InitialFitT<S> fit_initial(const Architecture& arch, const Dataset& data,
                           long iter_max, std::uint64_t seed, S lr = S(0.005)) {
  return fit_initial<S>(arch, data.X, data.y, iter_max, seed, lr);
}

// Per-column multipliers w_j = 1/‖W̃_ℓ[:,j]‖²; columns of the initial
// estimator with norm below 1e-12 get w_j = +inf (pre-eliminated).
template <class S>
Vector<S> make_adaptive_weights(const LayerStack<S>& initial,
                                int penalized_layer) {
  require(penalized_layer >= 1 && penalized_layer <= initial.layers(),
          "penalized layer out of range");
  const Matrix<S>& W = initial.weights[penalized_layer - 1];
  Vector<S> w(W.cols());
  for (Index j = 0; j < W.cols(); ++j) {
    const S n = W.col(j).norm();
    w[j] = (n < S(1e-12)) ? std::numeric_limits<S>::infinity()
                          : S(1) / (n * n);
  }
  return w;
}

// Closed-form proximal map of γ·λ·Σ_j w_j‖col_j‖. λ = 0 is the exact
// identity; an infinite w_j (with λ > 0) zeroes its column.
template <class S>
Matrix<S> group_prox(const Matrix<S>& W, const Vector<S>& w, S lambda,
                     S gamma) {
  require(w.size() == W.cols(), "one prox weight per column required");
  require(gamma > S(0), "prox step size must be positive");
  require(lambda >= S(0), "penalty level must be nonnegative");
  if (lambda == S(0)) return W;
  Matrix<S> out(W.rows(), W.cols());
  for (Index j = 0; j < W.cols(); ++j) {
    const S norm = W.col(j).norm();
    const S cut = lambda * gamma * w[j];
    if (norm <= cut || norm == S(0)) {  // includes the inf-w_j case
      out.col(j).setZero();
    } else {
      out.col(j) = ((norm - cut) / norm) * W.col(j);
    }
  }
  return out;
}

struct ProxConfig {
  Real lambda = 0.0;
  Real gamma = 0.005;        // proximal-gradient step size
  int penalized_layer = 1;   // 1 (input selection) or 2 (combo selection)
  VectorXr weights;          // per-column multipliers; empty means all ones
  long epoch_max = 5000;
  Real threshold = 1e-4;     // final hard truncation
  bool warm_start = false;   // start from `initial` instead of a fresh init

  void validate() const {
    if (lambda < 0.0) throw InvalidConfigError("lambda must be nonnegative");
    if (!(gamma > 0.0)) throw InvalidConfigError("gamma must be positive");
    if (penalized_layer != 1 && penalized_layer != 2)
      throw InvalidConfigError("penalized layer must be 1 or 2");
    if (epoch_max < 0) throw InvalidConfigError("epoch budget must be >= 0");
    if (threshold < 0.0)
      throw InvalidConfigError("truncation threshold must be nonnegative");
  }
};

struct FitResult {
  MlpParams params;             // truncated at cfg.threshold
  IndexSet support;             // extract_support(params, layer, threshold)
  std::vector<Real> objective_trace;  // loss + penalty per epoch, plus final
  Real lambda = 0.0;
  Real gamma_used = 0.0;        // after any divergence retry
  bool retried = false;
};

namespace detail {

inline Real group_penalty(const MatrixXr& W, const VectorXr& w, Real lambda) {
  if (lambda == 0.0) return 0.0;
  Real r = 0.0;
  for (Index j = 0; j < W.cols(); ++j) {
    const Real n = W.col(j).norm();
    if (n > 0.0) r += w[j] * n;  // zero columns contribute 0 even for w = inf
  }
  return lambda * r;
}

}  // namespace detail

// Proximal-gradient loop (gradient step on all parameters, prox on the
// penalized layer). Fresh seeded re-initialization unless cfg.warm_start;
// one automatic retry at γ/5 on divergence. Biases are never shrunk.
inline FitResult fit_penalized(const Architecture& arch, const Dataset& data,
                               const MlpParams& initial, const ProxConfig& cfg,
                               std::uint64_t seed) {
  cfg.validate();
  arch.validate();
  const Index cols = arch.layer_dims[cfg.penalized_layer - 1];
  VectorXr w = cfg.weights;
  if (w.size() == 0) w = VectorXr::Ones(cols);
  require(w.size() == cols, "adaptive weight length mismatch");

  MlpWorkspace<Real> ws(arch, data.X);
  auto grads = LayerStack<Real>::shaped(arch);

  auto run = [&](Real gamma, FitResult& fr) -> bool {
    fr.params = cfg.warm_start ? initial : init_params<Real>(arch, seed);
    check_shapes(fr.params, arch);
    MatrixXr& Wpen = fr.params.weights[cfg.penalized_layer - 1];
    if (cfg.lambda > 0.0) {  // pre-eliminated columns start (and stay) zero
      for (Index j = 0; j < cols; ++j)
        if (std::isinf(w[j])) Wpen.col(j).setZero();
    }
    fr.objective_trace.clear();
    fr.objective_trace.reserve(cfg.epoch_max + 1);
    for (long epoch = 0; epoch < cfg.epoch_max; ++epoch) {
      const Real loss = ws.loss_and_gradient(fr.params, data.y, grads);
      const Real obj = loss + detail::group_penalty(Wpen, w, cfg.lambda);
      if (!std::isfinite(obj)) return false;
      fr.objective_trace.push_back(obj);
      for (int l = 0; l < fr.params.layers(); ++l) {
        fr.params.weights[l] -= gamma * grads.weights[l];
        fr.params.biases[l] -= gamma * grads.biases[l];
      }
      if (cfg.lambda > 0.0) Wpen = group_prox(Wpen, w, cfg.lambda, gamma);
    }
    const Real final_obj =
        ws.loss(fr.params, data.y) + detail::group_penalty(Wpen, w, cfg.lambda);
    if (!std::isfinite(final_obj)) return false;
    fr.objective_trace.push_back(final_obj);
    return true;
  };

  FitResult fr;
  fr.lambda = cfg.lambda;
  fr.gamma_used = cfg.gamma;
  if (!run(cfg.gamma, fr)) {
    fr.retried = true;
    fr.gamma_used = cfg.gamma / 5.0;
    if (!run(fr.gamma_used, fr)) {
      throw DivergenceError(
          "penalized fit diverged at gamma and gamma/5",
          static_cast<long>(fr.objective_trace.size()));
    }
  }
  truncate_params(fr.params, cfg.threshold);
  fr.support =
      extract_support(fr.params, cfg.penalized_layer, cfg.threshold);
  return fr;
}

}  // namespace aglnet
