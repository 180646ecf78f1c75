#pragma once

// Dense feed-forward regression network with tanh hidden activations
// (optionally identity on the first layer), exact reverse-mode gradients of
// the mean-squared loss, and support extraction from penalized-layer column
// norms. Weight matrix of layer ℓ has shape dims[ℓ] × dims[ℓ−1] (1-based ℓ),
// so column j of a layer collects the weights fed by input/unit j.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aglnet/errors.hpp"
#include "aglnet/rng.hpp"
#include "aglnet/types.hpp"

namespace aglnet {

enum class Activation { tanh, identity };

struct Architecture {
  std::vector<int> layer_dims;  // [d, H, ..., H, 1], length L+1
  Activation first_activation = Activation::tanh;

  int num_layers() const { return static_cast<int>(layer_dims.size()) - 1; }
  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }

  void validate() const {
    if (num_layers() < 2)
      throw InvalidConfigError("network needs at least 2 layers");
    for (int d : layer_dims)
      if (d <= 0) throw InvalidConfigError("layer dimensions must be positive");
    if (layer_dims.back() != 1)
      throw InvalidConfigError("network output dimension must be 1");
  }

  // [d, H, ..., H, 1] with `hidden` hidden layers of width H.
  static Architecture mlp(int d, int hidden, int width,
                          Activation first = Activation::tanh) {
    Architecture a;
    a.layer_dims.push_back(d);
    for (int i = 0; i < hidden; ++i) a.layer_dims.push_back(width);
    a.layer_dims.push_back(1);
    a.first_activation = first;
    a.validate();
    return a;
  }

  long parameter_count() const {
    long n = 0;
    for (int l = 0; l + 1 < static_cast<int>(layer_dims.size()); ++l)
      n += static_cast<long>(layer_dims[l]) * layer_dims[l + 1] +
           layer_dims[l + 1];
    return n;
  }
};

// Per-layer weights/biases; doubles as the gradient container.
template <class S>
struct LayerStack {
  std::vector<Matrix<S>> weights;  // layer l (0-based): dims[l+1] × dims[l]
  std::vector<Vector<S>> biases;   // layer l: dims[l+1]

  int layers() const { return static_cast<int>(weights.size()); }

  void set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }

  static LayerStack shaped(const Architecture& arch) {
    LayerStack s;
    const int L = arch.num_layers();
    s.weights.reserve(L);
    s.biases.reserve(L);
    for (int l = 0; l < L; ++l) {
      s.weights.emplace_back(
          Matrix<S>::Zero(arch.layer_dims[l + 1], arch.layer_dims[l]));
      s.biases.emplace_back(Vector<S>::Zero(arch.layer_dims[l + 1]));
    }
    return s;
  }

  bool all_finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }
};

template <class S>
using MlpParamsT = LayerStack<S>;
using MlpParams = LayerStack<Real>;
using Gradients = LayerStack<Real>;

template <class S>
void check_shapes(const LayerStack<S>& p, const Architecture& arch) {
  require(p.layers() == arch.num_layers(), "layer count mismatch");
  for (int l = 0; l < p.layers(); ++l) {
    require(p.weights[l].rows() == arch.layer_dims[l + 1] &&
                p.weights[l].cols() == arch.layer_dims[l],
            "weight shape mismatch at layer " + std::to_string(l + 1));
    require(p.biases[l].size() == arch.layer_dims[l + 1],
            "bias shape mismatch at layer " + std::to_string(l + 1));
  }
}

// Fan-balanced uniform weights on ±sqrt(6/(fan_in+fan_out)), zero biases.
// Entries are drawn in storage (column-major) order, layer by layer.
template <class S = Real>
LayerStack<S> init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  auto p = LayerStack<S>::shaped(arch);
  RandomStream rs(derive_key({seed, hash_tag("mlp_init")}));
  for (int l = 0; l < p.layers(); ++l) {
    const double fan_in = arch.layer_dims[l];
    const double fan_out = arch.layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Matrix<S>& W = p.weights[l];
    for (Index j = 0; j < W.cols(); ++j)
      for (Index i = 0; i < W.rows(); ++i)
        W(i, j) = static_cast<S>(rs.uniform(-bound, bound));
  }
  return p;
}

namespace detail {

// Elementwise tanh; the double overload routes through a vectorizable exp:
// tanh(z) = sign(z)·(1−t)/(1+t) with t = exp(−2|z|).
template <class S>
inline void tanh_inplace(Matrix<S>& Z, Matrix<S>&) {
  Z = Z.array().tanh().matrix();
}

inline void tanh_inplace(Matrix<double>& Z, Matrix<double>& scratch) {
  scratch.resize(Z.rows(), Z.cols());
  scratch.array() = (-2.0 * Z.array().abs()).exp();
  Z.array() = Z.array().sign() * (1.0 - scratch.array()) /
              (1.0 + scratch.array());
}

}  // namespace detail

// Owns the per-layer forward/backward buffers for one (arch, X) pair so the
// training loop allocates nothing per iteration.
template <class S>
class MlpWorkspace {
 public:
  MlpWorkspace(Architecture arch, const Matrix<S>& X)
      : arch_(std::move(arch)), Xt_(X.transpose()) {
    arch_.validate();
    if (X.rows() == 0) throw InvalidConfigError("empty data matrix");
    require(X.cols() == arch_.input_dim(), "data/architecture width mismatch");
    const int L = arch_.num_layers();
    const Index m = X.rows();
    act_.reserve(L);
    delta_.reserve(L);
    for (int l = 0; l < L; ++l) {
      act_.emplace_back(arch_.layer_dims[l + 1], m);
      delta_.emplace_back(arch_.layer_dims[l + 1], m);
    }
  }

  const Architecture& arch() const { return arch_; }
  Index samples() const { return Xt_.cols(); }

  const Vector<S>& forward(const LayerStack<S>& p) {
    check_shapes(p, arch_);
    const int L = arch_.num_layers();
    const Matrix<S>* prev = &Xt_;
    for (int l = 0; l < L; ++l) {
      act_[l].noalias() = p.weights[l] * (*prev);
      act_[l].colwise() += p.biases[l];
      if (l + 1 < L && !(l == 0 && arch_.first_activation == Activation::identity))
        detail::tanh_inplace(act_[l], scratch_);
      prev = &act_[l];
    }
    preds_ = act_[L - 1].row(0).transpose();
    return preds_;
  }

  S loss(const LayerStack<S>& p, const Vector<S>& y) {
    require(y.size() == samples(), "label length mismatch");
    forward(p);
    return (preds_ - y).squaredNorm() / static_cast<S>(samples());
  }

  // Mean-squared loss and its exact gradient in one reverse sweep.
  S loss_and_gradient(const LayerStack<S>& p, const Vector<S>& y,
                      LayerStack<S>& grad) {
    require(y.size() == samples(), "label length mismatch");
    check_shapes(grad, arch_);
    forward(p);
    const int L = arch_.num_layers();
    const S m = static_cast<S>(samples());
    const S loss = (preds_ - y).squaredNorm() / m;

    delta_[L - 1].row(0) = (S(2) / m) * (preds_ - y).transpose();
    for (int l = L - 1; l >= 0; --l) {
      const Matrix<S>& below = (l == 0) ? Xt_ : act_[l - 1];
      grad.weights[l].noalias() = delta_[l] * below.transpose();
      grad.biases[l] = delta_[l].rowwise().sum();
      if (l > 0) {
        delta_[l - 1].noalias() = p.weights[l].transpose() * delta_[l];
        if (!(l - 1 == 0 && arch_.first_activation == Activation::identity))
          delta_[l - 1].array() *= S(1) - act_[l - 1].array().square();
      }
    }
    return loss;
  }

  const Vector<S>& predictions() const { return preds_; }

 private:
  Architecture arch_;
  Matrix<S> Xt_;  // d × m
  std::vector<Matrix<S>> act_;
  std::vector<Matrix<S>> delta_;
  Matrix<S> scratch_;
  Vector<S> preds_;
};

template <class S>
Vector<S> forward(const LayerStack<S>& p, const Architecture& arch,
                  const Matrix<S>& X) {
  MlpWorkspace<S> ws(arch, X);
  return ws.forward(p);
}

template <class S>
S loss_mse(const LayerStack<S>& p, const Architecture& arch, const Matrix<S>& X,
           const Vector<S>& y) {
  MlpWorkspace<S> ws(arch, X);
  return ws.loss(p, y);
}

template <class S>
LayerStack<S> backward(const LayerStack<S>& p, const Architecture& arch,
                       const Matrix<S>& X, const Vector<S>& y) {
  MlpWorkspace<S> ws(arch, X);
  auto grad = LayerStack<S>::shaped(arch);
  ws.loss_and_gradient(p, y, grad);
  return grad;
}

// Column indices (1-based) of the penalized layer whose norm survives after
// zeroing entries with |w| < threshold.
template <class S>
IndexSet extract_support(const LayerStack<S>& p, int penalized_layer,
                         S threshold) {
  require(penalized_layer == 1 || penalized_layer == 2,
          "penalized layer must be 1 or 2");
  require(threshold >= S(0), "threshold must be nonnegative");
  require(penalized_layer <= p.layers(), "penalized layer out of range");
  const Matrix<S>& W = p.weights[penalized_layer - 1];
  IndexSet support;
  for (Index j = 0; j < W.cols(); ++j) {
    S norm2 = 0;
    for (Index i = 0; i < W.rows(); ++i) {
      const S v = W(i, j);
      if (std::abs(v) >= threshold) norm2 += v * v;
    }
    if (norm2 > S(0)) support.insert(static_cast<int>(j + 1));
  }
  return support;
}

// Zero every weight/bias entry with magnitude below the threshold.
template <class S>
void truncate_params(LayerStack<S>& p, S threshold) {
  auto cut = [threshold](S v) { return std::abs(v) < threshold ? S(0) : v; };
  for (auto& w : p.weights) w = w.unaryExpr(cut);
  for (auto& b : p.biases) b = b.unaryExpr(cut);
}

}  // namespace aglnet
