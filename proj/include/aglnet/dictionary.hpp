#pragma once

// Sparse monomial-dictionary regression baseline.
//
// Dictionary: all monomials of total degree ≤ `degree` over d variables in
// graded lexicographic order (grade 0 first; within a grade, exponent
// vectors in lexicographically decreasing order), P = C(d+degree, degree)
// columns, first column the constant 1.
//
// Solver: ISTA on (1/m)‖Φc − y‖² + λ‖c‖₁ from zero init with fixed step
// 1/L, L = (2/m)·λ_max(ΦᵀΦ) estimated by power iteration; iterations run on
// the cached Gram system (Gc − b), so the per-iteration cost is O(P²)
// independent of m. Afterwards entries |c| < threshold are zeroed, an
// ordinary-least-squares refit is done on the surviving support
// (minimum-norm and flagged when rank deficient), and the threshold is
// enforced once more on the refit values so the reported support stays
// consistent with the reported coefficients. On exactly representable
// targets the full-rank refit collapses spurious small lasso coefficients
// to ~0, so that final pass is what makes exact support recovery possible.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "aglnet/datagen.hpp"
#include "aglnet/errors.hpp"
#include "aglnet/rng.hpp"
#include "aglnet/types.hpp"

namespace aglnet {

struct Dictionary {
  int degree = 2;
  int d = 0;
  std::vector<std::vector<int>> exponents;  // P multi-indices over d variables
  MatrixXr phi;                             // m × P feature matrix

  Index terms() const { return static_cast<Index>(exponents.size()); }
  Index samples() const { return phi.rows(); }
};

namespace detail {

inline void gen_exponents(int d, int grade,
                          std::vector<std::vector<int>>& out) {
  std::vector<int> e(d, 0);
  // exponent of variable `var` chosen from high to low => lex-decreasing
  auto rec = [&](auto&& self, int var, int remaining) -> void {
    if (var == d - 1) {
      e[var] = remaining;
      out.push_back(e);
      e[var] = 0;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[var] = k;
      self(self, var + 1, remaining - k);
    }
    e[var] = 0;
  };
  rec(rec, 0, grade);
}

inline std::vector<std::vector<int>> all_exponents(int d, int degree) {
  std::vector<std::vector<int>> out;
  for (int g = 0; g <= degree; ++g) gen_exponents(d, g, out);
  return out;
}

}  // namespace detail

// Monomial feature columns for the given exponent rows, evaluated on X.
inline MatrixXr monomial_columns(const MatrixXr& X,
                                 const std::vector<std::vector<int>>& exps,
                                 const std::vector<int>& which) {
  MatrixXr out = MatrixXr::Ones(X.rows(), static_cast<Index>(which.size()));
  for (std::size_t c = 0; c < which.size(); ++c) {
    const auto& e = exps[which[c]];
    require(static_cast<Index>(e.size()) == X.cols(),
            "exponent row/data width mismatch");
    for (Index j = 0; j < X.cols(); ++j)
      for (int k = 0; k < e[j]; ++k)
        out.col(static_cast<Index>(c)).array() *= X.col(j).array();
  }
  return out;
}

inline Dictionary build_dictionary(
    const MatrixXr& X, int degree,
    std::size_t memory_budget_bytes = std::size_t(2) << 30) {
  if (degree < 1) throw InvalidConfigError("dictionary degree must be >= 1");
  if (X.rows() == 0 || X.cols() == 0)
    throw InvalidConfigError("dictionary needs nonempty data");
  Dictionary dict;
  dict.degree = degree;
  dict.d = static_cast<int>(X.cols());
  dict.exponents = detail::all_exponents(dict.d, degree);
  const std::size_t bytes =
      sizeof(Real) * static_cast<std::size_t>(X.rows()) * dict.exponents.size();
  if (bytes > memory_budget_bytes)
    throw ResourceLimitError("dictionary of " +
                             std::to_string(dict.exponents.size()) +
                             " terms x " + std::to_string(X.rows()) +
                             " samples exceeds the memory budget");
  std::vector<int> all(dict.exponents.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  dict.phi = monomial_columns(X, dict.exponents, all);
  return dict;
}

// Cached normal-equation pieces: G = ΦᵀΦ, b = Φᵀy, and the ISTA step.
struct DictGram {
  MatrixXr G;
  VectorXr b;
  Real yty = 0.0;
  Index m = 0;
  Real step = 0.0;      // 1/L
  Real gram_norm = 0.0; // λ_max(G) estimate
};

inline DictGram make_gram(const Dictionary& dict, const VectorXr& y,
                          long power_iters = 200) {
  require(dict.phi.rows() == y.size(), "dictionary/label length mismatch");
  DictGram g;
  g.m = dict.phi.rows();
  g.G.resize(dict.terms(), dict.terms());
  g.G.setZero();
  g.G.selfadjointView<Eigen::Lower>().rankUpdate(dict.phi.transpose());
  g.G = MatrixXr(g.G.selfadjointView<Eigen::Lower>());  // mirror to full
  g.b.noalias() = dict.phi.transpose() * y;
  g.yty = y.squaredNorm();

  // power iteration for λ_max(G); 1% safety margin on the step
  RandomStream rs(derive_key({hash_tag("dict_power_iteration")}));
  VectorXr v(dict.terms());
  for (Index i = 0; i < v.size(); ++i) v[i] = rs.normal();
  v.normalize();
  VectorXr gv(v.size());
  Real eig = 0.0;
  for (long it = 0; it < power_iters; ++it) {
    gv.noalias() = g.G * v;
    const Real n = gv.norm();
    if (n == 0.0) break;  // G = 0 (all-zero dictionary cannot occur: constant column)
    v = gv / n;
    eig = n;
  }
  g.gram_norm = eig;
  const Real lipschitz =
      (2.0 / static_cast<Real>(g.m)) * g.gram_norm * 1.01;
  require(lipschitz > 0.0, "nonpositive Lipschitz estimate");
  g.step = 1.0 / lipschitz;
  return g;
}

// Raw ISTA iterate (before truncation/refit), zero-initialized.
inline VectorXr ista(const DictGram& g, Real lambda, long iterations) {
  if (lambda < 0.0) throw InvalidConfigError("lambda must be nonnegative");
  const Real cut = g.step * lambda;
  VectorXr c = VectorXr::Zero(g.b.size());
  VectorXr grad(g.b.size());
  const Real two_over_m = 2.0 / static_cast<Real>(g.m);
  for (long it = 0; it < iterations; ++it) {
    grad.noalias() = g.G * c;
    grad -= g.b;
    c -= g.step * two_over_m * grad;
    if (cut > 0.0)
      c = c.unaryExpr([cut](Real v) {
        return v > cut ? v - cut : (v < -cut ? v + cut : 0.0);
      });
  }
  return c;
}

struct SparseCoefficients {
  VectorXr c;                // length P, refit values on the support
  Real lambda = 0.0;
  std::vector<int> support;  // 0-based term indices surviving truncation
  Real threshold = 1e-4;
  bool rank_deficient = false;
  Real train_mse = 0.0;      // (1/m)‖Φ_S c_S − y‖² after refit
};

struct LassoOptions {
  long iterations = 20000;
  Real threshold = 1e-4;
  long power_iters = 200;
};

// Full solve against a prebuilt Gram cache (the Gram must belong to `dict`).
inline SparseCoefficients sparse_solve(const Dictionary& dict,
                                       const DictGram& gram, const VectorXr& y,
                                       Real lambda,
                                       const LassoOptions& opts = {}) {
  require(gram.b.size() == dict.terms(), "gram/dictionary size mismatch");
  require(dict.phi.rows() == y.size(), "dictionary/label length mismatch");
  SparseCoefficients sc;
  sc.lambda = lambda;
  sc.threshold = opts.threshold;

  VectorXr raw = ista(gram, lambda, opts.iterations);
  std::vector<int> kept;
  for (Index p = 0; p < raw.size(); ++p)
    if (std::abs(raw[p]) >= opts.threshold) kept.push_back(static_cast<int>(p));

  sc.c = VectorXr::Zero(dict.terms());
  if (!kept.empty()) {
    MatrixXr phi_s(dict.phi.rows(), static_cast<Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k)
      phi_s.col(static_cast<Index>(k)) = dict.phi.col(kept[k]);

    Eigen::CompleteOrthogonalDecomposition<MatrixXr> cod(phi_s);
    const VectorXr cs = cod.solve(y);  // minimum-norm when rank deficient
    sc.rank_deficient = cod.rank() < static_cast<Index>(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const Real v = cs[static_cast<Index>(k)];
      if (std::abs(v) >= opts.threshold) {
        sc.c[kept[k]] = v;
        sc.support.push_back(kept[k]);
      }
    }
  }

  VectorXr resid = y;
  for (int p : sc.support) resid -= sc.c[p] * dict.phi.col(p);
  sc.train_mse = resid.squaredNorm() / static_cast<Real>(y.size());
  return sc;
}

inline SparseCoefficients sparse_solve(const Dictionary& dict,
                                       const VectorXr& y, Real lambda,
                                       const LassoOptions& opts = {}) {
  return sparse_solve(dict, make_gram(dict, y, opts.power_iters), y, lambda,
                      opts);
}

// Union of 1-based variables appearing in any surviving term (the constant
// contributes none).
inline IndexSet dict_support_variables(const SparseCoefficients& sc,
                                       const Dictionary& dict) {
  IndexSet vars;
  for (int p : sc.support) {
    const auto& e = dict.exponents[p];
    for (int j = 0; j < dict.d; ++j)
      if (e[j] > 0) vars.insert(j + 1);
  }
  return vars;
}

// Coefficients in original units: the standardized model Σ c_t Π(x_j/σ_j)^e
// scaled by α becomes Σ [α c_t / Π σ_j^e] Π x_j^e.
inline VectorXr destandardize_coefficients(const SparseCoefficients& sc,
                                           const Dictionary& dict,
                                           const Scales& scales) {
  require(scales.sigma_j.size() == dict.d, "scale/dictionary width mismatch");
  VectorXr out = VectorXr::Zero(sc.c.size());
  for (int p : sc.support) {
    Real denom = 1.0;
    const auto& e = dict.exponents[p];
    for (int j = 0; j < dict.d; ++j)
      for (int k = 0; k < e[j]; ++k) denom *= scales.sigma_j[j];
    out[p] = scales.alpha * sc.c[p] / denom;
  }
  return out;
}

}  // namespace aglnet
