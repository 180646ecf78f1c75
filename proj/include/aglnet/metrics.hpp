#pragma once

// Variable-selection and prediction-quality metrics.
//
//   sensitivity = |selected ∩ truth| / |truth|
//   specificity = |unselected ∩ non-truth| / |non-truth|
//   relative test error = sqrt( Σ(f − f̂)² / Σ f² )  in original units.

#include <cmath>
#include <string>

#include "aglnet/errors.hpp"
#include "aglnet/types.hpp"

namespace aglnet {

struct SelectionReport {
  Real sensitivity = 0.0;
  Real specificity = 0.0;
  IndexSet selected;
  IndexSet truth;
};

inline SelectionReport selection_metrics(const IndexSet& selected,
                                         const IndexSet& truth, int d) {
  require(d >= 1, "dimension must be positive");
  for (int v : selected)
    require(v >= 1 && v <= d, "selected index out of range");
  for (int v : truth) require(v >= 1 && v <= d, "truth index out of range");
  if (truth.empty())
    throw UndefinedMetricError("sensitivity undefined for an empty truth set");
  if (static_cast<int>(truth.size()) == d)
    throw UndefinedMetricError(
        "specificity undefined when every variable is active");

  long tp = 0;
  for (int v : selected)
    if (truth.count(v)) ++tp;
  // true negatives: variables neither active nor selected
  long tn = 0;
  for (int v = 1; v <= d; ++v)
    if (!truth.count(v) && !selected.count(v)) ++tn;

  SelectionReport rep;
  rep.selected = selected;
  rep.truth = truth;
  rep.sensitivity = static_cast<Real>(tp) / static_cast<Real>(truth.size());
  rep.specificity =
      static_cast<Real>(tn) / static_cast<Real>(d - static_cast<int>(truth.size()));
  return rep;
}

template <class S>
S relative_test_error(const Vector<S>& f_true, const Vector<S>& f_hat) {
  require(f_true.size() == f_hat.size(), "prediction length mismatch");
  require(f_true.size() > 0, "relative error needs nonempty vectors");
  const S denom = f_true.squaredNorm();
  if (denom == S(0))
    throw UndefinedMetricError("relative error undefined for zero truth");
  return std::sqrt((f_true - f_hat).squaredNorm() / denom);
}

}  // namespace aglnet
