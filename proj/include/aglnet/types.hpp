#pragma once

// Common dense-algebra aliases and small shared vocabulary types.
// Everything numerical is templated on the scalar; Real is the default
// working precision used by the harness.

#include <Eigen/Dense>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace aglnet {

using Real = double;

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using ArrayX = Eigen::Array<S, Eigen::Dynamic, 1>;

using MatrixXr = Matrix<Real>;
using VectorXr = Vector<Real>;
using Index = Eigen::Index;

// 1-based variable indices, kept sorted and unique.
using IndexSet = std::set<int>;

inline std::string index_set_to_string(const IndexSet& s, char sep = ';') {
  std::string out;
  for (int v : s) {
    if (!out.empty()) out.push_back(sep);
    out += std::to_string(v);
  }
  return out;
}

}  // namespace aglnet
