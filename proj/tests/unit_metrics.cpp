#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "aglnet/metrics.hpp"
#include "aglnet/rng.hpp"

using namespace aglnet;

namespace {

// Scratch confusion-matrix oracle: classify every variable 1..d into one of
// the four cells, then form the two ratios directly.
struct Confusion {
  long tp = 0, fp = 0, tn = 0, fn = 0;
};

Confusion count_cells(const IndexSet& selected, const IndexSet& truth, int d) {
  Confusion c;
  for (int v = 1; v <= d; ++v) {
    const bool active = truth.count(v) > 0;
    const bool picked = selected.count(v) > 0;
    if (active && picked) ++c.tp;
    else if (active && !picked) ++c.fn;
    else if (!active && picked) ++c.fp;
    else ++c.tn;
  }
  return c;
}

IndexSet random_subset(RandomStream& rs, int d, double p) {
  IndexSet s;
  for (int v = 1; v <= d; ++v)
    if (rs.uniform01() < p) s.insert(v);
  return s;
}

}  // namespace

TEST_CASE("selecting exactly the active set is perfect on both axes") {
  const IndexSet truth = {3, 7, 11};
  const auto rep = selection_metrics(truth, truth, 20);
  CHECK(rep.sensitivity == 1.0);
  CHECK(rep.specificity == 1.0);
  CHECK(rep.selected == truth);
  CHECK(rep.truth == truth);
}

TEST_CASE("selecting every variable maximizes sensitivity at zero specificity") {
  IndexSet all;
  for (int v = 1; v <= 40; ++v) all.insert(v);
  const auto rep = selection_metrics(all, IndexSet{8, 9, 10, 11}, 40);
  CHECK(rep.sensitivity == 1.0);
  CHECK(rep.specificity == 0.0);
}

TEST_CASE("a strict subset of the active set trades sensitivity only") {
  const auto rep =
      selection_metrics({23, 24, 25}, {23, 24, 25, 26}, 40);
  CHECK(rep.sensitivity == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(rep.specificity == 1.0);
}

TEST_CASE("empty selection scores zero sensitivity and full specificity") {
  const auto rep = selection_metrics({}, {5, 6}, 10);
  CHECK(rep.sensitivity == 0.0);
  CHECK(rep.specificity == 1.0);
}

TEST_CASE("metrics equal the scratch confusion-matrix ratios on random pairs") {
  RandomStream rs(777);
  int checked = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = 2 + static_cast<int>(rs.uniform01() * 49);
    const IndexSet truth = random_subset(rs, d, 0.1 + 0.8 * rs.uniform01());
    if (truth.empty() || static_cast<int>(truth.size()) == d) continue;
    const IndexSet selected = random_subset(rs, d, rs.uniform01());
    const auto got = selection_metrics(selected, truth, d);
    const Confusion c = count_cells(selected, truth, d);
    CHECK(got.sensitivity ==
          doctest::Approx(double(c.tp) / double(c.tp + c.fn)).epsilon(1e-15));
    CHECK(got.specificity ==
          doctest::Approx(double(c.tn) / double(c.tn + c.fp)).epsilon(1e-15));
    ++checked;
  }
  CHECK(checked > 800);  // the degenerate draws skipped above are rare
}

TEST_CASE("degenerate truth sets are rejected as undefined") {
  CHECK_THROWS_AS(selection_metrics({1}, {}, 10), UndefinedMetricError);
  IndexSet all;
  for (int v = 1; v <= 10; ++v) all.insert(v);
  CHECK_THROWS_AS(selection_metrics({1}, all, 10), UndefinedMetricError);
}

TEST_CASE("out-of-range indices are contract violations") {
  CHECK_THROWS_AS(selection_metrics({11}, {1}, 10), ContractViolation);
  CHECK_THROWS_AS(selection_metrics({1}, {0}, 10), ContractViolation);
  CHECK_THROWS_AS(selection_metrics({1}, {2}, 0), ContractViolation);
}

TEST_CASE("a perfect prediction has zero relative error") {
  VectorXr f(4);
  f << 1.0, -2.0, 3.0, 0.5;
  CHECK(relative_test_error<Real>(f, f) == 0.0);
}

TEST_CASE("the zero prediction has unit relative error") {
  VectorXr f(3), z = VectorXr::Zero(3);
  f << 2.0, -1.0, 4.0;
  CHECK(relative_test_error<Real>(f, z) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("doubling the truth as the prediction also lands at one") {
  VectorXr f(5);
  f << 1.0, 2.0, -3.0, 0.25, 5.0;
  const VectorXr two_f = 2.0 * f;
  CHECK(relative_test_error<Real>(f, two_f) ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("relative error is invariant under common rescaling") {
  RandomStream rs(13);
  VectorXr f(50), g(50);
  for (Index i = 0; i < 50; ++i) {
    f[i] = rs.normal();
    g[i] = f[i] + 0.3 * rs.normal();
  }
  const Real base = relative_test_error<Real>(f, g);
  for (Real c : {2.0, -1.0, 1e-6, 3.7e8}) {
    const VectorXr cf = c * f, cg = c * g;
    CHECK(relative_test_error<Real>(cf, cg) ==
          doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("hand-computed ratio on a small pair") {
  VectorXr f(2), g(2);
  f << 3.0, 4.0;   // ‖f‖² = 25
  g << 3.0, 2.0;   // ‖f−g‖² = 4
  CHECK(relative_test_error<Real>(f, g) ==
        doctest::Approx(std::sqrt(4.0 / 25.0)).epsilon(1e-15));
}

TEST_CASE("zero truth and shape mismatches are rejected") {
  VectorXr z = VectorXr::Zero(3), g(3), short_v(2);
  g << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(relative_test_error<Real>(z, g), UndefinedMetricError);
  CHECK_THROWS_AS(relative_test_error<Real>(g, short_v), ContractViolation);
  VectorXr empty(0);
  CHECK_THROWS_AS(relative_test_error<Real>(empty, empty), ContractViolation);
}
