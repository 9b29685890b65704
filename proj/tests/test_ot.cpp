#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "uedlab/error.hpp"
#include "uedlab/ot.hpp"
#include "uedlab/rng.hpp"

using namespace ued;

namespace {

SampleSet uniform_1d(const std::vector<double>& xs) {
  return SampleSet::uniform(1, std::vector<double>(xs));
}

SampleSet random_set(Rng& rng, std::size_t n, std::size_t dim, bool weighted) {
  std::vector<double> coords(n * dim);
  for (double& c : coords) c = std::floor(rng.uniform() * 4.0);  // small lattice -> duplicates
  if (!weighted) return SampleSet::uniform(dim, std::move(coords));
  std::vector<double> w(n);
  double z = 0.0;
  for (double& x : w) z += (x = 0.1 + rng.uniform());
  for (double& x : w) x /= z;
  return SampleSet(dim, std::move(coords), std::move(w));
}

void check_marginals(const EmdResult& r, const SampleSet& p, const SampleSet& q, double tol) {
  const auto rows = r.plan.row_sums();
  const auto cols = r.plan.col_sums();
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(std::abs(rows[i] - p.weights()[i]) < tol);
  for (std::size_t j = 0; j < cols.size(); ++j) CHECK(std::abs(cols[j] - q.weights()[j]) < tol);
  for (double x : r.plan.data) CHECK(x >= 0.0);
}

}  // namespace

TEST_CASE("ground cost is Euclidean") {
  const std::vector<double> o{0, 0}, x{3, 4};
  CHECK(ground_cost(o, x) == 5.0);
  CHECK(ground_cost(x, x) == 0.0);
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> a(5), b(5);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    CHECK(ground_cost(a, b) == ground_cost(b, a));
  }
  const std::vector<double> three{1, 2, 3};
  CHECK_THROWS_AS(ground_cost(o, three), InvalidArgument);
}

TEST_CASE("emd identity and the 1D shift example") {
  const SampleSet p = uniform_1d({0, 1});
  CHECK(emd(p, p).distance == 0.0);
  const EmdResult r = emd(p, uniform_1d({1, 2}));
  CHECK(r.distance == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("emd matches the 1D CDF oracle on random uniform atoms") {
  Rng rng(11);
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 1 + rng.below(16);
    const std::size_t m = 1 + rng.below(16);
    std::vector<double> a(n), b(m);
    for (auto& v : a) v = rng.normal() * 3.0;
    for (auto& v : b) v = rng.normal() * 3.0 + 1.0;
    std::vector<std::pair<double, double>> pa, pb;
    for (double v : a) pa.emplace_back(v, 1.0 / static_cast<double>(n));
    for (double v : b) pb.emplace_back(v, 1.0 / static_cast<double>(m));
    const SampleSet p = uniform_1d(a);
    const SampleSet q = uniform_1d(b);
    const EmdResult r = emd(p, q);
    CHECK(std::abs(r.distance - oracle::w1_1d(pa, pb)) < 1e-9);
    if (n == m) CHECK(std::abs(r.distance - oracle::w1_sorted_equal(a, b)) < 1e-9);
    check_marginals(r, p, q, 1e-7);
  }
}

TEST_CASE("emd returned value and plan are self-consistent") {
  Rng rng(5);
  for (int c = 0; c < 40; ++c) {
    const SampleSet p = random_set(rng, 1 + rng.below(12), 3, true);
    const SampleSet q = random_set(rng, 1 + rng.below(12), 3, true);
    for (double pexp : {1.0, 2.0}) {
      const EmdResult r = emd(p, q, pexp);
      const CostMatrix cm = cost_matrix(p, q, pexp);
      double total = 0.0;
      for (std::size_t k = 0; k < cm.data.size(); ++k) total += r.plan.data[k] * cm.data[k];
      CHECK(std::pow(total, 1.0 / pexp) == doctest::Approx(r.distance).epsilon(1e-9));
      check_marginals(r, p, q, 1e-7);
    }
  }
}

TEST_CASE("emd metric properties") {
  Rng rng(7);
  for (int c = 0; c < 100; ++c) {
    const SampleSet a = random_set(rng, 1 + rng.below(8), 2, c % 2 == 0);
    const SampleSet b = random_set(rng, 1 + rng.below(8), 2, c % 2 == 0);
    const SampleSet d = random_set(rng, 1 + rng.below(8), 2, c % 2 == 0);
    const double ab = emd(a, b).distance;
    CHECK(ab == emd(b, a).distance);
    CHECK(ab >= 0.0);
    CHECK(emd(a, a).distance == 0.0);
    CHECK(ab <= emd(a, d).distance + emd(d, b).distance + 1e-9);
  }
}

TEST_CASE("emd is invariant to point order and duplicates merge") {
  const SampleSet p = SampleSet::uniform({{0, 0}, {1, 0}, {0, 0}, {2, 2}});
  const SampleSet p2 = SampleSet::uniform({{2, 2}, {0, 0}, {0, 0}, {1, 0}});
  const SampleSet merged({2}, {0, 0, 1, 0, 2, 2}, {0.5, 0.25, 0.25});
  const SampleSet q = SampleSet::uniform({{1, 1}, {3, 0}});
  CHECK(emd(p, q).distance == emd(p2, q).distance);
  CHECK(emd(p, merged).distance == 0.0);
  CHECK(emd(p, q).distance == doctest::Approx(emd(merged, q).distance).epsilon(1e-14));
}

TEST_CASE("emd scales linearly under feature scaling for p = 1") {
  Rng rng(13);
  for (int c = 0; c < 30; ++c) {
    const SampleSet p = random_set(rng, 1 + rng.below(10), 3, true);
    const SampleSet q = random_set(rng, 1 + rng.below(10), 3, true);
    const double scale = 0.5 + 3.0 * rng.uniform();
    auto scaled = [&](const SampleSet& s) {
      std::vector<double> coords = s.coords();
      for (double& x : coords) x *= scale;
      return SampleSet(s.dim(), coords, s.weights());
    };
    CHECK(emd(scaled(p), scaled(q)).distance == doctest::Approx(scale * emd(p, q).distance).epsilon(1e-10));
  }
}

TEST_CASE("emd input validation") {
  const SampleSet a = uniform_1d({0, 1});
  const SampleSet b = SampleSet::uniform({{0, 1}});
  CHECK_THROWS_AS(emd(a, b), InvalidArgument);
  CHECK_THROWS_AS(emd(a, a, 0.5), InvalidArgument);
  EmdOptions tiny;
  tiny.max_cells = 3;
  CHECK_THROWS_AS(emd(a, a, 1.0, tiny), SizeCapExceeded);
  CHECK_THROWS_AS(SampleSet(1, {0.0, 1.0}, {0.5, 0.4}), InvalidArgument);
  CHECK_THROWS_AS(SampleSet::uniform(1, {}), InvalidArgument);
}

TEST_CASE("emd handles a 256x256 problem") {
  Rng rng(17);
  std::vector<double> a(256 * 4), b(256 * 4);
  for (auto& v : a) v = rng.uniform();
  for (auto& v : b) v = rng.uniform() + 0.2;
  const SampleSet p = SampleSet::uniform(4, a);
  const SampleSet q = SampleSet::uniform(4, b);
  const EmdResult r = emd(p, q);
  CHECK(r.distance > 0.0);
  check_marginals(r, p, q, 1e-7);
}

TEST_CASE("sinkhorn approaches emd and respects marginals") {
  Rng rng(19);
  for (int c = 0; c < 20; ++c) {
    const SampleSet p = random_set(rng, 2 + rng.below(8), 2, true);
    std::vector<double> qc(p.size() * 2);
    for (double& x : qc) x = rng.normal() * 2.0;
    const SampleSet q = SampleSet::uniform(2, qc);
    const CostMatrix cm = cost_matrix(p, q);
    std::vector<double> sorted = cm.data;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    SinkhornOptions opt;
    opt.epsilon = 1e-3 * median;
    opt.tolerance = 1e-9;
    opt.max_iterations = 200000;
    const SinkhornResult s = sinkhorn(p, q, 1.0, opt);
    const double exact = emd(p, q).distance;
    CHECK(std::abs(s.distance - exact) <= 0.02 * exact);
    const auto rows = s.plan.row_sums();
    const auto cols = s.plan.col_sums();
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(std::abs(rows[i] - p.weights()[i]) < 1e-6);
    for (std::size_t j = 0; j < cols.size(); ++j) CHECK(std::abs(cols[j] - q.weights()[j]) < 1e-6);
  }
}

TEST_CASE("sinkhorn on identical sets shrinks monotonically with epsilon") {
  const SampleSet p = SampleSet::uniform({{0, 0}, {1, 0}, {0, 2}, {3, 1}});
  double previous = std::numeric_limits<double>::infinity();
  for (double eps : {1.0, 0.5, 0.2, 0.1, 0.05, 0.02}) {
    SinkhornOptions opt;
    opt.epsilon = eps;
    const double v = sinkhorn(p, p, 1.0, opt).distance;
    CHECK(v <= previous);
    previous = v;
  }
  CHECK(previous < 1e-6);
}

TEST_CASE("sinkhorn reports non-convergence with the residual") {
  const SampleSet p = SampleSet::uniform({{0, 0}, {5, 0}, {0, 7}});
  const SampleSet q = SampleSet::uniform({{1, 1}, {9, 9}});
  SinkhornOptions opt;
  opt.epsilon = 1e-3;
  opt.max_iterations = 1;
  opt.tolerance = 1e-15;
  try {
    sinkhorn(p, q, 1.0, opt);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > 0.0);
  }
  opt.epsilon = 0.0;
  CHECK_THROWS_AS(sinkhorn(p, q, 1.0, opt), InvalidArgument);
}

TEST_CASE("level distance subsamples deterministically and symmetrically") {
  Rng rng(23);
  const SampleSet a = random_set(rng, 200, 3, false);
  const SampleSet b = random_set(rng, 150, 3, false);
  DistanceConfig cfg;
  cfg.seed = 99;
  CHECK(level_distance(a, b, cfg) == level_distance(b, a, cfg));
  CHECK(level_distance(a, b, cfg) == level_distance(a, b, cfg));
  const SampleSet small = random_set(rng, 20, 3, false);
  CHECK(level_distance(small, small, cfg) == 0.0);
  const SampleSet sub = subsample(a, 64, 5);
  CHECK(sub.size() == 64);
  CHECK(sub == subsample(a, 64, 5));
  CHECK(subsample(small, 64, 5) == small);
}

TEST_CASE("level distance can fall back to sinkhorn") {
  Rng rng(29);
  const SampleSet a = random_set(rng, 10, 2, false);
  const SampleSet b = random_set(rng, 10, 2, false);
  DistanceConfig cfg;
  cfg.emd.max_cells = 10;
  CHECK_THROWS_AS(level_distance(a, b, cfg), SizeCapExceeded);
  cfg.sinkhorn_fallback = true;
  cfg.sinkhorn.epsilon = 0.05;
  cfg.sinkhorn.tolerance = 1e-6;
  const double approx = level_distance(a, b, cfg);
  cfg.emd.max_cells = 1000;
  const double exact = level_distance(a, b, cfg);
  CHECK(approx >= exact - 1e-6);
  CHECK(approx <= exact * 1.1 + 1e-6);
}
