#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uedlab/samples.hpp"

namespace ued {

/// Euclidean distance. Throws InvalidArgument on dimension mismatch.
double ground_cost(std::span<const double> a, std::span<const double> b);

struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, entries are d(x_i, y_j)^p
  std::string metric = "euclidean";
  double exponent = 1.0;

  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

CostMatrix cost_matrix(const SampleSet& from, const SampleSet& to, double p = 1.0);

struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major coupling

  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
};

struct EmdOptions {
  /// Largest n*m accepted by the exact solver.
  std::size_t max_cells = 256 * 256;
  std::size_t max_pivots = 0;  // 0 = automatic
  /// When false the result carries no plan (distance and cost only).
  bool compute_plan = true;
};

struct EmdResult {
  double distance = 0.0;  // W_p
  double cost = 0.0;      // sum_ij plan_ij * d_ij^p
  TransportPlan plan;
  std::size_t pivots = 0;
};

/// Exact p-Wasserstein distance between two weighted point clouds, solved as
/// a transportation linear program with the primal network simplex. The
/// result is symmetric bit for bit and does not depend on the order in which
/// points are listed.
EmdResult emd(const SampleSet& p_set, const SampleSet& q_set, double p = 1.0, const EmdOptions& options = {});

struct SinkhornOptions {
  double epsilon = 1e-2;  // entropic regularization, absolute cost units
  int max_iterations = 100000;
  double tolerance = 1e-7;  // max marginal violation
};

struct SinkhornResult {
  double distance = 0.0;  // (sum plan * d^p)^(1/p) of the regularized plan
  TransportPlan plan;
  int iterations = 0;
  double residual = 0.0;
};

/// Log-domain Sinkhorn iterations. Throws ConvergenceError carrying the
/// residual if the marginal tolerance is not reached.
SinkhornResult sinkhorn(const SampleSet& p_set, const SampleSet& q_set, double p,
                        const SinkhornOptions& options);

struct DistanceConfig {
  std::size_t max_samples = 64;
  std::uint64_t seed = 0;
  double exponent = 1.0;
  EmdOptions emd;
  /// Fall back to Sinkhorn instead of failing when the exact problem is too big.
  bool sinkhorn_fallback = false;
  SinkhornOptions sinkhorn;
};

/// Uniform subsample without replacement, weights renormalized. The draw
/// depends only on the seed and the content of `set`.
SampleSet subsample(const SampleSet& set, std::size_t max_points, std::uint64_t seed);

/// Empirical Wasserstein distance between two levels' occupancy samples.
double level_distance(const SampleSet& a, const SampleSet& b, const DistanceConfig& config);

}  // namespace ued
