#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ued {

/// Weighted point cloud: an empirical distribution over feature vectors.
/// Points are stored row-major in one flat buffer.
class SampleSet {
 public:
  SampleSet() = default;
  SampleSet(std::size_t dim, std::vector<double> coords, std::vector<double> weights);

  /// Equal weights 1/n.
  static SampleSet uniform(std::size_t dim, std::vector<double> coords);
  static SampleSet uniform(const std::vector<std::vector<double>>& points);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  const std::vector<double>& coords() const { return coords_; }
  const std::vector<double>& weights() const { return weights_; }

  friend bool operator==(const SampleSet&, const SampleSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

}  // namespace ued
