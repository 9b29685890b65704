#include "uedlab/samples.hpp"

#include <cmath>

#include "uedlab/error.hpp"

namespace ued {

SampleSet::SampleSet(std::size_t dim, std::vector<double> coords, std::vector<double> weights)
    : dim_(dim), coords_(std::move(coords)), weights_(std::move(weights)) {
  if (weights_.empty()) throw InvalidArgument("sample set must not be empty");
  if (dim_ == 0) throw InvalidArgument("sample dimension must be positive");
  if (coords_.size() != dim_ * weights_.size())
    throw InvalidArgument("sample coordinates do not match dimension x count");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("sample weights must be finite and >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) >= 1e-9) throw InvalidArgument("sample weights must sum to 1");
  for (double c : coords_)
    if (!std::isfinite(c)) throw InvalidArgument("sample coordinates must be finite");
}

SampleSet SampleSet::uniform(std::size_t dim, std::vector<double> coords) {
  if (dim == 0 || coords.empty() || coords.size() % dim != 0)
    throw InvalidArgument("uniform sample set needs a whole number of points");
  const std::size_t n = coords.size() / dim;
  return SampleSet(dim, std::move(coords), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

SampleSet SampleSet::uniform(const std::vector<std::vector<double>>& points) {
  if (points.empty()) throw InvalidArgument("sample set must not be empty");
  const std::size_t dim = points.front().size();
  std::vector<double> coords;
  coords.reserve(dim * points.size());
  for (const auto& p : points) {
    if (p.size() != dim) throw InvalidArgument("all sample points must share one dimension");
    coords.insert(coords.end(), p.begin(), p.end());
  }
  return uniform(dim, std::move(coords));
}

}  // namespace ued
