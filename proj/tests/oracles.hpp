#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the code paths it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

/// W1 between two weighted 1D atom sets: integral of |F_P - F_Q| over the
/// sorted union of support points.
inline double w1_1d(std::vector<std::pair<double, double>> p, std::vector<std::pair<double, double>> q) {
  std::vector<std::pair<double, double>> events;  // (x, signed mass)
  for (auto [x, w] : p) events.emplace_back(x, w);
  for (auto [x, w] : q) events.emplace_back(x, -w);
  std::sort(events.begin(), events.end());
  double cdf_gap = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < events.size(); ++k) {
    cdf_gap += events[k].second;
    total += std::abs(cdf_gap) * (events[k + 1].first - events[k].first);
  }
  return total;
}

/// W1 for two equally sized uniform 1D samples: mean absolute difference of
/// the sorted samples.
inline double w1_sorted_equal(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

/// (1/T) sum_{t=0}^{T-1} max(sum_{k=t}^{T-1} c^(k-t) delta_k, 0) by explicit
/// double loop.
inline double positive_value_loss_episode(const std::vector<double>& delta, double gamma_lambda) {
  const std::size_t n = delta.size();
  double total = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double inner = 0.0;
    for (std::size_t k = t; k < n; ++k) inner += std::pow(gamma_lambda, static_cast<double>(k - t)) * delta[k];
    total += std::max(inner, 0.0);
  }
  return total / static_cast<double>(n);
}

/// Flood fill over a boolean free-cell grid (row-major, w x h).
inline bool flood_reachable(const std::vector<bool>& free, int w, int h, int sx, int sy, int gx, int gy) {
  std::vector<bool> seen(free.size(), false);
  std::vector<std::pair<int, int>> stack{{sx, sy}};
  seen[static_cast<std::size_t>(sy * w + sx)] = true;
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    if (x == gx && y == gy) return true;
    const int dx[] = {1, -1, 0, 0};
    const int dy[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int nx = x + dx[k];
      const int ny = y + dy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const auto idx = static_cast<std::size_t>(ny * w + nx);
      if (!free[idx] || seen[idx]) continue;
      seen[idx] = true;
      stack.emplace_back(nx, ny);
    }
  }
  return false;
}

/// Average ranks (1 = largest) and P_i proportional to rank^-beta.
inline std::vector<double> rank_probs(const std::vector<double>& scores, double beta) {
  const std::size_t n = scores.size();
  std::vector<double> probs(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double greater = 0.0;
    double equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (scores[j] > scores[i]) greater += 1.0;
      if (scores[j] == scores[i]) equal += 1.0;
    }
    const double rank = greater + (equal + 1.0) / 2.0;
    probs[i] = std::pow(rank, -beta);
    z += probs[i];
  }
  for (double& p : probs) p /= z;
  return probs;
}

}  // namespace oracle
