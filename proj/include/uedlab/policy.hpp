#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uedlab/env.hpp"
#include "uedlab/rng.hpp"

namespace ued {

struct NetworkShape {
  int input = 0;
  int hidden1 = 64;
  int hidden2 = 64;

  std::size_t parameter_count() const;
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// Actor-critic perceptron: two tanh hidden layers shared by a 3-way action
/// head and a scalar value head. All weights live in one flat vector so that
/// gradients and optimizer moments line up index for index.
///
/// Layout: W1[input][hidden1], b1, W2[hidden1][hidden2], b2,
///         Wpi[hidden2][3], bpi[3], Wv[hidden2], bv.
struct PolicyParams {
  NetworkShape shape;
  std::vector<double> weights;
  std::uint64_t update_count = 0;

  // Adam moments, same length as weights.
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  std::uint64_t adam_step = 0;

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

PolicyParams init_policy(const NetworkShape& shape, Rng& rng);

/// Offsets of each parameter block in the flat weight vector.
struct ParamLayout {
  std::size_t w1, b1, w2, b2, wpi, bpi, wv, bv, total;
  explicit ParamLayout(const NetworkShape& s);
};

struct ForwardCache {
  std::vector<double> hidden1;  // post-activation
  std::vector<double> hidden2;
  double logits[kNumActions] = {0, 0, 0};
  double value = 0.0;
};

void forward(const PolicyParams& params, std::span<const double> features, ForwardCache& cache);

/// Accumulates d(loss)/d(weights) into `grad` given upstream gradients on the
/// logits and the value output.
void backward(const PolicyParams& params, std::span<const double> features,
              const ForwardCache& cache, std::span<const double, kNumActions> dlogits,
              double dvalue, std::span<double> grad);

void log_softmax(std::span<const double, kNumActions> logits, std::span<double, kNumActions> out);

struct ActResult {
  Action action = Action::forward;
  double log_prob = 0.0;
  double value = 0.0;
};

/// Samples from the softmax policy. Throws NumericError on non-finite output.
ActResult act(const PolicyParams& params, std::span<const double> features, Rng& rng);
/// Argmax action (lowest index wins ties).
ActResult act_greedy(const PolicyParams& params, std::span<const double> features);

void save_checkpoint(const PolicyParams& params, const std::string& path);
PolicyParams load_checkpoint(const std::string& path);
std::string encode_checkpoint(const PolicyParams& params);
PolicyParams decode_checkpoint(const std::string& bytes);
/// Stable content hash over weights, optimizer state and counters.
std::uint64_t params_hash(const PolicyParams& params);

}  // namespace ued
