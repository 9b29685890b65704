#include "uedlab/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uedlab/error.hpp"

namespace ued {

void PpoConfig::validate() const {
  if (!(clip_ratio > 0.0)) throw InvalidArgument("clip_ratio must be > 0");
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (minibatch_size < 1) throw InvalidArgument("minibatch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
  if (value_coef < 0.0 || entropy_coef < 0.0) throw InvalidArgument("loss coefficients must be >= 0");
  if (steps_per_rollout < 1) throw InvalidArgument("steps_per_rollout must be >= 1");
}

LossStats ppo_loss(const PolicyParams& params, std::span<const PpoSample> samples,
                   const PpoConfig& config, std::vector<double>& grad) {
  grad.assign(params.weights.size(), 0.0);
  LossStats stats;
  if (samples.empty()) return stats;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  const double lo = 1.0 - config.clip_ratio;
  const double hi = 1.0 + config.clip_ratio;
  ForwardCache cache;
  for (const PpoSample& s : samples) {
    forward(params, s.features, cache);
    double logp[kNumActions];
    log_softmax(cache.logits, logp);
    double prob[kNumActions];
    double entropy = 0.0;
    for (int k = 0; k < kNumActions; ++k) {
      prob[k] = std::exp(logp[k]);
      entropy -= prob[k] * logp[k];
    }
    const int a = static_cast<int>(s.action);
    const double log_ratio = logp[a] - s.old_log_prob;
    const double ratio = std::exp(log_ratio);
    const double surr_unclipped = ratio * s.advantage;
    const double surr_clipped = std::clamp(ratio, lo, hi) * s.advantage;
    const bool through_ratio = surr_unclipped <= surr_clipped;
    const double surrogate = through_ratio ? surr_unclipped : surr_clipped;
    const double value_err = cache.value - s.target_return;

    stats.policy_loss -= surrogate * inv_n;
    stats.value_loss += value_err * value_err * inv_n;
    stats.entropy += entropy * inv_n;
    stats.approx_kl += (ratio - 1.0 - log_ratio) * inv_n;
    if (ratio < lo || ratio > hi) stats.clip_fraction += inv_n;

    // d(-surrogate)/d(log pi(a)) = -ratio * A while the unclipped branch is active.
    const double dlogp = through_ratio ? -ratio * s.advantage * inv_n : 0.0;
    double dlogits[kNumActions];
    for (int k = 0; k < kNumActions; ++k) {
      const double onehot = (k == a) ? 1.0 : 0.0;
      const double d_entropy = -prob[k] * (logp[k] + entropy);
      dlogits[k] = dlogp * (onehot - prob[k]) - config.entropy_coef * d_entropy * inv_n;
    }
    const double dvalue = config.value_coef * 2.0 * value_err * inv_n;
    backward(params, s.features, cache, dlogits, dvalue, grad);
  }
  stats.total = stats.policy_loss + config.value_coef * stats.value_loss -
                config.entropy_coef * stats.entropy;
  return stats;
}

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void adam_step(PolicyParams& p, const std::vector<double>& grad, double lr) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-5;
  p.adam_step += 1;
  const double t = static_cast<double>(p.adam_step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    p.adam_m[i] = beta1 * p.adam_m[i] + (1.0 - beta1) * grad[i];
    p.adam_v[i] = beta2 * p.adam_v[i] + (1.0 - beta2) * grad[i] * grad[i];
    p.weights[i] -= lr * (p.adam_m[i] / c1) / (std::sqrt(p.adam_v[i] / c2) + eps);
  }
}

}  // namespace

PpoUpdateResult ppo_update(const PolicyParams& params, const TrajectoryBatch& batch,
                           const PpoConfig& ppo, const GaeConfig& gae, Rng& rng) {
  ppo.validate();
  gae.validate();
  if (!batch.for_update)
    throw InvalidArgument("batch was collected for scoring only and cannot drive a policy update");
  if (batch.steps.empty()) throw InvalidArgument("cannot update on an empty batch");
  if (batch.feature_size != static_cast<std::size_t>(params.shape.input))
    throw InvalidArgument("batch features do not match the policy input size");

  const std::vector<double> adv = gae_advantages(batch, gae);
  std::vector<PpoSample> all(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    all[i] = {batch.features_at(i), batch.steps[i].action, batch.steps[i].log_prob, adv[i],
              adv[i] + batch.steps[i].value};

  PpoUpdateResult result{params, {}};
  PolicyParams& p = result.params;
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<PpoSample> mb;
  std::vector<double> grad;
  int minibatches = 0;
  for (int epoch = 0; epoch < ppo.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(ppo.minibatch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(ppo.minibatch_size));
      mb.clear();
      for (std::size_t k = start; k < stop; ++k) mb.push_back(all[order[k]]);
      if (ppo.normalize_advantages && mb.size() > 1) {
        double mean = 0.0;
        for (const auto& s : mb) mean += s.advantage;
        mean /= static_cast<double>(mb.size());
        double var = 0.0;
        for (const auto& s : mb) var += (s.advantage - mean) * (s.advantage - mean);
        const double sd = std::sqrt(var / static_cast<double>(mb.size()));
        for (auto& s : mb) s.advantage = sd > 1e-8 ? (s.advantage - mean) / sd : 0.0;
      }
      LossStats st = ppo_loss(p, mb, ppo, grad);
      if (!all_finite(grad) || !std::isfinite(st.total))
        throw NumericError("non-finite loss or gradient in PPO update (epoch " + std::to_string(epoch) +
                           ", loss " + std::to_string(st.total) + ")");
      double norm = 0.0;
      for (double g : grad) norm += g * g;
      norm = std::sqrt(norm);
      st.grad_norm = norm;
      if (ppo.max_grad_norm > 0.0 && norm > ppo.max_grad_norm)
        for (double& g : grad) g *= ppo.max_grad_norm / norm;
      adam_step(p, grad, ppo.learning_rate);
      result.stats.policy_loss += st.policy_loss;
      result.stats.value_loss += st.value_loss;
      result.stats.entropy += st.entropy;
      result.stats.total += st.total;
      result.stats.approx_kl += st.approx_kl;
      result.stats.clip_fraction += st.clip_fraction;
      result.stats.grad_norm += st.grad_norm;
      ++minibatches;
    }
  }
  const double inv = 1.0 / static_cast<double>(minibatches);
  LossStats& s = result.stats;
  for (double* v : {&s.policy_loss, &s.value_loss, &s.entropy, &s.total, &s.approx_kl,
                    &s.clip_fraction, &s.grad_norm})
    *v *= inv;
  if (!all_finite(p.weights)) throw NumericError("PPO update produced non-finite weights");
  p.update_count += 1;
  return result;
}

}  // namespace ued
