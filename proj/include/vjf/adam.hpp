#pragma once

#include <cmath>
#include <limits>

#include "vjf/core.hpp"

namespace vjf {

// Bias-corrected Adam over a flat parameter vector.
struct AdamState {
  Vec first_moment;
  Vec second_moment;
  long step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_hat = 1e-8;

  static AdamState init(Index dim, double lr = 1e-3, double b1 = 0.9, double b2 = 0.999,
                        double eps = 1e-8) {
    AdamState s;
    s.first_moment = Vec::Zero(dim);
    s.second_moment = Vec::Zero(dim);
    s.learning_rate = lr;
    s.beta1 = b1;
    s.beta2 = b2;
    s.epsilon_hat = eps;
    return s;
  }
};

// Scales grads in place so the global L2 norm is at most max_norm.
// max_norm = infinity disables clipping. Returns the pre-clip norm.
inline double clip_by_global_norm(Vec& grads, double max_norm) {
  const double norm = grads.norm();
  if (std::isfinite(max_norm) && norm > max_norm && norm > 0.0) {
    grads *= max_norm / norm;
  }
  return norm;
}

// One descent step. Returns false (leaving params and state untouched) when the
// gradient contains non-finite entries.
inline bool adam_update(Vec& params, const Vec& grads, AdamState& state) {
  require_shape(params.size() == grads.size(), "adam_update: params/grads length mismatch");
  require_shape(state.first_moment.size() == params.size(),
                "adam_update: optimizer state tracks a different parameter length");
  if (!grads.allFinite()) return false;

  state.step_count += 1;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  state.second_moment = state.beta2 * state.second_moment.array().matrix() +
                        (1.0 - state.beta2) * grads.array().square().matrix();
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  params.array() -= state.learning_rate * (state.first_moment.array() / bc1) /
                    ((state.second_moment.array() / bc2).sqrt() + state.epsilon_hat);
  return true;
}

}  // namespace vjf
