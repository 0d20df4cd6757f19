#pragma once

#include <cmath>

#include "vjf/core.hpp"
#include "vjf/gaussian.hpp"

namespace vjf {

// One-hidden-layer perceptron mapping (y_t, u_{t-1}, mu_{t-1}, s_{t-1}) to the
// next posterior (mu_t, s_t). The variance head emits log s_t, exponentiated
// with a floor, so the output variance is strictly positive by construction.
// The recursion is Markovian: nothing older than the previous summary enters.
struct RecognitionParams {
  Mat hidden_weights;  // q x (n + p + 2m)
  Vec hidden_bias;     // q
  Mat output_weights;  // 2m x q
  Vec output_bias;     // 2m

  Index hidden_dim() const { return hidden_weights.rows(); }
  Index latent_dim() const { return output_weights.rows() / 2; }
  Index in_dim() const { return hidden_weights.cols(); }

  void check() const {
    require_shape(hidden_bias.size() == hidden_dim(), "RecognitionParams: hidden bias length");
    require_shape(output_weights.cols() == hidden_dim(), "RecognitionParams: output weights cols");
    require_shape(output_bias.size() == output_weights.rows() &&
                      output_weights.rows() % 2 == 0,
                  "RecognitionParams: output head must have even size 2m");
  }
};

enum class Nonlinearity { tanh, relu };

inline constexpr double kVarianceFloor = 1e-8;

// The previous variance enters the network as log-variance for scale stability.
inline Vec recognition_input(const Vec& y, const Vec& u_prev, const DiagGaussian& q_prev) {
  Vec z(y.size() + u_prev.size() + 2 * q_prev.dim());
  z << y, u_prev, q_prev.mean, q_prev.var.array().log().matrix();
  return z;
}

inline DiagGaussian recognize(const Vec& y, const Vec& u_prev, const DiagGaussian& q_prev,
                              const RecognitionParams& params,
                              Nonlinearity act = Nonlinearity::tanh) {
  const Index m = params.latent_dim();
  require_shape(q_prev.dim() == m, "recognize: posterior dimension mismatch");
  const Vec z = recognition_input(y, u_prev, q_prev);
  require_shape(z.size() == params.in_dim(), "recognize: input dimension mismatch");
  if (!z.allFinite()) throw numeric_error("recognize: non-finite input");

  Vec h = params.hidden_weights * z + params.hidden_bias;
  if (act == Nonlinearity::tanh)
    h = h.array().tanh();
  else
    h = h.array().max(0.0);
  const Vec o = params.output_weights * h + params.output_bias;

  DiagGaussian q;
  q.mean = o.head(m);
  q.var = o.tail(m).array().exp().max(kVarianceFloor);
  return q;
}

// Fan-in-scaled normal init (std 1/sqrt(fan_in)), zero biases. With zero input
// the output posterior is exactly N(0, I), matching the mu_0 = 0, s_0 = I start.
inline RecognitionParams init_recognition(Index n, Index m, Index p, Index q, Rng& rng) {
  require_domain(n >= 1 && m >= 1 && p >= 1 && q >= 1,
                 "init_recognition: all dimensions must be >= 1");
  const Index in = n + p + 2 * m;
  RecognitionParams params;
  params.hidden_weights = randn_mat(q, in, rng) / std::sqrt(static_cast<double>(in));
  params.hidden_bias = Vec::Zero(q);
  params.output_weights = randn_mat(2 * m, q, rng) / std::sqrt(static_cast<double>(q));
  params.output_bias = Vec::Zero(2 * m);
  return params;
}

}  // namespace vjf
