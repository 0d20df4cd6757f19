#pragma once

#include <cmath>
#include <numbers>

#include "vjf/core.hpp"

namespace vjf {

// Diagonal-covariance Gaussian, the variational family q(x_t) = N(mean, diag(var)).
struct DiagGaussian {
  Vec mean;
  Vec var;

  DiagGaussian() = default;
  DiagGaussian(Vec mean_, Vec var_) : mean(std::move(mean_)), var(std::move(var_)) {
    require_shape(mean.size() == var.size(), "DiagGaussian: mean/var length mismatch");
    require_domain((var.array() > 0.0).all(), "DiagGaussian: variance must be positive");
  }

  Index dim() const { return mean.size(); }
};

// Differential entropy of N(mu, diag(variance)) in nats: 1/2 sum_j log(2*pi*e*var_j).
inline double gaussian_entropy(const Vec& variance) {
  require_domain((variance.array() > 0.0).all(), "gaussian_entropy: variance must be positive");
  const double c = std::log(2.0 * std::numbers::pi) + 1.0;
  return 0.5 * (c * static_cast<double>(variance.size()) + variance.array().log().sum());
}

// mean + sqrt(var) .* noise; the deterministic reparameterization of a draw from q.
inline Vec reparam_sample(const DiagGaussian& q, const Vec& noise) {
  require_shape(noise.size() == q.dim(), "reparam_sample: noise length mismatch");
  return q.mean.array() + q.var.array().sqrt() * noise.array();
}

// Log density of N(y; mean, diag(var)) -- shared by observation and transition models.
inline double diag_gaussian_logpdf(const Vec& y, const Vec& mean, const Vec& var) {
  require_shape(y.size() == mean.size() && y.size() == var.size(),
                "diag_gaussian_logpdf: length mismatch");
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double acc = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double d = y[i] - mean[i];
    acc += -0.5 * (log2pi + std::log(var[i]) + d * d / var[i]);
  }
  return acc;
}

}  // namespace vjf
