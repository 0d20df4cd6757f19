#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "vjf/core.hpp"
#include "vjf/gaussian.hpp"

namespace vjf {

// Latent dynamics x_{t+1} = x_t + W_g phi(x_t) + B u_t + eps, phi a bank of
// squared-exponential radial basis functions. Inverse widths and the state
// noise variance live in log space so positivity holds by construction.
struct DynamicsParams {
  Mat weights;             // m x r
  Mat centers;             // r x m, row per center
  Vec log_inverse_widths;  // r
  Mat input_map;           // m x p
  double log_state_noise_var = 0.0;

  Index latent_dim() const { return weights.rows(); }
  Index basis_count() const { return weights.cols(); }
  Index input_dim() const { return input_map.cols(); }
  double state_noise_var() const { return std::exp(log_state_noise_var); }

  void check() const {
    require_shape(centers.rows() == basis_count() && centers.cols() == latent_dim(),
                  "DynamicsParams: centers shape");
    require_shape(log_inverse_widths.size() == basis_count(), "DynamicsParams: widths length");
    require_shape(input_map.rows() == latent_dim(), "DynamicsParams: input map rows");
  }
};

// gamma_i = 2 ln 2 / d_i^2 with d_i the nearest-neighbor distance, so adjacent
// basis functions overlap at phi = 1/2.
inline Vec log_inverse_widths_from_centers(const Mat& centers) {
  const Index r = centers.rows();
  Vec liw(r);
  for (Index i = 0; i < r; ++i) {
    double d2 = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < r; ++j) {
      if (i == j) continue;
      d2 = std::min(d2, (centers.row(i) - centers.row(j)).squaredNorm());
    }
    if (!std::isfinite(d2) || d2 <= 0.0) d2 = 1.0;  // single or duplicated center
    liw[i] = std::log(2.0 * std::numbers::ln2 / d2);
  }
  return liw;
}

enum class ObservationKind { poisson_canonical, gaussian };

inline std::string to_string(ObservationKind k) {
  return k == ObservationKind::poisson_canonical ? "poisson" : "gaussian";
}

inline ObservationKind observation_kind_from_string(const std::string& s) {
  if (s == "poisson") return ObservationKind::poisson_canonical;
  if (s == "gaussian") return ObservationKind::gaussian;
  throw config_error("unknown observation kind: " + s);
}

// Linear-nonlinear observation map y ~ P(f(C x + b)). Canonical exp link for
// the Poisson kind; identity mean for the Gaussian kind.
struct ObservationParams {
  Mat loading;  // n x m
  Vec bias;     // n
  ObservationKind kind = ObservationKind::poisson_canonical;
  double log_noise_var = 0.0;  // Gaussian kind only

  Index obs_dim() const { return loading.rows(); }
  Index latent_dim() const { return loading.cols(); }
  double obs_noise_var() const { return std::exp(log_noise_var); }

  void check() const {
    require_shape(bias.size() == obs_dim(), "ObservationParams: bias length");
  }
};

// Scales every column of C to unit Euclidean norm; identifiability projection
// applied after each training update. Idempotent.
inline Mat normalize_loading(Mat C) {
  for (Index j = 0; j < C.cols(); ++j) {
    const double norm = C.col(j).norm();
    require_domain(norm > 0.0, "normalize_loading: zero column");
    C.col(j) /= norm;
  }
  return C;
}

// Per-channel intensities lambda = exp(C x + b) for the canonical Poisson link.
inline Vec rates(const Vec& x, const ObservationParams& obs) {
  require_shape(x.size() == obs.latent_dim(), "rates: latent dimension mismatch");
  return (obs.loading * x + obs.bias).array().exp();
}

// phi_i(x) = exp(-1/2 gamma_i ||x - c_i||^2); values in (0, 1], equal to 1 only
// at the center.
inline Vec rbf_features(const Vec& x, const DynamicsParams& dyn) {
  require_shape(x.size() == dyn.latent_dim(), "rbf_features: latent dimension mismatch");
  const Index r = dyn.basis_count();
  Vec phi(r);
  for (Index i = 0; i < r; ++i) {
    const double gamma = std::exp(dyn.log_inverse_widths[i]);
    const double sq = (x - dyn.centers.row(i).transpose()).squaredNorm();
    phi[i] = std::exp(-0.5 * gamma * sq);
  }
  return phi;
}

// Deterministic one-step increment g(x) + B u; with u = 0 this is the velocity
// field of the learned dynamics.
inline Vec drift(const Vec& x, const Vec& u, const DynamicsParams& dyn) {
  require_shape(u.size() == dyn.input_dim(), "drift: input dimension mismatch");
  return dyn.weights * rbf_features(x, dyn) + dyn.input_map * u;
}

// Jacobian of g(x) = W_g phi(x) only (input term excluded):
//   dphi_i/dx = -gamma_i phi_i(x) (x - c_i)^T
inline Mat dynamics_jacobian(const Vec& x, const DynamicsParams& dyn) {
  require_shape(x.size() == dyn.latent_dim(), "dynamics_jacobian: latent dimension mismatch");
  const Index m = dyn.latent_dim();
  const Index r = dyn.basis_count();
  Mat jac = Mat::Zero(m, m);
  for (Index i = 0; i < r; ++i) {
    const double gamma = std::exp(dyn.log_inverse_widths[i]);
    const Vec d = x - dyn.centers.row(i).transpose();
    const double phi = std::exp(-0.5 * gamma * d.squaredNorm());
    jac.noalias() += dyn.weights.col(i) * (-gamma * phi * d.transpose());
  }
  return jac;
}

// E_{q_t}[log N(x_t; a, sigma^2 I)] with a = x_prev + g(x_prev) + B u; exact
// for Gaussian state noise:
//   -(m/2) log(2 pi sigma^2) - (||mu_t - a||^2 + sum_j s_j) / (2 sigma^2)
inline double expected_transition_loglik(const DiagGaussian& q_t, const Vec& x_prev_sample,
                                         const Vec& u, const DynamicsParams& dyn) {
  require_shape(q_t.dim() == dyn.latent_dim(), "expected_transition_loglik: dim mismatch");
  const Vec a = x_prev_sample + drift(x_prev_sample, u, dyn);
  const double var = dyn.state_noise_var();
  const double m = static_cast<double>(q_t.dim());
  return -0.5 * m * std::log(2.0 * std::numbers::pi * var) -
         ((q_t.mean - a).squaredNorm() + q_t.var.sum()) / (2.0 * var);
}

// Full observation log-likelihood, including the log y! term for Poisson (the
// training objective drops that constant; reported per-bin likelihoods keep it).
inline double observation_loglik(const Vec& y, const Vec& x, const ObservationParams& obs) {
  require_shape(y.size() == obs.obs_dim(), "observation_loglik: observation length mismatch");
  const Vec eta = obs.loading * x + obs.bias;
  if (obs.kind == ObservationKind::poisson_canonical) {
    double acc = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      require_domain(y[i] >= 0.0 && y[i] == std::floor(y[i]),
                     "observation_loglik: poisson counts must be non-negative integers");
      acc += y[i] * eta[i] - std::exp(eta[i]) - std::lgamma(y[i] + 1.0);
    }
    return acc;
  }
  const Vec var = Vec::Constant(y.size(), obs.obs_noise_var());
  return diag_gaussian_logpdf(y, eta, var);
}

// Draws one observation at x. Gaussian: mean C x + b plus noise. Poisson kind:
// binary spikes via Bernoulli thinning P(spike) = 1 - exp(-lambda), honoring
// one event per bin at most.
inline Vec sample_observation(const Vec& x, const ObservationParams& obs, Rng& rng) {
  const Vec eta = obs.loading * x + obs.bias;
  Vec y(eta.size());
  if (obs.kind == ObservationKind::gaussian) {
    std::normal_distribution<double> dist(0.0, std::sqrt(obs.obs_noise_var()));
    for (Index i = 0; i < y.size(); ++i) y[i] = eta[i] + dist(rng);
    return y;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index i = 0; i < y.size(); ++i) {
    const double p_spike = 1.0 - std::exp(-std::exp(eta[i]));
    y[i] = unif(rng) < p_spike ? 1.0 : 0.0;
  }
  return y;
}

}  // namespace vjf
