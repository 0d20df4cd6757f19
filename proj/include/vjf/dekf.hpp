#pragma once

#include <cmath>

#include "vjf/core.hpp"
#include "vjf/generative.hpp"

namespace vjf {

// Dual extended Kalman filter for linear-Gaussian streams: a state filter
// coupled with a parameter filter over the vectorized transition matrix,
// theta_{t+1} = theta_t + eta_t. The observation model (C, b, R) stays fixed.
struct DekfState {
  Vec x;        // m state estimate
  Mat cov;      // m x m
  Vec theta;    // vec(A), column-major, m^2
  Mat param_cov;  // m^2 x m^2
  double param_rw_var = 1e-5;  // random-walk variance of theta
  double process_var = 1e-2;   // state noise variance (isotropic)

  Index dim() const { return x.size(); }

  Mat transition() const {
    const Index m = dim();
    Mat a(m, m);
    for (Index j = 0; j < m; ++j) a.col(j) = theta.segment(j * m, m);
    return a;
  }

  void set_transition(const Mat& a) {
    const Index m = a.rows();
    theta = Vec(m * m);
    for (Index j = 0; j < m; ++j) theta.segment(j * m, m) = a.col(j);
  }

  static DekfState init(const Mat& a0, double init_state_cov = 1.0,
                        double init_param_cov = 0.1, double param_rw_var = 1e-5,
                        double process_var = 1e-2) {
    DekfState s;
    const Index m = a0.rows();
    s.x = Vec::Zero(m);
    s.cov = init_state_cov * Mat::Identity(m, m);
    s.set_transition(a0);
    s.param_cov = init_param_cov * Mat::Identity(m * m, m * m);
    s.param_rw_var = param_rw_var;
    s.process_var = process_var;
    return s;
  }
};

struct DekfStepResult {
  Vec prediction;  // pre-update one-step prediction of y
  Vec innovation;
  bool jittered = false;  // a covariance needed re-symmetrization + jitter
};

namespace detail {

// Symmetrize; if the diagonal went non-positive, add jitter and report.
inline bool repair_spd(Mat& cov) {
  cov = 0.5 * (cov + cov.transpose()).eval();
  if (cov.diagonal().minCoeff() > 0.0) return false;
  cov += 1e-9 * Mat::Identity(cov.rows(), cov.cols());
  return true;
}

}  // namespace detail

// One predict/update of the state EKF with the current transition estimate,
// followed by the parameter update with the linearization
// d(A x)/d vec(A) = x^T (kron) I. Returns the pre-update prediction of y for
// one-step RMSE curves.
inline DekfStepResult dekf_step(const Vec& y, DekfState& state, const ObservationParams& obs) {
  require_domain(obs.kind == ObservationKind::gaussian,
                 "dekf_step: Gaussian observation model required");
  const Index m = state.dim();
  const Index n = obs.obs_dim();
  require_shape(y.size() == n, "dekf_step: observation length mismatch");
  const Mat& c = obs.loading;
  const double r = obs.obs_noise_var();
  const Mat q = state.process_var * Mat::Identity(m, m);

  const Vec x_prev = state.x;

  // parameter predict
  state.param_cov += state.param_rw_var * Mat::Identity(m * m, m * m);

  // state predict with the current transition estimate
  const Mat a = state.transition();
  const Vec x_pred = a * x_prev;
  Mat p_pred = a * state.cov * a.transpose() + q;

  DekfStepResult result;
  result.prediction = c * x_pred + obs.bias;
  result.innovation = y - result.prediction;

  // state update
  const Mat s = c * p_pred * c.transpose() + r * Mat::Identity(n, n);
  Eigen::LDLT<Mat> s_ldlt(s);
  const Mat gain = p_pred * c.transpose() * s_ldlt.solve(Mat::Identity(n, n));
  state.x = x_pred + gain * result.innovation;
  state.cov = (Mat::Identity(m, m) - gain * c) * p_pred;
  result.jittered = detail::repair_spd(state.cov);

  // parameter update: measurement y ~ C A(theta) x_prev + b with effective
  // noise C Q C^T + R from the state transition and the observation.
  // A zero random-walk variance disables parameter learning entirely.
  if (state.param_rw_var > 0.0) {
    Mat h(n, m * m);
    for (Index j = 0; j < m; ++j) h.middleCols(j * m, m) = x_prev[j] * c;
    const Mat r_theta = c * q * c.transpose() + r * Mat::Identity(n, n);
    const Mat s_theta = h * state.param_cov * h.transpose() + r_theta;
    Eigen::LDLT<Mat> st_ldlt(s_theta);
    const Mat gain_theta = state.param_cov * h.transpose() * st_ldlt.solve(Mat::Identity(n, n));
    state.theta += gain_theta * result.innovation;
    state.param_cov = (Mat::Identity(m * m, m * m) - gain_theta * h) * state.param_cov;
    result.jittered = detail::repair_spd(state.param_cov) || result.jittered;
  }

  return result;
}

}  // namespace vjf
