#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "vjf/adam.hpp"
#include "vjf/core.hpp"
#include "vjf/gaussian.hpp"
#include "vjf/generative.hpp"
#include "vjf/recognition.hpp"
#include "vjf/tape.hpp"

namespace vjf {

// ---------------------------------------------------------------------------
// Parameter bundle
// ---------------------------------------------------------------------------

// All learnable parameters: dynamics network, observation map, recognition
// network, state-noise variance. Flat packing (to_flat/from_flat) fixes the
// layout used by the optimizer, the checkpoint format, and the
// finite-difference checks:
//   dynamics.weights (row-major), centers (row-major), log_inverse_widths,
//   input_map (row-major), log_state_noise_var,
//   observation.loading (row-major), bias, [log_noise_var, gaussian kind only],
//   recognition.hidden_weights (row-major), hidden_bias,
//   output_weights (row-major), output_bias.
struct ModelBundle {
  DynamicsParams dynamics;
  ObservationParams observation;
  RecognitionParams recognition;

  Index obs_dim() const { return observation.obs_dim(); }
  Index latent_dim() const { return dynamics.latent_dim(); }
  Index input_dim() const { return dynamics.input_dim(); }
  Index hidden_dim() const { return recognition.hidden_dim(); }
  Index basis_count() const { return dynamics.basis_count(); }

  void check() const {
    dynamics.check();
    observation.check();
    recognition.check();
    require_shape(observation.latent_dim() == latent_dim(),
                  "ModelBundle: loading latent dim mismatch");
    require_shape(recognition.latent_dim() == latent_dim(),
                  "ModelBundle: recognition latent dim mismatch");
    require_shape(recognition.in_dim() == obs_dim() + input_dim() + 2 * latent_dim(),
                  "ModelBundle: recognition input dim mismatch");
  }

  Index dynamics_param_count() const {
    return dynamics.weights.size() + dynamics.centers.size() +
           dynamics.log_inverse_widths.size() + dynamics.input_map.size() + 1;
  }
  Index observation_param_count() const {
    return observation.loading.size() + observation.bias.size() +
           (observation.kind == ObservationKind::gaussian ? 1 : 0);
  }
  Index recognition_param_count() const {
    return recognition.hidden_weights.size() + recognition.hidden_bias.size() +
           recognition.output_weights.size() + recognition.output_bias.size();
  }
  Index param_count() const {
    return dynamics_param_count() + observation_param_count() + recognition_param_count();
  }

  Vec to_flat() const {
    Vec flat(param_count());
    Index at = 0;
    auto put_mat = [&](const Mat& m) {
      for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) flat[at++] = m(i, j);
    };
    auto put_vec = [&](const Vec& v) {
      for (Index i = 0; i < v.size(); ++i) flat[at++] = v[i];
    };
    put_mat(dynamics.weights);
    put_mat(dynamics.centers);
    put_vec(dynamics.log_inverse_widths);
    put_mat(dynamics.input_map);
    flat[at++] = dynamics.log_state_noise_var;
    put_mat(observation.loading);
    put_vec(observation.bias);
    if (observation.kind == ObservationKind::gaussian) flat[at++] = observation.log_noise_var;
    put_mat(recognition.hidden_weights);
    put_vec(recognition.hidden_bias);
    put_mat(recognition.output_weights);
    put_vec(recognition.output_bias);
    return flat;
  }

  void from_flat(const Vec& flat) {
    require_shape(flat.size() == param_count(), "from_flat: length mismatch");
    Index at = 0;
    auto get_mat = [&](Mat& m) {
      for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = flat[at++];
    };
    auto get_vec = [&](Vec& v) {
      for (Index i = 0; i < v.size(); ++i) v[i] = flat[at++];
    };
    get_mat(dynamics.weights);
    get_mat(dynamics.centers);
    get_vec(dynamics.log_inverse_widths);
    get_mat(dynamics.input_map);
    dynamics.log_state_noise_var = flat[at++];
    get_mat(observation.loading);
    get_vec(observation.bias);
    if (observation.kind == ObservationKind::gaussian) observation.log_noise_var = flat[at++];
    get_mat(recognition.hidden_weights);
    get_vec(recognition.hidden_bias);
    get_mat(recognition.output_weights);
    get_vec(recognition.output_bias);
  }
};

// Fresh bundle: zero dynamics weights and input map, RBF centers uniform in a
// box, sigma^2 = 1, random unit-norm loading columns (callers typically
// replace them via init_loading_fa), fan-in-scaled recognition net.
inline ModelBundle init_bundle(Index n, Index m, Index p, Index q, Index r,
                               ObservationKind kind, Rng& rng, double center_lo = -2.0,
                               double center_hi = 2.0) {
  require_domain(n >= 1 && m >= 1 && p >= 1 && q >= 1 && r >= 1,
                 "init_bundle: all dimensions must be >= 1");
  ModelBundle b;
  b.dynamics.weights = Mat::Zero(m, r);
  std::uniform_real_distribution<double> unif(center_lo, center_hi);
  b.dynamics.centers = Mat(r, m);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < m; ++j) b.dynamics.centers(i, j) = unif(rng);
  b.dynamics.log_inverse_widths = log_inverse_widths_from_centers(b.dynamics.centers);
  b.dynamics.input_map = Mat::Zero(m, p);
  b.dynamics.log_state_noise_var = 0.0;

  b.observation.loading = normalize_loading(randn_mat(n, m, rng));
  b.observation.bias = Vec::Zero(n);
  b.observation.kind = kind;
  b.observation.log_noise_var = 0.0;

  b.recognition = init_recognition(n, m, p, q, rng);
  b.check();
  return b;
}

// ---------------------------------------------------------------------------
// Training configuration and per-step records
// ---------------------------------------------------------------------------

struct TrainConfig {
  double penalty_gamma = 1.0;  // weight of the 1/2 gamma sigma^2 state-noise prior
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_hat = 1e-8;
  double grad_clip = 10.0;  // global-norm threshold; infinity disables
  int updates_per_step = 1;
  std::uint64_t seed = 0;
  int warmup_passes = 0;          // offline passes over the data before the online pass
  long reseed_centers_at = 0;     // global update index; 0 disables
  bool train_dynamics = true;
  bool train_observation = true;
  bool train_recognition = true;
  Nonlinearity nonlinearity = Nonlinearity::tanh;

  void check() const {
    require_domain(penalty_gamma >= 0.0, "TrainConfig: penalty_gamma must be >= 0");
    require_domain(updates_per_step >= 1, "TrainConfig: updates_per_step must be >= 1");
    require_domain(grad_clip > 0.0, "TrainConfig: grad_clip must be positive");
  }
};

struct FilterState {
  DiagGaussian posterior;
  long step_index = 0;

  static FilterState initial(Index m) {
    return FilterState{DiagGaussian(Vec::Zero(m), Vec::Ones(m)), 0};
  }
};

// One step's lower-bound decomposition, reported positively as in the paper's
// convergence plots; objective = reconstruction + dynamics + entropy - penalty
// and the training loss is its negative.
struct StepDiagnostics {
  double reconstruction_ll = 0.0;
  double dynamics_ll = 0.0;
  double entropy = 0.0;
  double objective = 0.0;
  double wall_time = 0.0;  // seconds
};

// The two standard-normal draws of a step (Algorithm 1 draws both fresh).
struct StepNoise {
  Vec eps_t;
  Vec eps_prev;

  static StepNoise draw(Index m, Rng& rng) {
    StepNoise n;
    n.eps_t = randn(m, rng);
    n.eps_prev = randn(m, rng);
    return n;
  }
};

// ---------------------------------------------------------------------------
// Per-step objective (the reparameterized lower bound) and its gradient
// ---------------------------------------------------------------------------

namespace detail {

// Handles into the tape for one step's computation.
struct StepGraph {
  ad::Var w_g, centers, liw, input_map, log_sigma2;
  ad::Var loading, bias, log_obs_var;
  ad::Var hw, hb, ow, ob;
  ad::Var recon, dyn, entropy, objective, loss;
  ad::Var mu, s;
};

// Builds loss = -(log p(y|x~_t) + E_q log p(x_t|x~_{t-1}) + H(q) - 1/2 gamma sigma^2).
// The previous posterior enters as constants: gradients are truncated at lag 1,
// which is what keeps the per-step cost constant.
inline StepGraph build_step_graph(ad::Tape& tape, const Vec& y, const Vec& u_prev,
                                  const FilterState& state_prev, const ModelBundle& bundle,
                                  const TrainConfig& cfg, const StepNoise& noise) {
  const Index m = bundle.latent_dim();
  require_shape(y.size() == bundle.obs_dim(), "step_loss: observation length mismatch");
  require_shape(u_prev.size() == bundle.input_dim(), "step_loss: input length mismatch");
  require_shape(noise.eps_t.size() == m && noise.eps_prev.size() == m,
                "step_loss: noise length mismatch");
  require_shape(state_prev.posterior.dim() == m, "step_loss: state dimension mismatch");

  StepGraph g;
  g.w_g = tape.input(bundle.dynamics.weights);
  g.centers = tape.input(bundle.dynamics.centers);
  g.liw = tape.input(bundle.dynamics.log_inverse_widths);
  g.input_map = tape.input(bundle.dynamics.input_map);
  g.log_sigma2 = tape.scalar_input(bundle.dynamics.log_state_noise_var);
  g.loading = tape.input(bundle.observation.loading);
  g.bias = tape.input(bundle.observation.bias);
  if (bundle.observation.kind == ObservationKind::gaussian)
    g.log_obs_var = tape.scalar_input(bundle.observation.log_noise_var);
  g.hw = tape.input(bundle.recognition.hidden_weights);
  g.hb = tape.input(bundle.recognition.hidden_bias);
  g.ow = tape.input(bundle.recognition.output_weights);
  g.ob = tape.input(bundle.recognition.output_bias);

  // recognition: (y, u_{t-1}, mu_{t-1}, log s_{t-1}) -> (mu_t, s_t)
  ad::Var z = tape.constant(recognition_input(y, u_prev, state_prev.posterior));
  ad::Var pre = tape.add(tape.matvec(g.hw, z), g.hb);
  ad::Var h = cfg.nonlinearity == Nonlinearity::tanh ? tape.tanh(pre) : tape.relu(pre);
  ad::Var o = tape.add(tape.matvec(g.ow, h), g.ob);
  g.mu = tape.segment(o, 0, m);
  g.s = tape.exp_floor(tape.segment(o, m, m), kVarianceFloor);

  // reparameterized sample x~_t and reconstruction term
  ad::Var x_t = tape.add(g.mu, tape.hadamard(tape.sqrt(g.s), tape.constant(noise.eps_t)));
  ad::Var eta = tape.add(tape.matvec(g.loading, x_t), g.bias);
  g.recon = bundle.observation.kind == ObservationKind::poisson_canonical
                ? tape.poisson_loglik(eta, y)
                : tape.gaussian_loglik(eta, g.log_obs_var, y);

  // dynamics term through the stored previous sample (no backprop across steps)
  const Vec x_prev = reparam_sample(state_prev.posterior, noise.eps_prev);
  ad::Var x_prev_v = tape.constant(x_prev);
  ad::Var phi = tape.rbf_features(x_prev_v, g.centers, g.liw);
  ad::Var a = tape.add(tape.add(x_prev_v, tape.matvec(g.w_g, phi)),
                       tape.matvec(g.input_map, tape.constant(u_prev)));
  g.dyn = tape.expected_transition(g.mu, g.s, a, g.log_sigma2);

  g.entropy = tape.gaussian_entropy(g.s);
  ad::Var penalty = tape.scale(tape.exp(g.log_sigma2), 0.5 * cfg.penalty_gamma);
  g.objective = tape.sub(tape.add(tape.add(g.recon, g.dyn), g.entropy), penalty);
  g.loss = tape.neg(g.objective);
  return g;
}

inline StepDiagnostics diagnostics_from_graph(const ad::Tape& tape, const StepGraph& g) {
  StepDiagnostics d;
  d.reconstruction_ll = tape.scalar(g.recon);
  d.dynamics_ll = tape.scalar(g.dyn);
  d.entropy = tape.scalar(g.entropy);
  d.objective = tape.scalar(g.objective);
  return d;
}

inline FilterState state_from_graph(const ad::Tape& tape, const StepGraph& g,
                                    const FilterState& prev) {
  FilterState s;
  s.posterior = DiagGaussian(tape.value(g.mu).col(0), tape.value(g.s).col(0));
  s.step_index = prev.step_index + 1;
  return s;
}

inline void check_finite_loss(const ad::Tape& tape, const StepGraph& g) {
  if (std::isfinite(tape.scalar(g.loss))) return;
  std::string bad = !std::isfinite(tape.scalar(g.recon))     ? "reconstruction"
                    : !std::isfinite(tape.scalar(g.dyn))     ? "dynamics"
                    : !std::isfinite(tape.scalar(g.entropy)) ? "entropy"
                                                             : "penalty";
  throw numeric_error("step_loss: non-finite " + bad + " term");
}

// Gradient of the loss w.r.t. the flat parameter vector, in to_flat order.
inline Vec pack_gradient(const ad::Tape& tape, const StepGraph& g, const ModelBundle& bundle) {
  Vec grad(bundle.param_count());
  Index at = 0;
  auto put = [&](const Mat& m) {
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) grad[at++] = m(i, j);
  };
  put(tape.grad(g.w_g));
  put(tape.grad(g.centers));
  put(tape.grad(g.liw));
  put(tape.grad(g.input_map));
  grad[at++] = tape.grad(g.log_sigma2)(0, 0);
  put(tape.grad(g.loading));
  put(tape.grad(g.bias));
  if (bundle.observation.kind == ObservationKind::gaussian)
    grad[at++] = tape.grad(g.log_obs_var)(0, 0);
  put(tape.grad(g.hw));
  put(tape.grad(g.hb));
  put(tape.grad(g.ow));
  put(tape.grad(g.ob));
  return grad;
}

inline void mask_gradient(Vec& grad, const ModelBundle& bundle, const TrainConfig& cfg) {
  Index at = 0;
  if (!cfg.train_dynamics) grad.segment(at, bundle.dynamics_param_count()).setZero();
  at += bundle.dynamics_param_count();
  if (!cfg.train_observation) grad.segment(at, bundle.observation_param_count()).setZero();
  at += bundle.observation_param_count();
  if (!cfg.train_recognition) grad.segment(at, bundle.recognition_param_count()).setZero();
}

}  // namespace detail

struct StepEval {
  double loss = 0.0;
  FilterState state;
  StepDiagnostics diag;
};

// Evaluates the per-step loss, the next posterior, and the ELBO decomposition
// for given noise draws. Deterministic in all arguments.
inline StepEval step_loss(const Vec& y, const Vec& u_prev, const FilterState& state_prev,
                          const ModelBundle& bundle, const TrainConfig& cfg,
                          const StepNoise& noise) {
  ad::Tape tape;
  auto g = detail::build_step_graph(tape, y, u_prev, state_prev, bundle, cfg, noise);
  detail::check_finite_loss(tape, g);
  StepEval out;
  out.loss = tape.scalar(g.loss);
  out.state = detail::state_from_graph(tape, g, state_prev);
  out.diag = detail::diagnostics_from_graph(tape, g);
  return out;
}

// rng overload: draws the two noise vectors then defers to the deterministic core.
inline StepEval step_loss(const Vec& y, const Vec& u_prev, const FilterState& state_prev,
                          const ModelBundle& bundle, const TrainConfig& cfg, Rng& rng) {
  return step_loss(y, u_prev, state_prev, bundle, cfg,
                   StepNoise::draw(bundle.latent_dim(), rng));
}

struct StepGrad {
  StepEval eval;
  Vec grad;  // d loss / d Theta, to_flat order
};

// Exact reverse-mode gradient of step_loss over every parameter block, sharing
// the forward pass's noise draws.
inline StepGrad grad_step_loss(const Vec& y, const Vec& u_prev, const FilterState& state_prev,
                               const ModelBundle& bundle, const TrainConfig& cfg,
                               const StepNoise& noise) {
  ad::Tape tape;
  auto g = detail::build_step_graph(tape, y, u_prev, state_prev, bundle, cfg, noise);
  detail::check_finite_loss(tape, g);
  tape.backward(g.loss);
  StepGrad out;
  out.eval.loss = tape.scalar(g.loss);
  out.eval.state = detail::state_from_graph(tape, g, state_prev);
  out.eval.diag = detail::diagnostics_from_graph(tape, g);
  out.grad = detail::pack_gradient(tape, g, bundle);
  return out;
}

// ---------------------------------------------------------------------------
// Algorithm core: one dual-estimation step
// ---------------------------------------------------------------------------

struct StepOutcome {
  FilterState state;
  StepDiagnostics diag;
  bool updated = false;
};

// One observation in, one (or updates_per_step) optimizer update(s) out.
// The carried posterior is the recognition output of the final forward pass,
// computed before that pass's parameter update, as in the single-step
// filtering procedure. A non-finite gradient skips the update and leaves the
// bundle unchanged; the loading matrix is column-normalized after every update.
inline StepOutcome filter_step(const Vec& y, const Vec& u_prev, const FilterState& state,
                               ModelBundle& bundle, AdamState& opt, const TrainConfig& cfg,
                               Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  StepOutcome out;
  for (int k = 0; k < cfg.updates_per_step; ++k) {
    const StepNoise noise = StepNoise::draw(bundle.latent_dim(), rng);
    StepGrad sg = grad_step_loss(y, u_prev, state, bundle, cfg, noise);
    out.state = sg.eval.state;
    out.diag = sg.eval.diag;
    detail::mask_gradient(sg.grad, bundle, cfg);
    clip_by_global_norm(sg.grad, cfg.grad_clip);
    Vec flat = bundle.to_flat();
    if (adam_update(flat, sg.grad, opt)) {
      bundle.from_flat(flat);
      bundle.observation.loading = normalize_loading(std::move(bundle.observation.loading));
      out.updated = true;
    }
  }
  out.diag.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline AdamState make_optimizer(const ModelBundle& bundle, const TrainConfig& cfg) {
  return AdamState::init(bundle.param_count(), cfg.learning_rate, cfg.beta1, cfg.beta2,
                         cfg.epsilon_hat);
}

// ---------------------------------------------------------------------------
// Multi-sequence online filtering
// ---------------------------------------------------------------------------

struct Sequence {
  Mat Y;  // T x n
  Mat U;  // T x p
  Index length() const { return Y.rows(); }
};

struct OnlineResult {
  ModelBundle bundle;
  std::vector<Mat> posterior_means;  // per sequence, T x m, final pass
  std::vector<Mat> posterior_vars;   // per sequence, T x m, final pass
  std::vector<StepDiagnostics> diagnostics;  // per update step, averaged over live sequences
  long skipped_updates = 0;
};

namespace detail {

// Deterministic center re-seed from collected posterior means: r of them,
// evenly spaced in time, with widths from the nearest-neighbor rule. Dynamics
// weights restart at zero along with their optimizer moments.
inline void reseed_centers(ModelBundle& bundle, AdamState& opt, const std::vector<Vec>& means) {
  const Index r = bundle.basis_count();
  if (static_cast<Index>(means.size()) < r) return;
  Mat centers(r, bundle.latent_dim());
  const double stride = static_cast<double>(means.size()) / static_cast<double>(r);
  for (Index i = 0; i < r; ++i) {
    const auto at = static_cast<std::size_t>(stride * (static_cast<double>(i) + 0.5));
    centers.row(i) = means[std::min(at, means.size() - 1)].transpose();
  }
  bundle.dynamics.centers = centers;
  bundle.dynamics.log_inverse_widths = log_inverse_widths_from_centers(centers);
  bundle.dynamics.weights.setZero();
  const Index count = bundle.dynamics_param_count();
  opt.first_moment.segment(0, count).setZero();
  opt.second_moment.segment(0, count).setZero();
}

}  // namespace detail

// Filters all sequences in lockstep by time index with a shared model: at each
// step every live sequence contributes a gradient and the update uses their
// mean; posterior recursions stay independent and start at mu_0 = 0, s_0 = 1.
// The per-step noise draw is shared across sequences, so duplicated sequences
// reproduce the single-sequence parameter trajectory exactly. warmup_passes
// extra passes run before the final one; diagnostics cover every pass, while
// posterior histories come from the final pass.
inline OnlineResult filter_online(const std::vector<Sequence>& sequences,
                                  const ModelBundle& bundle0, const TrainConfig& cfg) {
  cfg.check();
  require_shape(!sequences.empty(), "filter_online: no sequences");
  const Index n = bundle0.obs_dim();
  const Index p = bundle0.input_dim();
  const Index m = bundle0.latent_dim();
  Index max_len = 0;
  for (const auto& s : sequences) {
    if (s.Y.cols() != n || s.U.cols() != p || s.U.rows() != s.Y.rows())
      throw config_error("filter_online: sequence dimensions do not match the model");
    max_len = std::max(max_len, s.length());
  }

  OnlineResult out;
  out.bundle = bundle0;
  AdamState opt = make_optimizer(bundle0, cfg);
  Rng noise_rng = make_rng(cfg.seed, 1);

  const std::size_t n_seq = sequences.size();
  out.posterior_means.assign(n_seq, Mat());
  out.posterior_vars.assign(n_seq, Mat());
  for (std::size_t i = 0; i < n_seq; ++i) {
    out.posterior_means[i] = Mat::Zero(sequences[i].length(), m);
    out.posterior_vars[i] = Mat::Zero(sequences[i].length(), m);
  }

  std::vector<Vec> mean_buffer;  // for center re-seeding
  const bool want_reseed = cfg.reseed_centers_at > 0;
  long global_update = 0;

  const int passes = cfg.warmup_passes + 1;
  std::vector<FilterState> states(n_seq);
  std::vector<Vec> grads(n_seq);
  for (int pass = 0; pass < passes; ++pass) {
    const bool final_pass = pass == passes - 1;
    for (std::size_t i = 0; i < n_seq; ++i) states[i] = FilterState::initial(m);
    for (Index t = 0; t < max_len; ++t) {
      const auto t0 = std::chrono::steady_clock::now();
      for (int k = 0; k < cfg.updates_per_step; ++k) {
        const StepNoise noise = StepNoise::draw(m, noise_rng);
        Vec grad_mean = Vec::Zero(out.bundle.param_count());
        StepDiagnostics diag_mean;
        int live = 0;
        for (std::size_t i = 0; i < n_seq; ++i) {
          if (t >= sequences[i].length()) continue;
          const Vec y = sequences[i].Y.row(t).transpose();
          const Vec u = sequences[i].U.row(t).transpose();
          bool ok = true;
          StepGrad sg;
          try {
            sg = grad_step_loss(y, u, states[i], out.bundle, cfg, noise);
          } catch (const numeric_error&) {
            ok = false;  // carry the posterior forward unchanged, skip this term
          }
          if (ok) {
            states[i] = sg.eval.state;
            grad_mean += sg.grad;
            diag_mean.reconstruction_ll += sg.eval.diag.reconstruction_ll;
            diag_mean.dynamics_ll += sg.eval.diag.dynamics_ll;
            diag_mean.entropy += sg.eval.diag.entropy;
            diag_mean.objective += sg.eval.diag.objective;
            ++live;
          } else {
            states[i].step_index += 1;
            ++out.skipped_updates;
          }
          if (final_pass && k == cfg.updates_per_step - 1) {
            out.posterior_means[i].row(t) = states[i].posterior.mean.transpose();
            out.posterior_vars[i].row(t) = states[i].posterior.var.transpose();
          }
        }
        if (live == 0) continue;
        grad_mean /= static_cast<double>(live);
        diag_mean.reconstruction_ll /= live;
        diag_mean.dynamics_ll /= live;
        diag_mean.entropy /= live;
        diag_mean.objective /= live;
        detail::mask_gradient(grad_mean, out.bundle, cfg);
        clip_by_global_norm(grad_mean, cfg.grad_clip);
        Vec flat = out.bundle.to_flat();
        if (adam_update(flat, grad_mean, opt)) {
          out.bundle.from_flat(flat);
          out.bundle.observation.loading =
              normalize_loading(std::move(out.bundle.observation.loading));
        } else {
          ++out.skipped_updates;
        }
        ++global_update;
        if (k == cfg.updates_per_step - 1) {
          diag_mean.wall_time =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          out.diagnostics.push_back(diag_mean);
        }
        if (want_reseed) {
          for (std::size_t i = 0; i < n_seq; ++i)
            if (t < sequences[i].length()) mean_buffer.push_back(states[i].posterior.mean);
          if (global_update == cfg.reseed_centers_at)
            detail::reseed_centers(out.bundle, opt, mean_buffer);
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

struct Rollout {
  std::vector<Mat> latents;       // n_trials matrices, horizon x m
  std::vector<Mat> observations;  // n_trials matrices, horizon x n
};

// Monte Carlo continuation: draw x_t from the current posterior, iterate
// x <- x + g(x) + B u + sigma eps with fresh noise, and sample observations
// from the trained generative model along the way.
inline Rollout predict_rollout(const FilterState& state, const ModelBundle& bundle,
                               Index horizon, Index n_trials, Rng& rng,
                               const Mat* inputs = nullptr) {
  require_domain(horizon >= 1 && n_trials >= 1, "predict_rollout: need horizon, trials >= 1");
  const Index m = bundle.latent_dim();
  const Index p = bundle.input_dim();
  if (inputs != nullptr)
    require_shape(inputs->rows() >= horizon && inputs->cols() == p,
                  "predict_rollout: inputs must be horizon x p");
  const double sigma = std::sqrt(bundle.dynamics.state_noise_var());

  Rollout out;
  out.latents.reserve(n_trials);
  out.observations.reserve(n_trials);
  const Vec u_zero = Vec::Zero(p);
  for (Index trial = 0; trial < n_trials; ++trial) {
    Mat X(horizon, m);
    Mat Y(horizon, bundle.obs_dim());
    Vec x = reparam_sample(state.posterior, randn(m, rng));
    for (Index k = 0; k < horizon; ++k) {
      const Vec u = inputs != nullptr ? Vec(inputs->row(k).transpose()) : u_zero;
      x = x + drift(x, u, bundle.dynamics) + sigma * randn(m, rng);
      X.row(k) = x.transpose();
      Y.row(k) = sample_observation(x, bundle.observation, rng).transpose();
    }
    out.latents.push_back(std::move(X));
    out.observations.push_back(std::move(Y));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loading-matrix initialization by factor analysis
// ---------------------------------------------------------------------------

struct LoadingInit {
  Mat loading;  // n x m, unit columns
  Vec bias;     // n
  bool degenerate_fallback = false;
};

// Leading factor directions of the sample covariance, column-normalized;
// bias = channel means (log mean rate for the Poisson kind). A degenerate
// covariance falls back to random orthonormal columns.
inline LoadingInit init_loading_fa(const Mat& Y, Index m, ObservationKind kind, Rng& rng) {
  const Index T = Y.rows();
  const Index n = Y.cols();
  require_domain(T >= 10 * m, "init_loading_fa: need at least 10*m time bins");
  require_shape(m >= 1 && m <= n, "init_loading_fa: latent dim out of range");

  LoadingInit out;
  const Vec col_mean = Y.colwise().mean().transpose();
  if (kind == ObservationKind::poisson_canonical) {
    const double rate_floor = 0.5 / static_cast<double>(T);
    out.bias = col_mean.array().max(rate_floor).log();
  } else {
    out.bias = col_mean;
  }

  Mat centered = Y.rowwise() - col_mean.transpose();
  Mat cov = centered.transpose() * centered / static_cast<double>(std::max<Index>(T - 1, 1));
  Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
  const bool degenerate = eig.info() != Eigen::Success || !eig.eigenvalues().allFinite() ||
                          eig.eigenvalues()(n - 1) <= 1e-12;
  if (degenerate) {
    Mat g = randn_mat(n, m, rng);
    Eigen::HouseholderQR<Mat> qr(g);
    out.loading = Mat(qr.householderQ()).leftCols(m);
    out.degenerate_fallback = true;
    return out;
  }
  Mat C(n, m);
  for (Index j = 0; j < m; ++j) C.col(j) = eig.eigenvectors().col(n - 1 - j);
  out.loading = normalize_loading(std::move(C));
  return out;
}

}  // namespace vjf
