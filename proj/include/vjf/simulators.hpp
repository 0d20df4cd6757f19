#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vjf/core.hpp"
#include "vjf/generative.hpp"

namespace vjf {

// One simulated or recorded sequence. X rows are latent states x_0..x_{T-1};
// U.row(t) is the input applied during the transition t -> t+1; Y is filled by
// generate_observations.
struct Trajectory {
  Mat X;  // T x m
  Mat Y;  // T x n (empty until observations are generated)
  Mat U;  // T x p
  double dt = 0.1;

  Index length() const { return X.rows(); }
};

enum class SystemKind { ring, fhn, lorenz, switching_lds, bistable };

inline std::string to_string(SystemKind k) {
  switch (k) {
    case SystemKind::ring: return "ring";
    case SystemKind::fhn: return "fhn";
    case SystemKind::lorenz: return "lorenz";
    case SystemKind::switching_lds: return "switching-lds";
    case SystemKind::bistable: return "bistable";
  }
  return "?";
}

inline SystemKind system_kind_from_string(const std::string& s) {
  if (s == "ring") return SystemKind::ring;
  if (s == "fhn") return SystemKind::fhn;
  if (s == "lorenz") return SystemKind::lorenz;
  if (s == "switching-lds") return SystemKind::switching_lds;
  if (s == "bistable") return SystemKind::bistable;
  throw config_error("unknown system: " + s);
}

struct RingParams {
  double r0 = 1.0;
  double tau_r = 1.0;
  double tau_phi = 1.0;
  double input_magnitude = 1.0;  // tangent drift I; sign drawn per sequence
};

struct FhnParams {
  double a = -0.1;
  double b = 0.01;
  double c = 0.02;
  double current = 0.1;  // constant stimulus I, part of the intrinsic dynamics
};

struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};

struct SwitchingLdsParams {
  double decay = 0.995;   // spectral radius of both regimes; must stay < 1
  double theta = 0.1;     // rotation per step, clockwise before the switch
  long switch_at = 2000;  // step index of the regime change
  double kick_norm = 1.0; // state perturbation applied at the switch
};

struct BistableParams {
  double input_magnitude = 0.0;  // constant drive on the x coordinate
};

struct SimSpec {
  SystemKind system = SystemKind::ring;
  Index n_sequences = 1;
  Index T = 1000;
  double dt = 0.1;
  double noise_std = 0.0;  // per-step state noise, added after the deterministic step
  std::uint64_t seed = 0;
  Index transient_steps = 0;  // integrated and discarded before recording
  std::optional<Mat> x0;      // n_sequences x m; overrides the default start scheme

  RingParams ring;
  FhnParams fhn;
  LorenzParams lorenz;
  SwitchingLdsParams switching;
  BistableParams bistable;

  void check() const {
    require_domain(dt > 0.0, "SimSpec: dt must be positive");
    require_domain(noise_std >= 0.0, "SimSpec: noise_std must be >= 0");
    require_domain(n_sequences >= 1 && T >= 1, "SimSpec: need sequences and steps");
  }
};

inline Index system_latent_dim(SystemKind k) { return k == SystemKind::lorenz ? 3 : 2; }

// ---------------------------------------------------------------------------
// Velocity fields (continuous-time right-hand sides)
// ---------------------------------------------------------------------------

// Cartesian form of the polar ring system tau_r r' = r0 - r, tau_phi phi' = I:
//   x' = (r0 - r) x / (tau_r r) - I y / tau_phi
//   y' = (r0 - r) y / (tau_r r) + I x / tau_phi
inline Vec ring_velocity(const Vec& x, double input, const RingParams& p) {
  const double r = std::max(x.norm(), 1e-12);
  const double radial = (p.r0 - r) / (p.tau_r * r);
  Vec v(2);
  v[0] = radial * x[0] - input * x[1] / p.tau_phi;
  v[1] = radial * x[1] + input * x[0] / p.tau_phi;
  return v;
}

inline Vec fhn_velocity(const Vec& x, const FhnParams& p) {
  Vec v(2);
  v[0] = x[0] * (p.a - x[0]) * (x[0] - 1.0) - x[1] + p.current;
  v[1] = p.b * x[0] - p.c * x[1];
  return v;
}

inline Vec lorenz_velocity(const Vec& x, const LorenzParams& p) {
  Vec v(3);
  v[0] = p.sigma * (x[1] - x[0]);
  v[1] = x[0] * (p.rho - x[2]) - x[1];
  v[2] = x[0] * x[1] - p.beta * x[2];
  return v;
}

// Double-well drift with stable points (+-1, 0) and a saddle at the origin.
inline Vec bistable_velocity(const Vec& x, double input) {
  Vec v(2);
  v[0] = x[0] - x[0] * x[0] * x[0] + input;
  v[1] = -x[1];
  return v;
}

inline Mat lds_rotation(double decay, double theta) {
  Mat a(2, 2);
  a << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return decay * a;
}

// ---------------------------------------------------------------------------
// Integrators
// ---------------------------------------------------------------------------

namespace detail {

// Explicit Euler-Maruyama; per-step additive noise in Cartesian coordinates.
// One rng stream per sequence, drawn in a fixed per-step order, so extending T
// extends rather than re-randomizes a trajectory.
template <class Velocity>
Trajectory integrate_em(Velocity&& vel, Vec x, Index T, Index transient, double dt,
                        double noise_std, Index m, Rng& rng) {
  Trajectory traj;
  traj.X = Mat(T, m);
  traj.dt = dt;
  auto step = [&](Vec& state) {
    state += dt * vel(state);
    if (noise_std > 0.0) state += noise_std * randn(m, rng);
  };
  for (Index t = 0; t < transient; ++t) step(x);
  for (Index t = 0; t < T; ++t) {
    traj.X.row(t) = x.transpose();
    if (t + 1 < T) step(x);
  }
  return traj;
}

inline Vec default_start(SystemKind kind, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  switch (kind) {
    case SystemKind::ring: {
      const double angle = 2.0 * std::numbers::pi * unif(rng);
      const double radius = 0.8 + 0.4 * unif(rng);
      Vec x(2);
      x << radius * std::cos(angle), radius * std::sin(angle);
      return x;
    }
    case SystemKind::fhn: {
      Vec x(2);
      x << -0.5 + 1.5 * unif(rng), 0.5 * unif(rng);
      return x;
    }
    case SystemKind::bistable: {
      Vec x(2);
      x << 0.2 * (unif(rng) - 0.5), 0.2 * (unif(rng) - 0.5);
      return x;
    }
    case SystemKind::switching_lds: {
      Vec x(2);
      x << unif(rng) - 0.5, unif(rng) - 0.5;
      return x;
    }
    case SystemKind::lorenz:
      break;  // handled by the evenly-spaced grid
  }
  throw config_error("default_start: unsupported system");
}

// Evenly spaced lattice starts for the chaotic system; k^3 >= count grid,
// first `count` points in lexicographic order.
inline Mat lorenz_grid_starts(Index count) {
  const Index k = static_cast<Index>(std::ceil(std::cbrt(static_cast<double>(count))));
  const double lo[3] = {-15.0, -15.0, 5.0};
  const double hi[3] = {15.0, 15.0, 40.0};
  Mat starts(count, 3);
  Index at = 0;
  for (Index i = 0; i < k && at < count; ++i)
    for (Index j = 0; j < k && at < count; ++j)
      for (Index l = 0; l < k && at < count; ++l) {
        const double f[3] = {(i + 0.5) / static_cast<double>(k),
                             (j + 0.5) / static_cast<double>(k),
                             (l + 0.5) / static_cast<double>(k)};
        for (int d = 0; d < 3; ++d) starts(at, d) = lo[d] + f[d] * (hi[d] - lo[d]);
        ++at;
      }
  return starts;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// System simulators
// ---------------------------------------------------------------------------

inline std::vector<Trajectory> simulate_ring(const SimSpec& spec) {
  spec.check();
  std::vector<Trajectory> out;
  out.reserve(spec.n_sequences);
  for (Index i = 0; i < spec.n_sequences; ++i) {
    Rng rng = make_rng(spec.seed, 100 + static_cast<std::uint64_t>(i));
    Vec x = spec.x0 ? Vec(spec.x0->row(i).transpose()) : detail::default_start(spec.system, rng);
    require_domain(x.norm() > 1e-9, "simulate_ring: start at r=0 is singular");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double input = (unif(rng) < 0.5 ? -1.0 : 1.0) * spec.ring.input_magnitude;
    auto vel = [&](const Vec& s) { return ring_velocity(s, input, spec.ring); };
    Trajectory traj = detail::integrate_em(vel, x, spec.T, spec.transient_steps, spec.dt,
                                           spec.noise_std, 2, rng);
    traj.U = Mat::Constant(spec.T, 1, input);
    out.push_back(std::move(traj));
  }
  return out;
}

inline std::vector<Trajectory> simulate_fhn(const SimSpec& spec) {
  spec.check();
  std::vector<Trajectory> out;
  out.reserve(spec.n_sequences);
  for (Index i = 0; i < spec.n_sequences; ++i) {
    Rng rng = make_rng(spec.seed, 100 + static_cast<std::uint64_t>(i));
    Vec x = spec.x0 ? Vec(spec.x0->row(i).transpose()) : detail::default_start(spec.system, rng);
    auto vel = [&](const Vec& s) { return fhn_velocity(s, spec.fhn); };
    Trajectory traj = detail::integrate_em(vel, x, spec.T, spec.transient_steps, spec.dt,
                                           spec.noise_std, 2, rng);
    traj.U = Mat::Zero(spec.T, 1);
    out.push_back(std::move(traj));
  }
  return out;
}

inline std::vector<Trajectory> simulate_lorenz(const SimSpec& spec) {
  spec.check();
  Mat starts = spec.x0 ? *spec.x0 : detail::lorenz_grid_starts(spec.n_sequences);
  require_shape(starts.rows() >= spec.n_sequences && starts.cols() == 3,
                "simulate_lorenz: starts must be n_sequences x 3");
  std::vector<Trajectory> out;
  out.reserve(spec.n_sequences);
  for (Index i = 0; i < spec.n_sequences; ++i) {
    Rng rng = make_rng(spec.seed, 100 + static_cast<std::uint64_t>(i));
    Vec x = starts.row(i).transpose();
    auto vel = [&](const Vec& s) { return lorenz_velocity(s, spec.lorenz); };
    Trajectory traj = detail::integrate_em(vel, x, spec.T, spec.transient_steps, spec.dt,
                                           spec.noise_std, 3, rng);
    traj.U = Mat::Zero(spec.T, 1);
    out.push_back(std::move(traj));
  }
  return out;
}

// Discrete map x_{t+1} = A_k x_t + eps: a spiral-in that flips rotation sign at
// switch_at and takes a state kick of the configured norm there.
inline std::vector<Trajectory> simulate_switching_lds(const SimSpec& spec) {
  spec.check();
  const Mat a1 = lds_rotation(spec.switching.decay, -spec.switching.theta);
  const Mat a2 = lds_rotation(spec.switching.decay, spec.switching.theta);
  if (spec.switching.decay >= 1.0)
    throw config_error("simulate_switching_lds: spectral radius must be < 1 (spiral-in)");
  std::vector<Trajectory> out;
  out.reserve(spec.n_sequences);
  for (Index i = 0; i < spec.n_sequences; ++i) {
    Rng rng = make_rng(spec.seed, 100 + static_cast<std::uint64_t>(i));
    Vec x = spec.x0 ? Vec(spec.x0->row(i).transpose()) : detail::default_start(spec.system, rng);
    Trajectory traj;
    traj.X = Mat(spec.T, 2);
    traj.U = Mat::Zero(spec.T, 1);
    traj.dt = spec.dt;
    for (Index t = 0; t < spec.T; ++t) {
      traj.X.row(t) = x.transpose();
      if (t + 1 >= spec.T) break;
      const Mat& a = (t + 1 < spec.switching.switch_at) ? a1 : a2;
      x = a * x;
      if (spec.noise_std > 0.0) x += spec.noise_std * randn(2, rng);
      if (t + 1 == spec.switching.switch_at) {
        Vec kick = randn(2, rng);
        x += spec.switching.kick_norm * kick / kick.norm();
      }
    }
    out.push_back(std::move(traj));
  }
  return out;
}

inline std::vector<Trajectory> simulate_bistable(const SimSpec& spec) {
  spec.check();
  std::vector<Trajectory> out;
  out.reserve(spec.n_sequences);
  for (Index i = 0; i < spec.n_sequences; ++i) {
    Rng rng = make_rng(spec.seed, 100 + static_cast<std::uint64_t>(i));
    Vec x = spec.x0 ? Vec(spec.x0->row(i).transpose()) : detail::default_start(spec.system, rng);
    const double input = spec.bistable.input_magnitude;
    auto vel = [&](const Vec& s) { return bistable_velocity(s, input); };
    Trajectory traj = detail::integrate_em(vel, x, spec.T, spec.transient_steps, spec.dt,
                                           spec.noise_std, 2, rng);
    traj.U = Mat::Constant(spec.T, 1, input);
    out.push_back(std::move(traj));
  }
  return out;
}

inline std::vector<Trajectory> simulate(const SimSpec& spec) {
  switch (spec.system) {
    case SystemKind::ring: return simulate_ring(spec);
    case SystemKind::fhn: return simulate_fhn(spec);
    case SystemKind::lorenz: return simulate_lorenz(spec);
    case SystemKind::switching_lds: return simulate_switching_lds(spec);
    case SystemKind::bistable: return simulate_bistable(spec);
  }
  throw config_error("simulate: unknown system");
}

// ---------------------------------------------------------------------------
// Observation generation
// ---------------------------------------------------------------------------

struct ObsGenSpec {
  ObservationKind kind = ObservationKind::poisson_canonical;
  Index n = 200;
  double gain = 1.0;         // scale of the unit-norm loading columns
  double noise_std = 1.0;    // Gaussian kind only
  double target_rate = 0.04; // Poisson kind: mean events per bin after bias calibration
};

// Sets b_i so the empirical mean rate over all provided latents equals the
// target exactly: b_i = log target - log mean_t exp(c_i . x_t).
inline void calibrate_poisson_bias(ObservationParams& obs, const std::vector<Trajectory>& trajs,
                                   double target_rate) {
  require_domain(target_rate > 0.0, "calibrate_poisson_bias: rate target must be positive");
  const Index n = obs.obs_dim();
  Vec mean_exp = Vec::Zero(n);
  Index total = 0;
  for (const auto& tr : trajs) {
    for (Index t = 0; t < tr.length(); ++t) {
      mean_exp += (obs.loading * tr.X.row(t).transpose()).array().exp().matrix();
      ++total;
    }
  }
  require_domain(total > 0, "calibrate_poisson_bias: no latents");
  mean_exp /= static_cast<double>(total);
  obs.bias = std::log(target_rate) - mean_exp.array().log();
}

// True observation model used by the simulators: random unit-norm columns
// scaled by gain; Poisson bias calibrated to the target rate, Gaussian bias 0.
inline ObservationParams make_true_observation_model(const std::vector<Trajectory>& trajs,
                                                     const ObsGenSpec& spec, Rng& rng) {
  require_shape(!trajs.empty(), "make_true_observation_model: no trajectories");
  const Index m = trajs.front().X.cols();
  ObservationParams obs;
  obs.kind = spec.kind;
  obs.loading = randn_mat(spec.n, m, rng);
  obs.loading = normalize_loading(std::move(obs.loading)) * spec.gain;
  obs.bias = Vec::Zero(spec.n);
  obs.log_noise_var = 2.0 * std::log(std::max(spec.noise_std, 1e-12));
  if (spec.kind == ObservationKind::poisson_canonical)
    calibrate_poisson_bias(obs, trajs, spec.target_rate);
  return obs;
}

inline Mat generate_observations(const Mat& X, const ObservationParams& obs, Rng& rng) {
  require_shape(X.cols() == obs.latent_dim(), "generate_observations: latent dim mismatch");
  Mat Y(X.rows(), obs.obs_dim());
  for (Index t = 0; t < X.rows(); ++t)
    Y.row(t) = sample_observation(X.row(t).transpose(), obs, rng).transpose();
  return Y;
}

inline void generate_observations(std::vector<Trajectory>& trajs, const ObservationParams& obs,
                                  std::uint64_t seed) {
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    Rng rng = make_rng(seed, 5000 + i);
    trajs[i].Y = generate_observations(trajs[i].X, obs, rng);
  }
}

}  // namespace vjf
