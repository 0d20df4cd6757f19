#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "vjf/simulators.hpp"

using namespace vjf;
using Catch::Approx;

namespace {

SimSpec base_spec(SystemKind system, Index T, double dt, double noise, std::uint64_t seed = 1) {
  SimSpec spec;
  spec.system = system;
  spec.n_sequences = 1;
  spec.T = T;
  spec.dt = dt;
  spec.noise_std = noise;
  spec.seed = seed;
  return spec;
}

Mat single_start(std::initializer_list<double> vals) {
  Mat x0(1, static_cast<Index>(vals.size()));
  Index j = 0;
  for (double v : vals) x0(0, j++) = v;
  return x0;
}

}  // namespace

TEST_CASE("ring: unit circle is invariant without noise or input") {
  SimSpec spec = base_spec(SystemKind::ring, 1000, 0.1, 0.0);
  spec.ring.input_magnitude = 0.0;
  spec.x0 = single_start({1.0, 0.0});
  Trajectory traj = simulate_ring(spec)[0];
  for (Index t = 0; t < traj.length(); ++t)
    CHECK(std::abs(traj.X.row(t).norm() - 1.0) < 1e-10);
}

TEST_CASE("ring: radius decays like 1 + e^{-t}") {
  SimSpec spec = base_spec(SystemKind::ring, 101, 0.01, 0.0);
  spec.ring.input_magnitude = 0.0;
  spec.x0 = single_start({2.0, 0.0});
  Trajectory traj = simulate_ring(spec)[0];
  double prev_r = 2.0;
  for (Index t = 1; t < traj.length(); ++t) {
    const double r = traj.X.row(t).norm();
    CHECK(r < prev_r);  // monotone decay toward 1
    prev_r = r;
  }
  // closed form r(t) = 1 + (r(0)-1) e^{-t} at t = 1, within integrator accuracy
  CHECK(std::abs(traj.X.row(100).norm() - (1.0 + std::exp(-1.0))) < 5 * spec.dt);
}

TEST_CASE("ring: phase advances by I dt / tau_phi per step") {
  SimSpec spec = base_spec(SystemKind::ring, 1001, 0.001, 0.0);
  spec.ring.input_magnitude = 1.0;
  spec.x0 = single_start({1.0, 0.0});
  Trajectory traj = simulate_ring(spec)[0];
  const double input = traj.U(0, 0);
  const double phase_end = std::atan2(traj.X(1000, 1), traj.X(1000, 0));
  // total phase after t = 1 is I * t / tau_phi
  CHECK(std::abs(phase_end - input * 1.0) < 5e-3);
  CHECK(std::abs(traj.X.row(1000).norm() - 1.0) < 1e-3);
}

TEST_CASE("ring: r = 0 start is rejected") {
  SimSpec spec = base_spec(SystemKind::ring, 10, 0.1, 0.0);
  spec.x0 = single_start({0.0, 0.0});
  CHECK_THROWS_AS(simulate_ring(spec), std::domain_error);
}

TEST_CASE("ring: input sign is recorded in U") {
  SimSpec spec = base_spec(SystemKind::ring, 50, 0.1, 0.005);
  spec.n_sequences = 20;
  auto trajs = simulate_ring(spec);
  int pos = 0, neg = 0;
  for (const auto& tr : trajs) {
    CHECK(std::abs(std::abs(tr.U(0, 0)) - 1.0) < 1e-12);
    (tr.U(0, 0) > 0 ? pos : neg)++;
  }
  CHECK(pos > 0);
  CHECK(neg > 0);
}

TEST_CASE("fhn: nullcline intersection is a fixed point") {
  FhnParams p;
  Vec x(2);
  x << 0.5, 0.25;
  CHECK(fhn_velocity(x, p).norm() < 1e-15);
}

TEST_CASE("fhn: trajectory approaches a limit cycle") {
  SimSpec spec = base_spec(SystemKind::fhn, 20000, 0.5, 0.0);
  spec.x0 = single_start({0.2, 0.1});
  Trajectory traj = simulate_fhn(spec)[0];
  // successive peaks of v agree after the transient
  std::vector<double> peaks;
  for (Index t = traj.length() / 2; t + 1 < traj.length(); ++t) {
    if (traj.X(t, 0) > traj.X(t - 1, 0) && traj.X(t, 0) >= traj.X(t + 1, 0))
      peaks.push_back(traj.X(t, 0));
  }
  REQUIRE(peaks.size() >= 3);
  for (std::size_t i = 1; i < peaks.size(); ++i)
    CHECK(std::abs(peaks[i] - peaks[i - 1]) < 1e-3);
  // oscillation, not decay to a point
  const Index half = traj.length() / 2;
  const double v_std = std::sqrt(
      (traj.X.col(0).tail(half).array() - traj.X.col(0).tail(half).mean()).square().mean());
  CHECK(v_std > 0.1);
}

TEST_CASE("lorenz: equilibria of the vector field") {
  LorenzParams p;
  CHECK(lorenz_velocity(Vec::Zero(3), p).norm() == 0.0);
  const double c = std::sqrt(72.0);
  Vec fp(3);
  fp << c, c, 27.0;
  CHECK(lorenz_velocity(fp, p).norm() < 1e-10);
  fp << -c, -c, 27.0;
  CHECK(lorenz_velocity(fp, p).norm() < 1e-10);
}

TEST_CASE("lorenz: sensitive dependence on initial conditions") {
  SimSpec a = base_spec(SystemKind::lorenz, 3500, 0.01, 0.0);
  a.x0 = single_start({1.0, 1.0, 20.0});
  SimSpec b = a;
  b.x0 = single_start({1.0 + 1e-9, 1.0, 20.0});
  Trajectory ta = simulate_lorenz(a)[0];
  Trajectory tb = simulate_lorenz(b)[0];
  double max_sep = 0.0;
  for (Index t = 0; t < ta.length(); ++t)
    max_sep = std::max(max_sep, (ta.X.row(t) - tb.X.row(t)).norm());
  CHECK(max_sep > 1.0);
}

TEST_CASE("lorenz: stays in the attractor box after the transient") {
  SimSpec spec = base_spec(SystemKind::lorenz, 1000, 0.01, 0.0);
  spec.n_sequences = 8;
  spec.transient_steps = 500;
  auto trajs = simulate_lorenz(spec);
  for (const auto& tr : trajs) {
    CHECK(tr.X.col(0).cwiseAbs().maxCoeff() < 30.0);
    CHECK(tr.X.col(1).cwiseAbs().maxCoeff() < 30.0);
    CHECK(tr.X.col(2).minCoeff() > 0.0);
    CHECK(tr.X.col(2).maxCoeff() < 60.0);
  }
}

TEST_CASE("switching lds: regime construction and rotation flip") {
  SwitchingLdsParams p;
  const Mat a1 = lds_rotation(p.decay, -p.theta);
  Eigen::EigenSolver<Mat> eig(a1);
  for (Index i = 0; i < 2; ++i)
    CHECK(std::abs(eig.eigenvalues()[i]) == Approx(0.995).epsilon(1e-12));

  SimSpec spec = base_spec(SystemKind::switching_lds, 3000, 1.0, 0.0);
  spec.switching.switch_at = 1500;
  spec.x0 = single_start({1.0, 0.0});
  Trajectory traj = simulate_switching_lds(spec)[0];
  auto cross = [&](Index t) {
    return traj.X(t, 0) * traj.X(t + 1, 1) - traj.X(t, 1) * traj.X(t + 1, 0);
  };
  CHECK(cross(100) < 0.0);   // clockwise before the switch
  CHECK(cross(2000) > 0.0);  // counter-clockwise after
  // norm decays in regime 1
  CHECK(traj.X.row(100).norm() < traj.X.row(50).norm());
  // the kick re-energizes the state at the switch
  CHECK(traj.X.row(1501).norm() > traj.X.row(1499).norm());
}

TEST_CASE("switching lds: bounded under noise and spiral-in validation") {
  SimSpec spec = base_spec(SystemKind::switching_lds, 5000, 1.0, 0.05);
  spec.switching.switch_at = 2500;
  auto trajs = simulate_switching_lds(spec);
  double max_norm = 0.0;
  for (Index t = 0; t < trajs[0].length(); ++t)
    max_norm = std::max(max_norm, trajs[0].X.row(t).norm());
  CHECK(max_norm < 5.0);

  SimSpec bad = spec;
  bad.switching.decay = 1.01;
  CHECK_THROWS_AS(simulate_switching_lds(bad), config_error);
}

TEST_CASE("bistable: analytic equilibria and sign-dependent convergence") {
  Vec zero = Vec::Zero(2);
  CHECK(bistable_velocity(zero, 0.0).norm() == 0.0);
  Vec plus(2), minus(2);
  plus << 1.0, 0.0;
  minus << -1.0, 0.0;
  CHECK(bistable_velocity(plus, 0.0).norm() == 0.0);
  CHECK(bistable_velocity(minus, 0.0).norm() == 0.0);

  SimSpec spec = base_spec(SystemKind::bistable, 2000, 0.05, 0.0);
  spec.x0 = single_start({0.3, 0.2});
  Trajectory traj = simulate_bistable(spec)[0];
  CHECK((traj.X.row(traj.length() - 1).transpose() - plus).norm() < 1e-3);

  spec.x0 = single_start({-0.3, 0.2});
  traj = simulate_bistable(spec)[0];
  CHECK((traj.X.row(traj.length() - 1).transpose() - minus).norm() < 1e-3);
}

TEST_CASE("bistable: symmetric ensembles split between attractors") {
  SimSpec spec = base_spec(SystemKind::bistable, 800, 0.05, 0.05, 99);
  spec.n_sequences = 500;
  spec.x0 = Mat::Zero(500, 2);
  auto trajs = simulate_bistable(spec);
  int to_plus = 0, to_minus = 0;
  for (const auto& tr : trajs) {
    const double x_end = tr.X(tr.length() - 1, 0);
    if (x_end > 0.5) ++to_plus;
    else if (x_end < -0.5) ++to_minus;
  }
  CHECK(to_plus + to_minus > 450);  // almost all runs decide
  CHECK(to_plus > 175);
  CHECK(to_minus > 175);
}

TEST_CASE("observation generation: gaussian exactness and spike-rate audit") {
  SimSpec spec = base_spec(SystemKind::ring, 400, 0.1, 0.005, 5);
  spec.n_sequences = 4;
  auto trajs = simulate_ring(spec);

  Rng rng = make_rng(50);
  ObsGenSpec gspec;
  gspec.kind = ObservationKind::gaussian;
  gspec.n = 12;
  gspec.noise_std = 0.0;
  ObservationParams gauss = make_true_observation_model(trajs, gspec, rng);
  Mat y = generate_observations(trajs[0].X, gauss, rng);
  Mat expected =
      (trajs[0].X * gauss.loading.transpose()).rowwise() + gauss.bias.transpose();
  CHECK((y - expected).norm() < 1e-6);

  ObsGenSpec pspec;
  pspec.kind = ObservationKind::poisson_canonical;
  pspec.n = 30;
  pspec.target_rate = 0.04;
  ObservationParams pois = make_true_observation_model(trajs, pspec, rng);
  generate_observations(trajs, pois, 7);
  double spikes = 0.0, bins = 0.0;
  for (const auto& tr : trajs) {
    spikes += tr.Y.sum();
    bins += static_cast<double>(tr.Y.size());
    for (Index t = 0; t < tr.length(); ++t)
      for (Index i = 0; i < tr.Y.cols(); ++i)
        CHECK((tr.Y(t, i) == 0.0 || tr.Y(t, i) == 1.0));
  }
  CHECK(spikes / bins <= 0.04 * 1.1);
  CHECK(spikes > 0.0);

  CHECK_THROWS_AS(calibrate_poisson_bias(pois, trajs, -0.1), std::domain_error);
}

TEST_CASE("simulations are seed-deterministic and extend under the same stream") {
  SimSpec spec = base_spec(SystemKind::ring, 200, 0.1, 0.01, 31);
  spec.n_sequences = 3;
  auto a = simulate_ring(spec);
  auto b = simulate_ring(spec);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].X == b[i].X);

  SimSpec longer = spec;
  longer.T = 400;
  auto c = simulate_ring(longer);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(c[i].X.topRows(200) == a[i].X);
}

TEST_CASE("lorenz grid starts are evenly spaced and deterministic") {
  SimSpec spec = base_spec(SystemKind::lorenz, 10, 0.01, 0.0);
  spec.n_sequences = 50;
  auto a = simulate_lorenz(spec);
  auto b = simulate_lorenz(spec);
  CHECK(a.size() == 50);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].X == b[i].X);
  // distinct starts
  for (std::size_t i = 1; i < a.size(); ++i)
    CHECK((a[i].X.row(0) - a[0].X.row(0)).norm() > 1e-9);
}
