#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "vjf/analysis.hpp"
#include "vjf/dekf.hpp"
#include "vjf/filter.hpp"
#include "vjf/io.hpp"
#include "vjf/run_config.hpp"
#include "vjf/simulators.hpp"

namespace vjf {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

struct OlsSlope {
  double slope = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

// Least-squares slope of y against 0..N-1 with a 95% confidence interval.
inline OlsSlope ols_slope(const std::vector<double>& y) {
  const auto n = static_cast<double>(y.size());
  require_domain(y.size() >= 3, "ols_slope: need at least 3 points");
  const double x_mean = (n - 1.0) / 2.0;
  double y_mean = 0.0;
  for (double v : y) y_mean += v;
  y_mean /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dx = static_cast<double>(i) - x_mean;
    sxx += dx * dx;
    sxy += dx * (y[i] - y_mean);
  }
  OlsSlope out;
  out.slope = sxy / sxx;
  const double intercept = y_mean - out.slope * x_mean;
  double rss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - (intercept + out.slope * static_cast<double>(i));
    rss += r * r;
  }
  const double se = std::sqrt(rss / (n - 2.0) / sxx);
  out.ci_lo = out.slope - 1.96 * se;
  out.ci_hi = out.slope + 1.96 * se;
  return out;
}

inline double median(std::vector<double> v) {
  require_domain(!v.empty(), "median: empty");
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 == 1 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

// Mean one-step-ahead observation prediction from the current posterior:
// propagate the mean through the dynamics, then through the observation map.
inline Vec predict_observation_mean(const FilterState& state, const ModelBundle& bundle,
                                    const Vec& u_prev) {
  const Vec x_pred =
      state.posterior.mean + drift(state.posterior.mean, u_prev, bundle.dynamics);
  const Vec eta = bundle.observation.loading * x_pred + bundle.observation.bias;
  return bundle.observation.kind == ObservationKind::gaussian ? eta
                                                              : Vec(eta.array().exp());
}

namespace detail {

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline void write_manifest(const RunConfig& cfg, const std::vector<std::string>& artifacts,
                           const json& data_info = json::object()) {
  json doc;
  doc["config"] = cfg.raw;
  doc["config_hash"] = hash_hex(fnv1a64(cfg.raw.dump()));
  doc["code_version"] = kCodeVersion;
  doc["seed"] = cfg.seed;
  doc["artifacts"] = artifacts;
  if (!data_info.empty()) doc["data"] = data_info;
  write_text_file(cfg.output_dir / "manifest.json", doc.dump(2) + "\n");
}

inline std::string seq_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "seq_%03zu.csv", i);
  return std::string(buf);
}

struct LoadedData {
  std::vector<Trajectory> trajectories;
  json manifest;
};

inline LoadedData load_simulated(const fs::path& dir) {
  LoadedData out;
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw config_error("input: missing manifest.json in " + dir.string());
  out.manifest = json::parse(read_text_file(mpath));
  const json data = out.manifest.value("data", json::object());
  const double dt = data.value("dt", 0.1);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("seq_", 0) == 0 && name.size() > 4 && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw config_error("input: no seq_*.csv files in " + dir.string());
  for (const auto& f : files)
    out.trajectories.push_back(trajectory_from_csv(read_text_file(f), dt));
  return out;
}

inline std::vector<Sequence> to_sequences(const std::vector<Trajectory>& trajs) {
  std::vector<Sequence> seqs;
  seqs.reserve(trajs.size());
  for (const auto& tr : trajs) {
    require_shape(tr.Y.cols() > 0, "input: trajectories carry no observations");
    Sequence s;
    s.Y = tr.Y;
    // u_{t-1} convention: the recognition at bin t conditions on the input of
    // the transition into t, so shift inputs by one bin (zero at t = 0).
    s.U = Mat::Zero(tr.U.rows(), tr.U.cols());
    if (tr.U.rows() > 1) s.U.bottomRows(tr.U.rows() - 1) = tr.U.topRows(tr.U.rows() - 1);
    seqs.push_back(std::move(s));
  }
  return seqs;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline void run_simulate(const RunConfig& cfg) {
  std::vector<Trajectory> trajs = simulate(cfg.sim);
  Rng rng = make_rng(cfg.seed, 77);
  const ObservationParams obs = make_true_observation_model(trajs, cfg.obs, rng);
  generate_observations(trajs, obs, cfg.seed);

  std::vector<std::string> artifacts;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const std::string name = detail::seq_name(i);
    write_text_file(cfg.output_dir / name, trajectory_to_csv(trajs[i]));
    artifacts.push_back(name);
  }
  json truth;
  truth["loading"] = mat_to_json(obs.loading);
  truth["bias"] = vec_to_json(obs.bias);
  truth["kind"] = to_string(obs.kind);
  if (obs.kind == ObservationKind::gaussian) truth["log_noise_var"] = obs.log_noise_var;
  write_text_file(cfg.output_dir / "true_observation.json", truth.dump(2) + "\n");
  artifacts.push_back("true_observation.json");

  json data;
  data["dt"] = cfg.sim.dt;
  data["kind"] = to_string(cfg.obs.kind);
  data["n"] = cfg.obs.n;
  data["m"] = trajs.front().X.cols();
  data["p"] = trajs.front().U.cols();
  data["n_sequences"] = trajs.size();
  data["system"] = to_string(cfg.sim.system);
  detail::write_manifest(cfg, artifacts, data);
}

inline OnlineResult run_filter_core(const RunConfig& cfg, const std::vector<Trajectory>& trajs,
                                    json data_manifest) {
  const auto kind = observation_kind_from_string(
      data_manifest.value("kind", to_string(cfg.model.kind)));
  const Index n = trajs.front().Y.cols();
  const Index p = trajs.front().U.cols();
  require_shape(n == cfg.model.n, "filter: model.n does not match the data");

  Rng rng = make_rng(cfg.seed, 2);
  ModelBundle bundle = init_bundle(n, cfg.model.m, p, cfg.model.q, cfg.model.r, kind, rng,
                                   cfg.model.center_lo, cfg.model.center_hi);
  // loading matrix by factor analysis over pooled observations
  Index rows = 0;
  for (const auto& tr : trajs) rows += tr.length();
  Mat pooled(rows, n);
  Index at = 0;
  for (const auto& tr : trajs) {
    pooled.middleRows(at, tr.length()) = tr.Y;
    at += tr.length();
  }
  LoadingInit li = init_loading_fa(pooled, cfg.model.m, kind, rng);
  bundle.observation.loading = li.loading;
  bundle.observation.bias = li.bias;

  return filter_online(detail::to_sequences(trajs), bundle, cfg.train);
}

inline void run_filter(const RunConfig& cfg) {
  detail::LoadedData data = detail::load_simulated(cfg.input);
  OnlineResult result =
      run_filter_core(cfg, data.trajectories, data.manifest.value("data", json::object()));

  std::vector<std::string> artifacts;
  save_checkpoint(cfg.output_dir / "checkpoint.json", result.bundle);
  artifacts.push_back("checkpoint.json");
  write_text_file(cfg.output_dir / "diagnostics.csv", diagnostics_to_csv(result.diagnostics));
  artifacts.push_back("diagnostics.csv");
  for (std::size_t i = 0; i < result.posterior_means.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "means_%03zu.csv", i);
    write_text_file(cfg.output_dir / buf, means_to_csv(result.posterior_means[i]));
    artifacts.emplace_back(buf);
  }
  json data_info;
  data_info["skipped_updates"] = result.skipped_updates;
  detail::write_manifest(cfg, artifacts, data_info);
}

// Recognition-only pass over a prefix (no parameter updates): the filter state
// that a prediction starts from.
inline FilterState recognize_prefix(const ModelBundle& bundle, const Sequence& seq,
                                    Index prefix_len) {
  FilterState state = FilterState::initial(bundle.latent_dim());
  for (Index t = 0; t < prefix_len; ++t) {
    state.posterior = recognize(seq.Y.row(t).transpose(), seq.U.row(t).transpose(),
                                state.posterior, bundle.recognition);
    state.step_index += 1;
  }
  return state;
}

inline Mat recognize_means(const ModelBundle& bundle, const Sequence& seq, Index prefix_len) {
  FilterState state = FilterState::initial(bundle.latent_dim());
  Mat means(prefix_len, bundle.latent_dim());
  for (Index t = 0; t < prefix_len; ++t) {
    state.posterior = recognize(seq.Y.row(t).transpose(), seq.U.row(t).transpose(),
                                state.posterior, bundle.recognition);
    means.row(t) = state.posterior.mean.transpose();
  }
  return means;
}

inline void run_predict(const RunConfig& cfg) {
  detail::LoadedData data = detail::load_simulated(cfg.input);
  const ModelBundle bundle = load_checkpoint(cfg.checkpoint);
  const auto seq_idx = static_cast<std::size_t>(cfg.predict.sequence);
  require_shape(seq_idx < data.trajectories.size(), "predict: sequence index out of range");
  const Trajectory& traj = data.trajectories[seq_idx];
  auto seqs = detail::to_sequences(data.trajectories);
  const Sequence& seq = seqs[seq_idx];

  const Index T = traj.length();
  Index start = cfg.predict.start >= 0 ? cfg.predict.start : T / 2;
  require_shape(start >= 1 && start < T, "predict: start must lie inside the sequence");
  const Index horizon = std::min<Index>(cfg.predict.horizon, T - start);

  // orient model coordinates against the ground-truth latents on the prefix
  const Mat prefix_means = recognize_means(bundle, seq, start);
  const AffineMap to_truth = affine_align(prefix_means, traj.X.topRows(start));

  Rng rng = make_rng(cfg.seed, 9);
  std::vector<std::string> artifacts;
  std::string rmse_csv = "segment,horizon,rmse_mean,rmse_stderr\n";
  const Index seg_len = cfg.predict.reset_every > 0 ? cfg.predict.reset_every : horizon;
  Eigen::FullPivLU<Mat> lin_lu(to_truth.linear);

  FilterState state = recognize_prefix(bundle, seq, start);
  Index seg_index = 0;
  for (Index seg_start = start; seg_start < start + horizon; seg_start += seg_len) {
    const Index len = std::min<Index>(seg_len, start + horizon - seg_start);
    if (seg_start > start) {
      // reset to the true state, mapped into model coordinates
      const Vec truth_state = traj.X.row(seg_start - 1).transpose();
      state.posterior = DiagGaussian(lin_lu.solve(truth_state - to_truth.offset),
                                     Vec::Constant(bundle.latent_dim(), 1e-12));
    }
    Mat inputs = Mat::Zero(len, traj.U.cols());
    inputs = traj.U.middleRows(seg_start - 1, len);
    Rollout roll = predict_rollout(state, bundle, len, cfg.predict.n_trials, rng, &inputs);
    std::vector<Mat> aligned;
    aligned.reserve(roll.latents.size());
    for (const auto& L : roll.latents) aligned.push_back(to_truth.apply_rows(L));
    RmseCurve curve = prediction_rmse(aligned, traj.X.middleRows(seg_start, len));
    for (Index h = 0; h < curve.mean.size(); ++h)
      rmse_csv += std::to_string(seg_index) + "," + std::to_string(h + 1) + "," +
                  format_double(curve.mean[h]) + "," + format_double(curve.stderr[h]) + "\n";
    if (seg_index == 0) {
      Mat mean_path = Mat::Zero(len, bundle.latent_dim());
      for (const auto& L : aligned) mean_path += L;
      mean_path /= static_cast<double>(aligned.size());
      write_text_file(cfg.output_dir / "rollout_mean.csv", means_to_csv(mean_path));
      artifacts.emplace_back("rollout_mean.csv");
    }
    ++seg_index;
  }
  write_text_file(cfg.output_dir / "rmse_latent.csv", rmse_csv);
  artifacts.emplace_back("rmse_latent.csv");
  detail::write_manifest(cfg, artifacts);
}

inline void run_portrait(const RunConfig& cfg) {
  const ModelBundle bundle = load_checkpoint(cfg.checkpoint);
  const Index m = bundle.latent_dim();
  require_shape(static_cast<Index>(cfg.portrait.lo.size()) == m,
                "portrait: box dimension does not match the model");
  Vec lo = Eigen::Map<const Vec>(cfg.portrait.lo.data(), m);
  Vec hi = Eigen::Map<const Vec>(cfg.portrait.hi.data(), m);
  const VelocityGrid grid = velocity_grid(bundle.dynamics, lo, hi, cfg.portrait.resolution);

  std::string csv;
  for (Index d = 0; d < m; ++d) csv += (d ? "," : "") + ("x_" + std::to_string(d + 1));
  for (Index d = 0; d < m; ++d) csv += ",v_" + std::to_string(d + 1);
  csv += "\n";
  for (Index k = 0; k < grid.points.rows(); ++k) {
    for (Index d = 0; d < m; ++d) csv += (d ? "," : "") + format_double(grid.points(k, d));
    for (Index d = 0; d < m; ++d) csv += "," + format_double(grid.velocities(k, d));
    csv += "\n";
  }
  write_text_file(cfg.output_dir / "portrait_grid.csv", csv);

  auto seeds = default_fixed_point_seeds(grid);
  auto fps = find_fixed_points(bundle.dynamics, seeds, cfg.portrait.tol, cfg.portrait.max_iter);
  json fp_doc = json::array();
  for (const auto& fp : fps) {
    json e;
    e["location"] = vec_to_json(fp.location);
    e["residual"] = fp.residual;
    e["class"] = to_string(cfg.portrait.discrete_stability
                               ? classify_stability_discrete(fp.eigenvalues)
                               : fp.stability);
    json eigs = json::array();
    for (Index i = 0; i < fp.eigenvalues.size(); ++i)
      eigs.push_back({{"re", fp.eigenvalues[i].real()}, {"im", fp.eigenvalues[i].imag()}});
    e["eigenvalues"] = eigs;
    fp_doc.push_back(std::move(e));
  }
  write_text_file(cfg.output_dir / "fixed_points.json", fp_doc.dump(2) + "\n");
  detail::write_manifest(cfg, {"portrait_grid.csv", "fixed_points.json"});
}

// One-step prediction comparison (vjf vs dual EKF) on a single Gaussian
// stream with the observation model fixed at its true parameters.
struct EvalSeries {
  std::vector<double> rmse_vjf;
  std::vector<double> rmse_dekf;
};

inline EvalSeries eval_compare(const Trajectory& traj, const ObservationParams& true_obs,
                               const RunConfig& cfg) {
  require_domain(true_obs.kind == ObservationKind::gaussian,
                 "eval: Gaussian observations required");
  const Index n = traj.Y.cols();
  const Index T = traj.length();
  const auto rmse = [&](const Vec& a, const Vec& b) {
    return std::sqrt((a - b).squaredNorm() / static_cast<double>(n));
  };

  // vjf with the observation block frozen at the truth
  Rng rng = make_rng(cfg.seed, 21);
  ModelBundle bundle = init_bundle(n, cfg.model.m, traj.U.cols(), cfg.model.q, cfg.model.r,
                                   ObservationKind::gaussian, rng, cfg.model.center_lo,
                                   cfg.model.center_hi);
  bundle.observation = true_obs;
  TrainConfig train = cfg.train;
  train.train_observation = false;
  AdamState opt = make_optimizer(bundle, train);
  FilterState state = FilterState::initial(cfg.model.m);
  Rng noise_rng = make_rng(cfg.seed, 22);

  // dual EKF over the same stream, transition init at identity
  DekfState dekf = DekfState::init(Mat::Identity(cfg.model.m, cfg.model.m),
                                   cfg.dekf.init_state_cov, cfg.dekf.init_param_cov,
                                   cfg.dekf.param_rw_var, cfg.dekf.process_var);

  EvalSeries out;
  Vec u_prev = Vec::Zero(traj.U.cols());
  for (Index t = 0; t < T; ++t) {
    const Vec y = traj.Y.row(t).transpose();
    out.rmse_vjf.push_back(rmse(y, predict_observation_mean(state, bundle, u_prev)));
    auto step = filter_step(y, u_prev, state, bundle, opt, train, noise_rng);
    state = step.state;

    auto dekf_res = dekf_step(y, dekf, true_obs);
    out.rmse_dekf.push_back(rmse(y, dekf_res.prediction));
    if (t + 1 < T) u_prev = traj.U.row(t).transpose();
  }
  return out;
}

inline void run_eval(const RunConfig& cfg) {
  std::vector<Trajectory> trajs = simulate(cfg.sim);
  Rng rng = make_rng(cfg.seed, 77);
  ObsGenSpec obs_spec = cfg.obs;
  obs_spec.kind = ObservationKind::gaussian;
  const ObservationParams obs = make_true_observation_model(trajs, obs_spec, rng);
  generate_observations(trajs, obs, cfg.seed);
  const EvalSeries series = eval_compare(trajs.front(), obs, cfg);

  auto to_csv = [](const std::vector<double>& v) {
    std::string out = "t,rmse\n";
    for (std::size_t t = 0; t < v.size(); ++t)
      out += std::to_string(t) + "," + format_double(v[t]) + "\n";
    return out;
  };
  write_text_file(cfg.output_dir / "rmse_vjf.csv", to_csv(series.rmse_vjf));
  write_text_file(cfg.output_dir / "rmse_dekf.csv", to_csv(series.rmse_dekf));

  const auto switch_at = static_cast<std::size_t>(cfg.sim.switching.switch_at);
  json summary;
  if (series.rmse_vjf.size() > switch_at + 1 && switch_at > 1) {
    auto stats = [&](const std::vector<double>& v) {
      json s;
      s["pre_switch_median"] = median({v.begin() + switch_at / 2, v.begin() + switch_at});
      s["post_switch_peak"] =
          *std::max_element(v.begin() + switch_at,
                            v.begin() + std::min(v.size(), switch_at + 50));
      s["post_recovery_median"] = median(
          {v.begin() + std::min(v.size() - 1, switch_at + 500), v.end()});
      return s;
    };
    summary["vjf"] = stats(series.rmse_vjf);
    summary["dekf"] = stats(series.rmse_dekf);
  }
  write_text_file(cfg.output_dir / "summary.json", summary.dump(2) + "\n");
  detail::write_manifest(cfg, {"rmse_vjf.csv", "rmse_dekf.csv", "summary.json"});
}

struct BenchReport {
  double median_ms = 0.0;
  double mean_ms = 0.0;
  OlsSlope slope_ms_per_step;
  double half_ratio = 0.0;  // max wall time in 2nd half / median of 1st half
  std::vector<double> wall_ms;
};

// Times a long single-stream filtering run at fixed dimensions; the slope of
// wall time against step index is the constant-time regression.
inline BenchReport run_bench_core(const RunConfig& cfg) {
  const auto& b = cfg.bench;
  Rng rng = make_rng(cfg.seed, 31);
  // synthetic stream: slow mean-reverting latents, observations from a random model
  std::vector<Trajectory> trajs(1);
  const Index total = b.steps + b.warmup;
  trajs[0].X = Mat(total, b.m);
  Vec x = Vec::Zero(b.m);
  for (Index t = 0; t < total; ++t) {
    trajs[0].X.row(t) = x.transpose();
    x = 0.95 * x + 0.3 * randn(b.m, rng);
  }
  trajs[0].U = Mat::Zero(total, b.p);
  ObsGenSpec ospec;
  ospec.kind = b.kind;
  ospec.n = b.n;
  ospec.noise_std = 0.5;
  const ObservationParams obs = make_true_observation_model(trajs, ospec, rng);
  generate_observations(trajs, obs, cfg.seed);

  ModelBundle bundle = init_bundle(b.n, b.m, b.p, b.q, b.r, b.kind, rng);
  TrainConfig train = cfg.train;
  AdamState opt = make_optimizer(bundle, train);
  FilterState state = FilterState::initial(b.m);
  Rng noise_rng = make_rng(cfg.seed, 32);

  BenchReport report;
  report.wall_ms.reserve(b.steps);
  const Vec u = Vec::Zero(b.p);
  for (Index t = 0; t < total; ++t) {
    auto step = filter_step(trajs[0].Y.row(t).transpose(), u, state, bundle, opt, train,
                            noise_rng);
    state = step.state;
    if (t >= b.warmup) report.wall_ms.push_back(step.diag.wall_time * 1e3);
  }
  report.median_ms = median(report.wall_ms);
  double sum = 0.0;
  for (double v : report.wall_ms) sum += v;
  report.mean_ms = sum / static_cast<double>(report.wall_ms.size());
  report.slope_ms_per_step = ols_slope(report.wall_ms);
  const std::size_t half = report.wall_ms.size() / 2;
  const double first_median =
      median({report.wall_ms.begin(), report.wall_ms.begin() + half});
  const double second_max =
      *std::max_element(report.wall_ms.begin() + half, report.wall_ms.end());
  report.half_ratio = second_max / first_median;
  return report;
}

inline void run_bench(const RunConfig& cfg) {
  const BenchReport report = run_bench_core(cfg);
  json doc;
  doc["median_ms_per_step"] = report.median_ms;
  doc["mean_ms_per_step"] = report.mean_ms;
  doc["slope_ms_per_step"] = report.slope_ms_per_step.slope;
  doc["slope_ci95"] = {report.slope_ms_per_step.ci_lo, report.slope_ms_per_step.ci_hi};
  doc["slope_ci_contains_zero"] =
      report.slope_ms_per_step.ci_lo <= 0.0 && 0.0 <= report.slope_ms_per_step.ci_hi;
  doc["second_half_max_over_first_half_median"] = report.half_ratio;
  doc["steps"] = report.wall_ms.size();
  doc["reference_ms_per_step"] = 1.1;  // reported for the original implementation
  write_text_file(cfg.output_dir / "bench.json", doc.dump(2) + "\n");
  std::string csv = "step,wall_ms\n";
  for (std::size_t i = 0; i < report.wall_ms.size(); ++i)
    csv += std::to_string(i) + "," + format_double(report.wall_ms[i]) + "\n";
  write_text_file(cfg.output_dir / "bench_steps.csv", csv);
  detail::write_manifest(cfg, {"bench.json", "bench_steps.csv"});
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

// Returns the process exit status: 0 success, 2 configuration error,
// 3 numeric/module failure. Failures leave a machine-readable error document
// in the output directory when possible.
inline int run(const RunConfig& cfg) {
  try {
    fs::create_directories(cfg.output_dir);
    if (cfg.subcommand == "simulate") run_simulate(cfg);
    else if (cfg.subcommand == "filter") run_filter(cfg);
    else if (cfg.subcommand == "predict") run_predict(cfg);
    else if (cfg.subcommand == "portrait") run_portrait(cfg);
    else if (cfg.subcommand == "eval") run_eval(cfg);
    else if (cfg.subcommand == "bench") run_bench(cfg);
    else throw config_error("run: no subcommand selected");
    return 0;
  } catch (const config_error& e) {
    json err{{"error", "config"}, {"message", e.what()}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    try {
      write_text_file(cfg.output_dir / "error.json", err.dump(2) + "\n");
    } catch (...) {
    }
    return 2;
  } catch (const std::exception& e) {
    json err{{"error", "numeric"}, {"message", e.what()}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    try {
      write_text_file(cfg.output_dir / "error.json", err.dump(2) + "\n");
    } catch (...) {
    }
    return 3;
  }
}

}  // namespace vjf
