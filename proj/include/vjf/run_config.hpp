#pragma once

#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vjf/core.hpp"
#include "vjf/filter.hpp"
#include "vjf/simulators.hpp"

namespace vjf {

using nlohmann::json;

// Fully validated run description: one structured document (plus flag
// overrides applied by the CLI before parsing). Unknown keys are a hard error.
struct RunConfig {
  std::string subcommand;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  std::filesystem::path input;       // trajectory directory (filter/predict/eval)
  std::filesystem::path checkpoint;  // model checkpoint (predict/portrait)

  SimSpec sim;
  ObsGenSpec obs;

  struct ModelCfg {
    Index n = 200, m = 2, p = 1, q = 100, r = 20;
    ObservationKind kind = ObservationKind::poisson_canonical;
    double center_lo = -2.0, center_hi = 2.0;
  } model;

  TrainConfig train;

  struct PredictCfg {
    Index horizon = 1000;
    Index n_trials = 200;
    Index start = -1;  // filter prefix length; -1 = half the sequence
    Index sequence = 0;
    Index reset_every = 0;  // 0 = single uninterrupted rollout
  } predict;

  struct PortraitCfg {
    std::vector<double> lo{-2.0, -2.0};
    std::vector<double> hi{2.0, 2.0};
    Index resolution = 20;
    double tol = 1e-6;
    int max_iter = 100;
    bool discrete_stability = false;
  } portrait;

  struct DekfCfg {
    double param_rw_var = 1e-5;
    double init_param_cov = 0.1;
    double init_state_cov = 1.0;
    double process_var = 1e-2;
  } dekf;

  struct BenchCfg {
    Index steps = 5000;
    Index warmup = 200;
    Index n = 200, m = 2, p = 1, q = 100, r = 20;
    ObservationKind kind = ObservationKind::poisson_canonical;
  } bench;

  json raw;  // resolved document, recorded in the manifest
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& path) {
  if (!j.is_object()) throw config_error("config: expected object at " + path);
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key))
      throw config_error("config: unknown key `" + path + key + "`");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error("config: bad value for `" + key + "`");
  }
}

inline Index get_dim(const json& j, const std::string& key, Index fallback,
                     const std::string& path) {
  const auto v = get_or<long long>(j, key, fallback);
  if (v < 1) throw config_error("config: `" + path + key + "` must be >= 1");
  return static_cast<Index>(v);
}

inline SimSpec parse_sim(const json& j, std::uint64_t seed) {
  check_keys(j, {"system", "n_sequences", "T", "dt", "noise_std", "transient_steps", "ring",
                 "fhn", "lorenz", "switching", "bistable", "observation"},
             "sim.");
  SimSpec spec;
  spec.system = system_kind_from_string(get_or<std::string>(j, "system", "ring"));
  spec.n_sequences = get_dim(j, "n_sequences", 1, "sim.");
  spec.T = get_dim(j, "T", 1000, "sim.");
  spec.dt = get_or<double>(j, "dt", spec.system == SystemKind::fhn      ? 0.5
                                    : spec.system == SystemKind::lorenz ? 0.01
                                                                        : 0.1);
  spec.noise_std = get_or<double>(j, "noise_std", spec.system == SystemKind::ring ? 0.005
                                                  : spec.system == SystemKind::fhn ? 0.002
                                                                                   : 0.0);
  spec.transient_steps = static_cast<Index>(get_or<long long>(
      j, "transient_steps", spec.system == SystemKind::lorenz ? 500 : 0));
  spec.seed = seed;
  if (j.contains("ring")) {
    const json& r = j.at("ring");
    check_keys(r, {"r0", "tau_r", "tau_phi", "input_magnitude"}, "sim.ring.");
    spec.ring.r0 = get_or<double>(r, "r0", spec.ring.r0);
    spec.ring.tau_r = get_or<double>(r, "tau_r", spec.ring.tau_r);
    spec.ring.tau_phi = get_or<double>(r, "tau_phi", spec.ring.tau_phi);
    spec.ring.input_magnitude = get_or<double>(r, "input_magnitude", spec.ring.input_magnitude);
  }
  if (j.contains("fhn")) {
    const json& f = j.at("fhn");
    check_keys(f, {"a", "b", "c", "current"}, "sim.fhn.");
    spec.fhn.a = get_or<double>(f, "a", spec.fhn.a);
    spec.fhn.b = get_or<double>(f, "b", spec.fhn.b);
    spec.fhn.c = get_or<double>(f, "c", spec.fhn.c);
    spec.fhn.current = get_or<double>(f, "current", spec.fhn.current);
  }
  if (j.contains("lorenz")) {
    const json& l = j.at("lorenz");
    check_keys(l, {"sigma", "rho", "beta"}, "sim.lorenz.");
    spec.lorenz.sigma = get_or<double>(l, "sigma", spec.lorenz.sigma);
    spec.lorenz.rho = get_or<double>(l, "rho", spec.lorenz.rho);
    spec.lorenz.beta = get_or<double>(l, "beta", spec.lorenz.beta);
  }
  if (j.contains("switching")) {
    const json& s = j.at("switching");
    check_keys(s, {"decay", "theta", "switch_at", "kick_norm"}, "sim.switching.");
    spec.switching.decay = get_or<double>(s, "decay", spec.switching.decay);
    spec.switching.theta = get_or<double>(s, "theta", spec.switching.theta);
    spec.switching.switch_at = get_or<long long>(s, "switch_at", spec.switching.switch_at);
    spec.switching.kick_norm = get_or<double>(s, "kick_norm", spec.switching.kick_norm);
  }
  if (j.contains("bistable")) {
    const json& b = j.at("bistable");
    check_keys(b, {"input_magnitude"}, "sim.bistable.");
    spec.bistable.input_magnitude =
        get_or<double>(b, "input_magnitude", spec.bistable.input_magnitude);
  }
  spec.check();
  return spec;
}

inline ObsGenSpec parse_obs(const json& j) {
  check_keys(j, {"kind", "n", "gain", "noise_std", "target_rate"}, "sim.observation.");
  ObsGenSpec obs;
  obs.kind = observation_kind_from_string(get_or<std::string>(j, "kind", "poisson"));
  obs.n = get_dim(j, "n", 200, "sim.observation.");
  obs.gain = get_or<double>(j, "gain", obs.gain);
  obs.noise_std = get_or<double>(j, "noise_std", obs.noise_std);
  obs.target_rate = get_or<double>(j, "target_rate", obs.target_rate);
  return obs;
}

inline TrainConfig parse_train(const json& j, std::uint64_t seed) {
  check_keys(j, {"penalty_gamma", "learning_rate", "beta1", "beta2", "epsilon_hat", "grad_clip",
                 "updates_per_step", "warmup_passes", "reseed_centers_at", "train_dynamics",
                 "train_observation", "train_recognition", "nonlinearity"},
             "train.");
  TrainConfig cfg;
  cfg.penalty_gamma = get_or<double>(j, "penalty_gamma", cfg.penalty_gamma);
  cfg.learning_rate = get_or<double>(j, "learning_rate", cfg.learning_rate);
  cfg.beta1 = get_or<double>(j, "beta1", cfg.beta1);
  cfg.beta2 = get_or<double>(j, "beta2", cfg.beta2);
  cfg.epsilon_hat = get_or<double>(j, "epsilon_hat", cfg.epsilon_hat);
  cfg.grad_clip = get_or<double>(j, "grad_clip", cfg.grad_clip);
  cfg.updates_per_step = static_cast<int>(get_or<long long>(j, "updates_per_step", 1));
  cfg.warmup_passes = static_cast<int>(get_or<long long>(j, "warmup_passes", 0));
  cfg.reseed_centers_at = get_or<long long>(j, "reseed_centers_at", 0);
  cfg.train_dynamics = get_or<bool>(j, "train_dynamics", true);
  cfg.train_observation = get_or<bool>(j, "train_observation", true);
  cfg.train_recognition = get_or<bool>(j, "train_recognition", true);
  const auto nl = get_or<std::string>(j, "nonlinearity", "tanh");
  if (nl == "tanh") cfg.nonlinearity = Nonlinearity::tanh;
  else if (nl == "relu") cfg.nonlinearity = Nonlinearity::relu;
  else throw config_error("config: `train.nonlinearity` must be tanh or relu");
  cfg.seed = seed;
  cfg.check();
  return cfg;
}

}  // namespace detail

// Parses and validates a configuration document. Every key is checked against
// the schema; unknown keys, bad enum values, and inconsistent dimensions are
// hard errors naming the offending key path.
inline RunConfig parse_config(const json& doc) {
  detail::check_keys(doc, {"subcommand", "seed", "output_dir", "input", "checkpoint", "sim",
                           "model", "train", "predict", "portrait", "dekf", "bench"},
                     "");
  RunConfig cfg;
  cfg.raw = doc;
  cfg.subcommand = detail::get_or<std::string>(doc, "subcommand", "");
  static const std::set<std::string> known_subcommands{"",       "simulate", "filter", "predict",
                                                       "portrait", "eval",   "bench"};
  if (!known_subcommands.count(cfg.subcommand))
    throw config_error("config: unknown subcommand `" + cfg.subcommand + "`");
  cfg.seed = static_cast<std::uint64_t>(detail::get_or<long long>(doc, "seed", 0));

  const char* env_out = std::getenv("VJF_OUT_DIR");
  cfg.output_dir = detail::get_or<std::string>(doc, "output_dir",
                                               env_out != nullptr ? env_out : "out");
  cfg.input = detail::get_or<std::string>(doc, "input", "");
  cfg.checkpoint = detail::get_or<std::string>(doc, "checkpoint", "");

  if (doc.contains("sim")) cfg.sim = detail::parse_sim(doc.at("sim"), cfg.seed);
  if (doc.contains("sim") && doc.at("sim").contains("observation"))
    cfg.obs = detail::parse_obs(doc.at("sim").at("observation"));

  // model defaults follow the simulated system when one is configured
  cfg.model.kind = cfg.obs.kind;
  cfg.model.n = cfg.obs.n;
  if (doc.contains("sim")) cfg.model.m = system_latent_dim(cfg.sim.system);
  const json model_doc = doc.contains("model") ? doc.at("model") : json::object();
  detail::check_keys(model_doc, {"n", "m", "p", "q", "r", "kind", "center_lo", "center_hi"},
                     "model.");
  cfg.model.n = detail::get_dim(model_doc, "n", cfg.model.n, "model.");
  cfg.model.m = detail::get_dim(model_doc, "m", cfg.model.m, "model.");
  cfg.model.p = detail::get_dim(model_doc, "p", cfg.model.p, "model.");
  cfg.model.q = detail::get_dim(model_doc, "q", cfg.model.q, "model.");
  cfg.model.r = detail::get_dim(model_doc, "r", cfg.model.r, "model.");
  if (model_doc.contains("kind"))
    cfg.model.kind =
        observation_kind_from_string(model_doc.at("kind").get<std::string>());
  cfg.model.center_lo = detail::get_or<double>(model_doc, "center_lo", cfg.model.center_lo);
  cfg.model.center_hi = detail::get_or<double>(model_doc, "center_hi", cfg.model.center_hi);
  if (doc.contains("sim") && doc.contains("model") && cfg.model.n != cfg.obs.n)
    throw config_error("config: `model.n` conflicts with `sim.observation.n`");

  cfg.train = detail::parse_train(doc.contains("train") ? doc.at("train") : json::object(),
                                  cfg.seed);

  if (doc.contains("predict")) {
    const json& p = doc.at("predict");
    detail::check_keys(p, {"horizon", "n_trials", "start", "sequence", "reset_every"},
                       "predict.");
    cfg.predict.horizon = detail::get_dim(p, "horizon", cfg.predict.horizon, "predict.");
    cfg.predict.n_trials = detail::get_dim(p, "n_trials", cfg.predict.n_trials, "predict.");
    cfg.predict.start = detail::get_or<long long>(p, "start", cfg.predict.start);
    cfg.predict.sequence = detail::get_or<long long>(p, "sequence", cfg.predict.sequence);
    cfg.predict.reset_every = detail::get_or<long long>(p, "reset_every", 0);
  }

  if (doc.contains("portrait")) {
    const json& p = doc.at("portrait");
    detail::check_keys(p, {"lo", "hi", "resolution", "tol", "max_iter", "discrete_stability"},
                       "portrait.");
    cfg.portrait.lo = detail::get_or<std::vector<double>>(p, "lo", cfg.portrait.lo);
    cfg.portrait.hi = detail::get_or<std::vector<double>>(p, "hi", cfg.portrait.hi);
    cfg.portrait.resolution =
        detail::get_dim(p, "resolution", cfg.portrait.resolution, "portrait.");
    cfg.portrait.tol = detail::get_or<double>(p, "tol", cfg.portrait.tol);
    cfg.portrait.max_iter = static_cast<int>(detail::get_or<long long>(p, "max_iter", 100));
    cfg.portrait.discrete_stability = detail::get_or<bool>(p, "discrete_stability", false);
    if (cfg.portrait.lo.size() != cfg.portrait.hi.size())
      throw config_error("config: `portrait.lo` and `portrait.hi` lengths differ");
  }

  if (doc.contains("dekf")) {
    const json& d = doc.at("dekf");
    detail::check_keys(d, {"param_rw_var", "init_param_cov", "init_state_cov", "process_var"},
                       "dekf.");
    cfg.dekf.param_rw_var = detail::get_or<double>(d, "param_rw_var", cfg.dekf.param_rw_var);
    cfg.dekf.init_param_cov =
        detail::get_or<double>(d, "init_param_cov", cfg.dekf.init_param_cov);
    cfg.dekf.init_state_cov =
        detail::get_or<double>(d, "init_state_cov", cfg.dekf.init_state_cov);
    cfg.dekf.process_var = detail::get_or<double>(d, "process_var", cfg.dekf.process_var);
  }

  if (doc.contains("bench")) {
    const json& b = doc.at("bench");
    detail::check_keys(b, {"steps", "warmup", "n", "m", "p", "q", "r", "kind"}, "bench.");
    cfg.bench.steps = detail::get_dim(b, "steps", cfg.bench.steps, "bench.");
    cfg.bench.warmup = static_cast<Index>(detail::get_or<long long>(b, "warmup", 200));
    cfg.bench.n = detail::get_dim(b, "n", cfg.bench.n, "bench.");
    cfg.bench.m = detail::get_dim(b, "m", cfg.bench.m, "bench.");
    cfg.bench.p = detail::get_dim(b, "p", cfg.bench.p, "bench.");
    cfg.bench.q = detail::get_dim(b, "q", cfg.bench.q, "bench.");
    cfg.bench.r = detail::get_dim(b, "r", cfg.bench.r, "bench.");
    if (b.contains("kind"))
      cfg.bench.kind = observation_kind_from_string(b.at("kind").get<std::string>());
  }

  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace vjf
