#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vjf/core.hpp"
#include "vjf/filter.hpp"
#include "vjf/simulators.hpp"

namespace vjf {

using nlohmann::json;

inline constexpr const char* kCodeVersion = "vjf 0.1.0";

// FNV-1a over the canonical config text; recorded in every manifest.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Trajectory CSV: header `t, x_1..x_m, y_1..y_n, u_1..u_p`, one row per bin,
// every number in shortest round-trip decimal.
// ---------------------------------------------------------------------------

inline std::string trajectory_to_csv(const Trajectory& traj) {
  const Index m = traj.X.cols();
  const Index n = traj.Y.cols();
  const Index p = traj.U.cols();
  std::string out = "t";
  for (Index j = 0; j < m; ++j) out += ",x_" + std::to_string(j + 1);
  for (Index j = 0; j < n; ++j) out += ",y_" + std::to_string(j + 1);
  for (Index j = 0; j < p; ++j) out += ",u_" + std::to_string(j + 1);
  out += "\n";
  for (Index t = 0; t < traj.length(); ++t) {
    out += std::to_string(t);
    for (Index j = 0; j < m; ++j) out += "," + format_double(traj.X(t, j));
    for (Index j = 0; j < n; ++j) out += "," + format_double(traj.Y(t, j));
    for (Index j = 0; j < p; ++j) out += "," + format_double(traj.U(t, j));
    out += "\n";
  }
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

inline Trajectory trajectory_from_csv(const std::string& text, double dt) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw config_error("trajectory csv: empty file");
  Index m = 0, n = 0, p = 0;
  for (const auto& h : split_csv_line(line)) {
    if (h.rfind("x_", 0) == 0) ++m;
    else if (h.rfind("y_", 0) == 0) ++n;
    else if (h.rfind("u_", 0) == 0) ++p;
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<Index>(fields.size()) != 1 + m + n + p)
      throw config_error("trajectory csv: ragged row");
    std::vector<double> row;
    row.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) row.push_back(std::stod(fields[i]));
    rows.push_back(std::move(row));
  }
  Trajectory traj;
  const auto T = static_cast<Index>(rows.size());
  traj.X = Mat(T, m);
  traj.Y = Mat(T, n);
  traj.U = Mat(T, p);
  traj.dt = dt;
  for (Index t = 0; t < T; ++t) {
    for (Index j = 0; j < m; ++j) traj.X(t, j) = rows[t][j];
    for (Index j = 0; j < n; ++j) traj.Y(t, j) = rows[t][m + j];
    for (Index j = 0; j < p; ++j) traj.U(t, j) = rows[t][m + n + j];
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Compact binary trajectory: 64-byte header (magic, version, T, m, n, p, dt),
// then X, Y, U row-major little-endian doubles.
// ---------------------------------------------------------------------------

inline constexpr char kTrajMagic[8] = {'V', 'J', 'F', 'T', 'R', 'A', 'J', '1'};

inline void write_trajectory_binary(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  char header[64] = {};
  std::memcpy(header, kTrajMagic, 8);
  const std::uint32_t version = 1;
  std::memcpy(header + 8, &version, 4);
  const std::uint64_t dims[4] = {static_cast<std::uint64_t>(traj.length()),
                                 static_cast<std::uint64_t>(traj.X.cols()),
                                 static_cast<std::uint64_t>(traj.Y.cols()),
                                 static_cast<std::uint64_t>(traj.U.cols())};
  std::memcpy(header + 16, dims, 32);
  const double dt = traj.dt;
  std::memcpy(header + 48, &dt, 8);
  out.write(header, 64);
  auto write_mat = [&](const Mat& mat) {
    for (Index i = 0; i < mat.rows(); ++i)
      for (Index j = 0; j < mat.cols(); ++j) {
        const double v = mat(i, j);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
  };
  write_mat(traj.X);
  write_mat(traj.Y);
  write_mat(traj.U);
}

inline Trajectory read_trajectory_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  char header[64];
  in.read(header, 64);
  if (in.gcount() != 64 || std::memcmp(header, kTrajMagic, 8) != 0)
    throw config_error("binary trajectory: bad magic");
  std::uint64_t dims[4];
  std::memcpy(dims, header + 16, 32);
  Trajectory traj;
  std::memcpy(&traj.dt, header + 48, 8);
  const auto T = static_cast<Index>(dims[0]);
  traj.X = Mat(T, static_cast<Index>(dims[1]));
  traj.Y = Mat(T, static_cast<Index>(dims[2]));
  traj.U = Mat(T, static_cast<Index>(dims[3]));
  auto read_mat = [&](Mat& mat) {
    for (Index i = 0; i < mat.rows(); ++i)
      for (Index j = 0; j < mat.cols(); ++j) {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        mat(i, j) = v;
      }
  };
  read_mat(traj.X);
  read_mat(traj.Y);
  read_mat(traj.U);
  if (!in) throw config_error("binary trajectory: truncated file");
  return traj;
}

// ---------------------------------------------------------------------------
// Model checkpoint: one self-describing JSON document; layout documented in
// the README. Doubles are written in shortest round-trip decimal, so
// save -> load reproduces every parameter bit-exactly.
// ---------------------------------------------------------------------------

inline json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Mat mat_from_json(const json& j) {
  const auto rows = static_cast<Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Index>(j.at(0).size()) : 0;
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  return m;
}

inline Vec vec_from_json(const json& j) {
  Vec v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

inline json checkpoint_to_json(const ModelBundle& bundle) {
  json doc;
  doc["format"] = "vjf-checkpoint";
  doc["version"] = 1;
  doc["dims"] = {{"n", bundle.obs_dim()},
                 {"m", bundle.latent_dim()},
                 {"p", bundle.input_dim()},
                 {"q", bundle.hidden_dim()},
                 {"r", bundle.basis_count()}};
  doc["observation"] = {{"kind", to_string(bundle.observation.kind)},
                        {"loading", mat_to_json(bundle.observation.loading)},
                        {"bias", vec_to_json(bundle.observation.bias)}};
  if (bundle.observation.kind == ObservationKind::gaussian)
    doc["observation"]["log_noise_var"] = bundle.observation.log_noise_var;
  doc["dynamics"] = {{"weights", mat_to_json(bundle.dynamics.weights)},
                     {"centers", mat_to_json(bundle.dynamics.centers)},
                     {"log_inverse_widths", vec_to_json(bundle.dynamics.log_inverse_widths)},
                     {"input_map", mat_to_json(bundle.dynamics.input_map)},
                     {"log_state_noise_var", bundle.dynamics.log_state_noise_var}};
  doc["recognition"] = {{"hidden_weights", mat_to_json(bundle.recognition.hidden_weights)},
                        {"hidden_bias", vec_to_json(bundle.recognition.hidden_bias)},
                        {"output_weights", mat_to_json(bundle.recognition.output_weights)},
                        {"output_bias", vec_to_json(bundle.recognition.output_bias)}};
  return doc;
}

inline ModelBundle checkpoint_from_json(const json& doc) {
  if (doc.value("format", "") != "vjf-checkpoint")
    throw config_error("checkpoint: unrecognized format field");
  ModelBundle b;
  const json& obs = doc.at("observation");
  b.observation.kind = observation_kind_from_string(obs.at("kind").get<std::string>());
  b.observation.loading = mat_from_json(obs.at("loading"));
  b.observation.bias = vec_from_json(obs.at("bias"));
  if (b.observation.kind == ObservationKind::gaussian)
    b.observation.log_noise_var = obs.at("log_noise_var").get<double>();
  const json& dyn = doc.at("dynamics");
  b.dynamics.weights = mat_from_json(dyn.at("weights"));
  b.dynamics.centers = mat_from_json(dyn.at("centers"));
  b.dynamics.log_inverse_widths = vec_from_json(dyn.at("log_inverse_widths"));
  b.dynamics.input_map = mat_from_json(dyn.at("input_map"));
  b.dynamics.log_state_noise_var = dyn.at("log_state_noise_var").get<double>();
  const json& rec = doc.at("recognition");
  b.recognition.hidden_weights = mat_from_json(rec.at("hidden_weights"));
  b.recognition.hidden_bias = vec_from_json(rec.at("hidden_bias"));
  b.recognition.output_weights = mat_from_json(rec.at("output_weights"));
  b.recognition.output_bias = vec_from_json(rec.at("output_bias"));
  b.check();
  return b;
}

inline void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle) {
  write_text_file(path, checkpoint_to_json(bundle).dump(2) + "\n");
}

inline ModelBundle load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(json::parse(read_text_file(path)));
}

// ---------------------------------------------------------------------------
// Diagnostics and posterior CSVs
// ---------------------------------------------------------------------------

inline std::string diagnostics_to_csv(const std::vector<StepDiagnostics>& diags) {
  std::string out = "t,recon_ll,dyn_ll,entropy,elbo,wall_ms\n";
  for (std::size_t t = 0; t < diags.size(); ++t) {
    const auto& d = diags[t];
    out += std::to_string(t) + "," + format_double(d.reconstruction_ll) + "," +
           format_double(d.dynamics_ll) + "," + format_double(d.entropy) + "," +
           format_double(d.objective) + "," + format_double(d.wall_time * 1e3) + "\n";
  }
  return out;
}

inline std::string means_to_csv(const Mat& means) {
  std::string out = "t";
  for (Index j = 0; j < means.cols(); ++j) out += ",mu_" + std::to_string(j + 1);
  out += "\n";
  for (Index t = 0; t < means.rows(); ++t) {
    out += std::to_string(t);
    for (Index j = 0; j < means.cols(); ++j) out += "," + format_double(means(t, j));
    out += "\n";
  }
  return out;
}

inline std::string rmse_curve_to_csv(const Vec& mean, const Vec& stderr_) {
  std::string out = "horizon,rmse_mean,rmse_stderr\n";
  for (Index t = 0; t < mean.size(); ++t)
    out += std::to_string(t + 1) + "," + format_double(mean[t]) + "," +
           format_double(stderr_[t]) + "\n";
  return out;
}

}  // namespace vjf
