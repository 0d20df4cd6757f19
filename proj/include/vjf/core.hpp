#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace vjf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

// Thrown when vector/matrix dimensions do not line up.
struct shape_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a computation produces or receives a non-finite value.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on invalid run configuration (bad keys, inconsistent dims).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw shape_error(what);
}

inline void require_domain(bool ok, const std::string& what) {
  if (!ok) throw std::domain_error(what);
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

using Rng = std::mt19937_64;

// splitmix64, used to derive well-separated stream seeds from (seed, stream).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

inline Vec randn(Index k, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vec v(k);
  for (Index i = 0; i < k; ++i) v[i] = dist(rng);
  return v;
}

inline Mat randn_mat(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

// Shortest decimal text that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace vjf
