#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vjf/core.hpp"
#include "vjf/generative.hpp"

namespace vjf {

// ---------------------------------------------------------------------------
// Velocity grid
// ---------------------------------------------------------------------------

struct VelocityGrid {
  Mat points;      // K x m lattice points
  Mat velocities;  // K x m, drift(x, u=0)
};

// Evaluates the learned velocity field g(x) on a regular lattice.
inline VelocityGrid velocity_grid(const DynamicsParams& dyn, const Vec& lo, const Vec& hi,
                                  Index resolution) {
  const Index m = dyn.latent_dim();
  require_shape(lo.size() == m && hi.size() == m, "velocity_grid: box dimension mismatch");
  require_domain(resolution >= 2, "velocity_grid: resolution must be >= 2");
  for (Index d = 0; d < m; ++d)
    require_domain(lo[d] < hi[d], "velocity_grid: empty box");

  Index total = 1;
  for (Index d = 0; d < m; ++d) total *= resolution;
  VelocityGrid grid;
  grid.points = Mat(total, m);
  grid.velocities = Mat(total, m);
  const Vec u = Vec::Zero(dyn.input_dim());
  std::vector<Index> idx(m, 0);
  for (Index k = 0; k < total; ++k) {
    Vec x(m);
    for (Index d = 0; d < m; ++d)
      x[d] = lo[d] + (hi[d] - lo[d]) * static_cast<double>(idx[d]) /
                         static_cast<double>(resolution - 1);
    grid.points.row(k) = x.transpose();
    grid.velocities.row(k) = drift(x, u, dyn).transpose();
    for (Index d = m - 1; d >= 0; --d) {  // odometer
      if (++idx[d] < resolution) break;
      idx[d] = 0;
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Fixed points
// ---------------------------------------------------------------------------

enum class Stability { stable, unstable, saddle, marginal };

inline std::string to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::saddle: return "saddle";
    case Stability::marginal: return "marginal";
  }
  return "?";
}

struct FixedPoint {
  Vec location;
  double residual = 0.0;  // ||g(x*)||
  Stability stability = Stability::marginal;
  Eigen::VectorXcd eigenvalues;  // of the dynamics Jacobian at x*
};

// Continuous-time convention: the sign pattern of Re(lambda) of dg/dx.
// Eigenvalues within eps of the imaginary axis count as neither side.
inline Stability classify_stability(const Eigen::VectorXcd& eigenvalues, double eps = 1e-9) {
  Index pos = 0, neg = 0;
  for (Index i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues[i].real() > eps) ++pos;
    else if (eigenvalues[i].real() < -eps) ++neg;
  }
  if (pos + neg < eigenvalues.size()) return Stability::marginal;
  if (pos == 0) return Stability::stable;
  if (neg == 0) return Stability::unstable;
  return Stability::saddle;
}

// Discrete-map convention |lambda(I + J)| vs 1, available as an option.
inline Stability classify_stability_discrete(const Eigen::VectorXcd& jac_eigenvalues,
                                             double eps = 1e-9) {
  Index inside = 0, outside = 0;
  for (Index i = 0; i < jac_eigenvalues.size(); ++i) {
    const double mod = std::abs(1.0 + jac_eigenvalues[i]);
    if (mod < 1.0 - eps) ++inside;
    else if (mod > 1.0 + eps) ++outside;
  }
  if (inside + outside < jac_eigenvalues.size()) return Stability::marginal;
  if (outside == 0) return Stability::stable;
  if (inside == 0) return Stability::unstable;
  return Stability::saddle;
}

// Multi-start Newton on g(x) = 0 with a damped ||g||^2 descent fallback.
// Converged points (||g|| < tol) are merged within radius 10*tol; the result
// is independent of seed ordering because candidates are sorted before
// deduplication.
inline std::vector<FixedPoint> find_fixed_points(const DynamicsParams& dyn,
                                                 const std::vector<Vec>& seeds, double tol = 1e-6,
                                                 int max_iter = 100) {
  require_domain(tol > 0.0, "find_fixed_points: tol must be positive");
  const Index m = dyn.latent_dim();
  const Vec u = Vec::Zero(dyn.input_dim());
  std::vector<Vec> converged;

  for (const Vec& seed : seeds) {
    require_shape(seed.size() == m, "find_fixed_points: seed dimension mismatch");
    Vec x = seed;
    Vec g = drift(x, u, dyn);
    bool ok = false;
    for (int it = 0; it < max_iter; ++it) {
      if (g.norm() < tol) {
        ok = true;
        break;
      }
      const Mat jac = dynamics_jacobian(x, dyn);
      Eigen::FullPivLU<Mat> lu(jac);
      Vec step;
      bool newton = lu.isInvertible();
      if (newton) {
        step = lu.solve(-g);
        if (!step.allFinite() || step.norm() > 1e3) newton = false;
      }
      if (!newton) step = -jac.transpose() * g;  // descent on 1/2 ||g||^2
      // backtracking on ||g||
      double alpha = 1.0;
      const double g0 = g.norm();
      bool improved = false;
      for (int bt = 0; bt < 20; ++bt) {
        Vec cand = x + alpha * step;
        Vec gc = drift(cand, u, dyn);
        if (gc.allFinite() && gc.norm() < g0) {
          x = cand;
          g = gc;
          improved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!improved) break;
      if (x.norm() > 1e6) break;
    }
    if (!ok && g.norm() < tol) ok = true;
    if (ok) converged.push_back(x);
  }

  std::sort(converged.begin(), converged.end(), [](const Vec& a, const Vec& b) {
    for (Index i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return a[i] < b[i];
    return false;
  });
  const double merge_radius = 10.0 * tol;
  std::vector<FixedPoint> out;
  for (const Vec& x : converged) {
    bool duplicate = false;
    for (const auto& fp : out) {
      if ((fp.location - x).norm() < merge_radius) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;
    FixedPoint fp;
    fp.location = x;
    fp.residual = drift(x, u, dyn).norm();
    Eigen::EigenSolver<Mat> eig(dynamics_jacobian(x, dyn));
    fp.eigenvalues = eig.eigenvalues();
    fp.stability = classify_stability(fp.eigenvalues);
    out.push_back(std::move(fp));
  }
  return out;
}

// Lattice points plus (subsampled) posterior means: the default root-finding
// seed set for a trained model.
inline std::vector<Vec> default_fixed_point_seeds(const VelocityGrid& grid,
                                                  const std::vector<Vec>& posterior_means = {},
                                                  Index max_means = 100) {
  std::vector<Vec> seeds;
  seeds.reserve(grid.points.rows() + std::min<Index>(max_means, posterior_means.size()));
  for (Index k = 0; k < grid.points.rows(); ++k)
    seeds.push_back(grid.points.row(k).transpose());
  if (!posterior_means.empty()) {
    const Index stride =
        std::max<Index>(1, static_cast<Index>(posterior_means.size()) / max_means);
    for (std::size_t i = 0; i < posterior_means.size(); i += stride)
      seeds.push_back(posterior_means[i]);
  }
  return seeds;
}

// ---------------------------------------------------------------------------
// Affine alignment
// ---------------------------------------------------------------------------

struct AffineMap {
  Mat linear;   // m x m
  Vec offset;   // m
  double residual_rms = 0.0;
  double condition = 0.0;  // of the linear part

  Vec apply(const Vec& x) const { return linear * x + offset; }
  Mat apply_rows(const Mat& X) const {
    return (X * linear.transpose()).rowwise() + offset.transpose();
  }
};

// Least-squares A, c minimizing sum ||A x_t + c - ref_t||^2 over index-paired
// point sets; used to orient inferred portraits against ground truth.
inline AffineMap affine_align(const Mat& inferred, const Mat& reference) {
  const Index T = inferred.rows();
  const Index m = inferred.cols();
  require_shape(reference.rows() == T && reference.cols() == m,
                "affine_align: point sets must pair by index");
  require_domain(T > m + 1, "affine_align: need more than m+1 paired points");

  Mat design(T, m + 1);
  design.leftCols(m) = inferred;
  design.col(m).setOnes();
  Eigen::ColPivHouseholderQR<Mat> qr(design);
  if (qr.rank() < m + 1) {
    throw numeric_error("affine_align: rank-deficient design (rank " +
                        std::to_string(qr.rank()) + " of " + std::to_string(m + 1) + ")");
  }
  Mat beta = qr.solve(reference);  // (m+1) x m

  AffineMap map;
  map.linear = beta.topRows(m).transpose();
  map.offset = beta.row(m).transpose();
  map.residual_rms = std::sqrt((design * beta - reference).squaredNorm() /
                               static_cast<double>(T * m));
  Eigen::JacobiSVD<Mat> svd(map.linear);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  map.condition = smin > 0.0 ? svd.singularValues()(0) / smin
                             : std::numeric_limits<double>::infinity();
  return map;
}

// ---------------------------------------------------------------------------
// Prediction error curves
// ---------------------------------------------------------------------------

struct RmseCurve {
  Vec mean;    // per horizon step
  Vec stderr;  // standard error over trials; zero for a single trial
};

// Per-trial RMSE over dimensions at each horizon, then mean and standard error
// across trials.
inline RmseCurve prediction_rmse(const std::vector<Mat>& trials, const Mat& truth) {
  require_shape(!trials.empty(), "prediction_rmse: no trials");
  const Index T = truth.rows();
  const Index d = truth.cols();
  for (const auto& tr : trials)
    require_shape(tr.rows() == T && tr.cols() == d, "prediction_rmse: trial shape mismatch");
  const auto K = static_cast<Index>(trials.size());

  Mat per_trial(K, T);
  for (Index k = 0; k < K; ++k)
    per_trial.row(k) =
        ((trials[k] - truth).array().square().rowwise().mean()).sqrt().transpose();

  RmseCurve curve;
  curve.mean = per_trial.colwise().mean().transpose();
  curve.stderr = Vec::Zero(T);
  if (K > 1) {
    for (Index t = 0; t < T; ++t) {
      const double mu = curve.mean[t];
      const double var =
          (per_trial.col(t).array() - mu).square().sum() / static_cast<double>(K - 1);
      curve.stderr[t] = std::sqrt(var / static_cast<double>(K));
    }
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Posterior-mean density
// ---------------------------------------------------------------------------

// 2-D histogram over the first two dimensions, normalized to sum 1. Points
// outside the box are dropped.
inline Mat posterior_density(const std::vector<Vec>& means, const Vec& lo, const Vec& hi,
                             Index resolution) {
  require_domain(!means.empty(), "posterior_density: empty input");
  require_shape(lo.size() >= 2 && hi.size() >= 2, "posterior_density: need a 2-D box");
  require_domain(resolution >= 1, "posterior_density: resolution must be >= 1");
  Mat hist = Mat::Zero(resolution, resolution);
  double total = 0.0;
  for (const Vec& x : means) {
    require_shape(x.size() >= 2, "posterior_density: points must have >= 2 dims");
    bool in = true;
    Index bin[2];
    for (int d = 0; d < 2; ++d) {
      const double f = (x[d] - lo[d]) / (hi[d] - lo[d]);
      if (f < 0.0 || f >= 1.0) {
        if (x[d] == hi[d]) {  // top edge belongs to the last bin
          bin[d] = resolution - 1;
          continue;
        }
        in = false;
        break;
      }
      bin[d] = static_cast<Index>(f * static_cast<double>(resolution));
    }
    if (!in) continue;
    hist(bin[0], bin[1]) += 1.0;
    total += 1.0;
  }
  require_domain(total > 0.0, "posterior_density: no points inside the box");
  return hist / total;
}

}  // namespace vjf
