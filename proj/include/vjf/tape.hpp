#pragma once

#include <cmath>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <vector>

#include "vjf/core.hpp"

namespace vjf::ad {

// Reverse-mode gradient engine over a tape of matrix-valued nodes.
//
// A scalar loss is built forward through the ops below; backward() then fills
// the adjoint of every node with the exact partial derivative of that scalar.
// Vectors are stored as single-column matrices. The tape is reusable: reset()
// drops all nodes but keeps the arena's capacity, so a steady-state filtering
// loop allocates no node bookkeeping after warmup.
class Tape;

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Var constant(Mat v) { return push(std::move(v)); }
  Var constant(const Vec& v) { return push(Mat(v)); }

  // Leaf parameter; identical to constant but named for intent at call sites.
  Var input(Mat v) { return push(std::move(v)); }
  Var input(const Vec& v) { return push(Mat(v)); }

  Var scalar_input(double v) { return push(scalar_mat(v)); }
  Var scalar_constant(double v) { return push(scalar_mat(v)); }

  const Mat& value(Var v) const { return nodes_[check(v)].value; }
  const Mat& grad(Var v) const { return nodes_[check(v)].adjoint; }
  double scalar(Var v) const {
    const Mat& m = nodes_[check(v)].value;
    require_shape(m.size() == 1, "Tape::scalar: node is not 1x1");
    return m(0, 0);
  }

  std::size_t size() const { return nodes_.size(); }
  void reset() { nodes_.clear(); }

  // ---- generic ops ------------------------------------------------------

  Var add(Var a, Var b) {
    same_shape(a, b, "add");
    Var out = push(val(a) + val(b));
    record(out, [this, a, b, out] {
      adj(a) += adj(out);
      adj(b) += adj(out);
    });
    return out;
  }

  Var sub(Var a, Var b) {
    same_shape(a, b, "sub");
    Var out = push(val(a) - val(b));
    record(out, [this, a, b, out] {
      adj(a) += adj(out);
      adj(b) -= adj(out);
    });
    return out;
  }

  Var neg(Var a) { return scale(a, -1.0); }

  Var scale(Var a, double c) {
    Var out = push(val(a) * c);
    record(out, [this, a, out, c] { adj(a) += c * adj(out); });
    return out;
  }

  Var hadamard(Var a, Var b) {
    same_shape(a, b, "hadamard");
    Var out = push(val(a).cwiseProduct(val(b)));
    record(out, [this, a, b, out] {
      adj(a) += adj(out).cwiseProduct(val(b));
      adj(b) += adj(out).cwiseProduct(val(a));
    });
    return out;
  }

  Var matvec(Var W, Var x) {
    require_shape(val(x).cols() == 1 && val(W).cols() == val(x).rows(),
                  "matvec: inner dimensions mismatch");
    Var out = push(val(W) * val(x));
    record(out, [this, W, x, out] {
      adj(W) += adj(out) * val(x).transpose();
      adj(x) += val(W).transpose() * adj(out);
    });
    return out;
  }

  Var concat(std::initializer_list<Var> parts) {
    Index rows = 0;
    for (Var p : parts) {
      require_shape(val(p).cols() == 1, "concat: column vectors only");
      rows += val(p).rows();
    }
    Mat v(rows, 1);
    Index at = 0;
    for (Var p : parts) {
      v.block(at, 0, val(p).rows(), 1) = val(p);
      at += val(p).rows();
    }
    Var out = push(std::move(v));
    std::vector<Var> ps(parts);
    record(out, [this, ps, out] {
      Index at2 = 0;
      for (Var p : ps) {
        adj(p) += adj(out).block(at2, 0, val(p).rows(), 1);
        at2 += val(p).rows();
      }
    });
    return out;
  }

  Var segment(Var a, Index start, Index len) {
    require_shape(val(a).cols() == 1 && start >= 0 && start + len <= val(a).rows(),
                  "segment: out of range");
    Var out = push(Mat(val(a).block(start, 0, len, 1)));
    record(out, [this, a, out, start, len] {
      adj(a).block(start, 0, len, 1) += adj(out);
    });
    return out;
  }

  // column vector -> rows x cols matrix, row-major order
  Var reshape(Var a, Index rows, Index cols) {
    require_shape(val(a).cols() == 1 && val(a).rows() == rows * cols,
                  "reshape: size mismatch");
    Mat v(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) v(i, j) = val(a)(i * cols + j, 0);
    Var out = push(std::move(v));
    record(out, [this, a, out, rows, cols] {
      for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) adj(a)(i * cols + j, 0) += adj(out)(i, j);
    });
    return out;
  }

  Var tanh(Var a) {
    Var out = push(Mat(val(a).array().tanh()));
    record(out, [this, a, out] {
      adj(a).array() += adj(out).array() * (1.0 - val(out).array().square());
    });
    return out;
  }

  Var exp(Var a) {
    Var out = push(Mat(val(a).array().exp()));
    record(out, [this, a, out] { adj(a).array() += adj(out).array() * val(out).array(); });
    return out;
  }

  Var relu(Var a) {
    Var out = push(Mat(val(a).array().max(0.0)));
    record(out, [this, a, out] {
      adj(a).array() += adj(out).array() * (val(a).array() > 0.0).cast<double>();
    });
    return out;
  }

  Var log(Var a) {
    Var out = push(Mat(val(a).array().log()));
    record(out, [this, a, out] { adj(a).array() += adj(out).array() / val(a).array(); });
    return out;
  }

  Var sqrt(Var a) {
    Var out = push(Mat(val(a).array().sqrt()));
    record(out, [this, a, out] {
      adj(a).array() += adj(out).array() * 0.5 / val(out).array();
    });
    return out;
  }

  Var sum(Var a) {
    Var out = push(scalar_mat(val(a).sum()));
    record(out, [this, a, out] { adj(a).array() += adj(out)(0, 0); });
    return out;
  }

  Var dot(Var a, Var b) {
    same_shape(a, b, "dot");
    Var out = push(scalar_mat(val(a).cwiseProduct(val(b)).sum()));
    record(out, [this, a, b, out] {
      adj(a) += adj(out)(0, 0) * val(b);
      adj(b) += adj(out)(0, 0) * val(a);
    });
    return out;
  }

  // max(exp(a), floor) elementwise; the variance head of the recognition net.
  Var exp_floor(Var a, double floor) {
    Mat e = val(a).array().exp();
    Var out = push(Mat(e.array().max(floor)));
    record(out, [this, a, out, e, floor] {
      adj(a).array() += adj(out).array() * (e.array() > floor).cast<double>() * e.array();
    });
    return out;
  }

  // ---- domain composites -------------------------------------------------
  // Each op carries its hand-derived backward rule; they keep the per-step
  // graph to a couple dozen nodes.

  // phi_i = exp(-1/2 * gamma_i * ||x - c_i||^2), gamma_i = exp(log_inv_widths_i).
  // x: m-vector, centers: r x m (row per center), log_inv_widths: r-vector.
  Var rbf_features(Var x, Var centers, Var log_inv_widths) {
    const Index m = val(x).rows();
    const Index r = val(centers).rows();
    require_shape(val(centers).cols() == m, "rbf_features: center dimension mismatch");
    require_shape(val(log_inv_widths).rows() == r && val(log_inv_widths).cols() == 1,
                  "rbf_features: width count mismatch");
    Mat diffs = (-val(centers)).rowwise() + val(x).col(0).transpose();  // r x m, x - c_i
    Vec gamma = val(log_inv_widths).col(0).array().exp();
    Vec sq = diffs.rowwise().squaredNorm();
    Vec phi = (-0.5 * gamma.array() * sq.array()).exp();
    Var out = push(Mat(phi));
    record(out, [this, x, centers, log_inv_widths, out, diffs, gamma, sq, phi] {
      const Vec g = adj(out).col(0);
      Vec coef = g.array() * gamma.array() * phi.array();
      adj(x).col(0) -= diffs.transpose() * coef;
      adj(centers) += coef.asDiagonal() * diffs;
      adj(log_inv_widths).col(0).array() +=
          g.array() * phi.array() * (-0.5 * sq.array()) * gamma.array();
    });
    return out;
  }

  // sum_i y_i*eta_i - exp(eta_i); Poisson log-likelihood with canonical link,
  // log y! omitted (constant in eta).
  Var poisson_loglik(Var eta, const Vec& y) {
    require_shape(val(eta).rows() == y.size() && val(eta).cols() == 1,
                  "poisson_loglik: eta/y length mismatch");
    Vec lam = val(eta).col(0).array().exp();
    const double v = (y.array() * val(eta).col(0).array()).sum() - lam.sum();
    Var out = push(scalar_mat(v));
    record(out, [this, eta, out, lam, y] {
      adj(eta).col(0) += adj(out)(0, 0) * (y - lam);
    });
    return out;
  }

  // sum_i log N(y_i; eta_i, exp(log_noise_var)); log_noise_var is a 1x1 node.
  Var gaussian_loglik(Var eta, Var log_noise_var, const Vec& y) {
    require_shape(val(eta).rows() == y.size() && val(eta).cols() == 1,
                  "gaussian_loglik: eta/y length mismatch");
    const double nu = scalar(log_noise_var);
    const double inv_var = std::exp(-nu);
    Vec resid = y - val(eta).col(0);
    const double n = static_cast<double>(y.size());
    const double v = -0.5 * n * (std::log(2.0 * std::numbers::pi) + nu) -
                     0.5 * inv_var * resid.squaredNorm();
    Var out = push(scalar_mat(v));
    record(out, [this, eta, log_noise_var, out, resid, inv_var, n] {
      const double g = adj(out)(0, 0);
      adj(eta).col(0) += g * inv_var * resid;
      adj(log_noise_var)(0, 0) += g * (-0.5 * n + 0.5 * inv_var * resid.squaredNorm());
    });
    return out;
  }

  // 1/2 sum_j log(2*pi*e*s_j).
  Var gaussian_entropy(Var s) {
    require_shape(val(s).cols() == 1, "gaussian_entropy: column vector expected");
    const double c = std::log(2.0 * std::numbers::pi) + 1.0;
    const double v =
        0.5 * (c * static_cast<double>(val(s).rows()) + val(s).array().log().sum());
    Var out = push(scalar_mat(v));
    record(out, [this, s, out] {
      adj(s).array() += adj(out)(0, 0) * 0.5 / val(s).array();
    });
    return out;
  }

  // E_{N(mu, diag(s))}[log N(x; a, sigma^2 I)] with sigma^2 = exp(log_var):
  //   -(m/2) log(2 pi sigma^2) - (||mu - a||^2 + sum s) / (2 sigma^2)
  Var expected_transition(Var mu, Var s, Var a, Var log_var) {
    same_shape(mu, s, "expected_transition");
    same_shape(mu, a, "expected_transition");
    const double lv = scalar(log_var);
    const double inv_var = std::exp(-lv);
    Vec d = val(mu).col(0) - val(a).col(0);
    const double quad = d.squaredNorm() + val(s).sum();
    const double m = static_cast<double>(val(mu).rows());
    const double v =
        -0.5 * m * (std::log(2.0 * std::numbers::pi) + lv) - 0.5 * inv_var * quad;
    Var out = push(scalar_mat(v));
    record(out, [this, mu, s, a, log_var, out, d, inv_var, quad, m] {
      const double g = adj(out)(0, 0);
      adj(mu).col(0) -= g * inv_var * d;
      adj(a).col(0) += g * inv_var * d;
      adj(s).array() += g * (-0.5 * inv_var);
      adj(log_var)(0, 0) += g * (-0.5 * m + 0.5 * inv_var * quad);
    });
    return out;
  }

  // ---- backward ----------------------------------------------------------

  void backward(Var out) {
    require_shape(val(out).size() == 1, "backward: output must be scalar");
    nodes_[check(out)].adjoint(0, 0) = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      if (nodes_[i].pull) nodes_[i].pull();
    }
  }

 private:
  struct Node {
    Mat value;
    Mat adjoint;
    std::function<void()> pull;
  };

  std::vector<Node> nodes_;

  Var push(Mat v) {
    Node n;
    n.adjoint = Mat::Zero(v.rows(), v.cols());
    n.value = std::move(v);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  template <class F>
  void record(Var out, F&& pull) {
    nodes_[check(out)].pull = std::forward<F>(pull);
  }

  int check(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
      throw shape_error("Tape: invalid node handle");
    return v.id;
  }

  const Mat& val(Var v) const { return nodes_[check(v)].value; }
  Mat& adj(Var v) { return nodes_[check(v)].adjoint; }

  void same_shape(Var a, Var b, const char* op) const {
    require_shape(val(a).rows() == val(b).rows() && val(a).cols() == val(b).cols(),
                  std::string(op) + ": shape mismatch");
  }

  static Mat scalar_mat(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return m;
  }
};

}  // namespace vjf::ad
