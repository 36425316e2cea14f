#pragma once

// Binary soft-margin SVM trained with SMO (maximal violating pair working
// set, no shrinking). Operates on a precomputed kernel matrix so grid search
// and cross-validation can share one Gram computation.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "insightkg/error.hpp"

namespace ikg::svm {

enum class KernelKind { linear, rbf };

constexpr std::string_view to_string(KernelKind k) { return k == KernelKind::linear ? "linear" : "rbf"; }

struct Kernel {
  KernelKind kind = KernelKind::rbf;
  double gamma = 0.0;  // rbf only

  double operator()(std::span<const double> a, std::span<const double> b) const {
    if (kind == KernelKind::linear) {
      double dot = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
      return dot;
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      sq += d * d;
    }
    return std::exp(-gamma * sq);
  }

  // Same kernel from a precomputed inner product and squared norms.
  double from_dot(double dot, double sq_a, double sq_b) const {
    if (kind == KernelKind::linear) return dot;
    return std::exp(-gamma * std::max(0.0, sq_a + sq_b - 2.0 * dot));
  }
};

// Dense symmetric n x n kernel matrix.
class KernelMatrix {
 public:
  KernelMatrix() = default;
  explicit KernelMatrix(std::size_t n) : n_(n), k_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return k_[i * n_ + j]; }
  double& at(std::size_t i, std::size_t j) { return k_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {k_.data() + i * n_, n_}; }

  static KernelMatrix compute(const std::vector<std::vector<double>>& x, const Kernel& kernel) {
    KernelMatrix m(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = i; j < x.size(); ++j) m.at(i, j) = m.at(j, i) = kernel(x[i], x[j]);
    return m;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> k_;
};

struct SmoOptions {
  double tolerance = 1e-3;
  std::size_t max_iterations = 100000;
};

struct SmoResult {
  std::vector<double> alpha;
  double bias = 0.0;  // f(x) = sum_i alpha_i y_i K(x_i, x) + bias
  std::size_t iterations = 0;
  bool converged = false;
};

// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
inline double dual_objective(const KernelMatrix& k, std::span<const int> y, std::span<const double> alpha) {
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    linear += alpha[i];
    if (alpha[i] == 0.0) continue;
    for (std::size_t j = 0; j < alpha.size(); ++j)
      if (alpha[j] != 0.0) quad += alpha[i] * alpha[j] * y[i] * y[j] * k(i, j);
  }
  return linear - 0.5 * quad;
}

// y_i in {-1, +1}. Both classes must be present.
inline SmoResult solve_smo(const KernelMatrix& k, std::span<const int> y, double C, const SmoOptions& opt = {}) {
  const std::size_t n = y.size();
  if (k.size() != n) fail(ErrorCode::invalid_argument, "kernel matrix size does not match labels");
  if (!(C > 0.0)) fail(ErrorCode::invalid_argument, "SVM penalty C must be positive");
  constexpr double tau = 1e-12;

  SmoResult r;
  r.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  auto& a = r.alpha;

  auto in_up = [&](std::size_t t) { return (y[t] == 1 && a[t] < C) || (y[t] == -1 && a[t] > 0.0); };
  auto in_low = [&](std::size_t t) { return (y[t] == 1 && a[t] > 0.0) || (y[t] == -1 && a[t] < C); };

  while (r.iterations < opt.max_iterations) {
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > g_max) g_max = v, i = t;
      if (in_low(t) && v < g_min) g_min = v, j = t;
    }
    if (i == n || j == n || g_max - g_min < opt.tolerance) {
      r.converged = true;
      break;
    }
    ++r.iterations;

    const double qii = k(i, i), qjj = k(j, j);
    const double qij = y[i] * y[j] * k(i, j);
    const double old_i = a[i], old_j = a[j];
    if (y[i] != y[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) a[j] = 0.0, a[i] = diff;
      } else {
        if (a[i] < 0.0) a[i] = 0.0, a[j] = -diff;
      }
      if (diff > 0.0) {
        if (a[i] > C) a[i] = C, a[j] = C - diff;
      } else {
        if (a[j] > C) a[j] = C, a[i] = C + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) a[i] = C, a[j] = sum - C;
      } else {
        if (a[j] < 0.0) a[j] = 0.0, a[i] = sum;
      }
      if (sum > C) {
        if (a[j] > C) a[j] = C, a[i] = sum - C;
      } else {
        if (a[i] < 0.0) a[i] = 0.0, a[j] = sum;
      }
    }

    const double di = a[i] - old_i, dj = a[j] - old_j;
    const auto ki = k.row(i), kj = k.row(j);
    for (std::size_t t = 0; t < n; ++t)
      grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
  }

  // Bias: average over free vectors, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (a[t] >= C) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (a[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  r.bias = -rho;
  return r;
}

// Largest violation of the KKT conditions, measured on margins y_i f(x_i):
//   alpha = 0      -> y f >= 1
//   0 < alpha < C  -> y f == 1
//   alpha = C      -> y f <= 1
inline double kkt_max_violation(const KernelMatrix& k, std::span<const int> y, std::span<const double> alpha,
                                double bias, double C) {
  double worst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double f = bias;
    for (std::size_t j = 0; j < y.size(); ++j) f += alpha[j] * y[j] * k(i, j);
    const double margin = y[i] * f;
    double v = 0.0;
    if (alpha[i] <= 0.0) v = std::max(0.0, 1.0 - margin);
    else if (alpha[i] >= C) v = std::max(0.0, margin - 1.0);
    else v = std::abs(margin - 1.0);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace ikg::svm
