#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace hoover::learn {

// y ≈ weights · x + intercept
struct LinearFit {
  std::vector<double> weights;
  double intercept = 0.0;

  double predict(std::span<const double> x) const {
    double v = intercept;
    for (std::size_t j = 0; j < weights.size(); ++j) v += weights[j] * x[j];
    return v;
  }

  friend bool operator==(const LinearFit&, const LinearFit&) = default;
};

inline constexpr double kOlsRidge = 1e-8;

/// Least squares via the normal equations on centered data. The ridge term
/// keeps singular designs solvable; the intercept is not penalized.
inline LinearFit fit_ols(std::span<const double> x, std::size_t dim, std::span<const double> y) {
  const std::size_t n = y.size();
  if (n == 0 || x.size() != n * dim) throw std::invalid_argument("ols: dimension mismatch");
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const Mat> X(x.data(), Eigen::Index(n), Eigen::Index(dim));
  const Eigen::Map<const Eigen::VectorXd> Y(y.data(), Eigen::Index(n));

  const Eigen::RowVectorXd mean = X.colwise().mean();
  const double ymean = Y.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - mean;
  const Eigen::VectorXd Yc = Y.array() - ymean;

  Eigen::MatrixXd A = Xc.transpose() * Xc;
  A.diagonal().array() += kOlsRidge;
  const Eigen::VectorXd w = A.ldlt().solve(Xc.transpose() * Yc);

  LinearFit fit;
  fit.weights.assign(w.data(), w.data() + w.size());
  fit.intercept = ymean - mean.dot(w);
  return fit;
}

struct LassoOptions {
  double lambda = 0.0;
  double tolerance = 1e-6;
  int max_sweeps = 10'000;
};

struct LassoDiagnostics {
  int sweeps = 0;
  bool converged = false;
  std::vector<double> objective;  // after each sweep, standardized scale
};

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

/// Minimizes 1/2 ||Z b - yc||^2 + lambda ||b||_1 by cyclic coordinate
/// descent, where Z holds the standardized columns (zero mean, unit
/// population variance) and yc the centered target. Coefficients are
/// mapped back to the original feature scale; constant columns get zero.
inline LinearFit fit_lasso(std::span<const double> x, std::size_t dim, std::span<const double> y,
                           const LassoOptions& opt, LassoDiagnostics* diag = nullptr) {
  if (opt.lambda < 0.0) throw std::invalid_argument("lasso: lambda must be >= 0");
  const std::size_t n = y.size();
  if (n == 0 || x.size() != n * dim) throw std::invalid_argument("lasso: dimension mismatch");

  std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) mean[j] += x[i * dim + j];
  for (double& m : mean) m /= double(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = x[i * dim + j] - mean[j];
      scale[j] += d * d;
    }
  for (double& s : scale) s = std::sqrt(s / double(n));

  // Column-major standardized design.
  std::vector<double> z(n * dim, 0.0);
  std::vector<double> col_sq(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    if (scale[j] <= 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = (x[i * dim + j] - mean[j]) / scale[j];
      z[j * n + i] = v;
      col_sq[j] += v * v;
    }
  }

  double ymean = 0.0;
  for (double v : y) ymean += v;
  ymean /= double(n);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - ymean;

  std::vector<double> beta(dim, 0.0);
  auto objective = [&] {
    double rss = 0.0, l1 = 0.0;
    for (double r : resid) rss += r * r;
    for (double b : beta) l1 += std::abs(b);
    return 0.5 * rss + opt.lambda * l1;
  };

  LassoDiagnostics local;
  LassoDiagnostics& d = diag ? *diag : local;
  d = {};
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      if (col_sq[j] <= 0.0) continue;
      const double* zj = &z[j * n];
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += zj[i] * resid[i];
      rho += beta[j] * col_sq[j];
      const double updated = soft_threshold(rho, opt.lambda) / col_sq[j];
      const double delta = updated - beta[j];
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) resid[i] -= zj[i] * delta;
        beta[j] = updated;
      }
      max_change = std::max(max_change, std::abs(delta));
    }
    d.sweeps = sweep + 1;
    d.objective.push_back(objective());
    if (max_change < opt.tolerance) {
      d.converged = true;
      break;
    }
  }

  LinearFit fit;
  fit.weights.assign(dim, 0.0);
  fit.intercept = ymean;
  for (std::size_t j = 0; j < dim; ++j) {
    if (scale[j] <= 0.0) continue;
    fit.weights[j] = beta[j] / scale[j];
    fit.intercept -= fit.weights[j] * mean[j];
  }
  return fit;
}

}  // namespace hoover::learn
