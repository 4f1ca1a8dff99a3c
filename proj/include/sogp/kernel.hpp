// ARD Gaussian kernel and the kernel vectors/matrices built from it.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace sogp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace detail

/// Hyperparameters shared by the online and batch regressors.
///
/// `lengthscale_diag` holds the diagonal of the metric applied to squared
/// coordinate differences, i.e. k(x, x') = sigma_s2 * exp(-0.5 * sum_i
/// l_i * (x_i - x'_i)^2). The entries are inverse squared length scales,
/// not lengths. `sigma_n2` lives here so that all hyperparameters have a
/// single home; the kernel itself never adds noise.
struct KernelParams {
  double sigma_s2 = 1.0;
  double sigma_n2 = 0.0;
  Vector lengthscale_diag;

  Index dim() const { return lengthscale_diag.size(); }

  void validate() const {
    detail::require(sigma_s2 > 0.0, "KernelParams: sigma_s2 must be > 0");
    detail::require(sigma_n2 >= 0.0, "KernelParams: sigma_n2 must be >= 0");
    detail::require(dim() >= 1, "KernelParams: at least one input dimension");
    for (Index i = 0; i < dim(); ++i)
      detail::require(lengthscale_diag(i) > 0.0,
                      "KernelParams: lengthscale_diag entries must be > 0");
  }
};

inline double kernel_eval(const KernelParams& params, const Vector& a,
                          const Vector& b) {
  detail::require(a.size() == params.dim() && b.size() == params.dim(),
                  "kernel_eval: input dimension mismatch");
  const double d2 = (a - b).cwiseAbs2().dot(params.lengthscale_diag);
  return params.sigma_s2 * std::exp(-0.5 * d2);
}

/// Kernel evaluations of x against every row of X. Empty X gives an empty
/// vector.
inline Vector kernel_vector(const KernelParams& params, const Matrix& X,
                            const Vector& x) {
  detail::require(x.size() == params.dim(),
                  "kernel_vector: input dimension mismatch");
  detail::require(X.rows() == 0 || X.cols() == params.dim(),
                  "kernel_vector: row dimension mismatch");
  Vector k(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    const double d2 =
        (X.row(i).transpose() - x).cwiseAbs2().dot(params.lengthscale_diag);
    k(i) = params.sigma_s2 * std::exp(-0.5 * d2);
  }
  return k;
}

/// Symmetric kernel matrix of the rows of X, diagonal sigma_s2.
inline Matrix gram_matrix(const KernelParams& params, const Matrix& X) {
  detail::require(X.rows() >= 1, "gram_matrix: at least one row required");
  detail::require(X.cols() == params.dim(),
                  "gram_matrix: row dimension mismatch");
  const Index t = X.rows();
  Matrix k(t, t);
  for (Index i = 0; i < t; ++i) {
    k(i, i) = params.sigma_s2;
    for (Index j = 0; j < i; ++j) {
      const double d2 = (X.row(i) - X.row(j))
                            .transpose()
                            .cwiseAbs2()
                            .dot(params.lengthscale_diag);
      k(i, j) = params.sigma_s2 * std::exp(-0.5 * d2);
      k(j, i) = k(i, j);
    }
  }
  return k;
}

}  // namespace sogp
