// Exact batch Gaussian-process posterior over the full training set.
#pragma once

#include <stdexcept>
#include <utility>

#include "sogp/kernel.hpp"

namespace sogp {

/// Plain GP regression with the noisy covariance (K + sigma_n2 * I),
/// solved through a Cholesky factorization. Immutable after fit; predict
/// may be called concurrently.
class BatchGp {
 public:
  static BatchGp fit(const KernelParams& params, const Matrix& X,
                     const Vector& y) {
    params.validate();
    detail::require(X.rows() >= 1, "BatchGp::fit: need at least one point");
    detail::require(X.rows() == y.size(), "BatchGp::fit: X/y size mismatch");
    detail::require(X.cols() == params.dim(),
                    "BatchGp::fit: input dimension mismatch");
    detail::require(params.sigma_n2 > 0.0,
                    "BatchGp::fit: sigma_n2 must be > 0");

    Matrix k = gram_matrix(params, X);
    k.diagonal().array() += params.sigma_n2;
    Eigen::LLT<Matrix> llt(k);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("BatchGp::fit: covariance not positive definite");

    BatchGp gp;
    gp.params_ = params;
    gp.x_ = X;
    gp.llt_ = std::move(llt);
    gp.weights_ = gp.llt_.solve(y);
    return gp;
  }

  /// Posterior mean and variance at a test input.
  std::pair<double, double> predict(const Vector& x) const {
    const Vector k = kernel_vector(params_, x_, x);
    const double mean = k.dot(weights_);
    const double variance = kernel_eval(params_, x, x) - k.dot(llt_.solve(k));
    return {mean, variance};
  }

  const KernelParams& params() const { return params_; }
  Index size() const { return x_.rows(); }

 private:
  BatchGp() = default;

  KernelParams params_;
  Matrix x_;
  Eigen::LLT<Matrix> llt_;
  Vector weights_;
};

}  // namespace sogp
