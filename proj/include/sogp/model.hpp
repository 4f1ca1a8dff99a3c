// Sparse online Gaussian-process regression with a bounded basis-vector
// set and capacity-triggered deletion policies.
#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "sogp/kernel.hpp"

namespace sogp {

/// Which basis vector is evicted once the set exceeds its capacity.
///
/// position_info always removes the entry with the smallest coefficient
/// score; oldest_point always removes the earliest admitted entry; the
/// forgetting scheme removes the oldest entry on every h-th admission and
/// falls back to the score otherwise. With h = 1 forgetting degenerates to
/// oldest_point, and for h larger than the total number of admissions it
/// behaves exactly like position_info.
enum class DeletionScheme { position_info, oldest_point, forgetting };

struct DeletionPolicy {
  DeletionScheme kind = DeletionScheme::position_info;
  std::int64_t h = 1;  // forgetting period, used by the forgetting scheme only
  // Score deletions by the signed coefficient instead of its magnitude.
  // Kept for A/B comparisons; magnitude is the default.
  bool signed_score = false;

  static DeletionPolicy position_info() {
    return {DeletionScheme::position_info, 1, false};
  }
  static DeletionPolicy oldest_point() {
    return {DeletionScheme::oldest_point, 1, false};
  }
  static DeletionPolicy forgetting(std::int64_t period) {
    return {DeletionScheme::forgetting, period, false};
  }

  void validate() const {
    if (kind == DeletionScheme::forgetting)
      detail::require(h >= 1, "DeletionPolicy: forgetting period h must be >= 1");
  }
};

enum class DeletionBranch { none, oldest, score };

/// Outcome of a single streaming update.
struct UpdateReport {
  bool added = false;     // full update (basis grew) vs reduced update
  double novelty = 0.0;   // residual gamma of the incoming point
  double q = 0.0;         // first-order update coefficient
  double r = 0.0;         // second-order update coefficient (always < 0)
  std::optional<Index> deleted_index;
  DeletionBranch deletion_branch = DeletionBranch::none;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;      // clamped to >= 0
  double raw_variance = 0.0;  // pre-clamp value, for diagnostics
};

/// Streaming GP over a basis-vector set of at most `capacity` inputs.
///
/// State: basis rows (row 0 = oldest), coefficients alpha, covariance
/// correction C and the inverse Gram matrix Q of the basis. Q is maintained
/// by rank-one updates and downdates only; `inverse_gram_residual()` checks
/// it against the definition. Updates and deletions require exclusive
/// access; predict/novelty are read-only.
class SogpModel {
 public:
  SogpModel(KernelParams params, Index capacity, double eps_tol,
            DeletionPolicy policy)
      : params_(std::move(params)),
        capacity_(capacity),
        eps_tol_(eps_tol),
        policy_(policy) {
    params_.validate();
    policy_.validate();
    detail::require(capacity_ >= 1, "SogpModel: capacity must be >= 1");
    detail::require(eps_tol_ >= 0.0, "SogpModel: eps_tol must be >= 0");
    bv_.resize(0, params_.dim());
    alpha_.resize(0);
    c_.resize(0, 0);
    q_.resize(0, 0);
  }

  /// Assembles a model from raw state (snapshot restore, targeted tests).
  static SogpModel from_state(KernelParams params, Index capacity,
                              double eps_tol, DeletionPolicy policy,
                              Matrix bv, Vector alpha, Matrix c, Matrix q,
                              std::int64_t n_added) {
    SogpModel model(std::move(params), capacity, eps_tol, policy);
    const Index m = bv.rows();
    detail::require(bv.cols() == model.params_.dim() || m == 0,
                    "SogpModel::from_state: basis dimension mismatch");
    detail::require(alpha.size() == m && c.rows() == m && c.cols() == m &&
                        q.rows() == m && q.cols() == m,
                    "SogpModel::from_state: inconsistent state sizes");
    detail::require(n_added >= m, "SogpModel::from_state: n_added < basis size");
    model.bv_ = std::move(bv);
    if (model.bv_.cols() != model.params_.dim())
      model.bv_.resize(0, model.params_.dim());
    model.alpha_ = std::move(alpha);
    model.c_ = std::move(c);
    model.q_ = std::move(q);
    model.n_added_ = n_added;
    return model;
  }

  Index size() const { return bv_.rows(); }
  Index capacity() const { return capacity_; }
  Index dim() const { return params_.dim(); }
  double eps_tol() const { return eps_tol_; }
  std::int64_t points_added() const { return n_added_; }
  const KernelParams& params() const { return params_; }
  const DeletionPolicy& policy() const { return policy_; }
  const Matrix& basis() const { return bv_; }
  const Vector& alpha() const { return alpha_; }
  const Matrix& c_matrix() const { return c_; }
  const Matrix& q_matrix() const { return q_; }

  /// Posterior mean and variance. An empty model returns the prior
  /// (0, sigma_s2).
  Prediction predict(const Vector& x) const {
    check_dim(x);
    if (size() == 0)
      return {0.0, params_.sigma_s2, params_.sigma_s2};
    const Vector k = kernel_vector(params_, bv_, x);
    const double mean = alpha_.dot(k);
    const double raw = kernel_eval(params_, x, x) + k.dot(c_ * k);
    return {mean, raw < 0.0 ? 0.0 : raw, raw};
  }

  /// Squared residual of the point's kernel function after projection onto
  /// the span of the basis. Gates admission in update().
  double novelty(const Vector& x) const {
    check_dim(x);
    const double kxx = kernel_eval(params_, x, x);
    if (size() == 0) return kxx;
    const Vector k = kernel_vector(params_, bv_, x);
    const double gamma = kxx - k.dot(q_ * k);
    return gamma < 0.0 ? 0.0 : gamma;
  }

  /// First/second-order update coefficients for a Gaussian observation
  /// model: q = (y - mu) / (sigma_n2 + var), r = -1 / (sigma_n2 + var).
  std::pair<double, double> gaussian_qr(const Vector& x, double y) const {
    const Prediction p = predict(x);
    return qr_from_moments(p.mean, p.variance, y);
  }

  /// Streaming update with one observation.
  ///
  /// If the novelty gamma exceeds eps_tol the point joins the basis and
  /// alpha, C, Q all grow by one (full update); a capacity overflow then
  /// evicts one basis vector according to the deletion policy. Otherwise
  /// alpha and C absorb the observation through the projected unit vector
  /// without growing anything (reduced update).
  UpdateReport update(const Vector& x, double y) {
    check_dim(x);
    const Index m = size();
    const double kxx = kernel_eval(params_, x, x);

    Vector k(m), ehat(m);
    double gamma, mean, raw_var;
    if (m == 0) {
      gamma = kxx;
      mean = 0.0;
      raw_var = kxx;
    } else {
      k = kernel_vector(params_, bv_, x);
      ehat.noalias() = q_ * k;
      gamma = kxx - k.dot(ehat);
      if (gamma < 0.0) gamma = 0.0;
      mean = alpha_.dot(k);
      raw_var = kxx + k.dot(c_ * k);
    }
    const auto [q_coef, r_coef] =
        qr_from_moments(mean, raw_var < 0.0 ? 0.0 : raw_var, y);

    UpdateReport report;
    report.novelty = gamma;
    report.q = q_coef;
    report.r = r_coef;

    if (gamma > eps_tol_) {
      // Full update: s = [C k; 1], then grow alpha, C and the inverse Gram.
      Vector s(m + 1);
      if (m > 0) s.head(m).noalias() = c_ * k;
      s(m) = 1.0;

      alpha_.conservativeResize(m + 1);
      alpha_(m) = 0.0;
      alpha_ += q_coef * s;

      grow_by_one(c_);
      c_.noalias() += r_coef * (s * s.transpose());
      symmetrize(c_);

      Vector proj(m + 1);
      if (m > 0) proj.head(m) = ehat;
      proj(m) = -1.0;
      grow_by_one(q_);
      q_.noalias() += (proj * proj.transpose()) / gamma;
      symmetrize(q_);

      bv_.conservativeResize(m + 1, Eigen::NoChange);
      bv_.row(m) = x.transpose();
      ++n_added_;
      report.added = true;

      if (size() > capacity_) {
        report.deletion_branch = active_deletion_branch();
        const Index victim = select_deletion_index();
        delete_index(victim);  // refines Q itself
        report.deleted_index = victim;
      } else {
        refine_inverse_gram();
      }
    } else {
      // Reduced update: same correction routed through the projection.
      Vector shat(m);
      if (m > 0) {
        shat.noalias() = c_ * k;
        shat += ehat;
      }
      alpha_ += q_coef * shat;
      c_.noalias() += r_coef * (shat * shat.transpose());
      symmetrize(c_);
    }
    return report;
  }

  /// Index that the active policy would evict (0 = oldest). Ties in the
  /// score break toward the smallest index.
  Index select_deletion_index() const {
    detail::require(size() >= 1,
                    "SogpModel::select_deletion_index: empty model");
    if (active_deletion_branch() == DeletionBranch::oldest) return 0;
    Index best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < size(); ++j) {
      // The basis Gram diagonal equals sigma_s2 for this kernel.
      const double coeff =
          policy_.signed_score ? alpha_(j) : std::abs(alpha_(j));
      const double score = coeff / params_.sigma_s2;
      if (score < best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  /// Removes basis vector i and downdates alpha, C, Q so the reduced model
  /// stays consistent with the reduced Gram matrix. Survivors keep their
  /// relative order, so after deleting index 0 the next-oldest entry
  /// becomes index 0.
  void delete_index(Index i) {
    detail::require(i >= 0 && i < size(),
                    "SogpModel::delete_index: index out of range");
    const double q_star = q_(i, i);
    if (std::abs(q_star) < 1e-12)
      throw std::runtime_error(
          "SogpModel::delete_index: degenerate inverse-Gram pivot, "
          "near-duplicate basis vector");
    const double alpha_star = alpha_(i);
    const double c_star = c_(i, i);
    const Vector q_col = remove_entry(q_.col(i), i);
    const Vector c_col = remove_entry(c_.col(i), i);

    alpha_ = remove_entry(alpha_, i);
    c_ = remove_row_col(c_, i);
    q_ = remove_row_col(q_, i);
    bv_ = remove_row(bv_, i);

    alpha_ -= (alpha_star / q_star) * q_col;
    c_.noalias() += (c_star / (q_star * q_star)) * (q_col * q_col.transpose());
    c_.noalias() -= (q_col * c_col.transpose() + c_col * q_col.transpose()) / q_star;
    symmetrize(c_);
    q_.noalias() -= (q_col * q_col.transpose()) / q_star;
    symmetrize(q_);
    refine_inverse_gram();
  }

  /// Max-norm of Q * K_bv - I; ~0 whenever Q is healthy. Empty model: 0.
  double inverse_gram_residual() const {
    if (size() == 0) return 0.0;
    const Matrix gram = gram_matrix(params_, bv_);
    return (q_ * gram - Matrix::Identity(size(), size()))
        .cwiseAbs()
        .maxCoeff();
  }

  /// Flat text snapshot. Layout (all numbers at 17 significant digits):
  ///   line 1: magic "sogp-model v1"
  ///   line 2: d m n_added kind h signed_score capacity eps_tol sigma_s2 sigma_n2
  ///   line 3: d lengthscale entries
  ///   then m basis rows, one line of m alpha entries, m rows of C, m rows of Q.
  void save_snapshot(std::ostream& os) const {
    os << "sogp-model v1\n";
    os << std::setprecision(17);
    os << dim() << ' ' << size() << ' ' << n_added_ << ' '
       << scheme_token(policy_.kind) << ' ' << policy_.h << ' '
       << (policy_.signed_score ? 1 : 0) << ' ' << capacity_ << ' '
       << eps_tol_ << ' ' << params_.sigma_s2 << ' ' << params_.sigma_n2
       << '\n';
    write_row(os, params_.lengthscale_diag);
    for (Index i = 0; i < size(); ++i) write_row(os, bv_.row(i));
    if (size() > 0) write_row(os, alpha_);
    for (Index i = 0; i < size(); ++i) write_row(os, c_.row(i));
    for (Index i = 0; i < size(); ++i) write_row(os, q_.row(i));
  }

  static SogpModel load_snapshot(std::istream& is) {
    std::string magic, version;
    is >> magic >> version;
    if (!is || magic != "sogp-model" || version != "v1")
      throw std::invalid_argument("SogpModel::load_snapshot: bad header");
    Index d = 0, m = 0, capacity = 0;
    std::int64_t n_added = 0, h = 0;
    int signed_score = 0;
    std::string kind_token;
    double eps_tol = 0, sigma_s2 = 0, sigma_n2 = 0;
    is >> d >> m >> n_added >> kind_token >> h >> signed_score >> capacity >>
        eps_tol >> sigma_s2 >> sigma_n2;
    if (!is) throw std::invalid_argument("SogpModel::load_snapshot: bad fields");

    KernelParams params;
    params.sigma_s2 = sigma_s2;
    params.sigma_n2 = sigma_n2;
    params.lengthscale_diag = read_vector(is, d);

    DeletionPolicy policy{parse_scheme_token(kind_token), h,
                          signed_score != 0};
    Matrix bv(m, d);
    for (Index i = 0; i < m; ++i) bv.row(i) = read_vector(is, d).transpose();
    Vector alpha = m > 0 ? read_vector(is, m) : Vector(0);
    Matrix c(m, m), q(m, m);
    for (Index i = 0; i < m; ++i) c.row(i) = read_vector(is, m).transpose();
    for (Index i = 0; i < m; ++i) q.row(i) = read_vector(is, m).transpose();
    return from_state(std::move(params), capacity, eps_tol, policy,
                      std::move(bv), std::move(alpha), std::move(c),
                      std::move(q), n_added);
  }

 private:
  void check_dim(const Vector& x) const {
    detail::require(x.size() == params_.dim(),
                    "SogpModel: input dimension mismatch");
  }

  std::pair<double, double> qr_from_moments(double mean, double variance,
                                            double y) const {
    const double denom = params_.sigma_n2 + variance;
    if (!(denom > 0.0))
      throw std::runtime_error(
          "SogpModel: degenerate predictive variance, sigma_n2 + var <= 0");
    return {(y - mean) / denom, -1.0 / denom};
  }

  DeletionBranch active_deletion_branch() const {
    switch (policy_.kind) {
      case DeletionScheme::oldest_point:
        return DeletionBranch::oldest;
      case DeletionScheme::position_info:
        return DeletionBranch::score;
      case DeletionScheme::forgetting:
        return (n_added_ % policy_.h) == 0 ? DeletionBranch::oldest
                                           : DeletionBranch::score;
    }
    return DeletionBranch::score;
  }

  static void symmetrize(Matrix& a) { a = ((a + a.transpose()) * 0.5).eval(); }

  // One Newton polish of the maintained inverse Gram: with K Q = I + E the
  // step Q <- Q - Q E leaves residual -E^2. The rank-one update and downdate
  // can inject O(1e-7) on ill-conditioned events; this keeps the invariant
  // ||Q K - I|| at working precision without ever re-inverting. The step
  // contracts only for ||E|| < 1, so it is skipped when the state is too far
  // gone for a polish to help (near-singular Gram).
  void refine_inverse_gram() {
    const Index m = size();
    if (m == 0) return;
    const Matrix gram = gram_matrix(params_, bv_);
    double previous = std::numeric_limits<double>::infinity();
    bool changed = false;
    for (int iter = 0; iter < 40; ++iter) {
      Matrix residual = gram * q_;
      residual -= Matrix::Identity(m, m);
      const double entry_norm = residual.cwiseAbs().maxCoeff();
      const double induced_norm = residual.cwiseAbs().rowwise().sum().maxCoeff();
      // contraction needs the induced infinity norm below 1; stop at the
      // floating-point floor (no further progress) or once well inside the
      // maintained tolerance
      if (entry_norm < 5e-10 || !(induced_norm < 0.9) ||
          entry_norm >= 0.9 * previous)
        break;
      previous = entry_norm;
      q_ -= (q_ * residual).eval();
      changed = true;
    }
    if (changed) symmetrize(q_);
  }

  static void grow_by_one(Matrix& a) {
    const Index m = a.rows();
    a.conservativeResize(m + 1, m + 1);
    a.row(m).setZero();
    a.col(m).setZero();
  }

  static Vector remove_entry(const Vector& v, Index i) {
    Vector out(v.size() - 1);
    out.head(i) = v.head(i);
    out.tail(v.size() - 1 - i) = v.tail(v.size() - 1 - i);
    return out;
  }

  static Matrix remove_row(const Matrix& a, Index i) {
    Matrix out(a.rows() - 1, a.cols());
    out.topRows(i) = a.topRows(i);
    out.bottomRows(a.rows() - 1 - i) = a.bottomRows(a.rows() - 1 - i);
    return out;
  }

  static Matrix remove_row_col(const Matrix& a, Index i) {
    const Index m = a.rows();
    Matrix out(m - 1, m - 1);
    out.topLeftCorner(i, i) = a.topLeftCorner(i, i);
    out.topRightCorner(i, m - 1 - i) = a.topRightCorner(i, m - 1 - i);
    out.bottomLeftCorner(m - 1 - i, i) = a.bottomLeftCorner(m - 1 - i, i);
    out.bottomRightCorner(m - 1 - i, m - 1 - i) =
        a.bottomRightCorner(m - 1 - i, m - 1 - i);
    return out;
  }

  template <typename Derived>
  static void write_row(std::ostream& os, const Eigen::MatrixBase<Derived>& v) {
    for (Index i = 0; i < v.size(); ++i) {
      if (i > 0) os << ' ';
      os << v(i);
    }
    os << '\n';
  }

  static Vector read_vector(std::istream& is, Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) is >> v(i);
    if (!is)
      throw std::invalid_argument("SogpModel::load_snapshot: truncated data");
    return v;
  }

  static const char* scheme_token(DeletionScheme kind) {
    switch (kind) {
      case DeletionScheme::position_info: return "pis";
      case DeletionScheme::oldest_point: return "ops";
      case DeletionScheme::forgetting: return "fs";
    }
    return "pis";
  }

  static DeletionScheme parse_scheme_token(const std::string& token) {
    if (token == "pis") return DeletionScheme::position_info;
    if (token == "ops") return DeletionScheme::oldest_point;
    if (token == "fs") return DeletionScheme::forgetting;
    throw std::invalid_argument("SogpModel: unknown deletion scheme '" +
                                token + "'");
  }

  KernelParams params_;
  Matrix bv_;
  Vector alpha_;
  Matrix c_;
  Matrix q_;
  Index capacity_;
  double eps_tol_;
  DeletionPolicy policy_;
  std::int64_t n_added_ = 0;
};

}  // namespace sogp
