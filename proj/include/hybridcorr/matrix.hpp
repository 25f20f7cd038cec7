#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "hybridcorr/error.hpp"

namespace hybridcorr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerical tolerances shared by every module.
struct ToleranceConfig {
  double rank_rel_tol = 1e-9;   // singular values below this fraction of the largest are zero
  double psd_min_eig = -1e-9;   // smallest eigenvalue still accepted as PSD
  double residual_tol = 1e-8;   // L1 residual at which a factorization counts as exact
  double l1_eps = 0.0;          // user-set approximation budget; 0 means exact mode

  void validate() const;
};

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kCorrelationSumTol = 1e-9;

/// A nonnegative matrix whose entries sum to one. Instances are only created
/// through the checked factories, so holding one is proof of the invariants.
class Correlation {
 public:
  /// Validates nonnegativity (entries >= -rank_rel_tol are clamped to zero)
  /// and a total mass within 1e-9 of one.
  static Correlation from_matrix(const Matrix& m, const ToleranceConfig& cfg = {});

  const Matrix& matrix() const noexcept { return m_; }
  Eigen::Index rows() const noexcept { return m_.rows(); }
  Eigen::Index cols() const noexcept { return m_.cols(); }
  double operator()(Eigen::Index x, Eigen::Index y) const { return m_(x, y); }

 private:
  explicit Correlation(Matrix m) : m_(std::move(m)) {}
  friend Correlation normalize_to_correlation(const Matrix& m, const ToleranceConfig& cfg);

  Matrix m_;
};

/// Throws NonFinite if any entry is NaN or infinite, InvalidArgument if empty.
void require_finite(const Matrix& m);

Correlation normalize_to_correlation(const Matrix& m, const ToleranceConfig& cfg = {});

double l1_distance(const Matrix& p, const Matrix& q);

/// Number of singular values above rank_rel_tol times the largest one.
int numerical_rank(const Matrix& m, const ToleranceConfig& cfg = {});

/// Square and symmetric within kSymmetryTol; decided on the symmetrized matrix.
bool is_psd(const Matrix& m, const ToleranceConfig& cfg = {});

Matrix kron(const Matrix& a, const Matrix& b);

// Spectral helpers for symmetric PSD input. Eigenvalues at or below `cutoff`
// are treated as zero, so the inverse variants are pseudo-inverses on the
// support.
Matrix psd_sqrt(const Matrix& m, double cutoff = 1e-10);
Matrix psd_inv_sqrt(const Matrix& m, double cutoff = 1e-10);
Matrix support_projector(const Matrix& m, double cutoff = 1e-10);

}  // namespace hybridcorr
