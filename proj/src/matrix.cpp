#include "hybridcorr/matrix.hpp"

#include <cmath>
#include <sstream>

namespace hybridcorr {

void ToleranceConfig::validate() const {
  if (!(rank_rel_tol >= 0.0) || !(residual_tol >= 0.0) || !(l1_eps >= 0.0) || !(psd_min_eig <= 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "tolerances must be nonnegative and psd_min_eig must be <= 0");
  }
}

void require_finite(const Matrix& m) {
  if (m.size() == 0) throw Error(ErrorCode::InvalidArgument, "matrix is empty");
  if (!m.allFinite()) throw Error(ErrorCode::NonFinite, "matrix contains NaN or infinite entries");
}

namespace {

Matrix clamp_nonnegative(const Matrix& m, const ToleranceConfig& cfg) {
  require_finite(m);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) < -cfg.rank_rel_tol) {
        std::ostringstream os;
        os << "entry (" << i << "," << j << ") = " << m(i, j) << " is negative";
        throw Error(ErrorCode::NonNegativityViolation, os.str());
      }
    }
  }
  return m.cwiseMax(0.0);
}

}  // namespace

Correlation Correlation::from_matrix(const Matrix& m, const ToleranceConfig& cfg) {
  Matrix clamped = clamp_nonnegative(m, cfg);
  const double total = clamped.sum();
  if (std::abs(total - 1.0) > kCorrelationSumTol) {
    std::ostringstream os;
    os << "entries sum to " << total << ", expected 1";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  return Correlation(std::move(clamped));
}

Correlation normalize_to_correlation(const Matrix& m, const ToleranceConfig& cfg) {
  Matrix clamped = clamp_nonnegative(m, cfg);
  const double total = clamped.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroMatrix, "matrix has no positive entry");
  return Correlation(clamped / total);
}

double l1_distance(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "l1_distance needs equal shapes");
  }
  return (p - q).cwiseAbs().sum();
}

int numerical_rank(const Matrix& m, const ToleranceConfig& cfg) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  const double cut = cfg.rank_rel_tol * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++rank;
  }
  return rank;
}

bool is_psd(const Matrix& m, const ToleranceConfig& cfg) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::ShapeMismatch, "is_psd needs a square matrix");
  if (m.size() == 0) return true;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
    throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric within 1e-12");
  }
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= cfg.psd_min_eig;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

namespace {

template <typename F>
Matrix spectral_map(const Matrix& m, F f) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  Vector mapped = es.eigenvalues().unaryExpr(f);
  return es.eigenvectors() * mapped.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Matrix psd_sqrt(const Matrix& m, double cutoff) {
  return spectral_map(m, [cutoff](double v) { return v > cutoff ? std::sqrt(v) : 0.0; });
}

Matrix psd_inv_sqrt(const Matrix& m, double cutoff) {
  return spectral_map(m, [cutoff](double v) { return v > cutoff ? 1.0 / std::sqrt(v) : 0.0; });
}

Matrix support_projector(const Matrix& m, double cutoff) {
  return spectral_map(m, [cutoff](double v) { return v > cutoff ? 1.0 : 0.0; });
}

}  // namespace hybridcorr
