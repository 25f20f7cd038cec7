#include "hybridcorr/generators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hybridcorr {

EdmSpec EdmSpec::create(std::vector<double> points) {
  if (points.size() < 2) throw Error(ErrorCode::InvalidArgument, "an EDM needs at least two points");
  for (double c : points) {
    if (!std::isfinite(c)) throw Error(ErrorCode::NonFinite, "EDM points must be finite");
  }
  std::vector<double> sorted = points;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] <= 1e-12) {
      std::ostringstream os;
      os << "points " << sorted[i - 1] << " and " << sorted[i] << " coincide";
      throw Error(ErrorCode::DuplicatePoints, os.str());
    }
  }
  return EdmSpec(std::move(points));
}

Matrix edm(const EdmSpec& spec) {
  const auto& c = spec.points();
  const auto n = static_cast<Eigen::Index>(c.size());
  Matrix q(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = c[i] - c[j];
      q(i, j) = d * d;
    }
  }
  return q;
}

Correlation edm_correlation(const EdmSpec& spec) { return normalize_to_correlation(edm(spec)); }

Correlation tensor_power(const Correlation& p, int k, SizeCap cap) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "tensor power needs k >= 1");
  double rows = 1.0;
  double cols = 1.0;
  for (int i = 0; i < k; ++i) {
    rows *= static_cast<double>(p.rows());
    cols *= static_cast<double>(p.cols());
  }
  if (rows > static_cast<double>(cap.rows) || cols > static_cast<double>(cap.cols)) {
    std::ostringstream os;
    os << "tensor power would be " << rows << "x" << cols << ", cap is " << cap.rows << "x" << cap.cols;
    throw Error(ErrorCode::SizeCapExceeded, os.str());
  }
  Matrix out = p.matrix();
  for (int i = 1; i < k; ++i) out = kron(out, p.matrix());
  return normalize_to_correlation(out);
}

Correlation block_diagonal_mix(std::span<const Correlation> parts, std::span<const double> weights) {
  if (parts.empty() || parts.size() != weights.size()) {
    throw Error(ErrorCode::WeightMismatch, "need one weight per part and at least one part");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::WeightMismatch, "weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > kCorrelationSumTol) {
    throw Error(ErrorCode::WeightMismatch, "weights must sum to 1");
  }
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  for (const auto& part : parts) {
    rows += part.rows();
    cols += part.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Eigen::Index r0 = 0;
  Eigen::Index c0 = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out.block(r0, c0, parts[i].rows(), parts[i].cols()) = weights[i] * parts[i].matrix();
    r0 += parts[i].rows();
    c0 += parts[i].cols();
  }
  return Correlation::from_matrix(out);
}

Matrix inner_product_squared_matrix(int n, SizeCap cap) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  if (n > 30 || (Eigen::Index{1} << n) > std::min(cap.rows, cap.cols)) {
    throw Error(ErrorCode::SizeCapExceeded, "2^n exceeds the size cap");
  }
  const Eigen::Index size = Eigen::Index{1} << n;
  Matrix m(size, size);
  // Bit strings map to their binary value, so lexicographic order with the
  // leftmost bit most significant is plain integer order.
  for (Eigen::Index a = 0; a < size; ++a) {
    for (Eigen::Index b = 0; b < size; ++b) {
      const int parity = std::popcount(static_cast<std::uint64_t>(a & b)) & 1;
      const double v = 1.0 - parity;
      m(a, b) = v * v;
    }
  }
  return m;
}

}  // namespace hybridcorr
