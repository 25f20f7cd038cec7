#pragma once

#include <span>
#include <vector>

#include "hybridcorr/matrix.hpp"

namespace hybridcorr {

/// Upper limit on generated matrix sizes.
struct SizeCap {
  Eigen::Index rows = 4096;
  Eigen::Index cols = 4096;
};

/// Distinct real points c_1..c_n (n >= 2) defining a Euclidean distance matrix.
class EdmSpec {
 public:
  /// Throws DuplicatePoints if two points are within 1e-12 of each other,
  /// InvalidArgument for fewer than two points or non-finite values.
  static EdmSpec create(std::vector<double> points);

  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

 private:
  explicit EdmSpec(std::vector<double> p) : points_(std::move(p)) {}
  std::vector<double> points_;
};

/// Entry (i, j) = (c_i - c_j)^2.
Matrix edm(const EdmSpec& spec);
Correlation edm_correlation(const EdmSpec& spec);

/// k-fold Kronecker power. Throws SizeCapExceeded before allocating anything
/// larger than `cap`.
Correlation tensor_power(const Correlation& p, int k, SizeCap cap = {});

/// Block-diagonal matrix whose i-th block is weights[i] * parts[i].
Correlation block_diagonal_mix(std::span<const Correlation> parts, std::span<const double> weights);

/// 2^n x 2^n 0/1 matrix indexed by n-bit strings (leftmost bit most
/// significant): 1 where the mod-2 inner product vanishes.
Matrix inner_product_squared_matrix(int n, SizeCap cap = {1024, 1024});

}  // namespace hybridcorr
