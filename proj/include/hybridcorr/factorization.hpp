#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hybridcorr/generators.hpp"
#include "hybridcorr/matrix.hpp"

namespace hybridcorr {

/// P(x, y) = tr(C_x D_y) with real symmetric PSD factors of a common side r.
struct PsdFactorization {
  std::vector<Matrix> row_factors;  // C_x, one per row
  std::vector<Matrix> col_factors;  // D_y, one per column

  int side() const;
  Eigen::Index rows() const noexcept { return static_cast<Eigen::Index>(row_factors.size()); }
  Eigen::Index cols() const noexcept { return static_cast<Eigen::Index>(col_factors.size()); }

  /// Throws InvariantViolation on inconsistent sides, non-PSD factors or a
  /// reconstruction entry below -1e-10.
  void validate(const ToleranceConfig& cfg = {}) const;
};

/// Weighted mixture of PSD factorizations of side <= block_size; the
/// block-diagonal assembly of its branches is a k-block PSD factorization.
struct BlockPsdFactorization {
  int block_size = 1;
  std::vector<double> weights;
  std::vector<PsdFactorization> branches;

  int branch_count() const noexcept { return static_cast<int>(branches.size()); }
};

struct SearchConfig {
  std::uint64_t seed = 0;
  int starts = 20;
  int max_iters = 5000;
  ToleranceConfig tol;
  /// Stop scanning starts as soon as one reaches the residual tolerance (or
  /// tol.l1_eps when that is positive). Approximate mode always stops early.
  bool stop_on_success = false;
};

struct PsdSearchResult {
  PsdFactorization factorization;
  double residual = 0.0;  // L1
  int best_start = 0;     // -1 when the zero-padded smaller-side witness won
};

struct BlockSearchResult {
  BlockPsdFactorization factorization;
  double residual = 0.0;  // L1
  int best_start = 0;
};

struct NmfResult {
  Matrix w;  // n x r, nonnegative
  Matrix h;  // r x m, nonnegative
  double residual = 0.0;  // L1
  int best_start = 0;
};

Matrix reconstruct(const PsdFactorization& f);
/// Sum over branches of weight times the branch reconstruction.
Matrix reconstruct(const BlockPsdFactorization& bf);

/// Closed-form side-2 witness: C_i = scale (1, c_i)(1, c_i)^T and
/// D_j = (c_j, -1)(c_j, -1)^T, so tr(C_i D_j) = scale (c_i - c_j)^2.
PsdFactorization edm_psd_factorization(const EdmSpec& spec, double scale = 1.0);

/// Side r1*r2 factorization of the Kronecker product of the reconstructions.
PsdFactorization tensor_compose(const PsdFactorization& f1, const PsdFactorization& f2,
                                int max_side = 4096);

/// Side-min(n, m) witness that exists for every nonnegative matrix: unit
/// projectors on the smaller side and diagonal factors on the other.
PsdFactorization trivial_psd_factorization(const Matrix& p);

/// r = ceil(n / k) block witness built from horizontal strips of k rows.
BlockPsdFactorization trivial_block_factorization(const Correlation& p, int k);

/// Embeds a factorization into side `side` by zero padding.
PsdFactorization pad_factorization(const PsdFactorization& f, int side);

NmfResult nmf(const Correlation& p, int r, const SearchConfig& cfg = {});

/// Multi-start search over Gram roots C_x = A_x A_x^T, D_y = B_y B_y^T. For
/// r > 1 the best side-(r-1) result, zero padded, is also a candidate, which
/// makes the residual non-increasing in r.
PsdSearchResult psd_factorize(const Correlation& p, int r, const SearchConfig& cfg = {});

/// Searches sides r_min..r_max in order, carrying each best result into the
/// next side. With `stop_at_success` the scan ends at the first side whose
/// residual is within max(residual_tol, l1_eps). Returns one result per side
/// searched.
std::vector<PsdSearchResult> psd_factorize_sweep(const Correlation& p, int r_min, int r_max,
                                                 const SearchConfig& cfg, bool stop_at_success);

/// Searches for r branches of side k. Weights are read off the optimized
/// branches (p_i = total mass of branch i) and zero-weight branches are
/// pruned, so the result may carry fewer than r branches.
BlockSearchResult kblock_factorize(const Correlation& p, int k, int r, const SearchConfig& cfg = {});

enum class CertificationFailure { None, ShapeMismatch, WeightInvariant, NonPsdBlock, ResidualExceeded };

std::string to_string(CertificationFailure f);

struct CertificationReport {
  bool passed = false;
  CertificationFailure failure = CertificationFailure::None;
  std::string diagnostic;
  int failing_branch = -1;       // block index for NonPsdBlock / WeightInvariant
  int failing_factor = -1;       // row or column index inside the block
  bool failing_is_row = true;
  double max_abs_error = 0.0;
  double l1_residual = 0.0;
  int total_side = 0;            // side of the assembled block-diagonal factors
};

/// Assembles C_x = diag(p_1 C_x^1, ...) and D_y = diag(D_y^1, ...), checks
/// every block and recomputes tr(C_x D_y). Passing requires an L1 residual
/// within max(residual_tol, l1_eps).
CertificationReport certify_block_factorization(const Correlation& p, const BlockPsdFactorization& bf,
                                                const ToleranceConfig& cfg = {});

/// Throws InvariantViolation with the report's diagnostic when it did not pass.
void require_certified(const CertificationReport& report);

}  // namespace hybridcorr
