#pragma once

// Internal: the shared optimizer behind psd_factorize and kblock_factorize.

#include <vector>

#include "hybridcorr/factorization.hpp"

namespace hybridcorr::detail {

/// Gram roots for `branches` parallel factorizations of side `side`:
/// row_roots[x * branches + i] = A_x^i, col_roots[y * branches + i] = B_y^i.
struct GramState {
  int branches = 1;
  int side = 1;
  std::vector<Matrix> row_roots;
  std::vector<Matrix> col_roots;
};

struct GramRun {
  GramState state;
  double l1 = 0.0;
  int iterations = 0;
};

/// Model entry (x, y) = sum_i ||(A_x^i)^T B_y^i||_F^2.
Matrix gram_model(const GramState& s);

GramState random_gram_state(const Matrix& target, int branches, int side, std::uint64_t seed,
                            std::uint64_t start);

/// Start biased towards block structure: rows are clustered by support
/// (k-means++ on normalized rows) and each branch is seeded mainly on one
/// cluster.
GramState clustered_gram_state(const Matrix& target, int branches, int side, std::uint64_t seed,
                               std::uint64_t start);

/// Levenberg-Marquardt on all Gram roots jointly: each iteration takes a
/// damped Gauss-Newton step, raising the damping until the squared loss
/// decreases. Stops on stagnation (less than 0.1% progress over 50
/// iterations), on a vanishing loss, or once `stop_l1` > 0 is reached.
GramRun descend(const Matrix& target, GramState state, int max_iters, double stop_l1);

/// Converts Gram roots of branch i into an explicit PSD factorization.
PsdFactorization branch_factorization(const GramState& s, int branch);

}  // namespace hybridcorr::detail
