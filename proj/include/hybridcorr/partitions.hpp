#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hybridcorr/factorization.hpp"

namespace hybridcorr {

struct Rectangle {
  std::vector<int> rows;  // sorted, unique, non-empty
  std::vector<int> cols;

  /// Sorts and deduplicates; throws InvalidArgument on empty sets or negative indices.
  static Rectangle create(std::vector<int> rows, std::vector<int> cols);

  bool contains(int x, int y) const;
  bool operator==(const Rectangle&) const = default;
  auto operator<=>(const Rectangle&) const = default;
};

struct RectanglePartition {
  std::vector<Rectangle> rectangles;
  int size() const noexcept { return static_cast<int>(rectangles.size()); }
};

enum class PartitionViolation { None, OutOfRange, Overlap, Coverage, ZeroRectangle };

std::string to_string(PartitionViolation v);

struct PartitionDiagnostics {
  bool valid = true;
  PartitionViolation violation = PartitionViolation::None;
  int rectangle = -1;  // offending rectangle (the later one for overlaps)
  int x = -1;          // offending entry, when there is one
  int y = -1;
  std::string message;
};

PartitionDiagnostics validate_partition(const Correlation& p, const RectanglePartition& part);

enum class Verdict { Yes, No, Unknown };

std::string to_string(Verdict v);

struct CapabilityResult {
  Verdict verdict = Verdict::Unknown;
  std::optional<PsdFactorization> witness;  // factorizes the normalized submatrix, side <= k
  double residual = 0.0;
  std::string reason;
};

/// Default search budget for capability queries.
SearchConfig oracle_budget();

/// Submatrix of P on the rectangle.
Matrix submatrix(const Correlation& p, const Rectangle& rect);

/// Decides whether the normalized submatrix has PSD rank <= k. "No" is only
/// returned when the rank bound proves it; "yes" always comes with a witness.
CapabilityResult rectangle_within_capability(const Correlation& p, const Rectangle& rect, int k,
                                             const SearchConfig& budget = oracle_budget());

/// Memoizing wrapper around rectangle_within_capability for one (P, k).
class CapabilityOracle {
 public:
  CapabilityOracle(const Correlation& p, int k, SearchConfig budget = oracle_budget());

  const CapabilityResult& check(const Rectangle& rect);
  std::size_t queries() const noexcept { return cache_.size(); }

 private:
  const Correlation& p_;
  int k_;
  SearchConfig budget_;
  std::map<Rectangle, CapabilityResult> cache_;
};

struct PartitionResult {
  RectanglePartition partition;
  std::vector<Verdict> verdicts;             // one per rectangle
  std::vector<PsdFactorization> witnesses;   // one per rectangle
  bool optimal = false;                      // exact search completed
  std::uint64_t nodes = 0;
};

inline constexpr int kExactNonzeroCap = 64;
inline constexpr int kExactActiveLineCap = 24;  // active rows + active columns

/// Minimum-size partition into capability-yes rectangles. Rectangles only
/// use rows and columns that hold a nonzero inside them (dropping the
/// others never hurts), "unknown" counts as "no".
PartitionResult k_partition_exact(const Correlation& p, int k, int size_cap = kExactNonzeroCap,
                                  const SearchConfig& budget = oracle_budget());

/// Grows rectangles from uncovered nonzero cells in row-major order, adding
/// rows and columns while the capability oracle says yes.
PartitionResult k_partition_greedy(const Correlation& p, int k, const SearchConfig& budget = oracle_budget());

/// Branch i has weight equal to the mass of rectangle i and reuses the
/// rectangle's witness, zero padded outside it.
BlockPsdFactorization partition_to_block_factorization(const Correlation& p, const PartitionResult& result,
                                                       int k);

/// Same, recomputing witnesses through the oracle.
BlockPsdFactorization partition_to_block_factorization(const Correlation& p, const RectanglePartition& part,
                                                       int k, const SearchConfig& budget = oracle_budget());

}  // namespace hybridcorr
