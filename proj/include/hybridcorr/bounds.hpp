#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "hybridcorr/factorization.hpp"

namespace hybridcorr {

/// ceil(log2 v) for v >= 1.
int ceil_log2(std::uint64_t v);

/// ceil(sqrt(rank P)).
int prank_lower_bound(const Correlation& p, const ToleranceConfig& cfg = {});

/// Sum of ceil(sqrt(rank)) over the connected components of the bipartite
/// support graph of P (PSD rank is superadditive over direct sums), never
/// below prank_lower_bound.
int block_prank_lower_bound(const Correlation& p, const ToleranceConfig& cfg = {});

/// max(ceil(prank_lb / k), ceil(rank / k^2), 1).
int kprank_lower_bound(const Correlation& p, int k, int prank_lb, const ToleranceConfig& cfg = {});

/// Classical bits of a classical-quantum hybrid with r branches: ceil(log2 r).
int hybrid_classical_cost(int r);

/// Classical bits of the quantum-classical hybrid: ceil(log2 r) + 2^s - 1.
int qc_hybrid_cost_upper(int r, int s);

/// 2s + c >= ceil(log2 rank P).
bool tradeoff_check(int s, int c, const Correlation& p, const ToleranceConfig& cfg = {});

struct TBounds {
  int lower = 0;
  int upper = 0;
};

/// lower = max(0, ceil((ceil(log2 rank) - ceil(log2 prank)) / 2)),
/// upper = ceil(log2 prank), for a PSD-rank estimate prank >= 1.
TBounds t_bounds(const Correlation& p, int prank_estimate, const ToleranceConfig& cfg = {});
TBounds t_bounds_from_ranks(int rank, int prank_estimate);

struct BoundsBudget {
  std::vector<int> block_sizes{2};
  SearchConfig search;
  bool use_trivial_witnesses = true;  // fall back to the closed-form min(n, m) witnesses
};

struct BoundsReport {
  int rank = 0;
  int prank_lb = 0;
  std::optional<int> prank_ub;
  std::optional<int> nnr_ub;
  std::map<int, int> kprank_lb;
  std::map<int, std::optional<int>> kprank_ub;
  std::map<int, std::optional<int>> hybrid_bits;
  int t_lb = 0;
  int t_ub = 0;

  // Provenance of every upper bound.
  double prank_residual = 0.0;
  bool prank_eps_witnessed = false;
  double nnr_residual = 0.0;
  bool nnr_eps_witnessed = false;
  std::map<int, double> kprank_residual;
  std::map<int, bool> kprank_eps_witnessed;
  std::optional<PsdFactorization> prank_witness;
  std::map<int, BlockPsdFactorization> kprank_witness;

  /// Throws InvariantViolation if lb <= ub fails anywhere.
  void check_invariants() const;
};

/// Fills every field; upper bounds always come with the witness that proves
/// them. Deterministic given the budget's seed.
BoundsReport bounds_report(const Correlation& p, const BoundsBudget& budget);

}  // namespace hybridcorr
