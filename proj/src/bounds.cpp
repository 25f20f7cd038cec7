#include "hybridcorr/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hybridcorr {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

int ceil_sqrt(int v) {
  int s = static_cast<int>(std::sqrt(static_cast<double>(v)));
  while (s * s < v) ++s;
  while (s > 0 && (s - 1) * (s - 1) >= v) --s;
  return s;
}

struct Components {
  std::vector<std::vector<Eigen::Index>> rows;
  std::vector<std::vector<Eigen::Index>> cols;
};

// Connected components of the bipartite graph with an edge per nonzero entry.
Components support_components(const Matrix& m) {
  const auto n = m.rows();
  const auto k = m.cols();
  std::vector<int> parent(static_cast<std::size_t>(n + k));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = 0; y < k; ++y)
      if (m(x, y) > 0.0) parent[find(static_cast<int>(x))] = find(static_cast<int>(n + y));

  Components out;
  std::vector<int> slot(parent.size(), -1);
  auto component_of = [&](int v) {
    const int root = find(v);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(out.rows.size());
      out.rows.emplace_back();
      out.cols.emplace_back();
    }
    return slot[root];
  };
  for (Eigen::Index x = 0; x < n; ++x)
    if (m.row(x).maxCoeff() > 0.0) out.rows[component_of(static_cast<int>(x))].push_back(x);
  for (Eigen::Index y = 0; y < k; ++y)
    if (m.col(y).maxCoeff() > 0.0) out.cols[component_of(static_cast<int>(n + y))].push_back(y);
  return out;
}

double accept_level(const ToleranceConfig& tol) { return std::max(tol.residual_tol, tol.l1_eps); }

}  // namespace

int ceil_log2(std::uint64_t v) {
  if (v == 0) throw Error(ErrorCode::InvalidArgument, "ceil_log2 needs v >= 1");
  int bits = 0;
  while ((std::uint64_t{1} << bits) < v) ++bits;
  return bits;
}

int prank_lower_bound(const Correlation& p, const ToleranceConfig& cfg) {
  return ceil_sqrt(numerical_rank(p.matrix(), cfg));
}

int block_prank_lower_bound(const Correlation& p, const ToleranceConfig& cfg) {
  const Components comps = support_components(p.matrix());
  int total = 0;
  for (std::size_t c = 0; c < comps.rows.size(); ++c) {
    const auto& rs = comps.rows[c];
    const auto& cs = comps.cols[c];
    Matrix sub(static_cast<Eigen::Index>(rs.size()), static_cast<Eigen::Index>(cs.size()));
    for (std::size_t i = 0; i < rs.size(); ++i)
      for (std::size_t j = 0; j < cs.size(); ++j) sub(i, j) = p(rs[i], cs[j]);
    total += ceil_sqrt(numerical_rank(sub, cfg));
  }
  return std::max(total, prank_lower_bound(p, cfg));
}

int kprank_lower_bound(const Correlation& p, int k, int prank_lb, const ToleranceConfig& cfg) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "block size must be >= 1");
  if (prank_lb < 0) throw Error(ErrorCode::InvalidArgument, "prank lower bound must be >= 0");
  const int rank = numerical_rank(p.matrix(), cfg);
  return std::max({ceil_div(prank_lb, k), ceil_div(rank, k * k), 1});
}

int hybrid_classical_cost(int r) {
  if (r < 1) throw Error(ErrorCode::InvalidArgument, "branch count must be >= 1");
  return ceil_log2(static_cast<std::uint64_t>(r));
}

int qc_hybrid_cost_upper(int r, int s) {
  if (s < 0 || s > 30) throw Error(ErrorCode::InvalidArgument, "sEPR count must be in [0, 30]");
  return hybrid_classical_cost(r) + (1 << s) - 1;
}

bool tradeoff_check(int s, int c, const Correlation& p, const ToleranceConfig& cfg) {
  if (s < 0 || c < 0) throw Error(ErrorCode::InvalidArgument, "resource counts must be >= 0");
  const int rank = numerical_rank(p.matrix(), cfg);
  return 2 * s + c >= ceil_log2(static_cast<std::uint64_t>(rank));
}

TBounds t_bounds_from_ranks(int rank, int prank_estimate) {
  if (rank < 1 || prank_estimate < 1) {
    throw Error(ErrorCode::InvalidArgument, "rank and PSD-rank estimate must be >= 1");
  }
  const int log_rank = ceil_log2(static_cast<std::uint64_t>(rank));
  const int log_prank = ceil_log2(static_cast<std::uint64_t>(prank_estimate));
  return TBounds{std::max(0, ceil_div(std::max(0, log_rank - log_prank), 2)), log_prank};
}

TBounds t_bounds(const Correlation& p, int prank_estimate, const ToleranceConfig& cfg) {
  return t_bounds_from_ranks(numerical_rank(p.matrix(), cfg), prank_estimate);
}

void BoundsReport::check_invariants() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvariantViolation, what); };
  if (prank_lb < 1 || rank < 1) fail("lower bounds must be >= 1");
  // Lower bounds speak about exact factorizations; an eps witness may beat them.
  if (prank_ub && !prank_eps_witnessed && *prank_ub < prank_lb) fail("prank upper bound below its lower bound");
  if (nnr_ub && !nnr_eps_witnessed && *nnr_ub < rank) fail("nonnegative rank upper bound below the rank");
  for (const auto& [k, lb] : kprank_lb) {
    auto it = kprank_ub.find(k);
    auto eps = kprank_eps_witnessed.find(k);
    const bool approximate = eps != kprank_eps_witnessed.end() && eps->second;
    if (it != kprank_ub.end() && it->second && !approximate && *it->second < lb) {
      std::ostringstream os;
      os << "kprank upper bound below its lower bound for k=" << k;
      fail(os.str());
    }
  }
  if (t_lb > t_ub) fail("t lower bound exceeds the upper bound");
}

BoundsReport bounds_report(const Correlation& p, const BoundsBudget& budget) {
  budget.search.tol.validate();
  const ToleranceConfig& tol = budget.search.tol;
  const double accept = accept_level(tol);
  SearchConfig search = budget.search;
  search.stop_on_success = true;

  BoundsReport rep;
  const int small = static_cast<int>(std::min(p.rows(), p.cols()));
  rep.rank = numerical_rank(p.matrix(), tol);
  rep.prank_lb = block_prank_lower_bound(p, tol);

  // PSD rank: search upwards from the lower bound, the side-min(n, m)
  // diagonal witness closes the range.
  if (rep.prank_lb < small) {
    auto sweep = psd_factorize_sweep(p, rep.prank_lb, small - 1, search, true);
    const auto& last = sweep.back();
    if (last.residual <= accept) {
      rep.prank_ub = last.factorization.side();
      rep.prank_residual = last.residual;
      rep.prank_eps_witnessed = last.residual > tol.residual_tol;
      rep.prank_witness = last.factorization;
    }
  }
  if (!rep.prank_ub && budget.use_trivial_witnesses) {
    rep.prank_witness = trivial_psd_factorization(p.matrix());
    rep.prank_ub = rep.prank_witness->side();
    rep.prank_residual = l1_distance(p.matrix(), reconstruct(*rep.prank_witness));
  }

  for (int r = rep.rank; r < small; ++r) {
    const NmfResult res = nmf(p, r, search);
    if (res.residual <= accept) {
      rep.nnr_ub = r;
      rep.nnr_residual = res.residual;
      rep.nnr_eps_witnessed = res.residual > tol.residual_tol;
      break;
    }
  }
  if (!rep.nnr_ub && budget.use_trivial_witnesses) rep.nnr_ub = small;
  if (rep.prank_ub && rep.nnr_ub && *rep.prank_ub > *rep.nnr_ub) {
    // A nonnegative factorization of inner size r is a diagonal PSD one of side r.
    const NmfResult res = nmf(p, *rep.nnr_ub, search);
    PsdFactorization f;
    for (Eigen::Index x = 0; x < res.w.rows(); ++x) f.row_factors.push_back(Matrix(res.w.row(x).transpose().asDiagonal()));
    for (Eigen::Index y = 0; y < res.h.cols(); ++y) f.col_factors.push_back(Matrix(res.h.col(y).asDiagonal()));
    rep.prank_ub = *rep.nnr_ub;
    rep.prank_residual = res.residual;
    rep.prank_eps_witnessed = res.residual > tol.residual_tol;
    rep.prank_witness = std::move(f);
  }

  for (int k : budget.block_sizes) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "block size must be >= 1");
    const int lb = kprank_lower_bound(p, k, rep.prank_lb, tol);
    rep.kprank_lb[k] = lb;
    std::optional<BlockPsdFactorization> witness;
    double residual = 0.0;
    if (rep.prank_ub && *rep.prank_ub <= k && rep.prank_witness) {
      witness = BlockPsdFactorization{k, {1.0}, {*rep.prank_witness}};
      residual = rep.prank_residual;
    } else {
      const int trivial = ceil_div(small, k);
      for (int r = lb; r < trivial; ++r) {
        BlockSearchResult res = kblock_factorize(p, k, r, search);
        if (res.residual <= accept) {
          witness = std::move(res.factorization);
          residual = res.residual;
          break;
        }
      }
      if (!witness && budget.use_trivial_witnesses) {
        witness = trivial_block_factorization(p, k);
        residual = l1_distance(p.matrix(), reconstruct(*witness));
      }
    }
    if (witness) {
      const int ub = witness->branch_count();
      rep.kprank_ub[k] = ub;
      rep.hybrid_bits[k] = hybrid_classical_cost(ub);
      rep.kprank_residual[k] = residual;
      rep.kprank_eps_witnessed[k] = residual > tol.residual_tol;
      rep.kprank_witness[k] = std::move(*witness);
    } else {
      rep.kprank_ub[k] = std::nullopt;
      rep.hybrid_bits[k] = std::nullopt;
    }
  }

  const TBounds t = t_bounds_from_ranks(rep.rank, rep.prank_ub.value_or(rep.prank_lb));
  rep.t_lb = t.lower;
  rep.t_ub = t.upper;
  rep.check_invariants();
  return rep;
}

}  // namespace hybridcorr
