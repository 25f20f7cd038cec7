#include "hybridcorr/partitions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "hybridcorr/bounds.hpp"

namespace hybridcorr {

namespace {

// Real symmetric k x k factors span a k(k+1)/2 dimensional space, so a real
// side-k PSD factorization has rank at most that.
int real_rank_cap(int k) { return k * (k + 1) / 2; }

void check_in_range(const Correlation& p, const Rectangle& rect) {
  if (rect.rows.empty() || rect.cols.empty() || rect.rows.front() < 0 || rect.cols.front() < 0 ||
      rect.rows.back() >= p.rows() || rect.cols.back() >= p.cols()) {
    throw Error(ErrorCode::InvalidArgument, "rectangle indices out of range");
  }
}

// Dense boolean grid over the entries of P.
struct Grid {
  int n = 0;
  int m = 0;
  std::vector<char> cells;

  Grid(int n_, int m_) : n(n_), m(m_), cells(static_cast<std::size_t>(n_) * m_, 0) {}
  char& at(int x, int y) { return cells[static_cast<std::size_t>(x) * m + y]; }
  char at(int x, int y) const { return cells[static_cast<std::size_t>(x) * m + y]; }
  void paint(const Rectangle& r, char v) {
    for (int x : r.rows)
      for (int y : r.cols) at(x, y) = v;
  }
};

Grid support(const Correlation& p) {
  Grid g(static_cast<int>(p.rows()), static_cast<int>(p.cols()));
  for (int x = 0; x < g.n; ++x)
    for (int y = 0; y < g.m; ++y) g.at(x, y) = p(x, y) > 0.0;
  return g;
}

void record(PartitionResult& out, const Rectangle& r, const CapabilityResult& c) {
  out.partition.rectangles.push_back(r);
  out.verdicts.push_back(c.verdict);
  out.witnesses.push_back(*c.witness);
}

bool adds_uncovered(const Grid& nz, const Grid& occ, int x, const std::vector<int>& cols) {
  for (int y : cols)
    if (nz.at(x, y) && !occ.at(x, y)) return true;
  return false;
}

PartitionResult greedy(const Correlation& p, CapabilityOracle& oracle) {
  const Grid nz = support(p);
  Grid occ(nz.n, nz.m);
  PartitionResult out;
  for (int x0 = 0; x0 < nz.n; ++x0) {
    for (int y0 = 0; y0 < nz.m; ++y0) {
      if (!nz.at(x0, y0) || occ.at(x0, y0)) continue;
      Rectangle rect{{x0}, {y0}};
      bool changed = true;
      while (changed) {
        changed = false;
        for (int x = 0; x < nz.n; ++x) {
          if (std::binary_search(rect.rows.begin(), rect.rows.end(), x)) continue;
          if (std::any_of(rect.cols.begin(), rect.cols.end(), [&](int y) { return occ.at(x, y); })) continue;
          if (!adds_uncovered(nz, occ, x, rect.cols)) continue;
          Rectangle grown = rect;
          grown.rows.insert(std::upper_bound(grown.rows.begin(), grown.rows.end(), x), x);
          if (oracle.check(grown).verdict == Verdict::Yes) {
            rect = std::move(grown);
            changed = true;
          }
        }
        for (int y = 0; y < nz.m; ++y) {
          if (std::binary_search(rect.cols.begin(), rect.cols.end(), y)) continue;
          bool blocked = false;
          bool useful = false;
          for (int x : rect.rows) {
            blocked = blocked || occ.at(x, y);
            useful = useful || nz.at(x, y);
          }
          if (blocked || !useful) continue;
          Rectangle grown = rect;
          grown.cols.insert(std::upper_bound(grown.cols.begin(), grown.cols.end(), y), y);
          if (oracle.check(grown).verdict == Verdict::Yes) {
            rect = std::move(grown);
            changed = true;
          }
        }
      }
      const CapabilityResult& c = oracle.check(rect);
      if (c.verdict != Verdict::Yes) {
        // Only reachable for a 1x1 seed, which always has a witness.
        throw Error(ErrorCode::Infeasible, "single cell failed the capability check");
      }
      occ.paint(rect, 1);
      record(out, rect, c);
    }
  }
  return out;
}

struct Candidate {
  Rectangle rect;
  int nonzeros = 0;
};

class ExactSearch {
 public:
  ExactSearch(const Correlation& p, int k, CapabilityOracle& oracle, const std::vector<int>& active_rows,
              const std::vector<int>& active_cols, const ToleranceConfig& tol)
      : p_(p), k_(k), oracle_(oracle), nz_(support(p)), occ_(nz_.n, nz_.m), rows_(active_rows),
        cols_(active_cols), tol_(tol) {}

  // Returns true if the incumbent was replaced.
  bool run(std::vector<Rectangle>& incumbent, int lower_bound, std::uint64_t& nodes) {
    best_ = incumbent;
    lower_bound_ = lower_bound;
    improved_ = false;
    std::vector<Rectangle> chosen;
    dfs(chosen, nodes);
    if (improved_) incumbent = best_;
    return improved_;
  }

 private:
  bool done() const { return static_cast<int>(best_.size()) <= lower_bound_; }

  void dfs(std::vector<Rectangle>& chosen, std::uint64_t& nodes) {
    ++nodes;
    int x0 = -1;
    int y0 = -1;
    for (int x = 0; x < nz_.n && x0 < 0; ++x)
      for (int y = 0; y < nz_.m; ++y)
        if (nz_.at(x, y) && !occ_.at(x, y)) {
          x0 = x;
          y0 = y;
          break;
        }
    if (x0 < 0) {
      if (chosen.size() < best_.size()) {
        best_ = chosen;
        improved_ = true;
      }
      return;
    }
    if (chosen.size() + 1 >= best_.size()) return;
    if (chosen.size() + 2 == best_.size()) {
      // Only one rectangle left: it must be the bounding box of what remains.
      const std::optional<Rectangle> last = closing_rectangle();
      if (last && oracle_.check(*last).verdict == Verdict::Yes) {
        chosen.push_back(*last);
        best_ = chosen;
        improved_ = true;
        chosen.pop_back();
      }
      return;
    }
    const bool penultimate = chosen.size() + 3 == best_.size();
    for (const Candidate& c : candidates(x0, y0)) {
      if (penultimate) {
        occ_.paint(c.rect, 1);
        const bool closable = closing_rectangle().has_value() || !any_uncovered();
        occ_.paint(c.rect, 0);
        if (!closable) continue;
      }
      if (oracle_.check(c.rect).verdict != Verdict::Yes) continue;
      occ_.paint(c.rect, 1);
      chosen.push_back(c.rect);
      dfs(chosen, nodes);
      chosen.pop_back();
      occ_.paint(c.rect, 0);
      if (done() || chosen.size() + 1 >= best_.size()) return;
    }
  }

  bool any_uncovered() const {
    for (int x = 0; x < nz_.n; ++x)
      for (int y = 0; y < nz_.m; ++y)
        if (nz_.at(x, y) && !occ_.at(x, y)) return true;
    return false;
  }

  // Bounding box of the uncovered nonzero cells, if it avoids occupied cells
  // and passes the rank cap.
  std::optional<Rectangle> closing_rectangle() const {
    std::vector<int> rs, cs;
    std::vector<char> col_used(static_cast<std::size_t>(nz_.m), 0);
    for (int x = 0; x < nz_.n; ++x) {
      bool row_used = false;
      for (int y = 0; y < nz_.m; ++y)
        if (nz_.at(x, y) && !occ_.at(x, y)) row_used = true, col_used[y] = 1;
      if (row_used) rs.push_back(x);
    }
    for (int y = 0; y < nz_.m; ++y)
      if (col_used[y]) cs.push_back(y);
    if (rs.empty()) return std::nullopt;
    for (int x : rs)
      for (int y : cs)
        if (occ_.at(x, y)) return std::nullopt;
    if (rank_of(rs, cs) > real_rank_cap(k_)) return std::nullopt;
    return Rectangle{rs, cs};
  }

  int rank_of(const std::vector<int>& rs, const std::vector<int>& cs) const {
    Matrix sub(static_cast<Eigen::Index>(rs.size()), static_cast<Eigen::Index>(cs.size()));
    for (std::size_t i = 0; i < rs.size(); ++i)
      for (std::size_t j = 0; j < cs.size(); ++j) sub(i, j) = p_(rs[i], cs[j]);
    return numerical_rank(sub, tol_);
  }

  // Rectangles through (x0, y0) that avoid occupied cells, pass the rank cap
  // and have a nonzero in each of their rows and columns; largest first. The
  // capability oracle is consulted lazily by the caller.
  std::vector<Candidate> candidates(int x0, int y0) {
    std::vector<int> row_pool;
    for (int x : rows_)
      if (x != x0 && !occ_.at(x, y0)) row_pool.push_back(x);
    std::vector<Candidate> out;
    std::vector<int> rs{x0};
    std::function<void(std::size_t)> pick_rows = [&](std::size_t i) {
      if (i == row_pool.size()) {
        std::vector<int> col_pool;
        for (int y : cols_) {
          if (y == y0) continue;
          if (std::none_of(rs.begin(), rs.end(), [&](int x) { return occ_.at(x, y); })) col_pool.push_back(y);
        }
        std::vector<int> sorted_rows = rs;
        std::sort(sorted_rows.begin(), sorted_rows.end());
        std::vector<int> cs{y0};
        pick_cols(sorted_rows, col_pool, 0, cs, out);
        return;
      }
      rs.push_back(row_pool[i]);
      pick_rows(i + 1);
      rs.pop_back();
      pick_rows(i + 1);
    };
    pick_rows(0);
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
      if (a.nonzeros != b.nonzeros) return a.nonzeros > b.nonzeros;
      return a.rect < b.rect;
    });
    return out;
  }

  void pick_cols(const std::vector<int>& rs, const std::vector<int>& pool, std::size_t i, std::vector<int>& cs,
                 std::vector<Candidate>& out) {
    if (i == pool.size()) {
      std::vector<int> sorted_cols = cs;
      std::sort(sorted_cols.begin(), sorted_cols.end());
      int count = 0;
      for (int x : rs) {
        int in_row = 0;
        for (int y : sorted_cols) in_row += nz_.at(x, y);
        if (in_row == 0) return;
        count += in_row;
      }
      for (int y : sorted_cols)
        if (std::none_of(rs.begin(), rs.end(), [&](int x) { return nz_.at(x, y) != 0; })) return;
      out.push_back({Rectangle{rs, sorted_cols}, count});
      return;
    }
    cs.push_back(pool[i]);
    // The rank bound only grows with more columns, so a failure prunes the subtree.
    if (rank_of(rs, cs) <= real_rank_cap(k_)) pick_cols(rs, pool, i + 1, cs, out);
    cs.pop_back();
    pick_cols(rs, pool, i + 1, cs, out);
  }

  const Correlation& p_;
  int k_;
  CapabilityOracle& oracle_;
  Grid nz_;
  Grid occ_;
  std::vector<int> rows_;
  std::vector<int> cols_;
  ToleranceConfig tol_;
  std::vector<Rectangle> best_;
  int lower_bound_ = 1;
  bool improved_ = false;
};

}  // namespace

Rectangle Rectangle::create(std::vector<int> rows, std::vector<int> cols) {
  auto canon = [](std::vector<int>& v, const char* what) {
    if (v.empty()) throw Error(ErrorCode::InvalidArgument, std::string("rectangle has no ") + what);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    if (v.front() < 0) throw Error(ErrorCode::InvalidArgument, "negative rectangle index");
  };
  canon(rows, "rows");
  canon(cols, "columns");
  return Rectangle{std::move(rows), std::move(cols)};
}

bool Rectangle::contains(int x, int y) const {
  return std::binary_search(rows.begin(), rows.end(), x) && std::binary_search(cols.begin(), cols.end(), y);
}

std::string to_string(PartitionViolation v) {
  switch (v) {
    case PartitionViolation::None: return "none";
    case PartitionViolation::OutOfRange: return "out_of_range";
    case PartitionViolation::Overlap: return "overlap";
    case PartitionViolation::Coverage: return "coverage";
    case PartitionViolation::ZeroRectangle: return "zero_rectangle";
  }
  return "unknown";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Yes: return "yes";
    case Verdict::No: return "no";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

PartitionDiagnostics validate_partition(const Correlation& p, const RectanglePartition& part) {
  PartitionDiagnostics d;
  auto fail = [&d](PartitionViolation v, int rect, int x, int y, const std::string& msg) {
    d.valid = false;
    d.violation = v;
    d.rectangle = rect;
    d.x = x;
    d.y = y;
    d.message = msg;
    return d;
  };
  const int n = static_cast<int>(p.rows());
  const int m = static_cast<int>(p.cols());
  for (int i = 0; i < part.size(); ++i) {
    const auto& r = part.rectangles[i];
    if (r.rows.empty() || r.cols.empty()) {
      return fail(PartitionViolation::OutOfRange, i, -1, -1, "rectangle " + std::to_string(i) + " is empty");
    }
    for (int x : r.rows)
      if (x < 0 || x >= n)
        return fail(PartitionViolation::OutOfRange, i, x, -1, "rectangle " + std::to_string(i) + " row out of range");
    for (int y : r.cols)
      if (y < 0 || y >= m)
        return fail(PartitionViolation::OutOfRange, i, -1, y,
                    "rectangle " + std::to_string(i) + " column out of range");
  }
  std::vector<int> owner(static_cast<std::size_t>(n) * m, -1);
  for (int i = 0; i < part.size(); ++i) {
    const auto& r = part.rectangles[i];
    for (int x : r.rows)
      for (int y : r.cols) {
        int& o = owner[static_cast<std::size_t>(x) * m + y];
        if (o >= 0) {
          std::ostringstream os;
          os << "entry (" << x << "," << y << ") lies in rectangles " << o << " and " << i;
          return fail(PartitionViolation::Overlap, i, x, y, os.str());
        }
        o = i;
      }
  }
  for (int i = 0; i < part.size(); ++i) {
    if (!(submatrix(p, part.rectangles[i]).sum() > 0.0)) {
      return fail(PartitionViolation::ZeroRectangle, i, -1, -1,
                  "rectangle " + std::to_string(i) + " has an all-zero submatrix");
    }
  }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < m; ++y)
      if (p(x, y) > 0.0 && owner[static_cast<std::size_t>(x) * m + y] < 0) {
        std::ostringstream os;
        os << "nonzero entry (" << x << "," << y << ") is not covered";
        return fail(PartitionViolation::Coverage, -1, x, y, os.str());
      }
  return d;
}

SearchConfig oracle_budget() {
  SearchConfig cfg;
  cfg.starts = 6;
  cfg.max_iters = 2000;
  cfg.stop_on_success = true;
  return cfg;
}

Matrix submatrix(const Correlation& p, const Rectangle& rect) {
  check_in_range(p, rect);
  Matrix sub(static_cast<Eigen::Index>(rect.rows.size()), static_cast<Eigen::Index>(rect.cols.size()));
  for (std::size_t i = 0; i < rect.rows.size(); ++i)
    for (std::size_t j = 0; j < rect.cols.size(); ++j) sub(i, j) = p(rect.rows[i], rect.cols[j]);
  return sub;
}

CapabilityResult rectangle_within_capability(const Correlation& p, const Rectangle& rect, int k,
                                             const SearchConfig& budget) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "capability k must be >= 1");
  const ToleranceConfig& tol = budget.tol;
  const Matrix sub = submatrix(p, rect);
  CapabilityResult out;
  const double mass = sub.sum();
  if (!(mass > 0.0)) {
    out.verdict = Verdict::No;
    out.reason = "zero submatrix";
    return out;
  }
  const Correlation q = normalize_to_correlation(sub, tol);
  const int rank = numerical_rank(q.matrix(), tol);
  if (rank > real_rank_cap(k)) {
    out.verdict = Verdict::No;
    out.reason = "rank bound";
    return out;
  }
  const double accept = std::max(tol.residual_tol, tol.l1_eps);
  if (std::min(q.rows(), q.cols()) <= k) {
    out.verdict = Verdict::Yes;
    out.witness = trivial_psd_factorization(q.matrix());
    out.residual = l1_distance(q.matrix(), reconstruct(*out.witness));
    out.reason = "trivial witness";
    return out;
  }
  if (rank == 1) {
    // Nonnegative rank one: P = (row sums)(column sums)^T.
    const Vector u = q.matrix().rowwise().sum();
    const Vector v = q.matrix().colwise().sum().transpose();
    PsdFactorization f;
    for (Eigen::Index x = 0; x < u.size(); ++x) f.row_factors.push_back(Matrix::Constant(1, 1, u(x)));
    for (Eigen::Index y = 0; y < v.size(); ++y) f.col_factors.push_back(Matrix::Constant(1, 1, v(y)));
    const double residual = l1_distance(q.matrix(), reconstruct(f));
    if (residual <= accept) {
      out.verdict = Verdict::Yes;
      out.witness = std::move(f);
      out.residual = residual;
      out.reason = "rank one";
      return out;
    }
  }
  SearchConfig cfg = budget;
  cfg.stop_on_success = true;
  PsdSearchResult res = psd_factorize(q, k, cfg);
  out.residual = res.residual;
  if (res.residual <= accept) {
    out.verdict = Verdict::Yes;
    out.witness = std::move(res.factorization);
    out.reason = "search witness";
  } else {
    out.verdict = Verdict::Unknown;
    out.reason = "search budget exhausted";
  }
  return out;
}

CapabilityOracle::CapabilityOracle(const Correlation& p, int k, SearchConfig budget)
    : p_(p), k_(k), budget_(std::move(budget)) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "capability k must be >= 1");
}

const CapabilityResult& CapabilityOracle::check(const Rectangle& rect) {
  auto it = cache_.find(rect);
  if (it == cache_.end()) it = cache_.emplace(rect, rectangle_within_capability(p_, rect, k_, budget_)).first;
  return it->second;
}

PartitionResult k_partition_greedy(const Correlation& p, int k, const SearchConfig& budget) {
  CapabilityOracle oracle(p, k, budget);
  return greedy(p, oracle);
}

PartitionResult k_partition_exact(const Correlation& p, int k, int size_cap, const SearchConfig& budget) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "capability k must be >= 1");
  if (size_cap < 1 || size_cap > kExactNonzeroCap) {
    throw Error(ErrorCode::InvalidArgument, "exact search cap must be in [1, 64]");
  }
  const int n = static_cast<int>(p.rows());
  const int m = static_cast<int>(p.cols());
  int nonzeros = 0;
  std::vector<int> active_rows;
  std::vector<int> active_cols;
  for (int x = 0; x < n; ++x) {
    if (p.matrix().row(x).maxCoeff() > 0.0) active_rows.push_back(x);
    for (int y = 0; y < m; ++y) nonzeros += p(x, y) > 0.0;
  }
  for (int y = 0; y < m; ++y)
    if (p.matrix().col(y).maxCoeff() > 0.0) active_cols.push_back(y);
  if (nonzeros > size_cap) {
    throw Error(ErrorCode::ExactSearchCapExceeded,
                std::to_string(nonzeros) + " nonzero entries exceed the cap of " + std::to_string(size_cap));
  }
  if (static_cast<int>(active_rows.size() + active_cols.size()) > kExactActiveLineCap) {
    throw Error(ErrorCode::ExactSearchCapExceeded, "more than " + std::to_string(kExactActiveLineCap) +
                                                       " active rows and columns");
  }

  CapabilityOracle oracle(p, k, budget);
  PartitionResult out = greedy(p, oracle);
  const int lower = kprank_lower_bound(p, k, block_prank_lower_bound(p, budget.tol), budget.tol);
  if (out.partition.size() > lower) {
    ExactSearch search(p, k, oracle, active_rows, active_cols, budget.tol);
    std::vector<Rectangle> best = out.partition.rectangles;
    if (search.run(best, lower, out.nodes)) {
      out.partition.rectangles.clear();
      out.verdicts.clear();
      out.witnesses.clear();
      for (const auto& r : best) record(out, r, oracle.check(r));
    }
  }
  out.optimal = true;
  return out;
}

BlockPsdFactorization partition_to_block_factorization(const Correlation& p, const PartitionResult& result,
                                                       int k) {
  const PartitionDiagnostics diag = validate_partition(p, result.partition);
  if (!diag.valid) throw Error(ErrorCode::InvariantViolation, diag.message);
  const auto count = result.partition.rectangles.size();
  if (result.verdicts.size() != count || result.witnesses.size() != count) {
    throw Error(ErrorCode::InvariantViolation, "every rectangle needs a verdict and a witness");
  }
  BlockPsdFactorization bf;
  bf.block_size = k;
  for (std::size_t i = 0; i < count; ++i) {
    const Rectangle& rect = result.partition.rectangles[i];
    const PsdFactorization& w = result.witnesses[i];
    if (result.verdicts[i] != Verdict::Yes) {
      throw Error(ErrorCode::InvariantViolation, "rectangle " + std::to_string(i) + " is not capability-yes");
    }
    const int s = w.side();
    if (s < 1 || s > k || w.rows() != static_cast<Eigen::Index>(rect.rows.size()) ||
        w.cols() != static_cast<Eigen::Index>(rect.cols.size())) {
      throw Error(ErrorCode::InvariantViolation, "witness " + std::to_string(i) + " does not fit its rectangle");
    }
    PsdFactorization branch;
    branch.row_factors.assign(static_cast<std::size_t>(p.rows()), Matrix::Zero(s, s));
    branch.col_factors.assign(static_cast<std::size_t>(p.cols()), Matrix::Zero(s, s));
    for (std::size_t a = 0; a < rect.rows.size(); ++a) branch.row_factors[rect.rows[a]] = w.row_factors[a];
    for (std::size_t b = 0; b < rect.cols.size(); ++b) branch.col_factors[rect.cols[b]] = w.col_factors[b];
    bf.weights.push_back(submatrix(p, rect).sum());
    bf.branches.push_back(std::move(branch));
  }
  double total = 0.0;
  for (double v : bf.weights) total += v;
  for (double& v : bf.weights) v /= total;
  return bf;
}

BlockPsdFactorization partition_to_block_factorization(const Correlation& p, const RectanglePartition& part,
                                                       int k, const SearchConfig& budget) {
  CapabilityOracle oracle(p, k, budget);
  PartitionResult result;
  result.partition = part;
  for (const auto& r : part.rectangles) {
    check_in_range(p, r);
    const CapabilityResult& c = oracle.check(r);
    if (c.verdict != Verdict::Yes) {
      throw Error(ErrorCode::InvariantViolation, "rectangle without a capability witness");
    }
    result.verdicts.push_back(c.verdict);
    result.witnesses.push_back(*c.witness);
  }
  return partition_to_block_factorization(p, result, k);
}

}  // namespace hybridcorr
