#include "hybridcorr/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gram_search.hpp"
#include "hybridcorr/rng.hpp"

namespace hybridcorr {

namespace {

std::uint64_t stream_id(int side, int branches, int start) {
  return (static_cast<std::uint64_t>(side) << 48) | (static_cast<std::uint64_t>(branches) << 32) |
         static_cast<std::uint32_t>(start);
}

double stop_threshold(const SearchConfig& cfg) {
  if (cfg.tol.l1_eps > 0.0) return cfg.tol.l1_eps;
  return cfg.stop_on_success ? cfg.tol.residual_tol : 0.0;
}

void check_search_args(int r, const SearchConfig& cfg) {
  if (r < 1) throw Error(ErrorCode::InvalidArgument, "rank parameter must be >= 1");
  if (cfg.starts < 1 || cfg.max_iters < 0) {
    throw Error(ErrorCode::InvalidArgument, "search needs at least one start and max_iters >= 0");
  }
  cfg.tol.validate();
}

Matrix unit_projector(int side, int index) {
  Matrix e = Matrix::Zero(side, side);
  e(index, index) = 1.0;
  return e;
}

}  // namespace

int PsdFactorization::side() const {
  if (!row_factors.empty()) return static_cast<int>(row_factors.front().rows());
  if (!col_factors.empty()) return static_cast<int>(col_factors.front().rows());
  return 0;
}

void PsdFactorization::validate(const ToleranceConfig& cfg) const {
  const int r = side();
  if (r < 1 || row_factors.empty() || col_factors.empty()) {
    throw Error(ErrorCode::InvariantViolation, "factorization needs at least one row and column factor");
  }
  auto check = [&](const std::vector<Matrix>& factors, const char* what) {
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const Matrix& f = factors[i];
      std::ostringstream os;
      os << what << " factor " << i;
      if (f.rows() != r || f.cols() != r) {
        throw Error(ErrorCode::InvariantViolation, os.str() + " has the wrong side");
      }
      bool psd = false;
      try {
        psd = is_psd(f, cfg);
      } catch (const Error&) {
        psd = false;
      }
      if (!psd) throw Error(ErrorCode::InvariantViolation, os.str() + " is not PSD");
    }
  };
  check(row_factors, "row");
  check(col_factors, "column");
  if (reconstruct(*this).minCoeff() < -1e-10) {
    throw Error(ErrorCode::InvariantViolation, "reconstruction has a negative entry");
  }
}

Matrix reconstruct(const PsdFactorization& f) {
  Matrix out(f.rows(), f.cols());
  for (Eigen::Index x = 0; x < f.rows(); ++x) {
    for (Eigen::Index y = 0; y < f.cols(); ++y) {
      // tr(C D) for symmetric C, D.
      out(x, y) = f.row_factors[x].cwiseProduct(f.col_factors[y]).sum();
    }
  }
  return out;
}

Matrix reconstruct(const BlockPsdFactorization& bf) {
  if (bf.branches.empty()) throw Error(ErrorCode::InvalidArgument, "block factorization has no branches");
  Matrix out = Matrix::Zero(bf.branches[0].rows(), bf.branches[0].cols());
  for (std::size_t i = 0; i < bf.branches.size(); ++i) out += bf.weights.at(i) * reconstruct(bf.branches[i]);
  return out;
}

PsdFactorization edm_psd_factorization(const EdmSpec& spec, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
  PsdFactorization f;
  for (double c : spec.points()) {
    Vector u(2);
    u << 1.0, c;
    f.row_factors.push_back(scale * u * u.transpose());
    Vector v(2);
    v << c, -1.0;
    f.col_factors.push_back(v * v.transpose());
  }
  return f;
}

PsdFactorization tensor_compose(const PsdFactorization& f1, const PsdFactorization& f2, int max_side) {
  if (static_cast<long long>(f1.side()) * f2.side() > max_side) {
    throw Error(ErrorCode::SizeCapExceeded, "composed factor side exceeds the cap");
  }
  PsdFactorization out;
  out.row_factors.reserve(f1.row_factors.size() * f2.row_factors.size());
  for (const auto& c1 : f1.row_factors)
    for (const auto& c2 : f2.row_factors) out.row_factors.push_back(kron(c1, c2));
  for (const auto& d1 : f1.col_factors)
    for (const auto& d2 : f2.col_factors) out.col_factors.push_back(kron(d1, d2));
  return out;
}

PsdFactorization trivial_psd_factorization(const Matrix& p) {
  require_finite(p);
  PsdFactorization f;
  if (p.rows() <= p.cols()) {
    const int side = static_cast<int>(p.rows());
    for (int x = 0; x < side; ++x) f.row_factors.push_back(unit_projector(side, x));
    for (Eigen::Index y = 0; y < p.cols(); ++y) f.col_factors.push_back(Matrix(p.col(y).cwiseMax(0.0).asDiagonal()));
  } else {
    const int side = static_cast<int>(p.cols());
    for (Eigen::Index x = 0; x < p.rows(); ++x)
      f.row_factors.push_back(Matrix(p.row(x).transpose().cwiseMax(0.0).asDiagonal()));
    for (int y = 0; y < side; ++y) f.col_factors.push_back(unit_projector(side, y));
  }
  return f;
}

BlockPsdFactorization trivial_block_factorization(const Correlation& p, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "block size must be >= 1");
  // Strip along the shorter dimension; work on the transpose when columns are fewer.
  const bool by_rows = p.rows() <= p.cols();
  const Matrix m = by_rows ? p.matrix() : Matrix(p.matrix().transpose());
  BlockPsdFactorization bf;
  bf.block_size = k;
  for (Eigen::Index begin = 0; begin < m.rows(); begin += k) {
    const Eigen::Index len = std::min<Eigen::Index>(k, m.rows() - begin);
    const double mass = m.middleRows(begin, len).sum();
    if (!(mass > 0.0)) continue;
    PsdFactorization f;
    const int side = static_cast<int>(len);
    for (Eigen::Index x = 0; x < m.rows(); ++x) {
      if (x >= begin && x < begin + len) {
        f.row_factors.push_back(unit_projector(side, static_cast<int>(x - begin)));
      } else {
        f.row_factors.push_back(Matrix::Zero(side, side));
      }
    }
    for (Eigen::Index y = 0; y < m.cols(); ++y) {
      f.col_factors.push_back(Matrix(m.col(y).segment(begin, len).asDiagonal()) / mass);
    }
    if (!by_rows) std::swap(f.row_factors, f.col_factors);
    bf.weights.push_back(mass);
    bf.branches.push_back(std::move(f));
  }
  double total = 0.0;
  for (double w : bf.weights) total += w;
  for (double& w : bf.weights) w /= total;
  return bf;
}

PsdFactorization pad_factorization(const PsdFactorization& f, int side) {
  if (side < f.side()) throw Error(ErrorCode::InvalidArgument, "cannot pad to a smaller side");
  PsdFactorization out;
  auto pad = [side](const Matrix& m) {
    Matrix z = Matrix::Zero(side, side);
    z.topLeftCorner(m.rows(), m.cols()) = m;
    return z;
  };
  for (const auto& c : f.row_factors) out.row_factors.push_back(pad(c));
  for (const auto& d : f.col_factors) out.col_factors.push_back(pad(d));
  return out;
}

NmfResult nmf(const Correlation& p, int r, const SearchConfig& cfg) {
  check_search_args(r, cfg);
  const Matrix& target = p.matrix();
  const auto n = target.rows();
  const auto m = target.cols();
  const double stop = stop_threshold(cfg);
  const double scale = std::sqrt(std::max(target.mean(), 1e-300) / r);
  NmfResult best;
  best.residual = std::numeric_limits<double>::infinity();
  for (int start = 0; start < cfg.starts; ++start) {
    CounterRng rng(cfg.seed, stream_id(0, r, start));
    Matrix w(n, r), h(r, m);
    for (Eigen::Index j = 0; j < r; ++j)
      for (Eigen::Index i = 0; i < n; ++i) w(i, j) = scale * (0.1 + rng.uniform());
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < r; ++i) h(i, j) = scale * (0.1 + rng.uniform());

    // Hierarchical ALS: exact nonnegative least squares on one rank-1 term
    // at a time, alternating between H and W.
    std::vector<double> history{(target - w * h).squaredNorm()};
    for (int it = 0; it < cfg.max_iters; ++it) {
      if (history.back() <= 1e-32) break;
      {
        const Matrix wtp = w.transpose() * target;
        const Matrix wtw = w.transpose() * w;
        for (Eigen::Index j = 0; j < r; ++j) {
          const double denom = std::max(wtw(j, j), 1e-300);
          h.row(j) = (h.row(j) + (wtp.row(j) - wtw.row(j) * h) / denom).cwiseMax(0.0);
        }
      }
      {
        const Matrix pht = target * h.transpose();
        const Matrix hht = h * h.transpose();
        for (Eigen::Index j = 0; j < r; ++j) {
          const double denom = std::max(hht(j, j), 1e-300);
          w.col(j) = (w.col(j) + (pht.col(j) - w * hht.col(j)) / denom).cwiseMax(0.0);
        }
      }
      const double loss = (target - w * h).squaredNorm();
      history.push_back(loss);
      const auto k = history.size() - 1;
      if (k >= 50 && loss > 0.999 * history[k - 50]) break;
      if (stop > 0.0 && (target - w * h).cwiseAbs().sum() <= stop) break;
    }
    const double residual = l1_distance(target, w * h);
    if (residual < best.residual) {
      best.w = w;
      best.h = h;
      best.residual = residual;
      best.best_start = start;
    }
    if (stop > 0.0 && best.residual <= stop) break;
  }
  return best;
}

namespace {

// Best side-r search with the side-(r-1) result as an extra candidate.
PsdSearchResult psd_factorize_side(const Correlation& p, int r, const SearchConfig& cfg,
                                   const PsdSearchResult* smaller) {
  const Matrix& target = p.matrix();
  const double stop = stop_threshold(cfg);
  PsdSearchResult best;
  best.residual = std::numeric_limits<double>::infinity();
  if (smaller) {
    best.factorization = pad_factorization(smaller->factorization, r);
    best.residual = smaller->residual;
    best.best_start = -1;
    if (stop > 0.0 && best.residual <= stop) return best;
  }
  for (int start = 0; start < cfg.starts; ++start) {
    auto init = detail::random_gram_state(target, 1, r, cfg.seed, stream_id(r, 1, start));
    auto run = detail::descend(target, std::move(init), cfg.max_iters, stop);
    PsdFactorization f = detail::branch_factorization(run.state, 0);
    const double residual = l1_distance(target, reconstruct(f));
    if (residual < best.residual) {
      best.factorization = std::move(f);
      best.residual = residual;
      best.best_start = start;
    }
    if (stop > 0.0 && best.residual <= stop) break;
  }
  return best;
}

}  // namespace

PsdSearchResult psd_factorize(const Correlation& p, int r, const SearchConfig& cfg) {
  return psd_factorize_sweep(p, 1, r, cfg, false).back();
}

std::vector<PsdSearchResult> psd_factorize_sweep(const Correlation& p, int r_min, int r_max,
                                                 const SearchConfig& cfg, bool stop_at_success) {
  check_search_args(r_min, cfg);
  if (r_max < r_min) throw Error(ErrorCode::InvalidArgument, "empty side range");
  const double accept = std::max(cfg.tol.residual_tol, cfg.tol.l1_eps);
  std::vector<PsdSearchResult> out;
  for (int side = r_min; side <= r_max; ++side) {
    out.push_back(psd_factorize_side(p, side, cfg, out.empty() ? nullptr : &out.back()));
    if (stop_at_success && out.back().residual <= accept) break;
  }
  return out;
}

BlockSearchResult kblock_factorize(const Correlation& p, int k, int r, const SearchConfig& cfg) {
  check_search_args(r, cfg);
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "block size must be >= 1");
  const Matrix& target = p.matrix();
  const double stop = stop_threshold(cfg);
  BlockSearchResult best;
  best.residual = std::numeric_limits<double>::infinity();
  for (int start = 0; start < cfg.starts; ++start) {
    // Even starts are support-clustered, odd starts fully random.
    auto init = (r > 1 && start % 2 == 0)
                    ? detail::clustered_gram_state(target, r, k, cfg.seed, stream_id(k, r, start))
                    : detail::random_gram_state(target, r, k, cfg.seed, stream_id(k, r, start));
    // Headroom for the weight renormalization below.
    auto run = detail::descend(target, std::move(init), cfg.max_iters, stop * 1e-2);

    BlockPsdFactorization bf;
    bf.block_size = k;
    double total = 0.0;
    for (int i = 0; i < r; ++i) {
      PsdFactorization f = detail::branch_factorization(run.state, i);
      const double mass = reconstruct(f).sum();
      if (!(mass > 1e-14)) continue;  // zero-weight branch
      for (auto& c : f.row_factors) c /= mass;
      bf.weights.push_back(mass);
      bf.branches.push_back(std::move(f));
      total += mass;
    }
    if (bf.branches.empty()) continue;
    for (double& w : bf.weights) w /= total;
    const double residual = l1_distance(target, reconstruct(bf));
    if (residual < best.residual) {
      best.factorization = std::move(bf);
      best.residual = residual;
      best.best_start = start;
    }
    if (stop > 0.0 && best.residual <= stop) break;
  }
  if (best.factorization.branches.empty()) {
    throw Error(ErrorCode::Infeasible, "every start collapsed to the zero matrix");
  }
  return best;
}

std::string to_string(CertificationFailure f) {
  switch (f) {
    case CertificationFailure::None: return "None";
    case CertificationFailure::ShapeMismatch: return "ShapeMismatch";
    case CertificationFailure::WeightInvariant: return "WeightInvariant";
    case CertificationFailure::NonPsdBlock: return "NonPsdBlock";
    case CertificationFailure::ResidualExceeded: return "ResidualExceeded";
  }
  return "Unknown";
}

CertificationReport certify_block_factorization(const Correlation& p, const BlockPsdFactorization& bf,
                                                const ToleranceConfig& cfg) {
  CertificationReport rep;
  auto fail = [&rep](CertificationFailure kind, std::string msg, int branch = -1, int factor = -1,
                     bool is_row = true) {
    rep.passed = false;
    rep.failure = kind;
    rep.diagnostic = std::move(msg);
    rep.failing_branch = branch;
    rep.failing_factor = factor;
    rep.failing_is_row = is_row;
    return rep;
  };

  if (bf.branches.empty() || bf.weights.size() != bf.branches.size()) {
    return fail(CertificationFailure::ShapeMismatch, "need one weight per branch and at least one branch");
  }
  for (int i = 0; i < bf.branch_count(); ++i) {
    const auto& b = bf.branches[i];
    if (b.rows() != p.rows() || b.cols() != p.cols()) {
      return fail(CertificationFailure::ShapeMismatch, "branch " + std::to_string(i) + " has the wrong shape", i);
    }
    if (b.side() < 1 || b.side() > bf.block_size) {
      return fail(CertificationFailure::ShapeMismatch,
                  "branch " + std::to_string(i) + " side exceeds the block size", i);
    }
  }

  double total = 0.0;
  for (int i = 0; i < bf.branch_count(); ++i) {
    const double w = bf.weights[i];
    if (!(w > 0.0) || !std::isfinite(w)) {
      return fail(CertificationFailure::WeightInvariant,
                  "weight " + std::to_string(i) + " is not strictly positive", i);
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kCorrelationSumTol) {
    return fail(CertificationFailure::WeightInvariant, "weights do not sum to 1");
  }

  for (int i = 0; i < bf.branch_count(); ++i) {
    const auto& b = bf.branches[i];
    auto psd_or_fail = [&](const std::vector<Matrix>& factors) -> int {
      for (std::size_t j = 0; j < factors.size(); ++j) {
        const Matrix& f = factors[j];
        bool ok = f.rows() == b.side() && f.cols() == b.side();
        if (ok) {
          try {
            ok = is_psd(f, cfg);
          } catch (const Error&) {
            ok = false;
          }
        }
        if (!ok) return static_cast<int>(j);
      }
      return -1;
    };
    if (int j = psd_or_fail(b.row_factors); j >= 0) {
      return fail(CertificationFailure::NonPsdBlock,
                  "block " + std::to_string(i) + " row factor " + std::to_string(j) + " is not PSD", i, j, true);
    }
    if (int j = psd_or_fail(b.col_factors); j >= 0) {
      return fail(CertificationFailure::NonPsdBlock,
                  "block " + std::to_string(i) + " column factor " + std::to_string(j) + " is not PSD", i, j,
                  false);
    }
  }

  // Materialize the block-diagonal factors and recompute every trace.
  int total_side = 0;
  for (const auto& b : bf.branches) total_side += b.side();
  rep.total_side = total_side;
  auto assemble = [&](bool rows, Eigen::Index index) {
    Matrix big = Matrix::Zero(total_side, total_side);
    int offset = 0;
    for (int i = 0; i < bf.branch_count(); ++i) {
      const auto& b = bf.branches[i];
      const int s = b.side();
      if (rows) {
        big.block(offset, offset, s, s) = bf.weights[i] * b.row_factors[index];
      } else {
        big.block(offset, offset, s, s) = b.col_factors[index];
      }
      offset += s;
    }
    return big;
  };
  std::vector<Matrix> big_cols;
  big_cols.reserve(p.cols());
  for (Eigen::Index y = 0; y < p.cols(); ++y) big_cols.push_back(assemble(false, y));
  Matrix q(p.rows(), p.cols());
  for (Eigen::Index x = 0; x < p.rows(); ++x) {
    const Matrix cx = assemble(true, x);
    for (Eigen::Index y = 0; y < p.cols(); ++y) q(x, y) = (cx * big_cols[y]).trace();
  }
  rep.max_abs_error = (q - p.matrix()).cwiseAbs().maxCoeff();
  rep.l1_residual = l1_distance(q, p.matrix());
  const double allowed = std::max(cfg.residual_tol, cfg.l1_eps);
  if (rep.l1_residual > allowed) {
    std::ostringstream os;
    os << "L1 residual " << rep.l1_residual << " exceeds " << allowed;
    return fail(CertificationFailure::ResidualExceeded, os.str());
  }
  rep.passed = true;
  return rep;
}

void require_certified(const CertificationReport& report) {
  if (!report.passed) throw Error(ErrorCode::InvariantViolation, to_string(report.failure) + ": " + report.diagnostic);
}

}  // namespace hybridcorr
