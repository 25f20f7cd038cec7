#include "gram_search.hpp"

#include <algorithm>
#include <cmath>

#include "hybridcorr/rng.hpp"

namespace hybridcorr::detail {

namespace {

constexpr double kLambdaMin = 1e-12;
constexpr double kLambdaMax = 1e12;
constexpr int kStagnationWindow = 50;
constexpr double kStagnationRatio = 0.999;
constexpr double kVanishingLoss = 1e-32;

std::vector<Matrix> grams(const std::vector<Matrix>& roots) {
  std::vector<Matrix> out;
  out.reserve(roots.size());
  for (const auto& a : roots) out.push_back(a * a.transpose());
  return out;
}

}  // namespace

Matrix gram_model(const GramState& s) {
  const auto n = static_cast<Eigen::Index>(s.row_roots.size() / s.branches);
  const auto m = static_cast<Eigen::Index>(s.col_roots.size() / s.branches);
  Matrix out = Matrix::Zero(n, m);
  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index y = 0; y < m; ++y) {
      double v = 0.0;
      for (int i = 0; i < s.branches; ++i) {
        v += (s.row_roots[x * s.branches + i].transpose() * s.col_roots[y * s.branches + i])
                 .squaredNorm();
      }
      out(x, y) = v;
    }
  }
  return out;
}

GramState clustered_gram_state(const Matrix& target, int branches, int side, std::uint64_t seed,
                               std::uint64_t start) {
  const Eigen::Index n = target.rows();
  const Eigen::Index m = target.cols();
  CounterRng rng(seed, start);

  // k-means++ anchors over rows normalized to unit length; rows then join the
  // branch of their closest anchor and columns the branch holding most of
  // their mass.
  Matrix unit = target;
  for (Eigen::Index x = 0; x < n; ++x) {
    const double norm = unit.row(x).norm();
    if (norm > 0.0) unit.row(x) /= norm;
  }
  std::vector<Eigen::Index> anchors;
  Vector dist = Vector::Constant(n, 1.0);
  for (Eigen::Index x = 0; x < n; ++x)
    if (target.row(x).sum() <= 0.0) dist(x) = 0.0;
  for (int i = 0; i < branches; ++i) {
    const double total = dist.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (pick = 0; pick + 1 < n && u >= dist(pick); ++pick) u -= dist(pick);
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n));
    }
    anchors.push_back(pick);
    for (Eigen::Index x = 0; x < n; ++x) dist(x) = std::min(dist(x), (unit.row(x) - unit.row(pick)).squaredNorm());
  }
  std::vector<int> row_branch(n, 0);
  for (Eigen::Index x = 0; x < n; ++x) {
    double best = -1.0;
    for (int i = 0; i < branches; ++i) {
      const double sim = unit.row(x).dot(unit.row(anchors[i]));
      if (sim > best) {
        best = sim;
        row_branch[x] = i;
      }
    }
  }
  std::vector<int> col_branch(m, 0);
  for (Eigen::Index y = 0; y < m; ++y) {
    Vector mass = Vector::Zero(branches);
    for (Eigen::Index x = 0; x < n; ++x) mass(row_branch[x]) += target(x, y);
    mass.maxCoeff(&col_branch[y]);
  }

  GramState s;
  s.branches = branches;
  s.side = side;
  const double mean = std::max(target.mean(), 1e-300);
  const double sigma = std::pow(mean * branches / std::pow(side, 3.0), 0.25);
  auto draw = [&](Eigen::Index count, const std::vector<int>& owner, std::vector<Matrix>& out) {
    out.resize(static_cast<std::size_t>(count) * branches);
    for (Eigen::Index u = 0; u < count; ++u) {
      for (int i = 0; i < branches; ++i) {
        Matrix& a = out[u * branches + i];
        a.resize(side, side);
        const double amp = owner[u] == i ? sigma : 0.05 * sigma;
        for (Eigen::Index c = 0; c < side; ++c)
          for (Eigen::Index r = 0; r < side; ++r) a(r, c) = amp * rng.normal();
      }
    }
  };
  draw(n, row_branch, s.row_roots);
  draw(m, col_branch, s.col_roots);
  return s;
}

GramState random_gram_state(const Matrix& target, int branches, int side, std::uint64_t seed,
                            std::uint64_t start) {
  GramState s;
  s.branches = branches;
  s.side = side;
  // E tr(A A^T B B^T) = side^3 sigma^4 per branch for i.i.d. N(0, sigma^2)
  // entries; match the mean target entry.
  const double mean = std::max(target.mean(), 1e-300);
  const double sigma = std::pow(mean / (branches * std::pow(side, 3.0)), 0.25);
  CounterRng rng(seed, start);
  auto draw = [&](Eigen::Index count, std::vector<Matrix>& out) {
    out.resize(static_cast<std::size_t>(count) * branches);
    for (auto& a : out) {
      a.resize(side, side);
      for (Eigen::Index j = 0; j < side; ++j)
        for (Eigen::Index i = 0; i < side; ++i) a(i, j) = sigma * rng.normal();
    }
  };
  draw(target.rows(), s.row_roots);
  draw(target.cols(), s.col_roots);
  return s;
}

namespace {

// Residuals f(x, y) = model(x, y) - T(x, y) and, optionally, the two nonzero
// gradient blocks of each residual: with respect to the row roots of x
// (ga) and the column roots of y (gb), each of length branches * side^2.
struct Linearization {
  Vector f;   // index x * m + y
  Matrix ga;  // (b * side^2) x (n * m)
  Matrix gb;
};

double linearize(const Matrix& target, const GramState& s, Linearization& lin, bool with_jacobian) {
  const int b = s.branches;
  const int side = s.side;
  const int block = side * side;
  const Eigen::Index n = target.rows();
  const Eigen::Index m = target.cols();
  lin.f.resize(n * m);
  if (with_jacobian) {
    lin.ga.resize(b * block, n * m);
    lin.gb.resize(b * block, n * m);
  }
  const auto cg = grams(s.col_roots);
  const auto rg = with_jacobian ? grams(s.row_roots) : std::vector<Matrix>{};
  Matrix da(side, side), cb(side, side);
  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index y = 0; y < m; ++y) {
      const Eigen::Index e = x * m + y;
      double v = -target(x, y);
      for (int i = 0; i < b; ++i) {
        const Matrix& a = s.row_roots[x * b + i];
        da.noalias() = cg[y * b + i] * a;
        v += a.cwiseProduct(da).sum();
        if (with_jacobian) {
          cb.noalias() = rg[x * b + i] * s.col_roots[y * b + i];
          lin.ga.col(e).segment(i * block, block) = 2.0 * Eigen::Map<const Vector>(da.data(), block);
          lin.gb.col(e).segment(i * block, block) = 2.0 * Eigen::Map<const Vector>(cb.data(), block);
        }
      }
      lin.f(e) = v;
    }
  }
  return lin.f.squaredNorm();
}

}  // namespace

GramRun descend(const Matrix& target, GramState state, int max_iters, double stop_l1) {
  const int b = state.branches;
  const int side = state.side;
  const Eigen::Index pb = static_cast<Eigen::Index>(b) * side * side;  // parameters per root slot
  const Eigen::Index n = target.rows();
  const Eigen::Index m = target.cols();
  const Eigen::Index nm = n * m;
  const Eigen::Index p = (n + m) * pb;
  const bool dual = nm < p;

  // Normal matrix, either J^T J (p x p) or J J^T (nm x nm), from the blocks.
  auto normal_matrix = [&](const Linearization& lin) {
    if (dual) {
      Matrix k = Matrix::Zero(nm, nm);
      for (Eigen::Index x = 0; x < n; ++x) {
        const auto ga = lin.ga.middleCols(x * m, m);
        k.block(x * m, x * m, m, m) += ga.transpose() * ga;
      }
      for (Eigen::Index y = 0; y < m; ++y) {
        for (Eigen::Index x1 = 0; x1 < n; ++x1) {
          for (Eigen::Index x2 = x1; x2 < n; ++x2) {
            const double v = lin.gb.col(x1 * m + y).dot(lin.gb.col(x2 * m + y));
            k(x1 * m + y, x2 * m + y) += v;
            if (x2 != x1) k(x2 * m + y, x1 * m + y) += v;
          }
        }
      }
      return k;
    }
    Matrix h = Matrix::Zero(p, p);
    const Eigen::Index off = n * pb;
    for (Eigen::Index x = 0; x < n; ++x) {
      const auto ga = lin.ga.middleCols(x * m, m);
      h.block(x * pb, x * pb, pb, pb) += ga * ga.transpose();
      for (Eigen::Index y = 0; y < m; ++y) {
        const Matrix cross = lin.ga.col(x * m + y) * lin.gb.col(x * m + y).transpose();
        h.block(x * pb, off + y * pb, pb, pb) += cross;
        h.block(off + y * pb, x * pb, pb, pb) += cross.transpose();
      }
    }
    for (Eigen::Index y = 0; y < m; ++y) {
      Matrix acc = Matrix::Zero(pb, pb);
      for (Eigen::Index x = 0; x < n; ++x) acc += lin.gb.col(x * m + y) * lin.gb.col(x * m + y).transpose();
      h.block(off + y * pb, off + y * pb, pb, pb) += acc;
    }
    return h;
  };
  // J^T z for z indexed like the residuals.
  auto jt_times = [&](const Linearization& lin, const Vector& z) {
    Vector out = Vector::Zero(p);
    const Eigen::Index off = n * pb;
    for (Eigen::Index x = 0; x < n; ++x) {
      for (Eigen::Index y = 0; y < m; ++y) {
        const double w = z(x * m + y);
        out.segment(x * pb, pb) += w * lin.ga.col(x * m + y);
        out.segment(off + y * pb, pb) += w * lin.gb.col(x * m + y);
      }
    }
    return out;
  };
  auto apply = [&](const GramState& s, const Vector& step) {
    GramState t = s;
    for (std::size_t k = 0; k < t.row_roots.size(); ++k)
      t.row_roots[k] += Eigen::Map<const Matrix>(step.data() + k * side * side, side, side);
    const Eigen::Index off = n * pb;
    for (std::size_t k = 0; k < t.col_roots.size(); ++k)
      t.col_roots[k] += Eigen::Map<const Matrix>(step.data() + off + k * side * side, side, side);
    return t;
  };

  Linearization lin, trial_lin;
  double lambda = 1e-3;
  std::vector<double> history;
  history.push_back(linearize(target, state, lin, false));
  int it = 0;
  for (; it < max_iters; ++it) {
    const double loss0 = history.back();
    if (loss0 <= kVanishingLoss) break;
    if (stop_l1 > 0.0 && lin.f.cwiseAbs().sum() <= stop_l1) break;
    linearize(target, state, lin, true);
    const Matrix normal = normal_matrix(lin);
    const Vector g = dual ? Vector() : jt_times(lin, lin.f);
    // J^T J and J J^T share their nonzero spectrum, so the largest diagonal
    // entry of either is a usable damping scale.
    const double scale = std::max(normal.diagonal().maxCoeff(), 1e-300);
    bool accepted = false;
    while (lambda <= kLambdaMax) {
      Matrix damped = normal;
      damped.diagonal().array() += lambda * scale;
      const Vector step = dual ? Vector(-jt_times(lin, damped.ldlt().solve(lin.f)))
                               : Vector(damped.ldlt().solve(-g));
      GramState trial = apply(state, step);
      const double loss1 = linearize(target, trial, trial_lin, false);
      if (std::isfinite(loss1) && loss1 < loss0) {
        state = std::move(trial);
        lin.f = trial_lin.f;
        history.push_back(loss1);
        lambda = std::max(lambda / 3.0, kLambdaMin);
        accepted = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      ++it;
      break;
    }
    const auto k = history.size() - 1;
    if (k >= kStagnationWindow && history.back() > kStagnationRatio * history[k - kStagnationWindow]) {
      ++it;
      break;
    }
  }
  GramRun run;
  run.l1 = lin.f.cwiseAbs().sum();
  run.iterations = it;
  run.state = std::move(state);
  return run;
}

PsdFactorization branch_factorization(const GramState& s, int branch) {
  PsdFactorization f;
  const std::size_t n = s.row_roots.size() / s.branches;
  const std::size_t m = s.col_roots.size() / s.branches;
  f.row_factors.reserve(n);
  f.col_factors.reserve(m);
  for (std::size_t x = 0; x < n; ++x) {
    const Matrix& a = s.row_roots[x * s.branches + branch];
    f.row_factors.push_back(a * a.transpose());
  }
  for (std::size_t y = 0; y < m; ++y) {
    const Matrix& b = s.col_roots[y * s.branches + branch];
    f.col_factors.push_back(b * b.transpose());
  }
  return f;
}

}  // namespace hybridcorr::detail
