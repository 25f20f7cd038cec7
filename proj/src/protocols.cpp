#include "hybridcorr/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "hybridcorr/bounds.hpp"
#include "hybridcorr/rng.hpp"

namespace hybridcorr {

namespace {

constexpr double kSupportCutoff = 1e-10;
constexpr double kCompletenessTol = 1e-9;
constexpr double kMajorizationTol = 1e-12;

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Cumulative distribution over the row-major flattening, negatives clamped.
std::vector<double> flat_cdf(const Matrix& dist) {
  std::vector<double> cdf;
  cdf.reserve(static_cast<std::size_t>(dist.size()));
  double acc = 0.0;
  for (Eigen::Index x = 0; x < dist.rows(); ++x)
    for (Eigen::Index y = 0; y < dist.cols(); ++y) {
      acc += std::max(dist(x, y), 0.0);
      cdf.push_back(acc);
    }
  if (!(acc > 0.0)) throw Error(ErrorCode::ZeroMatrix, "cannot sample from an all-zero distribution");
  for (double& c : cdf) c /= acc;
  return cdf;
}

// Index of the first cell whose cumulative mass exceeds u, skipping
// zero-probability cells even under rounding.
std::size_t invert(const std::vector<double>& cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) {
    // u is within rounding of 1: take the last cell with positive mass.
    std::size_t i = cdf.size() - 1;
    while (i > 0 && cdf[i] == cdf[i - 1]) --i;
    return i;
  }
  return static_cast<std::size_t>(it - cdf.begin());
}

std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  for (double& v : c) v /= c.back();
  return c;
}

void check_block_capability(const BlockPsdFactorization& bf, int s) {
  if (s < 0 || s > 20) throw Error(ErrorCode::InvalidArgument, "capability s must be in [0, 20]");
  const int cap = 1 << s;
  if (bf.block_size > cap) {
    throw Error(ErrorCode::CapabilityExceeded, "block size " + std::to_string(bf.block_size) +
                                                   " exceeds 2^s = " + std::to_string(cap));
  }
  for (int i = 0; i < bf.branch_count(); ++i) {
    if (bf.branches[i].side() > cap) {
      throw Error(ErrorCode::CapabilityExceeded, "branch " + std::to_string(i) + " side exceeds 2^s");
    }
  }
}

HybridProtocol assemble_hybrid(const BlockPsdFactorization& bf, int s, HybridMode mode, const ToleranceConfig& cfg) {
  check_block_capability(bf, s);
  if (bf.branches.empty() || bf.weights.size() != bf.branches.size()) {
    throw Error(ErrorCode::InvalidArgument, "need one weight per branch and at least one branch");
  }
  HybridProtocol h;
  h.mode = mode;
  h.capability = s;
  h.weights = bf.weights;
  for (const auto& b : bf.branches) h.branches.push_back(build_seed_protocol(b, cfg));
  h.classical_bits = hybrid_classical_cost(static_cast<int>(h.branches.size()));
  h.validate();
  return h;
}

}  // namespace

int QuantumSeedProtocol::seed_qubits() const { return ceil_log2(static_cast<std::uint64_t>(r)); }

void QuantumSeedProtocol::validate(const ToleranceConfig& cfg) const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvariantViolation, what); };
  if (r < 1 || state.size() != static_cast<Eigen::Index>(r) * r) fail("state dimension is not r^2");
  if (std::abs(state.norm() - 1.0) > 1e-12) fail("state is not normalized");
  if (alice_povm.empty() || bob_povm.empty()) fail("empty POVM");
  auto check = [&](const std::vector<Matrix>& povm, const char* who) {
    Matrix sum = Matrix::Zero(r, r);
    for (const auto& e : povm) {
      if (e.rows() != r || e.cols() != r) fail(std::string(who) + " POVM element has the wrong size");
      if (!is_psd(symmetrize(e), cfg)) fail(std::string(who) + " POVM element is not PSD");
      sum += e;
    }
    const Matrix proj = support_projector(symmetrize(sum), 0.5);
    if ((sum - proj).cwiseAbs().maxCoeff() > kCompletenessTol) {
      fail(std::string(who) + " POVM does not sum to a projector");
    }
  };
  check(alice_povm, "alice");
  check(bob_povm, "bob");
}

QuantumSeedProtocol build_seed_protocol(const PsdFactorization& f, const ToleranceConfig& cfg) {
  f.validate(cfg);
  const Matrix rec = reconstruct(f);
  const double allowed = std::max(cfg.residual_tol, cfg.l1_eps);
  if (std::abs(rec.sum() - 1.0) > allowed) {
    throw Error(ErrorCode::InvalidArgument, "factorization does not reconstruct a correlation");
  }
  const int r = f.side();
  Matrix g = Matrix::Zero(r, r);
  for (const auto& d : f.col_factors) g += d;
  g = symmetrize(g);
  if (!(g.trace() > kSupportCutoff)) throw Error(ErrorCode::SingularSupport, "column factors sum to zero");
  const Matrix g_half = psd_sqrt(g, kSupportCutoff);
  const Matrix g_inv_half = psd_inv_sqrt(g, kSupportCutoff);

  std::vector<Matrix> c_prime;
  Matrix s = Matrix::Zero(r, r);
  for (const auto& c : f.row_factors) {
    c_prime.push_back(symmetrize(g_half * c * g_half));
    s += c_prime.back();
  }
  s = symmetrize(s);
  if (!(s.trace() > kSupportCutoff)) throw Error(ErrorCode::SingularSupport, "state support is empty");
  const Matrix s_half = psd_sqrt(s, kSupportCutoff);
  const Matrix s_inv_half = psd_inv_sqrt(s, kSupportCutoff);

  QuantumSeedProtocol proto;
  proto.r = r;
  proto.state.resize(static_cast<Eigen::Index>(r) * r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) proto.state(static_cast<Eigen::Index>(i) * r + j) = s_half(i, j);
  proto.state /= proto.state.norm();
  for (const auto& c : c_prime) proto.alice_povm.push_back(symmetrize(s_inv_half * c * s_inv_half));
  for (const auto& d : f.col_factors) proto.bob_povm.push_back(symmetrize(g_inv_half * d * g_inv_half));
  proto.validate(cfg);
  return proto;
}

Matrix exact_distribution(const QuantumSeedProtocol& proto) {
  const int r = proto.r;
  Matrix psi(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) psi(i, j) = proto.state(static_cast<Eigen::Index>(i) * r + j);
  const auto n = static_cast<Eigen::Index>(proto.alice_povm.size());
  const auto m = static_cast<Eigen::Index>(proto.bob_povm.size());
  Matrix out(n, m);
  for (Eigen::Index x = 0; x < n; ++x) {
    const Matrix left = proto.alice_povm[x] * psi;
    for (Eigen::Index y = 0; y < m; ++y) {
      out(x, y) = left.cwiseProduct(psi * proto.bob_povm[y].transpose()).sum();
    }
  }
  return out;
}

std::vector<Sample> sample_distribution(const Matrix& dist, std::uint64_t seed, std::uint64_t n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  require_finite(dist);
  const auto cdf = flat_cdf(dist);
  const auto cols = static_cast<std::size_t>(dist.cols());
  std::vector<Sample> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::size_t cell = invert(cdf, uniform_pair(seed, 0, i)[1]);
    out.emplace_back(static_cast<int>(cell / cols), static_cast<int>(cell % cols));
  }
  return out;
}

std::vector<Sample> sample(const QuantumSeedProtocol& proto, std::uint64_t seed, std::uint64_t n) {
  return sample_distribution(exact_distribution(proto), seed, n);
}

std::string to_string(HybridMode m) { return m == HybridMode::ClassicalQuantum ? "cq" : "qc"; }

void HybridProtocol::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvariantViolation, what); };
  if (branches.empty() || weights.size() != branches.size()) fail("need one weight per branch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) fail("branch weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > kCorrelationSumTol) fail("branch weights do not sum to 1");
  if (capability < 0) fail("capability must be >= 0");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (branches[i].seed_qubits() > capability) fail("branch " + std::to_string(i) + " exceeds the capability");
    if (branches[i].alice_povm.size() != branches[0].alice_povm.size() ||
        branches[i].bob_povm.size() != branches[0].bob_povm.size()) {
      fail("branches disagree on the outcome alphabets");
    }
  }
  if (classical_bits != ceil_log2(branches.size())) fail("classical bits differ from ceil(log2 branches)");
}

bool ResourceLedger::all_passed() const noexcept {
  return std::all_of(bound_checks.begin(), bound_checks.end(), [](const BoundCheck& b) { return b.passed; });
}

HybridProtocol build_cq_hybrid(const BlockPsdFactorization& bf, int s, const ToleranceConfig& cfg) {
  return assemble_hybrid(bf, s, HybridMode::ClassicalQuantum, cfg);
}

Matrix exact_distribution(const HybridProtocol& h) {
  Matrix out;
  for (std::size_t i = 0; i < h.branches.size(); ++i) {
    const Matrix d = exact_distribution(h.branches[i]);
    if (i == 0) out = Matrix::Zero(d.rows(), d.cols());
    out += h.weights[i] * d;
  }
  return out;
}

ResourceLedger make_ledger(const HybridProtocol& h, const Correlation& target, const ToleranceConfig& cfg) {
  h.validate();
  ResourceLedger led;
  const int r = static_cast<int>(h.branches.size());
  const int s = h.capability;
  led.qubits_used = s;
  led.classical_bits_stage1 = h.classical_bits;
  led.classical_bits_locc = h.mode == HybridMode::QuantumClassical ? (1 << s) - 1 : 0;

  auto add = [&led](std::string name, bool passed, const std::string& detail) {
    led.bound_checks.push_back({std::move(name), passed, detail});
  };
  std::ostringstream os;

  const int expected_c = hybrid_classical_cost(r);
  os << "c=" << led.classical_bits_stage1 << ", ceil(log2 " << r << ")=" << expected_c;
  add("hybrid_cost", led.classical_bits_stage1 == expected_c, os.str());

  const int rank = numerical_rank(target.matrix(), cfg);
  os.str("");
  os << "2*" << s << "+" << led.classical_bits_stage1 << " >= ceil(log2 " << rank << ")="
     << ceil_log2(static_cast<std::uint64_t>(rank));
  add("tradeoff", tradeoff_check(s, led.classical_bits_stage1, target, cfg), os.str());

  const int kcap = 1 << s;
  const int lb = kprank_lower_bound(target, kcap, block_prank_lower_bound(target, cfg), cfg);
  os.str("");
  os << "branches " << r << " >= kprank lower bound " << lb << " at k=" << kcap;
  add("branch_lower_bound", r >= lb, os.str());

  if (h.mode == HybridMode::QuantumClassical) {
    const int total = led.total_classical_bits();
    os.str("");
    os << "total " << total << " = ceil(log2 " << r << ") + 2^" << s << " - 1 = " << qc_hybrid_cost_upper(r, s);
    add("qc_cost", total == qc_hybrid_cost_upper(r, s), os.str());
  }

  // The hybrid's branches assemble into a PSD factorization whose side is
  // the sum of the branch sides, which gives a PSD-rank estimate for t.
  int side_sum = 0;
  for (const auto& b : h.branches) side_sum += b.r;
  const TBounds t = t_bounds(target, side_sum, cfg);
  os.str("");
  os << "t in [" << t.lower << ", " << t.upper << "] with prank estimate " << side_sum;
  add("t_bounds", t.lower <= t.upper, os.str());
  return led;
}

std::pair<std::vector<Sample>, ResourceLedger> simulate_hybrid(const HybridProtocol& h, std::uint64_t seed,
                                                               std::uint64_t n,
                                                               const std::optional<Correlation>& target,
                                                               const ToleranceConfig& cfg) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  h.validate();
  const auto branch_cdf = cumulative(h.weights);
  std::vector<std::vector<double>> outcome_cdfs;
  for (const auto& b : h.branches) outcome_cdfs.push_back(flat_cdf(exact_distribution(b)));
  const auto cols = h.branches.front().bob_povm.size();

  std::vector<Sample> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto u = uniform_pair(seed, 0, i);
    std::size_t b = static_cast<std::size_t>(std::upper_bound(branch_cdf.begin(), branch_cdf.end(), u[0]) -
                                             branch_cdf.begin());
    b = std::min(b, branch_cdf.size() - 1);
    const std::size_t cell = invert(outcome_cdfs[b], u[1]);
    out.emplace_back(static_cast<int>(cell / cols), static_cast<int>(cell % cols));
  }
  const Correlation ref = target ? *target : normalize_to_correlation(exact_distribution(h).cwiseMax(0.0), cfg);
  return {std::move(out), make_ledger(h, ref, cfg)};
}

SchmidtVector schmidt_vector(const Vector& state, int dim_a, int dim_b) {
  if (dim_a < 1 || dim_b < 1 || static_cast<Eigen::Index>(dim_a) * dim_b != state.size()) {
    throw Error(ErrorCode::DimensionMismatch, "state dimension is not dim_a * dim_b");
  }
  Matrix psi(dim_a, dim_b);
  for (int i = 0; i < dim_a; ++i)
    for (int j = 0; j < dim_b; ++j) psi(i, j) = state(static_cast<Eigen::Index>(i) * dim_b + j);
  Eigen::JacobiSVD<Matrix> svd(psi);
  const Vector sv = svd.singularValues();
  SchmidtVector out;
  double total = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    out.values.push_back(sv(i) * sv(i));
    total += out.values.back();
  }
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroMatrix, "zero state");
  for (double& v : out.values) v /= total;
  std::sort(out.values.begin(), out.values.end(), std::greater<>());
  out.values.resize(static_cast<std::size_t>(std::min(dim_a, dim_b)), 0.0);
  return out;
}

SchmidtVector epr_schmidt_vector(int s) {
  if (s < 0 || s > 20) throw Error(ErrorCode::InvalidArgument, "EPR count must be in [0, 20]");
  const std::size_t d = std::size_t{1} << s;
  return SchmidtVector{std::vector<double>(d, 1.0 / static_cast<double>(d))};
}

bool majorizes(const SchmidtVector& lhs, const SchmidtVector& rhs) {
  const std::size_t len = std::max(lhs.values.size(), rhs.values.size());
  auto sorted = [len](std::vector<double> v) {
    v.resize(len, 0.0);
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
  };
  const auto a = sorted(lhs.values);
  const auto b = sorted(rhs.values);
  double pa = 0.0;
  double pb = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    pa += a[i];
    pb += b[i];
    if (pa > pb + kMajorizationTol) return false;
  }
  return std::abs(pa - pb) <= kMajorizationTol;
}

std::pair<HybridProtocol, ResourceLedger> build_qc_hybrid(const BlockPsdFactorization& bf, int s,
                                                          const ToleranceConfig& cfg) {
  HybridProtocol h = assemble_hybrid(bf, s, HybridMode::QuantumClassical, cfg);
  const int d = 1 << s;
  const SchmidtVector epr = epr_schmidt_vector(s);
  for (std::size_t i = 0; i < h.branches.size(); ++i) {
    const auto& b = h.branches[i];
    // Embed the branch state into the 2^s x 2^s register.
    Vector padded = Vector::Zero(static_cast<Eigen::Index>(d) * d);
    for (int x = 0; x < b.r; ++x)
      for (int y = 0; y < b.r; ++y)
        padded(static_cast<Eigen::Index>(x) * d + y) = b.state(static_cast<Eigen::Index>(x) * b.r + y);
    if (!majorizes(epr, schmidt_vector(padded, d, d))) {
      throw Error(ErrorCode::MajorizationFailure, "EPR pairs do not convert into branch " + std::to_string(i));
    }
  }
  const Correlation target = normalize_to_correlation(reconstruct(bf).cwiseMax(0.0), cfg);
  ResourceLedger led = make_ledger(h, target, cfg);
  return {std::move(h), std::move(led)};
}

ChiSquareResult chi_square_test(const Matrix& dist, const std::vector<Sample>& samples, double alpha) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "no samples");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be in (0, 1)");
  const auto cdf = flat_cdf(dist);
  const auto cols = dist.cols();
  std::vector<double> prob(cdf.size());
  for (std::size_t i = 0; i < cdf.size(); ++i) prob[i] = cdf[i] - (i ? cdf[i - 1] : 0.0);
  std::vector<std::uint64_t> counts(cdf.size(), 0);
  for (const auto& [x, y] : samples) {
    if (x < 0 || y < 0 || x >= dist.rows() || y >= cols) {
      throw Error(ErrorCode::ShapeMismatch, "sample outside the distribution's support");
    }
    ++counts[static_cast<std::size_t>(x * cols + y)];
  }
  ChiSquareResult out;
  const double n = static_cast<double>(samples.size());
  double pooled_expected = 0.0;
  double pooled_observed = 0.0;
  int bins = 0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double expected = prob[i] * n;
    if (!(prob[i] > 0.0)) {
      if (counts[i] > 0) out.impossible_outcome = true;
      continue;
    }
    if (expected < 5.0) {
      pooled_expected += expected;
      pooled_observed += static_cast<double>(counts[i]);
      continue;
    }
    const double diff = static_cast<double>(counts[i]) - expected;
    out.statistic += diff * diff / expected;
    ++bins;
  }
  if (pooled_expected > 0.0) {
    const double diff = pooled_observed - pooled_expected;
    out.statistic += diff * diff / pooled_expected;
    ++bins;
  }
  out.degrees_of_freedom = std::max(bins - 1, 0);
  if (out.degrees_of_freedom == 0) {
    out.p_value = 1.0;
  } else {
    boost::math::chi_squared chi(out.degrees_of_freedom);
    out.p_value = boost::math::cdf(boost::math::complement(chi, out.statistic));
  }
  if (out.impossible_outcome) out.p_value = 0.0;
  out.passed = out.p_value >= alpha;
  return out;
}

double empirical_tv_distance(const Matrix& dist, const std::vector<Sample>& samples) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "no samples");
  Matrix emp = Matrix::Zero(dist.rows(), dist.cols());
  for (const auto& [x, y] : samples) {
    if (x < 0 || y < 0 || x >= dist.rows() || y >= dist.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "sample outside the distribution's support");
    }
    emp(x, y) += 1.0;
  }
  emp /= static_cast<double>(samples.size());
  return 0.5 * (emp - dist).cwiseAbs().sum();
}

}  // namespace hybridcorr
