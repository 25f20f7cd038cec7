#include <cmath>
#include <random>

#include "hybridcorr/bounds.hpp"
#include "hybridcorr/demos.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hybridcorr;
using testutil::mat;

namespace {

Correlation q2(std::vector<double> pts) { return tensor_power(edm_correlation(EdmSpec::create(std::move(pts))), 2); }

Correlation product_distribution() {
  const Vector a = (Vector(3) << 0.2, 0.3, 0.5).finished();
  const Vector b = (Vector(2) << 0.4, 0.6).finished();
  return normalize_to_correlation(a * b.transpose());
}

int naive_ceil_log2(std::uint64_t v) {
  int bits = 0;
  std::uint64_t reach = 1;
  while (reach < v) reach *= 2, ++bits;
  return bits;
}

int naive_ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

TEST_CASE("ceil_log2") {
  for (std::uint64_t v = 1; v < 2000; ++v) CHECK(ceil_log2(v) == naive_ceil_log2(v));
  CHECK(ceil_log2(std::uint64_t{1} << 40) == 40);
  CHECK(ceil_log2((std::uint64_t{1} << 40) + 1) == 41);
}

TEST_CASE("prank_lower_bound examples") {
  CHECK(prank_lower_bound(q2({0, 1, 2})) == 3);
  CHECK(prank_lower_bound(normalize_to_correlation(mat({{0.5, 0}, {0, 0.5}}))) == 2);
  CHECK(prank_lower_bound(product_distribution()) == 1);
  for (int r = 1; r <= 30; ++r) {
    Matrix m = Matrix::Identity(r, r);
    const int lb = prank_lower_bound(normalize_to_correlation(m));
    CHECK(lb * lb >= r);
    CHECK((lb - 1) * (lb - 1) < r);
  }
}

TEST_CASE("block_prank_lower_bound adds over support components") {
  const DiagInstance inst = diag_instance(4);
  CHECK(numerical_rank(inst.target.matrix()) == 12);
  CHECK(prank_lower_bound(inst.target) == 4);
  CHECK(block_prank_lower_bound(inst.target) == 8);
  // Identity: n components of rank 1.
  CHECK(block_prank_lower_bound(normalize_to_correlation(Matrix::Identity(5, 5))) == 5);
  // Connected support: equals the plain bound.
  const Correlation q = q2({0, 1, 2});
  CHECK(block_prank_lower_bound(q) == prank_lower_bound(q));
}

TEST_CASE("kprank_lower_bound examples") {
  const Correlation q4 = q2({0, 1, 2, 3});
  CHECK(numerical_rank(q4.matrix()) == 9);
  CHECK(kprank_lower_bound(q4, 2, prank_lower_bound(q4)) == 3);

  const DiagInstance inst = diag_instance(4);
  CHECK(kprank_lower_bound(inst.target, 2, block_prank_lower_bound(inst.target)) == 4);

  // k large enough: a single branch.
  CHECK(kprank_lower_bound(q4, 3, 3) == 1);
  CHECK(kprank_lower_bound(product_distribution(), 1, 1) == 1);

  std::mt19937_64 gen(1);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 5;
    Matrix m(n, n);
    std::uniform_real_distribution<double> u(0, 1);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen) < 0.5 ? 0.0 : u(gen);
    m(0, 0) = 1.0;
    const Correlation p = normalize_to_correlation(m);
    const int rank = oracle::rank_by_elimination(p.matrix());
    const int plb = prank_lower_bound(p);
    for (int k = 1; k <= 4; ++k)
      CHECK(kprank_lower_bound(p, k, plb) == std::max({naive_ceil_div(plb, k), naive_ceil_div(rank, k * k), 1}));
  }
  CHECK_ERROR_CODE(kprank_lower_bound(q4, 0, 3), ErrorCode::InvalidArgument);
}

TEST_CASE("cost formulas") {
  CHECK(hybrid_classical_cost(1) == 0);
  CHECK(hybrid_classical_cost(4) == 2);
  CHECK(hybrid_classical_cost(5) == 3);
  CHECK(qc_hybrid_cost_upper(4, 1) == 3);
  CHECK(qc_hybrid_cost_upper(1, 0) == 0);
  CHECK(qc_hybrid_cost_upper(16, 2) == 7);
  for (int r = 1; r <= 64; ++r)
    for (int s = 0; s <= 5; ++s) CHECK(qc_hybrid_cost_upper(r, s) == naive_ceil_log2(r) + (1 << s) - 1);
  CHECK_ERROR_CODE(hybrid_classical_cost(0), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(qc_hybrid_cost_upper(1, -1), ErrorCode::InvalidArgument);
}

TEST_CASE("tradeoff_check examples") {
  const Correlation rank4 = normalize_to_correlation(Matrix::Identity(4, 4));
  CHECK(tradeoff_check(1, 0, rank4));
  CHECK_FALSE(tradeoff_check(0, 1, rank4));
  const Correlation rank9 = q2({0, 1, 2});
  CHECK_FALSE(tradeoff_check(1, 1, rank9));
  CHECK(tradeoff_check(1, 2, rank9));
  CHECK(tradeoff_check(2, 0, rank9));
  for (int s = 0; s < 3; ++s)
    for (int c = 0; c < 3; ++c) CHECK(tradeoff_check(s, c, product_distribution()));
}

TEST_CASE("t_bounds") {
  const TBounds a = t_bounds(q2({0, 1, 2}), 4);
  CHECK(a.lower == 1);
  CHECK(a.upper == 2);
  const TBounds b = t_bounds(product_distribution(), 1);
  CHECK(b.lower == 0);
  CHECK(b.upper == 0);
  // prank^2 = rank: lower bound is half the upper bound up to ceilings.
  for (int p = 1; p <= 64; ++p) {
    const TBounds t = t_bounds_from_ranks(p * p, p);
    CHECK(t.lower <= t.upper);
    CHECK(std::abs(t.lower - naive_ceil_div(t.upper, 2)) <= 1);
  }
  for (int rank = 1; rank <= 100; ++rank)
    for (int est = static_cast<int>(std::ceil(std::sqrt(rank))); est <= rank; ++est) {
      const TBounds t = t_bounds_from_ranks(rank, est);
      CHECK(t.lower <= t.upper);
      CHECK(t.lower == std::max(0, naive_ceil_div(naive_ceil_log2(rank) - naive_ceil_log2(est), 2)));
    }
  CHECK_ERROR_CODE(t_bounds_from_ranks(4, 0), ErrorCode::InvalidArgument);
}

TEST_CASE("bounds_report examples") {
  BoundsBudget budget;
  budget.search.seed = 7;
  budget.search.starts = 8;

  const BoundsReport edm3 = bounds_report(edm_correlation(EdmSpec::create({0, 1, 2})), budget);
  CHECK(edm3.rank == 3);
  CHECK(edm3.prank_lb == 2);
  REQUIRE(edm3.prank_ub);
  CHECK(*edm3.prank_ub == 2);
  REQUIRE(edm3.prank_witness);
  CHECK(edm3.prank_witness->side() == 2);
  CHECK(edm3.prank_residual <= 1e-8);
  CHECK_NOTHROW(edm3.check_invariants());

  const BoundsReport prod = bounds_report(product_distribution(), budget);
  CHECK(prod.rank == 1);
  CHECK(prod.prank_lb == 1);
  CHECK(prod.prank_ub.value_or(-1) == 1);
  CHECK(prod.nnr_ub.value_or(-1) == 1);
  CHECK(prod.kprank_ub.at(2).value_or(-1) == 1);
  CHECK(prod.hybrid_bits.at(2).value_or(-1) == 0);

  const DiagInstance inst = diag_instance(4);
  const BoundsReport diag = bounds_report(inst.target, budget);
  CHECK(diag.kprank_lb.at(2) == 4);
  CHECK(diag.kprank_ub.at(2).value_or(-1) == 4);
  CHECK(diag.hybrid_bits.at(2).value_or(-1) == 2);
  CHECK(tradeoff_check(1, *diag.hybrid_bits.at(2), inst.target));
  const CertificationReport cert = certify_block_factorization(inst.target, diag.kprank_witness.at(2));
  CHECK_MESSAGE(cert.passed, cert.diagnostic);
  CHECK_NOTHROW(diag.check_invariants());
}

TEST_CASE("bounds_report invariants and determinism on random inputs") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 1);
  BoundsBudget budget;
  budget.block_sizes = {1, 2, 4};
  budget.search.seed = 5;
  budget.search.starts = 3;
  budget.search.max_iters = 500;
  for (int t = 0; t < 6; ++t) {
    Matrix m(3 + t % 2, 4);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen) < 0.3 ? 0.0 : u(gen);
    m(0, 0) = 1.0;
    const Correlation p = normalize_to_correlation(m);
    const BoundsReport r = bounds_report(p, budget);
    CHECK_NOTHROW(r.check_invariants());
    for (int k : budget.block_sizes) {
      REQUIRE(r.kprank_ub.at(k));
      CHECK(*r.kprank_ub.at(k) >= r.kprank_lb.at(k));
      const CertificationReport cert = certify_block_factorization(p, r.kprank_witness.at(k));
      CHECK_MESSAGE(cert.passed, cert.diagnostic);
      CHECK(cert.total_side <= *r.kprank_ub.at(k) * k);
      // Cost of the witnessed hybrid always satisfies the tradeoff.
      if ((k & (k - 1)) == 0) CHECK(tradeoff_check(ceil_log2(k), *r.hybrid_bits.at(k), p));
    }
    REQUIRE(r.prank_ub);
    CHECK(l1_distance(reconstruct(*r.prank_witness), p.matrix()) <= 1e-8);
    CHECK(r.t_lb <= r.t_ub);
    const BoundsReport again = bounds_report(p, budget);
    CHECK(again.prank_ub == r.prank_ub);
    CHECK(again.nnr_ub == r.nnr_ub);
    CHECK(again.kprank_ub == r.kprank_ub);
    CHECK(again.prank_residual == r.prank_residual);
  }
}

TEST_CASE("check_invariants rejects inconsistent reports") {
  BoundsReport r;
  r.rank = 4;
  r.prank_lb = 3;
  r.prank_ub = 2;
  CHECK_ERROR_CODE(r.check_invariants(), ErrorCode::InvariantViolation);
  r.prank_ub = 3;
  r.kprank_lb[2] = 2;
  r.kprank_ub[2] = 1;
  CHECK_ERROR_CODE(r.check_invariants(), ErrorCode::InvariantViolation);
}
