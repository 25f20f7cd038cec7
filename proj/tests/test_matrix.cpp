#include <random>

#include "hybridcorr/matrix.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hybridcorr;
using testutil::mat;

TEST_CASE("normalize_to_correlation examples") {
  const Matrix m = mat({{0, 1, 4}, {1, 0, 1}, {4, 1, 0}});
  const Correlation c = normalize_to_correlation(m);
  CHECK((c.matrix() - m / 12.0).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(normalize_to_correlation(mat({{1}})).matrix()(0, 0) == 1.0);
  const Correlation d = normalize_to_correlation(mat({{2, 0}, {0, 2}}));
  CHECK(d(0, 0) == doctest::Approx(0.5));
  CHECK(d(0, 1) == 0.0);
}

TEST_CASE("normalize_to_correlation errors and idempotence") {
  CHECK_ERROR_CODE(normalize_to_correlation(mat({{1, -0.1}})), ErrorCode::NonNegativityViolation);
  CHECK_ERROR_CODE(normalize_to_correlation(mat({{0, 0}})), ErrorCode::ZeroMatrix);
  CHECK_ERROR_CODE(normalize_to_correlation(mat({{1, NAN}})), ErrorCode::NonFinite);
  // Tiny negatives within rank_rel_tol are clamped.
  const Correlation c = normalize_to_correlation(mat({{1, -1e-12}, {1, 2}}));
  CHECK(c(0, 1) == 0.0);

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 5);
  for (int t = 0; t < 20; ++t) {
    Matrix m(3, 4);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen);
    const Correlation once = normalize_to_correlation(m);
    const Correlation twice = normalize_to_correlation(once.matrix());
    CHECK(l1_distance(once.matrix(), twice.matrix()) < 1e-15);
    CHECK(once.matrix().sum() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("Correlation::from_matrix validates mass") {
  CHECK_ERROR_CODE(Correlation::from_matrix(mat({{0.5, 0.6}})), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(Correlation::from_matrix(mat({{1.5, -0.5}})), ErrorCode::NonNegativityViolation);
  CHECK(Correlation::from_matrix(mat({{0.25, 0.75}})).cols() == 2);
}

TEST_CASE("l1_distance") {
  CHECK(l1_distance(mat({{1, 2}}), mat({{1, 2}})) == 0.0);
  CHECK(l1_distance(mat({{1, 0}, {0, 0}}), mat({{0, 0}, {0, 1}})) == 2.0);
  CHECK(l1_distance(mat({{0.5, 0.5}}), mat({{0.4, 0.6}})) == doctest::Approx(0.2));
  CHECK_ERROR_CODE(l1_distance(mat({{1, 2}}), mat({{1}, {2}})), ErrorCode::ShapeMismatch);

  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    Matrix a(2, 3), b(2, 3), c(2, 3);
    for (Eigen::Index i = 0; i < 6; ++i) {
      a.data()[i] = nd(gen);
      b.data()[i] = nd(gen);
      c.data()[i] = nd(gen);
    }
    CHECK(l1_distance(a, c) <= l1_distance(a, b) + l1_distance(b, c) + 1e-12);
    CHECK(l1_distance(a, b) == doctest::Approx(l1_distance(b, a)));
  }
}

TEST_CASE("numerical_rank matches elimination oracle") {
  CHECK(numerical_rank(mat({{0, 1, 4}, {1, 0, 1}, {4, 1, 0}})) == 3);
  CHECK(numerical_rank(mat({{1, 1}, {1, 1}})) == 1);
  CHECK(numerical_rank(Matrix::Zero(3, 3)) == 0);

  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 30; ++t) {
    const int r = 1 + t % 4;
    Matrix l(6, r), rr(r, 5);
    for (Eigen::Index i = 0; i < l.size(); ++i) l.data()[i] = nd(gen);
    for (Eigen::Index i = 0; i < rr.size(); ++i) rr.data()[i] = nd(gen);
    const Matrix m = l * rr;
    CHECK(numerical_rank(m) == r);
    CHECK(oracle::rank_by_elimination(m) == r);
  }
}

TEST_CASE("rank is multiplicative under kron") {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 10; ++t) {
    const int ra = 1 + t % 3, rb = 1 + (t / 3) % 3;
    Matrix a = Matrix::Zero(3, 3), b = Matrix::Zero(3, 4);
    for (int i = 0; i < ra; ++i) {
      Vector u(3), v(3);
      for (int j = 0; j < 3; ++j) u(j) = nd(gen), v(j) = nd(gen);
      a += u * v.transpose();
    }
    for (int i = 0; i < rb; ++i) {
      Vector u(3), v(4);
      for (int j = 0; j < 3; ++j) u(j) = nd(gen);
      for (int j = 0; j < 4; ++j) v(j) = nd(gen);
      b += u * v.transpose();
    }
    const Matrix k = kron(a, b);
    REQUIRE(k.rows() == 9);
    REQUIRE(k.cols() == 12);
    for (Eigen::Index i = 0; i < k.rows(); ++i)
      for (Eigen::Index j = 0; j < k.cols(); ++j) CHECK(k(i, j) == doctest::Approx(oracle::kron_entry(a, b, i, j)));
    CHECK(numerical_rank(k) == numerical_rank(a) * numerical_rank(b));
  }
}

TEST_CASE("is_psd") {
  CHECK(is_psd(mat({{1, 0}, {0, 0}})));
  CHECK_FALSE(is_psd(mat({{1, 2}, {2, 1}})));
  CHECK(is_psd(mat({{0, 0}, {0, 0}})));
  CHECK_ERROR_CODE(is_psd(mat({{1, 2}, {2.1, 1}})), ErrorCode::NotSymmetric);
  CHECK_ERROR_CODE(is_psd(mat({{1, 2}})), ErrorCode::ShapeMismatch);

  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    Vector v(4);
    for (int i = 0; i < 4; ++i) v(i) = nd(gen);
    Matrix m = v * v.transpose();
    m = 0.5 * (m + m.transpose());
    CHECK(is_psd(m));
  }
}

TEST_CASE("tolerance validation") {
  ToleranceConfig bad;
  bad.residual_tol = -1;
  CHECK_ERROR_CODE(bad.validate(), ErrorCode::InvalidArgument);
  ToleranceConfig bad2;
  bad2.psd_min_eig = 0.1;
  CHECK_ERROR_CODE(bad2.validate(), ErrorCode::InvalidArgument);
}

TEST_CASE("spectral helpers on a rank-deficient matrix") {
  const Matrix m = mat({{4, 0, 0}, {0, 1, 0}, {0, 0, 0}});
  CHECK((psd_sqrt(m) - mat({{2, 0, 0}, {0, 1, 0}, {0, 0, 0}})).norm() < 1e-12);
  CHECK((psd_inv_sqrt(m) - mat({{0.5, 0, 0}, {0, 1, 0}, {0, 0, 0}})).norm() < 1e-12);
  CHECK((support_projector(m) - mat({{1, 0, 0}, {0, 1, 0}, {0, 0, 0}})).norm() < 1e-12);
}
