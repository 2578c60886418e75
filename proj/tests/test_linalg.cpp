#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sensr/errors.hpp"
#include "sensr/linalg.hpp"
#include "sensr/rng.hpp"

using namespace sensr;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = normal(rng, 0.0, scale);
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  double d = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("qr: identity stays the identity") {
  const Matrix q = qr_orthonormal(Matrix::identity(3));
  CHECK(max_abs_diff(q, Matrix::identity(3)) < 1e-14);
}

TEST_CASE("qr: single column is normalized with positive orientation") {
  Matrix m(2, 1);
  m(0, 0) = 3.0;
  m(1, 0) = 4.0;
  const Matrix q = qr_orthonormal(m);
  REQUIRE(q.cols() == 1);
  CHECK(q(0, 0) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(q(1, 0) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("qr: duplicate columns collapse to the rank found by the Gram oracle") {
  Matrix m(2, 2);
  m(0, 0) = 1.0;
  m(0, 1) = 1.0;
  const std::size_t expected_rank = oracles::rank_by_gram(m);
  CHECK(expected_rank == 1);
  const Matrix q = qr_orthonormal(m);
  REQUIRE(q.cols() == expected_rank);
  CHECK(std::abs(q(0, 0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(q(1, 0)) < 1e-14);
}

TEST_CASE("qr: empty input is rejected") {
  CHECK_THROWS_WITH_AS(qr_orthonormal(Matrix()), doctest::Contains("empty input"), ConfigError);
}

TEST_CASE("qr: orthonormality and span on random and rank-deficient inputs") {
  Rng rng = make_rng(11);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 3 + uniform_index(rng, 0, 37);
    const std::size_t k = 1 + uniform_index(rng, 0, std::min<std::size_t>(n, 8) - 1);
    Matrix m = random_matrix(n, k, rng);
    if (rep % 3 == 0 && k >= 2) {
      // force a dependent column
      for (std::size_t i = 0; i < n; ++i) m(i, k - 1) = 2.0 * m(i, 0);
    }
    const Matrix q = qr_orthonormal(m);
    CHECK(q.cols() == oracles::rank_by_gram(m, 1e-16));

    const Matrix gram = multiply(transpose(q), q);
    Matrix dev = gram;
    for (std::size_t i = 0; i < dev.rows(); ++i) dev(i, i) -= 1.0;
    CHECK(max_abs(dev) < 1e-10);

    // every original column is reproduced by Q Qᵀ
    for (std::size_t j = 0; j < k; ++j) {
      Vector col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = m(i, j);
      Vector back = matvec(q, matvec_transpose(q, col));
      for (std::size_t i = 0; i < n; ++i) back[i] -= col[i];
      CHECK(norm2(back) < 1e-8 * std::max(1.0, norm2(col)));
    }
  }
}

TEST_CASE("svd: diagonal matrix") {
  Matrix m(3, 3);
  m(0, 0) = 3.0;
  m(1, 1) = 2.0;
  m(2, 2) = 1.0;
  const Svd svd = truncated_svd(m, 2);
  CHECK(svd.singular_values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(svd.singular_values[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(svd.right_vectors(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(svd.right_vectors(1, 1)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("svd: rank-1 outer product recovers the right vector up to sign") {
  Rng rng = make_rng(3);
  Vector u(6), v(4);
  for (double& x : u) x = normal(rng);
  for (double& x : v) x = normal(rng);
  Matrix m(6, 4);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 4; ++j) m(i, j) = u[i] * v[j];
  const Svd svd = truncated_svd(m, 1);
  CHECK(svd.singular_values[0] == doctest::Approx(norm2(u) * norm2(v)).epsilon(1e-10));
  Vector got(4);
  for (std::size_t j = 0; j < 4; ++j) got[j] = svd.right_vectors(j, 0);
  const double cosine = std::abs(dot(got, v)) / norm2(v);
  CHECK(cosine == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("svd: matches the Jacobi eigendecomposition of the Gram matrix") {
  Rng rng = make_rng(17);
  const Matrix m = random_matrix(10, 4, rng);
  const Svd svd = truncated_svd(m, 4);
  const auto [evals, evecs] = oracles::jacobi_eigen(oracles::gram(m));
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(svd.singular_values[j] * svd.singular_values[j] ==
          doctest::Approx(evals[j]).epsilon(1e-8));
    double cosine = 0.0;
    for (std::size_t i = 0; i < 4; ++i) cosine += svd.right_vectors(i, j) * evecs(i, j);
    CHECK(std::abs(cosine) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("svd: truncation error equals the trailing singular mass") {
  Rng rng = make_rng(29);
  for (int rep = 0; rep < 12; ++rep) {
    const std::size_t n = 5 + uniform_index(rng, 0, 45);
    const std::size_t d = 2 + uniform_index(rng, 0, 18);
    const Matrix m = random_matrix(n, d, rng);
    const std::size_t full = std::min(n, d);
    const Svd all = truncated_svd(m, full);
    const std::size_t k = 1 + uniform_index(rng, 0, full - 1);

    const Svd part = truncated_svd(m, k);
    const Matrix mv = multiply(m, part.right_vectors);
    const Matrix approx = multiply(mv, transpose(part.right_vectors));
    double err_sq = 0.0;
    for (std::size_t i = 0; i < m.data().size(); ++i) {
      const double d2 = m.data()[i] - approx.data()[i];
      err_sq += d2 * d2;
    }
    double trailing = 0.0;
    for (std::size_t j = k; j < full; ++j)
      trailing += all.singular_values[j] * all.singular_values[j];
    CHECK(std::abs(std::sqrt(err_sq) - std::sqrt(trailing)) < 1e-8);
  }
}

TEST_CASE("svd: bad k is rejected") {
  const Matrix m = Matrix::identity(3);
  CHECK_THROWS_AS(truncated_svd(m, 0), ConfigError);
  CHECK_THROWS_AS(truncated_svd(m, 4), ConfigError);
}

TEST_CASE("matrix: non-finite entries are rejected on construction") {
  std::vector<double> bad = {1.0, std::nan(""), 0.0, 2.0};
  CHECK_THROWS_AS(Matrix(2, 2, bad), ConfigError);
}

}  // TEST_SUITE
