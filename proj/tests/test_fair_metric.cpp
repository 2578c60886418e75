#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "oracles.hpp"
#include "sensr/errors.hpp"
#include "sensr/fair_metric.hpp"
#include "sensr/io.hpp"
#include "sensr/rng.hpp"

using namespace sensr;

namespace {

Matrix columns(std::initializer_list<Vector> cols) {
  const std::size_t d = cols.begin()->size();
  Matrix m(d, cols.size());
  std::size_t j = 0;
  for (const auto& c : cols) {
    for (std::size_t i = 0; i < d; ++i) m(i, j) = c[i];
    ++j;
  }
  return m;
}

}  // namespace

TEST_SUITE("fair_metric") {

TEST_CASE("projector: axis directions give diagonal projectors") {
  const auto m2 = projection_complement(SensitiveSubspace::from_directions(columns({{1, 0}})));
  CHECK(m2.sigma(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(m2.sigma(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(m2.sigma(0, 1)) < 1e-14);

  const auto m3 = projection_complement(
      SensitiveSubspace::from_directions(columns({{1, 0, 0}, {0, 1, 0}})));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(m3.sigma(i, j) == doctest::Approx(i == 2 && j == 2 ? 1.0 : 0.0).epsilon(1e-14));
}

TEST_CASE("projector: diagonal direction gives the hand-computed complement") {
  const double s = 1.0 / std::sqrt(2.0);
  const auto m = projection_complement(SensitiveSubspace::from_directions(columns({{s, s}})));
  CHECK(m.sigma(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.sigma(0, 1) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(m.sigma(1, 0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(m.sigma(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("projector: full-span subspace is rejected") {
  CHECK_THROWS_WITH_AS(
      projection_complement(SensitiveSubspace::from_directions(columns({{1, 0}, {0, 1}}))),
      doctest::Contains("spans whole space"), ConfigError);
}

TEST_CASE("distance_sq: euclidean, ignored direction, and quadratic form") {
  const MahalanobisMetric eye{Matrix::identity(2)};
  CHECK(distance_sq(eye, Vector{0, 0}, Vector{3, 4}) == doctest::Approx(25.0).epsilon(1e-14));

  Matrix diag(2, 2);
  diag(1, 1) = 1.0;
  const MahalanobisMetric ignore_h{diag};
  for (double t : {0.1, 1.0, 57.0}) CHECK(distance_sq(ignore_h, Vector{0, 0}, Vector{t, 0}) == 0.0);

  Matrix half(2, 2, {0.5, -0.5, -0.5, 0.5});
  const MahalanobisMetric m{half};
  CHECK(distance_sq(m, Vector{1, 0}, Vector{0, 1}) == doctest::Approx(2.0).epsilon(1e-14));

  CHECK_THROWS_AS(distance_sq(eye, Vector{1, 2, 3}, Vector{0, 0}), ConfigError);
}

TEST_CASE("transport_cost: label mismatch is infinitely expensive") {
  const MahalanobisMetric eye{Matrix::identity(2)};
  CHECK(transport_cost(eye, Vector{1, 2}, 0, Vector{1, 2}, 0) == 0.0);
  CHECK(std::isinf(transport_cost(eye, Vector{1, 2}, 0, Vector{1, 2}, 1)));
  CHECK(transport_cost(eye, Vector{0, 0}, 1, Vector{1, 1}, 1) == doctest::Approx(2.0));
}

TEST_CASE("distance_sq: symmetric and zero at identical points") {
  Rng rng = make_rng(5);
  Matrix dirs(6, 2);
  for (double& v : dirs.data()) v = normal(rng);
  const auto metric = projection_complement(SensitiveSubspace::from_directions(dirs));
  for (int rep = 0; rep < 20; ++rep) {
    Vector a(6), b(6);
    for (double& v : a) v = normal(rng);
    for (double& v : b) v = normal(rng);
    CHECK(distance_sq(metric, a, b) == distance_sq(metric, b, a));
    CHECK(distance_sq(metric, a, a) == 0.0);
  }
}

TEST_CASE("projector metric ignores movements inside the subspace") {
  Rng rng = make_rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t d = 4 + uniform_index(rng, 0, 16);
    const std::size_t k = 1 + uniform_index(rng, 0, 2);
    Matrix dirs(d, k);
    for (double& v : dirs.data()) v = normal(rng);
    const auto sub = SensitiveSubspace::from_directions(dirs);
    const auto metric = projection_complement(sub);
    Vector x(d), coef(k);
    for (double& v : x) v = normal(rng);
    for (double& v : coef) v = normal(rng, 0.0, 3.0);
    Vector s = matvec(dirs, coef);
    Vector xs = x;
    axpy(1.0, s, xs);
    CHECK(distance_sq(metric, x, xs) <= 1e-10 * dot(s, s));
  }
}

TEST_CASE("softmax subspace: recovers a separating direction within 5 degrees") {
  Rng rng = make_rng(7);
  const std::size_t n = 400, d = 5;
  Matrix x(n, d);
  std::vector<int> prot(n);
  for (std::size_t i = 0; i < n; ++i) {
    prot[i] = i % 2;
    x(i, 0) = (prot[i] == 1 ? 1.0 : -1.0) + normal(rng, 0.0, 0.3);
    for (std::size_t j = 1; j < d; ++j) x(i, j) = normal(rng);
  }
  SoftmaxFitConfig fit;
  fit.step = 0.5;
  fit.epochs = 3000;
  const auto sub = learn_subspace_softmax(x, prot, 0.1, fit);
  REQUIRE(sub.rank() == 1);
  const double cosine = std::abs(sub.basis(0, 0));
  CHECK(std::acos(std::min(1.0, cosine)) < 5.0 * M_PI / 180.0);
}

TEST_CASE("softmax subspace: independent protected attribute shrinks to nothing") {
  Rng rng = make_rng(9);
  const std::size_t n = 600, d = 4;
  Matrix x(n, d);
  std::vector<int> prot(n);
  for (std::size_t i = 0; i < n; ++i) {
    prot[i] = static_cast<int>(uniform_index(rng, 0, 1));
    for (std::size_t j = 0; j < d; ++j) x(i, j) = normal(rng);
  }
  SoftmaxFitConfig fit;
  fit.step = 0.05;  // stable against the strong ridge term
  fit.epochs = 2000;
  const Matrix coef = fit_softmax_directions(x, prot, 10.0, fit);
  CHECK(norm2(coef.data()) < 0.1);
}

TEST_CASE("factor subspace: variation along one axis") {
  Rng rng = make_rng(13);
  Matrix group(8, 3);
  for (std::size_t i = 0; i < 8; ++i) {
    group(i, 0) = normal(rng);  // only e1 varies
    group(i, 1) = 2.5;
    group(i, 2) = -1.0;
  }
  const auto sub = learn_subspace_factor({{group}}, 1);
  REQUIRE(sub.rank() == 1);
  CHECK(std::abs(sub.basis(0, 0)) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(sub.basis(1, 0)) < 1e-10);
  CHECK(std::abs(sub.basis(2, 0)) < 1e-10);
}

namespace {

// Factor-model sample: phi = A u + shared v per group (+ noise).
std::vector<ComparableGroup> factor_groups(const Matrix& a, std::size_t num_groups,
                                           std::size_t group_size, double noise, Rng& rng) {
  const std::size_t d = a.rows(), k = a.cols();
  std::vector<ComparableGroup> groups;
  for (std::size_t g = 0; g < num_groups; ++g) {
    Vector shared(d);
    for (double& v : shared) v = normal(rng, 0.0, 2.0);
    Matrix members(group_size, d);
    for (std::size_t i = 0; i < group_size; ++i) {
      Vector u(k);
      for (double& v : u) v = normal(rng);
      const Vector au = matvec(a, u);
      for (std::size_t j = 0; j < d; ++j)
        members(i, j) = au[j] + shared[j] + (noise > 0.0 ? normal(rng, 0.0, noise) : 0.0);
    }
    groups.push_back({std::move(members)});
  }
  return groups;
}

}  // namespace

TEST_CASE("factor subspace: noiseless factor model is recovered exactly") {
  Rng rng = make_rng(31);
  Matrix a(12, 3);
  for (double& v : a.data()) v = normal(rng);
  const auto groups = factor_groups(a, 15, 6, 0.0, rng);
  const auto sub = learn_subspace_factor(groups, 3);
  const Matrix qa = qr_orthonormal(a);
  CHECK(oracles::largest_principal_angle(qa, sub.basis) < 1e-6);
}

TEST_CASE("factor subspace: centering invariance") {
  Rng rng = make_rng(37);
  Matrix a(8, 2);
  for (double& v : a.data()) v = normal(rng);
  auto groups = factor_groups(a, 6, 5, 0.01, rng);
  const auto sub1 = learn_subspace_factor(groups, 2);
  // shift every member of every group by a (per-group) constant vector
  for (auto& g : groups) {
    Vector c(8);
    for (double& v : c) v = normal(rng, 0.0, 10.0);
    for (std::size_t i = 0; i < g.members.rows(); ++i)
      for (std::size_t j = 0; j < 8; ++j) g.members(i, j) += c[j];
  }
  const auto sub2 = learn_subspace_factor(groups, 2);
  CHECK(oracles::largest_principal_angle(sub1.basis, sub2.basis) < 1e-8);
}

TEST_CASE("factor subspace: scaling all groups leaves the span unchanged") {
  Rng rng = make_rng(41);
  Matrix a(7, 2);
  for (double& v : a.data()) v = normal(rng);
  auto groups = factor_groups(a, 5, 6, 0.05, rng);
  const auto sub1 = learn_subspace_factor(groups, 2);
  for (auto& g : groups)
    for (double& v : g.members.data()) v *= 7.5;
  const auto sub2 = learn_subspace_factor(groups, 2);
  CHECK(oracles::largest_principal_angle(sub1.basis, sub2.basis) < 1e-8);
}

TEST_CASE("factor subspace: k past the centered rank is rejected") {
  Matrix group(3, 4);  // 3 members → centered rank <= 2
  Rng rng = make_rng(43);
  for (double& v : group.data()) v = normal(rng);
  CHECK_THROWS_WITH_AS(learn_subspace_factor({{group}}, 3),
                       doctest::Contains("rank"), ConfigError);
  CHECK_THROWS_AS(learn_subspace_factor({{group}}, 5), ConfigError);  // k > d
  Matrix tiny(1, 4);
  CHECK_THROWS_AS(learn_subspace_factor({{tiny}}, 1), ConfigError);  // group too small
}

TEST_CASE("subspace json round-trip is bit-stable") {
  Rng rng = make_rng(47);
  Matrix dirs(9, 3);
  for (double& v : dirs.data()) v = normal(rng, 0.0, 13.7);
  const auto sub = SensitiveSubspace::from_directions(dirs);
  const std::string path = (std::filesystem::temp_directory_path() / "sensr_subspace.json").string();
  save_subspace(path, sub);
  const auto loaded = load_subspace(path);
  REQUIRE(loaded.directions.data().size() == sub.directions.data().size());
  REQUIRE(loaded.basis.data().size() == sub.basis.data().size());
  CHECK(std::memcmp(loaded.directions.data().data(), sub.directions.data().data(),
                    sub.directions.data().size() * sizeof(double)) == 0);
  CHECK(std::memcmp(loaded.basis.data().data(), sub.basis.data().data(),
                    sub.basis.data().size() * sizeof(double)) == 0);
  std::remove(path.c_str());
}

TEST_CASE("metric validation rejects asymmetric or indefinite sigma") {
  Matrix asym(2, 2, {1.0, 0.5, 0.3, 1.0});
  CHECK_THROWS_AS(MahalanobisMetric::from_sigma(asym), ConfigError);
  Matrix indef(2, 2, {1.0, 0.0, 0.0, -0.5});
  CHECK_THROWS_AS(MahalanobisMetric::from_sigma(indef), ConfigError);
  Matrix ok(2, 2, {2.0, 0.5, 0.5, 1.0});
  CHECK_NOTHROW(MahalanobisMetric::from_sigma(ok));
}

}  // TEST_SUITE
