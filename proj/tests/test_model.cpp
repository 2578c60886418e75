#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "oracles.hpp"
#include "sensr/errors.hpp"
#include "sensr/io.hpp"
#include "sensr/model.hpp"
#include "sensr/rng.hpp"

using namespace sensr;

namespace {

ModelParams random_model(Arch arch, std::size_t d, std::size_t c, std::size_t h,
                         std::uint64_t seed) {
  return ModelParams::init(arch, d, c, h, seed);
}

// Keeps finite-difference probes away from relu kinks.
Vector kink_safe_input(const ModelParams& p, Rng& rng, double margin = 1e-3) {
  for (int tries = 0; tries < 200; ++tries) {
    Vector x(p.input_dim);
    for (double& v : x) v = normal(rng);
    if (p.arch == Arch::logistic) return x;
    bool safe = true;
    for (std::size_t h = 0; h < p.hidden; ++h)
      if (std::abs(dot(p.w1.row(h), x) + p.b1[h]) < margin) safe = false;
    if (safe) return x;
  }
  return Vector(p.input_dim, 0.5);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("forward: zero weights give zero logits") {
  ModelParams p;
  p.arch = Arch::mlp;
  p.input_dim = 3;
  p.num_classes = 2;
  p.hidden = 4;
  p.w1 = Matrix(4, 3);
  p.b1.assign(4, 0.0);
  p.w2 = Matrix(2, 4);
  p.b2.assign(2, 0.0);
  const Vector logits = forward(p, Vector{1.0, -2.0, 3.0});
  CHECK(logits[0] == 0.0);
  CHECK(logits[1] == 0.0);
}

TEST_CASE("forward: identity logistic maps basis to basis") {
  ModelParams p;
  p.arch = Arch::logistic;
  p.input_dim = 3;
  p.num_classes = 3;
  p.w1 = Matrix::identity(3);
  p.b1.assign(3, 0.0);
  const Vector logits = forward(p, Vector{1.0, 0.0, 0.0});
  CHECK(logits[0] == 1.0);
  CHECK(logits[1] == 0.0);
  CHECK(logits[2] == 0.0);
}

TEST_CASE("forward: hand-evaluated two-unit relu network") {
  ModelParams p;
  p.arch = Arch::mlp;
  p.input_dim = 2;
  p.num_classes = 2;
  p.hidden = 2;
  p.w1 = Matrix(2, 2, {1.0, -1.0, -2.0, 0.5});
  p.b1 = {0.5, -0.25};
  p.w2 = Matrix(2, 2, {1.0, 2.0, -1.0, 0.0});
  p.b2 = {0.1, -0.1};
  // pre = (1+1+0.5, -2-0.5-0.25) = (2.5, -2.75); act = (2.5, 0)
  const Vector logits = forward(p, Vector{1.0, -1.0});
  CHECK(logits[0] == doctest::Approx(2.6).epsilon(1e-15));
  CHECK(logits[1] == doctest::Approx(-2.6).epsilon(1e-15));
}

TEST_CASE("loss: uniform softmax, overflow stability, and a scalar fixture") {
  CHECK(loss_from_logits(Vector{0.0, 0.0}, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(loss_from_logits(Vector{1000.0, -1000.0}, 0) >= 0.0);
  CHECK(loss_from_logits(Vector{1000.0, -1000.0}, 0) < 1e-12);
  const double expected = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)) - 3.0;
  CHECK(loss_from_logits(Vector{1.0, 2.0, 3.0}, 2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(loss_from_logits(Vector{1.0, 2.0, 3.0}, 2) == doctest::Approx(0.407606).epsilon(1e-6));
  CHECK_THROWS_AS(loss_from_logits(Vector{0.0, 0.0}, 2), ConfigError);
}

TEST_CASE("grad_input: zero-weight model has zero gradient") {
  ModelParams p;
  p.arch = Arch::logistic;
  p.input_dim = 4;
  p.num_classes = 3;
  p.w1 = Matrix(3, 4);
  p.b1.assign(3, 0.0);
  const Vector g = grad_input(p, Vector{1.0, 2.0, 3.0, 4.0}, 1);
  for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("grad_input: binary logistic closed form (p - onehot)ᵀ W") {
  Rng rng = make_rng(2);
  const ModelParams p = random_model(Arch::logistic, 5, 2, 0, 77);
  Vector x(5);
  for (double& v : x) v = normal(rng);
  const int y = 1;
  const Vector logits = forward(p, x);
  const double m = std::max(logits[0], logits[1]);
  const double z0 = std::exp(logits[0] - m), z1 = std::exp(logits[1] - m);
  Vector probs{z0 / (z0 + z1), z1 / (z0 + z1)};
  probs[y] -= 1.0;
  Vector expected(5, 0.0);
  for (int c = 0; c < 2; ++c) axpy(probs[c], p.w1.row(c), expected);
  const Vector got = grad_input(p, x, y);
  for (std::size_t j = 0; j < 5; ++j)
    CHECK(got[j] == doctest::Approx(expected[j]).epsilon(1e-12));
}

TEST_CASE("gradients match central finite differences") {
  Rng rng = make_rng(101);
  for (int rep = 0; rep < 10; ++rep) {
    const ModelParams p = (rep % 2 == 0) ? random_model(Arch::logistic, 6, 3, 0, 500 + rep)
                                         : random_model(Arch::mlp, 6, 3, 8, 500 + rep);
    const Vector x = kink_safe_input(p, rng);
    const int y = static_cast<int>(uniform_index(rng, 0, 2));
    CHECK(gradient_check(p, x, y, 1e-5) < 1e-5);
  }
}

TEST_CASE("grad_input agrees with a finite-difference oracle directly") {
  Rng rng = make_rng(202);
  const ModelParams p = random_model(Arch::mlp, 4, 2, 6, 9);
  const Vector x = kink_safe_input(p, rng);
  const Vector analytic = grad_input(p, x, 0);
  const Vector numeric =
      oracles::finite_difference([&](const Vector& v) { return loss(p, v, 0); }, x, 1e-6);
  for (std::size_t j = 0; j < x.size(); ++j)
    CHECK(analytic[j] == doctest::Approx(numeric[j]).epsilon(1e-5));
}

TEST_CASE("loss is invariant under a uniform output-bias shift") {
  const ModelParams p = random_model(Arch::mlp, 5, 4, 7, 11);
  Rng rng = make_rng(303);
  Vector x(5);
  for (double& v : x) v = normal(rng);
  const double base = loss(p, x, 2);
  ModelParams shifted = p;
  for (double& b : shifted.b2) b += 3.25;
  CHECK(std::abs(loss(shifted, x, 2) - base) < 1e-12);
}

TEST_CASE("forward is deterministic") {
  const ModelParams p = random_model(Arch::mlp, 4, 3, 5, 21);
  const Vector x{0.1, -0.7, 2.0, 0.3};
  const Vector a = forward(p, x);
  const Vector b = forward(p, x);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("checkpoint json round-trip is bit-stable") {
  for (Arch arch : {Arch::logistic, Arch::mlp}) {
    const ModelParams p = random_model(arch, 6, 3, arch == Arch::mlp ? 5 : 0, 33);
    const std::string path =
        (std::filesystem::temp_directory_path() / "sensr_model_rt.json").string();
    save_model(path, p);
    const ModelParams q = load_model(path);
    CHECK(q.arch == p.arch);
    const Vector a = p.flatten(), b = q.flatten();
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    std::remove(path.c_str());
  }
}

TEST_CASE("init validates shapes") {
  CHECK_THROWS_AS(ModelParams::init(Arch::mlp, 4, 2, 0, 1), ConfigError);
  CHECK_THROWS_AS(ModelParams::init(Arch::logistic, 0, 2, 0, 1), ConfigError);
  CHECK_THROWS_AS(ModelParams::init(Arch::logistic, 4, 1, 0, 1), ConfigError);
}

}  // TEST_SUITE
