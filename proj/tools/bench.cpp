// Compares the OpenMP kernels against their serial references: dense matmul
// and the per-sample batch attack. Verifies bit-identical outputs, then times
// both paths.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "sensr/auditor.hpp"
#include "sensr/data.hpp"
#include "sensr/fair_metric.hpp"
#include "sensr/model.hpp"
#include "sensr/parallel.hpp"
#include "sensr/rng.hpp"
#include "sensr/trainer.hpp"

using namespace sensr;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <typename F>
double time_ms(F&& f, int reps) {
  const double t0 = now_ms();
  for (int r = 0; r < reps; ++r) f();
  return (now_ms() - t0) / reps;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

bool bits_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(double)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--quick") quick = true;

  const std::size_t mat_n = quick ? 192 : 512;
  const std::size_t batch = quick ? 64 : 512;
  const int reps = quick ? 2 : 5;

  std::printf("openmp: %s, hardware threads: %d\n", openmp_enabled() ? "on" : "off",
              effective_threads());

  Rng rng = make_rng(42);

  // --- matmul ---
  const Matrix a = random_matrix(mat_n, mat_n, rng);
  const Matrix b = random_matrix(mat_n, mat_n, rng);
  const Matrix ref = multiply_serial(a, b);
  set_threads(0);
  const Matrix par = multiply(a, b);
  if (!bits_equal(ref, par)) {
    std::printf("FAIL: parallel matmul differs from serial reference\n");
    return 1;
  }
  const double t_mm_serial = time_ms([&] { (void)multiply_serial(a, b); }, reps);
  const double t_mm_par = time_ms([&] { (void)multiply(a, b); }, reps);
  std::printf("matmul %4zux%-4zu  serial %8.2f ms   openmp %8.2f ms   speedup %.2fx\n", mat_n,
              mat_n, t_mm_serial, t_mm_par, t_mm_serial / t_mm_par);

  // --- batch attack ---
  ToyConfig toy;
  toy.n_major = batch;
  toy.n_minor = std::max<std::size_t>(batch / 8, 24);
  const TabularDataset data = make_toy(toy);
  Matrix dir(2, 1);
  dir(0, 0) = 1.0;
  const FairMetric metric = FairMetric::from_subspace(SensitiveSubspace::from_directions(dir));
  const ModelParams params = ModelParams::init(Arch::mlp, 2, 2, 64, 3);

  AttackConfig attack;
  attack.subspace_step = 0.2;
  attack.subspace_epochs = quick ? 20 : 50;
  attack.full_step = 0.05;
  attack.full_epochs = quick ? 20 : 40;

  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto factory = model_loss_factory(params);

  set_threads(1);
  const auto res_serial =
      attack_batch(factory, metric, data.features, data.labels, idx, 1.0, attack);
  set_threads(0);
  const auto res_par = attack_batch(factory, metric, data.features, data.labels, idx, 1.0, attack);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (std::memcmp(res_serial[i].x_star.data(), res_par[i].x_star.data(),
                    res_serial[i].x_star.size() * sizeof(double)) != 0 ||
        res_serial[i].value != res_par[i].value) {
      std::printf("FAIL: parallel attack differs from serial reference at sample %zu\n", i);
      return 1;
    }
  }
  const double t_at_serial = time_ms(
      [&] {
        set_threads(1);
        (void)attack_batch(factory, metric, data.features, data.labels, idx, 1.0, attack);
      },
      reps);
  const double t_at_par = time_ms(
      [&] {
        set_threads(0);
        (void)attack_batch(factory, metric, data.features, data.labels, idx, 1.0, attack);
      },
      reps);
  std::printf("attack  B=%-5zu  serial %8.2f ms   openmp %8.2f ms   speedup %.2fx\n", idx.size(),
              t_at_serial, t_at_par, t_at_serial / t_at_par);
  std::printf("outputs bit-identical across thread counts\n");
  return 0;
}
