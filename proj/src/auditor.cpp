#include "sensr/auditor.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

#include "sensr/errors.hpp"
#include "sensr/optim.hpp"
#include "sensr/parallel.hpp"
#include "sensr/rng.hpp"

namespace sensr {

double ModelLoss::value(std::span<const double> x, int y) const {
  return loss(params_, x, y, ws_);
}

void ModelLoss::grad_x(std::span<const double> x, int y, std::span<double> out) const {
  grad_input(params_, x, y, out, ws_);
}

LossFactory model_loss_factory(const ModelParams& params) {
  return [&params]() { return std::make_unique<ModelLoss>(params); };
}

namespace {

struct BestIterate {
  double value;
  Vector x;
  double loss_at_x;
  double dist_sq;
};

// Preallocated buffers for the attack inner loop; it runs ~B·(se+fe) times
// per training epoch, so no per-step allocations.
struct AttackScratch {
  Vector diff, sigma_diff, grad;
};

// Evaluates the penalized objective at xc and folds it into `best`.
void consider(const PointLoss& loss, const MahalanobisMetric& sigma,
              std::span<const double> x0, std::span<const double> xc, int y, double lambda,
              BestIterate& best, AttackScratch& s) {
  const double l = loss.value(xc, y);
  double d2 = 0.0;
  if (std::isfinite(l)) {
    for (std::size_t i = 0; i < x0.size(); ++i) s.diff[i] = xc[i] - x0[i];
    matvec_into(sigma.sigma, s.diff, s.sigma_diff);
    d2 = std::max(0.0, dot(s.diff, s.sigma_diff));
  }
  if (!std::isfinite(l) || !std::isfinite(d2)) throw NumericError("attack diverged");
  const double obj = l - lambda * d2;
  if (obj > best.value) {
    best.value = obj;
    best.x.assign(xc.begin(), xc.end());
    best.loss_at_x = l;
    best.dist_sq = d2;
  }
}

// grad of (loss - lambda d²) at xc into s.grad: grad_loss - 2 lambda Sigma (xc - x0).
void ascent_gradient(const PointLoss& loss, const MahalanobisMetric& sigma,
                     std::span<const double> x0, std::span<const double> xc, int y,
                     double lambda, AttackScratch& s) {
  loss.grad_x(xc, y, s.grad);
  if (lambda == 0.0) return;
  for (std::size_t i = 0; i < x0.size(); ++i) s.diff[i] = xc[i] - x0[i];
  matvec_into(sigma.sigma, s.diff, s.sigma_diff);
  for (std::size_t i = 0; i < s.grad.size(); ++i) s.grad[i] -= 2.0 * lambda * s.sigma_diff[i];
}

}  // namespace

CTransformResult c_transform(const PointLoss& loss, const FairMetric& metric,
                             std::span<const double> x, int y, double lambda,
                             const AttackConfig& cfg) {
  if (lambda < 0.0) throw ConfigError("c_transform: lambda must be >= 0");
  if (x.size() != metric.dim() || loss.dim() != metric.dim())
    throw ConfigError("c_transform: dimension mismatch");
  const std::size_t d = x.size();

  const double loss0 = loss.value(x, y);
  if (!std::isfinite(loss0)) throw NumericError("attack diverged");
  BestIterate best{loss0, Vector(x.begin(), x.end()), loss0, 0.0};

  Vector xc(x.begin(), x.end());
  AttackScratch scratch{Vector(d), Vector(d), Vector(d)};

  const std::size_t r = metric.subspace.rank();
  if (r > 0 && cfg.subspace_epochs > 0) {
    const Matrix& q = metric.subspace.basis;
    Vector coef(r, 0.0), coef_grad(r), move(d);
    Adam adam(r, cfg.subspace_step, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    for (std::size_t t = 0; t < cfg.subspace_epochs; ++t) {
      ascent_gradient(loss, metric.sigma, x, xc, y, lambda, scratch);
      matvec_transpose_into(q, scratch.grad, coef_grad);
      adam.ascend(coef, coef_grad);
      matvec_into(q, coef, move);
      for (std::size_t i = 0; i < d; ++i) xc[i] = x[i] + move[i];
      consider(loss, metric.sigma, x, xc, y, lambda, best, scratch);
    }
  }

  if (cfg.full_epochs > 0) {
    Vector delta(d);
    for (std::size_t i = 0; i < d; ++i) delta[i] = xc[i] - x[i];  // phase-1 endpoint
    Adam adam(d, cfg.full_step, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    for (std::size_t t = 0; t < cfg.full_epochs; ++t) {
      ascent_gradient(loss, metric.sigma, x, xc, y, lambda, scratch);
      adam.ascend(delta, scratch.grad);
      for (std::size_t i = 0; i < d; ++i) xc[i] = x[i] + delta[i];
      consider(loss, metric.sigma, x, xc, y, lambda, best, scratch);
    }
  }

  return CTransformResult{best.value, std::move(best.x), loss0, best.loss_at_x, best.dist_sq};
}

std::vector<CTransformResult> attack_batch(const LossFactory& make_loss,
                                           const FairMetric& metric, const Matrix& features,
                                           const std::vector<int>& labels,
                                           const std::vector<std::size_t>& idx, double lambda,
                                           const AttackConfig& cfg) {
  // Contract violations must surface as ConfigError; exceptions cannot cross
  // the parallel region below, where any failure reads as divergence.
  if (features.cols() != metric.dim())
    throw ConfigError("attack_batch: feature dimension does not match the metric");
  if (const auto probe = make_loss(); probe->dim() != metric.dim())
    throw ConfigError("attack_batch: loss dimension does not match the metric");
  if (lambda < 0.0) throw ConfigError("attack_batch: lambda must be >= 0");
  for (std::size_t i : idx)
    if (i >= features.rows()) throw ConfigError("attack_batch: index out of range");

  std::vector<CTransformResult> results(idx.size());
  std::atomic<bool> diverged{false};
  parallel_for(idx.size(), [&](std::size_t i) {
    if (diverged.load(std::memory_order_relaxed)) return;
    try {
      const auto loss = make_loss();
      const std::size_t row = idx[i];
      results[i] = c_transform(*loss, metric, features.row(row), labels[row], lambda, cfg);
    } catch (const std::exception&) {
      diverged.store(true, std::memory_order_relaxed);
    }
  });
  if (diverged.load()) throw NumericError("attack diverged");
  return results;
}

namespace {

void warn_full_step(const AttackConfig& attack, double epsilon) {
  if (attack.full_epochs > 0 && epsilon > 0.0 && attack.full_step >= epsilon)
    std::cerr << "warning: full perturbation step " << attack.full_step
              << " is not below the budget epsilon " << epsilon << "\n";
}

}  // namespace

DualResult solve_dual(const LossFactory& make_loss, const FairMetric& metric,
                      const TabularDataset& data, const AuditConfig& cfg) {
  if (cfg.epsilon <= 0.0) throw ConfigError("solve_dual: epsilon must be > 0");
  if (cfg.batch_size == 0) throw ConfigError("solve_dual: batch_size must be >= 1");
  if (cfg.lambda_step <= 0.0) throw ConfigError("solve_dual: lambda_step must be > 0");
  if (cfg.lambda_init < 0.0) throw ConfigError("solve_dual: lambda_init must be >= 0");
  if (data.size() == 0) throw ConfigError("solve_dual: empty dataset");
  warn_full_step(cfg.attack, cfg.epsilon);

  Rng rng = make_rng(cfg.seed);
  const std::size_t n = data.size();
  std::vector<std::size_t> idx(cfg.batch_size);

  DualResult out;
  out.lambda = cfg.lambda_init;
  out.trajectory.reserve(std::min<std::size_t>(cfg.max_iters, 1 << 20));
  std::size_t streak = 0;
  for (std::size_t t = 0; t < cfg.max_iters; ++t) {
    for (auto& i : idx) i = uniform_index(rng, 0, n - 1);
    const auto res =
        attack_batch(make_loss, metric, data.features, data.labels, idx, out.lambda, cfg.attack);
    double mean_d2 = 0.0;
    for (const auto& r : res) mean_d2 += r.dist_sq;  // index order
    mean_d2 /= static_cast<double>(res.size());

    const double next = std::max(0.0, out.lambda - cfg.lambda_step * (cfg.epsilon - mean_d2));
    out.trajectory.push_back({t, next, mean_d2});
    streak = (std::abs(next - out.lambda) < cfg.tol) ? streak + 1 : 0;
    out.lambda = next;
    if (streak >= cfg.window) break;
  }
  return out;
}

AuditReport audit(const LossFactory& make_loss, const FairMetric& metric,
                  const TabularDataset& data, const AuditConfig& cfg) {
  if (data.size() == 0) throw ConfigError("audit: empty dataset");
  if (cfg.epsilon < 0.0) throw ConfigError("audit: epsilon must be >= 0");
  const std::size_t n = data.size();

  AuditReport report;
  report.epsilon = cfg.epsilon;

  if (cfg.epsilon == 0.0) {
    // Trivial ball: the only feasible distribution is the audit data itself.
    const auto loss = make_loss();
    double clean = 0.0;
    report.per_sample.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double l = loss->value(data.features.row(i), data.labels[i]);
      clean += l;
      report.per_sample.push_back(
          {i, Vector(data.features.row(i).begin(), data.features.row(i).end()), 0.0, 0.0});
    }
    clean /= static_cast<double>(n);
    report.clean_loss = clean;
    report.robust_loss = clean;
    report.certificate_gap = 0.0;
    report.lambda_final = 0.0;
    return report;
  }

  const DualResult dual = solve_dual(make_loss, metric, data, cfg);
  report.lambda_final = dual.lambda;

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const auto res =
      attack_batch(make_loss, metric, data.features, data.labels, all, dual.lambda, cfg.attack);

  double clean = 0.0, ct_value = 0.0, cost = 0.0;
  report.per_sample.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    clean += res[i].loss_at_start;
    ct_value += res[i].value;
    cost += res[i].dist_sq;
    report.per_sample.push_back(
        {i, res[i].x_star, res[i].loss_at_star - res[i].loss_at_start, res[i].dist_sq});
  }
  const double inv = 1.0 / static_cast<double>(n);
  report.clean_loss = clean * inv;
  report.robust_loss = dual.lambda * cfg.epsilon + ct_value * inv;
  report.certificate_gap = report.robust_loss - report.clean_loss;
  report.mean_perturbation_cost = cost * inv;
  return report;
}

AuditReport audit(const ModelParams& params, const FairMetric& metric,
                  const TabularDataset& data, const AuditConfig& cfg) {
  return audit(model_loss_factory(params), metric, data, cfg);
}

double lipschitz_estimate(const PointLoss& loss, const TabularDataset& data,
                          const FairMetric& metric, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw ConfigError("lipschitz_estimate: samples must be >= 1");
  Rng rng = make_rng(seed);
  const std::size_t n = data.size();
  double best = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (int tries = 0; tries < 64; ++tries) {
      const std::size_t i = uniform_index(rng, 0, n - 1);
      const std::size_t j = uniform_index(rng, 0, n - 1);
      if (i == j || data.labels[i] != data.labels[j]) continue;
      const double d2 = distance_sq(metric.sigma, data.features.row(i), data.features.row(j));
      if (d2 <= 1e-24) continue;
      const double li = loss.value(data.features.row(i), data.labels[i]);
      const double lj = loss.value(data.features.row(j), data.labels[j]);
      best = std::max(best, std::abs(li - lj) / std::sqrt(d2));
      break;
    }
  }
  return best;
}

}  // namespace sensr
