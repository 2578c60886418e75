#include "sensr/trainer.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>

#include "sensr/errors.hpp"
#include "sensr/optim.hpp"
#include "sensr/parallel.hpp"

namespace sensr {

std::string mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::sensr: return "sensr";
    case TrainMode::baseline: return "baseline";
    case TrainMode::project: return "project";
  }
  return "?";
}

TrainMode mode_from_name(const std::string& s) {
  if (s == "sensr") return TrainMode::sensr;
  if (s == "baseline") return TrainMode::baseline;
  if (s == "project") return TrainMode::project;
  throw ConfigError("unknown train mode: " + s);
}

std::vector<std::size_t> balanced_minibatch(const std::vector<int>& labels, int num_classes,
                                            std::size_t batch_size, Rng& rng) {
  if (num_classes < 1) throw ConfigError("balanced_minibatch: bad class count");
  if (batch_size < static_cast<std::size_t>(num_classes))
    throw ConfigError("balanced_minibatch: batch smaller than class count");
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (int c = 0; c < num_classes; ++c)
    if (by_class[c].empty())
      throw ConfigError("balanced_minibatch: class " + std::to_string(c) + " has no examples");

  std::vector<std::size_t> batch;
  batch.reserve(batch_size);
  const std::size_t base = batch_size / num_classes;
  const std::size_t extra = batch_size % num_classes;
  for (int c = 0; c < num_classes; ++c) {
    const std::size_t count = base + (static_cast<std::size_t>(c) < extra ? 1 : 0);
    const auto& pool = by_class[c];
    for (std::size_t i = 0; i < count; ++i)
      batch.push_back(pool[uniform_index(rng, 0, pool.size() - 1)]);
  }
  return batch;
}

namespace {

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.batch_size < 1)
    throw ConfigError("train: epochs and batch_size must be >= 1");
  if (cfg.epsilon < 0.0) throw ConfigError("train: epsilon must be >= 0");
  if (cfg.lambda_step <= 0.0 || cfg.theta_step <= 0.0)
    throw ConfigError("train: step sizes must be > 0");
  if (cfg.lambda_init < 0.0) throw ConfigError("train: lambda_init must be >= 0");
}

// Shared engine. `attack_active` gates the inner maximization and the lambda
// update; the theta path is identical either way, so a SenSR run with a
// zero-step attack and a baseline run produce bit-identical trajectories.
TrainResult train_engine(const TabularDataset& data, const FairMetric* metric,
                         const ArchSpec& arch, const TrainConfig& cfg, bool attack_active,
                         ModelParams* out_last_checkpoint) {
  validate_train_config(cfg);
  data.validate();
  if (attack_active && metric == nullptr) throw ConfigError("train: sensr mode needs a metric");
  if (metric != nullptr && metric->dim() != data.dim())
    throw ConfigError("train: metric dimension does not match features");

  ModelParams params = ModelParams::init(arch.arch, data.dim(), data.num_classes,
                                         arch.hidden, cfg.seed);
  Vector theta = params.flatten();
  Adam outer(theta.size(), cfg.theta_step);
  Rng rng = make_rng(cfg.seed + 1);

  const std::size_t bsz = cfg.batch_size;
  double lambda = cfg.lambda_init;

  TrainResult out;
  out.log.reserve(cfg.epochs);
  ModelParams checkpoint = params;

  // Per-sample slots; reductions walk them in index order.
  Matrix grads(bsz, theta.size());
  std::vector<double> clean_losses(bsz), robust_losses(bsz), costs(bsz);
  Matrix x_stars(bsz, data.dim());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batch = balanced_minibatch(data.labels, data.num_classes, bsz, rng);

    std::atomic<bool> failed{false};
    parallel_for(bsz, [&](std::size_t b) {
      if (failed.load(std::memory_order_relaxed)) return;
      try {
        const std::size_t row = batch[b];
        const auto x = data.features.row(row);
        const int y = data.labels[row];
        ModelWorkspace ws;
        auto xstar = x_stars.row(b);
        if (attack_active && cfg.attack.enabled()) {
          ModelLoss pl(params);
          const auto res = c_transform(pl, *metric, x, y, lambda, cfg.attack);
          clean_losses[b] = res.loss_at_start;
          robust_losses[b] = res.loss_at_star;
          costs[b] = res.dist_sq;
          std::copy(res.x_star.begin(), res.x_star.end(), xstar.begin());
        } else {
          clean_losses[b] = loss(params, x, y, ws);
          robust_losses[b] = clean_losses[b];
          costs[b] = 0.0;
          std::copy(x.begin(), x.end(), xstar.begin());
        }
        grad_params(params, xstar, y, grads.row(b), ws);
      } catch (const std::exception&) {
        failed.store(true, std::memory_order_relaxed);
      }
    });
    if (failed.load()) {
      if (out_last_checkpoint != nullptr) *out_last_checkpoint = checkpoint;
      throw NumericError("training diverged");
    }

    double clean = 0.0, robust = 0.0, cost = 0.0;
    for (std::size_t b = 0; b < bsz; ++b) {
      clean += clean_losses[b];
      robust += robust_losses[b];
      cost += costs[b];
    }
    const double inv = 1.0 / static_cast<double>(bsz);
    clean *= inv;
    robust *= inv;
    cost *= inv;
    if (!std::isfinite(clean) || !std::isfinite(robust)) {
      if (out_last_checkpoint != nullptr) *out_last_checkpoint = checkpoint;
      throw NumericError("training diverged");
    }

    if (attack_active) lambda = std::max(0.0, lambda - cfg.lambda_step * (cfg.epsilon - cost));

    Vector grad(theta.size(), 0.0);
    for (std::size_t b = 0; b < bsz; ++b) axpy(inv, grads.row(b), grad);
    outer.descend(theta, grad);
    params.assign(theta);

    out.log.push_back({epoch, lambda, clean, robust, cost});
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) checkpoint = params;
  }

  for (double v : theta) {
    if (!std::isfinite(v)) {
      if (out_last_checkpoint != nullptr) *out_last_checkpoint = checkpoint;
      throw NumericError("training diverged");
    }
  }
  out.params = std::move(params);
  if (out_last_checkpoint != nullptr) *out_last_checkpoint = out.params;
  return out;
}

}  // namespace

TrainResult train_sensr(const TabularDataset& data, const FairMetric& metric,
                        const ArchSpec& arch, const TrainConfig& cfg,
                        ModelParams* out_last_checkpoint) {
  if (cfg.mode != TrainMode::sensr) throw ConfigError("train_sensr: config mode mismatch");
  if (cfg.attack.full_epochs > 0 && cfg.epsilon > 0.0 && cfg.attack.full_step >= cfg.epsilon)
    std::fprintf(stderr, "warning: full perturbation step %g is not below epsilon %g\n",
                 cfg.attack.full_step, cfg.epsilon);
  return train_engine(data, &metric, arch, cfg, /*attack_active=*/true, out_last_checkpoint);
}

TrainResult train_baseline(const TabularDataset& data, const ArchSpec& arch,
                           const TrainConfig& cfg, ModelParams* out_last_checkpoint) {
  return train_engine(data, nullptr, arch, cfg, /*attack_active=*/false, out_last_checkpoint);
}

TabularDataset project_features(const TabularDataset& data, const FairMetric& metric) {
  if (metric.dim() != data.dim()) throw ConfigError("project_features: dimension mismatch");
  TabularDataset out = data;
  // rows x_i ↦ sigma x_i, i.e. X ↦ X sigmaᵀ = X sigma (sigma symmetric)
  out.features = multiply(data.features, metric.sigma.sigma);
  return out;
}

TrainResult train_project(const TabularDataset& data, const FairMetric& metric,
                          const ArchSpec& arch, const TrainConfig& cfg,
                          ModelParams* out_last_checkpoint) {
  const TabularDataset projected = project_features(data, metric);
  return train_engine(projected, nullptr, arch, cfg, /*attack_active=*/false,
                      out_last_checkpoint);
}

}  // namespace sensr
