#ifndef SENSR_TRAINER_HPP
#define SENSR_TRAINER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sensr/auditor.hpp"
#include "sensr/data.hpp"
#include "sensr/fair_metric.hpp"
#include "sensr/model.hpp"
#include "sensr/rng.hpp"

namespace sensr {

enum class TrainMode { sensr, baseline, project };

std::string mode_name(TrainMode m);
TrainMode mode_from_name(const std::string& s);

struct ArchSpec {
  Arch arch = Arch::mlp;
  std::size_t hidden = 100;
};

struct TrainConfig {
  TrainMode mode = TrainMode::sensr;
  std::size_t epochs = 12000;      // one minibatch step per "epoch"
  std::size_t batch_size = 1000;
  double epsilon = 1e-3;
  double lambda_step = 0.01;       // alpha
  double theta_step = 0.001;       // beta
  double lambda_init = 1.0;
  AttackConfig attack;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 500;
};

struct TrainLogEntry {
  std::size_t epoch;
  double lambda;
  double clean_loss;    // batch mean loss at the original points
  double robust_loss;   // batch mean loss at the attacked points
  double mean_cost;     // batch mean d_x²(x, x*)
};

using TrainLog = std::vector<TrainLogEntry>;

struct TrainResult {
  ModelParams params;
  TrainLog log;
};

// B indices with floor(B/C) or ceil(B/C) per class, sampled with replacement
// within class. Throws ConfigError on an empty class.
std::vector<std::size_t> balanced_minibatch(const std::vector<int>& labels, int num_classes,
                                            std::size_t batch_size, Rng& rng);

// Minimax training: per epoch draw a balanced minibatch, attack each sample at
// the current lambda, update lambda, then take an Adam step on the batch mean
// parameter gradient at the attacked points. Attacks run in parallel with
// index-ordered reduction. Throws NumericError("training diverged") carrying
// on the side the last checkpoint via `out_last_checkpoint` when provided.
TrainResult train_sensr(const TabularDataset& data, const FairMetric& metric,
                        const ArchSpec& arch, const TrainConfig& cfg,
                        ModelParams* out_last_checkpoint = nullptr);

// ERM with balanced minibatches and the same Adam outer optimizer.
TrainResult train_baseline(const TabularDataset& data, const ArchSpec& arch,
                           const TrainConfig& cfg, ModelParams* out_last_checkpoint = nullptr);

// Projects every feature vector with the metric's sigma, then trains the
// baseline. Evaluation-time inputs must be projected identically (see
// project_features).
TrainResult train_project(const TabularDataset& data, const FairMetric& metric,
                          const ArchSpec& arch, const TrainConfig& cfg,
                          ModelParams* out_last_checkpoint = nullptr);

// Returns a copy of the dataset with features premultiplied by sigma.
TabularDataset project_features(const TabularDataset& data, const FairMetric& metric);

}  // namespace sensr

#endif
