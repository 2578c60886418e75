#ifndef SENSR_AUDITOR_HPP
#define SENSR_AUDITOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "sensr/data.hpp"
#include "sensr/fair_metric.hpp"
#include "sensr/model.hpp"

namespace sensr {

// Pointwise loss with an input gradient; the abstraction the attack climbs.
// Instances may carry scratch state and are not shared across threads.
class PointLoss {
 public:
  virtual ~PointLoss() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(std::span<const double> x, int y) const = 0;
  virtual void grad_x(std::span<const double> x, int y, std::span<double> out) const = 0;
};

// Cross-entropy of a classifier.
class ModelLoss final : public PointLoss {
 public:
  explicit ModelLoss(const ModelParams& params) : params_(params) {}
  std::size_t dim() const override { return params_.input_dim; }
  double value(std::span<const double> x, int y) const override;
  void grad_x(std::span<const double> x, int y, std::span<double> out) const override;

 private:
  const ModelParams& params_;
  mutable ModelWorkspace ws_;
};

// Parallel kernels construct one PointLoss per task from this.
using LossFactory = std::function<std::unique_ptr<PointLoss>()>;
LossFactory model_loss_factory(const ModelParams& params);

struct AttackConfig {
  double subspace_step = 10.0;
  std::size_t subspace_epochs = 50;
  double full_step = 1e-4;
  std::size_t full_epochs = 40;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  bool enabled() const { return subspace_epochs > 0 || full_epochs > 0; }
};

struct AuditConfig {
  double epsilon = 1e-3;
  double lambda_init = 1.0;
  double lambda_step = 0.01;  // alpha_t, constant
  std::size_t batch_size = 100;
  std::size_t max_iters = 1000;
  std::uint64_t seed = 0;
  AttackConfig attack;
  // Early stop: |lambda change| below tol for `window` consecutive iterations.
  double tol = 1e-4;
  std::size_t window = 50;
};

struct CTransformResult {
  double value = 0.0;       // sup_x loss - lambda d_x²
  Vector x_star;
  double loss_at_start = 0.0;
  double loss_at_star = 0.0;
  double dist_sq = 0.0;     // d_x²(x, x*)
};

// Two-phase first-order ascent on loss((x,y)) - lambda·d_x²(x, x_i): phase 1
// moves within the sensitive subspace, phase 2 continues with a full
// perturbation from phase 1's endpoint. Adam updates per phase; returns the
// best iterate seen including the unperturbed start, so value >= loss(x_i).
// Deterministic (zero perturbation init). Throws NumericError on non-finite
// loss ("attack diverged").
CTransformResult c_transform(const PointLoss& loss, const FairMetric& metric,
                             std::span<const double> x, int y, double lambda,
                             const AttackConfig& cfg);

// c_transform over dataset rows `idx`, parallel across samples, results in
// index order (bit-deterministic for any thread count).
std::vector<CTransformResult> attack_batch(const LossFactory& make_loss,
                                           const FairMetric& metric, const Matrix& features,
                                           const std::vector<int>& labels,
                                           const std::vector<std::size_t>& idx, double lambda,
                                           const AttackConfig& cfg);

struct DualIterate {
  std::size_t iter;
  double lambda;
  double mean_dist_sq;
};

struct DualResult {
  double lambda = 0.0;
  std::vector<DualIterate> trajectory;
};

// Stochastic dual ascent-descent: lambda <- max{0, lambda - alpha(eps - mean d²)}
// with x* from the attack at the current lambda, minibatches of size B.
DualResult solve_dual(const LossFactory& make_loss, const FairMetric& metric,
                      const TabularDataset& data, const AuditConfig& cfg);

struct PerSamplePerturbation {
  std::size_t index;
  Vector x_star;
  double loss_gain;  // loss(x*) - loss(x)
  double dist_sq;
};

struct AuditReport {
  double lambda_final = 0.0;
  double robust_loss = 0.0;       // lambda·eps + mean c-transform value (full data)
  double clean_loss = 0.0;
  double certificate_gap = 0.0;   // robust - clean, >= 0
  double mean_perturbation_cost = 0.0;
  double epsilon = 0.0;
  std::vector<PerSamplePerturbation> per_sample;
};

// Runs solve_dual, then evaluates the dual objective over the full dataset at
// the converged lambda. epsilon = 0 short-circuits to the trivial ball.
AuditReport audit(const LossFactory& make_loss, const FairMetric& metric,
                  const TabularDataset& data, const AuditConfig& cfg);
AuditReport audit(const ModelParams& params, const FairMetric& metric,
                  const TabularDataset& data, const AuditConfig& cfg);

// Empirical Lipschitz constant of the loss w.r.t. d_x: max over sampled
// equal-label pairs of |loss(z1)-loss(z2)| / d_x(x1,x2), d_x > 0 only.
double lipschitz_estimate(const PointLoss& loss, const TabularDataset& data,
                          const FairMetric& metric, std::size_t samples, std::uint64_t seed);

}  // namespace sensr

#endif
