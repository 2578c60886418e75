#ifndef SENSR_MODEL_HPP
#define SENSR_MODEL_HPP

#include <cstdint>
#include <span>
#include <string>

#include "sensr/linalg.hpp"

namespace sensr {

enum class Arch { logistic, mlp };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& s);

// Parameters of a differentiable classifier. logistic: logits = w1·x + b1
// (w1 is C x d). mlp: logits = w2·relu(w1·x + b1) + b2 with w1 h x d,
// w2 C x h. ReLU subgradient at 0 is 0.
struct ModelParams {
  Arch arch = Arch::logistic;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::size_t hidden = 0;  // mlp only

  Matrix w1;
  Vector b1;
  Matrix w2;  // empty for logistic
  Vector b2;  // empty for logistic

  std::size_t num_params() const;

  // Glorot-uniform weights (±sqrt(6/(fan_in+fan_out))), zero biases, seeded.
  static ModelParams init(Arch arch, std::size_t input_dim, std::size_t num_classes,
                          std::size_t hidden, std::uint64_t seed);

  // Flat view in fixed order (w1, b1, w2, b2) for the outer optimizer.
  Vector flatten() const;
  void assign(std::span<const double> theta);
};

// Scratch buffers for the hot forward/backward path; reuse one instance per
// thread of work.
struct ModelWorkspace {
  Vector hidden_pre, hidden_act, logits, probs, dhidden;
};

void forward(const ModelParams& p, std::span<const double> x, Vector& logits_out,
             ModelWorkspace& ws);
Vector forward(const ModelParams& p, std::span<const double> x);

// Cross-entropy -log softmax(logits)[y], log-sum-exp stabilized.
double loss_from_logits(std::span<const double> logits, int y);
double loss(const ModelParams& p, std::span<const double> x, int y);
double loss(const ModelParams& p, std::span<const double> x, int y, ModelWorkspace& ws);

// Exact gradient of the loss w.r.t. all parameters, in flatten() order.
void grad_params(const ModelParams& p, std::span<const double> x, int y,
                 std::span<double> out, ModelWorkspace& ws);
Vector grad_params(const ModelParams& p, std::span<const double> x, int y);

// Exact gradient of the loss w.r.t. the input.
void grad_input(const ModelParams& p, std::span<const double> x, int y,
                std::span<double> out, ModelWorkspace& ws);
Vector grad_input(const ModelParams& p, std::span<const double> x, int y);

// Central-difference check over every parameter and input coordinate;
// returns the max relative error (relative-above-1, absolute-below).
double gradient_check(const ModelParams& p, const Vector& x, int y, double step);

// argmax with lowest-index tie-break.
int predict_class(std::span<const double> logits);

}  // namespace sensr

#endif
