#include "sensr/model.hpp"

#include <algorithm>
#include <cmath>

#include "sensr/errors.hpp"
#include "sensr/rng.hpp"

namespace sensr {

std::string arch_name(Arch a) { return a == Arch::logistic ? "logistic" : "mlp"; }

Arch arch_from_name(const std::string& s) {
  if (s == "logistic") return Arch::logistic;
  if (s == "mlp") return Arch::mlp;
  throw ConfigError("unknown architecture: " + s);
}

std::size_t ModelParams::num_params() const {
  return w1.rows() * w1.cols() + b1.size() + w2.rows() * w2.cols() + b2.size();
}

ModelParams ModelParams::init(Arch arch, std::size_t input_dim, std::size_t num_classes,
                              std::size_t hidden, std::uint64_t seed) {
  if (input_dim == 0 || num_classes < 2) throw ConfigError("model init: bad dimensions");
  if (arch == Arch::mlp && hidden == 0) throw ConfigError("model init: mlp needs hidden > 0");
  ModelParams p;
  p.arch = arch;
  p.input_dim = input_dim;
  p.num_classes = num_classes;
  p.hidden = (arch == Arch::mlp ? hidden : 0);

  Rng rng = make_rng(seed);
  auto glorot = [&rng](Matrix& w, std::size_t fan_out, std::size_t fan_in) {
    w = Matrix(fan_out, fan_in);
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& e : w.data()) e = uniform(rng, -a, a);
  };
  if (arch == Arch::logistic) {
    glorot(p.w1, num_classes, input_dim);
    p.b1.assign(num_classes, 0.0);
  } else {
    glorot(p.w1, hidden, input_dim);
    p.b1.assign(hidden, 0.0);
    glorot(p.w2, num_classes, hidden);
    p.b2.assign(num_classes, 0.0);
  }
  return p;
}

Vector ModelParams::flatten() const {
  Vector theta;
  theta.reserve(num_params());
  theta.insert(theta.end(), w1.data().begin(), w1.data().end());
  theta.insert(theta.end(), b1.begin(), b1.end());
  theta.insert(theta.end(), w2.data().begin(), w2.data().end());
  theta.insert(theta.end(), b2.begin(), b2.end());
  return theta;
}

void ModelParams::assign(std::span<const double> theta) {
  if (theta.size() != num_params()) throw ConfigError("model assign: size mismatch");
  std::size_t at = 0;
  auto take = [&](double* dst, std::size_t n) {
    std::copy(theta.begin() + at, theta.begin() + at + n, dst);
    at += n;
  };
  take(w1.data().data(), w1.data().size());
  take(b1.data(), b1.size());
  take(w2.data().data(), w2.data().size());
  take(b2.data(), b2.size());
}

void forward(const ModelParams& p, std::span<const double> x, Vector& logits_out,
             ModelWorkspace& ws) {
  if (x.size() != p.input_dim) throw ConfigError("forward: input dimension mismatch");
  logits_out.assign(p.num_classes, 0.0);
  if (p.arch == Arch::logistic) {
    for (std::size_t c = 0; c < p.num_classes; ++c)
      logits_out[c] = dot(p.w1.row(c), x) + p.b1[c];
    return;
  }
  ws.hidden_pre.assign(p.hidden, 0.0);
  ws.hidden_act.assign(p.hidden, 0.0);
  for (std::size_t h = 0; h < p.hidden; ++h) {
    const double v = dot(p.w1.row(h), x) + p.b1[h];
    ws.hidden_pre[h] = v;
    ws.hidden_act[h] = v > 0.0 ? v : 0.0;
  }
  for (std::size_t c = 0; c < p.num_classes; ++c)
    logits_out[c] = dot(p.w2.row(c), ws.hidden_act) + p.b2[c];
}

Vector forward(const ModelParams& p, std::span<const double> x) {
  ModelWorkspace ws;
  Vector logits;
  forward(p, x, logits, ws);
  return logits;
}

double loss_from_logits(std::span<const double> logits, int y) {
  if (y < 0 || static_cast<std::size_t>(y) >= logits.size())
    throw ConfigError("loss: label out of range");
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  return m + std::log(z) - logits[y];
}

double loss(const ModelParams& p, std::span<const double> x, int y, ModelWorkspace& ws) {
  forward(p, x, ws.logits, ws);
  return loss_from_logits(ws.logits, y);
}

double loss(const ModelParams& p, std::span<const double> x, int y) {
  ModelWorkspace ws;
  return loss(p, x, y, ws);
}

namespace {

// probs = softmax(logits), stabilized; returns dL/dlogits into probs
// after subtracting the one-hot label.
void softmax_grad(const Vector& logits, int y, Vector& probs) {
  probs.assign(logits.size(), 0.0);
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    probs[c] = std::exp(logits[c] - m);
    z += probs[c];
  }
  for (double& v : probs) v /= z;
  probs[y] -= 1.0;
}

}  // namespace

void grad_params(const ModelParams& p, std::span<const double> x, int y,
                 std::span<double> out, ModelWorkspace& ws) {
  if (out.size() != p.num_params()) throw ConfigError("grad_params: output size mismatch");
  forward(p, x, ws.logits, ws);
  softmax_grad(ws.logits, y, ws.probs);  // ws.probs = dL/dlogits

  std::fill(out.begin(), out.end(), 0.0);
  if (p.arch == Arch::logistic) {
    // dW1[c,j] = dlogit_c * x_j ; db1[c] = dlogit_c
    const std::size_t wsz = p.w1.data().size();
    for (std::size_t c = 0; c < p.num_classes; ++c) {
      const double g = ws.probs[c];
      double* wrow = out.data() + c * p.input_dim;
      for (std::size_t j = 0; j < p.input_dim; ++j) wrow[j] += g * x[j];
      out[wsz + c] = g;
    }
    return;
  }
  // mlp: backprop through w2 then relu then w1.
  ws.dhidden.assign(p.hidden, 0.0);
  const std::size_t w1sz = p.w1.data().size();
  const std::size_t b1off = w1sz;
  const std::size_t w2off = w1sz + p.hidden;
  const std::size_t b2off = w2off + p.w2.data().size();
  for (std::size_t c = 0; c < p.num_classes; ++c) {
    const double g = ws.probs[c];
    double* w2row = out.data() + w2off + c * p.hidden;
    for (std::size_t h = 0; h < p.hidden; ++h) {
      w2row[h] += g * ws.hidden_act[h];
      ws.dhidden[h] += g * p.w2(c, h);
    }
    out[b2off + c] = g;
  }
  for (std::size_t h = 0; h < p.hidden; ++h) {
    if (ws.hidden_pre[h] <= 0.0) continue;  // relu'(0) = 0
    const double g = ws.dhidden[h];
    double* w1row = out.data() + h * p.input_dim;
    for (std::size_t j = 0; j < p.input_dim; ++j) w1row[j] += g * x[j];
    out[b1off + h] = g;
  }
}

Vector grad_params(const ModelParams& p, std::span<const double> x, int y) {
  ModelWorkspace ws;
  Vector g(p.num_params(), 0.0);
  grad_params(p, x, y, g, ws);
  return g;
}

void grad_input(const ModelParams& p, std::span<const double> x, int y,
                std::span<double> out, ModelWorkspace& ws) {
  if (out.size() != p.input_dim) throw ConfigError("grad_input: output size mismatch");
  forward(p, x, ws.logits, ws);
  softmax_grad(ws.logits, y, ws.probs);
  std::fill(out.begin(), out.end(), 0.0);
  if (p.arch == Arch::logistic) {
    for (std::size_t c = 0; c < p.num_classes; ++c) axpy(ws.probs[c], p.w1.row(c), out);
    return;
  }
  ws.dhidden.assign(p.hidden, 0.0);
  for (std::size_t c = 0; c < p.num_classes; ++c)
    for (std::size_t h = 0; h < p.hidden; ++h) ws.dhidden[h] += ws.probs[c] * p.w2(c, h);
  for (std::size_t h = 0; h < p.hidden; ++h) {
    if (ws.hidden_pre[h] <= 0.0) continue;
    axpy(ws.dhidden[h], p.w1.row(h), out);
  }
}

Vector grad_input(const ModelParams& p, std::span<const double> x, int y) {
  ModelWorkspace ws;
  Vector g(p.input_dim, 0.0);
  grad_input(p, x, y, g, ws);
  return g;
}

double gradient_check(const ModelParams& p, const Vector& x, int y, double step) {
  if (step <= 0.0) throw ConfigError("gradient_check: step must be positive");
  ModelWorkspace ws;
  auto rel_err = [](double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max({std::abs(analytic), std::abs(numeric), 1.0});
  };
  double worst = 0.0;

  Vector theta = p.flatten();
  Vector ga(theta.size(), 0.0);
  grad_params(p, x, y, ga, ws);
  ModelParams probe = p;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double keep = theta[i];
    theta[i] = keep + step;
    probe.assign(theta);
    const double up = loss(probe, x, y, ws);
    theta[i] = keep - step;
    probe.assign(theta);
    const double dn = loss(probe, x, y, ws);
    theta[i] = keep;
    worst = std::max(worst, rel_err(ga[i], (up - dn) / (2.0 * step)));
  }
  probe.assign(theta);

  Vector gx(x.size(), 0.0);
  grad_input(p, x, y, gx, ws);
  Vector xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = xp[i];
    xp[i] = keep + step;
    const double up = loss(p, xp, y, ws);
    xp[i] = keep - step;
    const double dn = loss(p, xp, y, ws);
    xp[i] = keep;
    worst = std::max(worst, rel_err(gx[i], (up - dn) / (2.0 * step)));
  }
  return worst;
}

int predict_class(std::span<const double> logits) {
  int best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c)
    if (logits[c] > logits[best]) best = static_cast<int>(c);
  return best;
}

}  // namespace sensr
