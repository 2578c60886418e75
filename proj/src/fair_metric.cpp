#include "sensr/fair_metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sensr/errors.hpp"
#include "sensr/rng.hpp"

namespace sensr {

SensitiveSubspace SensitiveSubspace::from_directions(Matrix directions) {
  if (directions.empty()) throw ConfigError("sensitive subspace: empty input");
  SensitiveSubspace s;
  s.basis = qr_orthonormal(directions);
  s.directions = std::move(directions);

  // basisᵀ basis = I
  const Matrix gram = multiply(transpose(s.basis), s.basis);
  Matrix dev = gram;
  for (std::size_t i = 0; i < dev.rows(); ++i) dev(i, i) -= 1.0;
  if (max_abs(dev) > 1e-10) throw NumericError("sensitive subspace: basis not orthonormal");

  // every direction lies in span(basis)
  for (std::size_t j = 0; j < s.directions.cols(); ++j) {
    Vector col(s.directions.rows());
    for (std::size_t i = 0; i < col.size(); ++i) col[i] = s.directions(i, j);
    const Vector coef = matvec_transpose(s.basis, col);
    Vector back = matvec(s.basis, coef);
    for (std::size_t i = 0; i < col.size(); ++i) back[i] -= col[i];
    if (norm2(back) > 1e-8 * std::max(1.0, norm2(col)))
      throw NumericError("sensitive subspace: direction outside span of basis");
  }
  return s;
}

MahalanobisMetric MahalanobisMetric::from_sigma(Matrix sigma) {
  if (sigma.rows() != sigma.cols()) throw ConfigError("metric: sigma must be square");
  for (std::size_t i = 0; i < sigma.rows(); ++i)
    for (std::size_t j = i + 1; j < sigma.cols(); ++j)
      if (std::abs(sigma(i, j) - sigma(j, i)) > 1e-12)
        throw ConfigError("metric: sigma not symmetric");
  const auto [evals, evecs] = symmetric_eigen(sigma);
  (void)evecs;
  if (!evals.empty() && evals.back() < -1e-10 * std::max(1.0, max_abs(sigma)))
    throw ConfigError("metric: sigma not positive semidefinite");
  return MahalanobisMetric{std::move(sigma)};
}

MahalanobisMetric projection_complement(const SensitiveSubspace& subspace) {
  const std::size_t d = subspace.dim();
  const std::size_t r = subspace.rank();
  if (r == 0) throw ConfigError("projection_complement: empty subspace basis");
  if (r >= d) throw ConfigError("projection_complement: subspace spans whole space");
  Matrix sigma = multiply(subspace.basis, transpose(subspace.basis));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) sigma(i, j) = (i == j ? 1.0 : 0.0) - sigma(i, j);
  return MahalanobisMetric{std::move(sigma)};
}

double distance_sq(const MahalanobisMetric& metric, std::span<const double> x1,
                   std::span<const double> x2) {
  if (x1.size() != metric.dim() || x2.size() != metric.dim())
    throw ConfigError("distance_sq: dimension mismatch");
  Vector diff(x1.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = x1[i] - x2[i];
  const Vector sd = matvec(metric.sigma, diff);
  return std::max(0.0, dot(diff, sd));
}

double transport_cost(const MahalanobisMetric& metric, std::span<const double> x1, int y1,
                      std::span<const double> x2, int y2) {
  if (y1 != y2) return std::numeric_limits<double>::infinity();
  return distance_sq(metric, x1, x2);
}

FairMetric FairMetric::from_subspace(SensitiveSubspace subspace) {
  MahalanobisMetric sigma = projection_complement(subspace);
  return FairMetric{std::move(subspace), std::move(sigma)};
}

FairMetric FairMetric::euclidean(std::size_t d) {
  FairMetric m;
  m.subspace.directions = Matrix(d, 0);
  m.subspace.basis = Matrix(d, 0);
  m.sigma = MahalanobisMetric{Matrix::identity(d)};
  return m;
}

Matrix fit_softmax_directions(const Matrix& features, const std::vector<int>& protected_labels,
                              double l2_reg, const SoftmaxFitConfig& opt) {
  const std::size_t n = features.rows(), d = features.cols();
  if (protected_labels.size() != n) throw ConfigError("softmax fit: label count mismatch");
  if (l2_reg < 0.0) throw ConfigError("softmax fit: negative regularization");
  int num_classes = 0;
  for (int c : protected_labels) {
    if (c < 0) throw ConfigError("softmax fit: negative class label");
    num_classes = std::max(num_classes, c + 1);
  }
  if (num_classes < 2) throw ConfigError("softmax fit: needs at least 2 protected classes");

  // Reference-class parametrization: class 0 pinned to zero scores, so the
  // binary case reduces to a single logistic hyperplane.
  const std::size_t kc = static_cast<std::size_t>(num_classes - 1);
  Matrix coef(kc, d);
  Vector bias(kc, 0.0);
  Matrix gcoef(kc, d);
  Vector gbias(kc, 0.0);
  Vector scores(kc), probs(kc);

  Rng rng = make_rng(opt.seed);
  const std::size_t bs = (opt.batch_size == 0 || opt.batch_size > n) ? n : opt.batch_size;
  std::vector<std::size_t> batch(bs);

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    if (bs == n) {
      for (std::size_t i = 0; i < n; ++i) batch[i] = i;
    } else {
      for (std::size_t i = 0; i < bs; ++i) batch[i] = uniform_index(rng, 0, n - 1);
    }
    std::fill(gcoef.data().begin(), gcoef.data().end(), 0.0);
    std::fill(gbias.begin(), gbias.end(), 0.0);
    double loss = 0.0;
    for (std::size_t b : batch) {
      const auto x = features.row(b);
      double smax = 0.0;  // class 0 score
      for (std::size_t l = 0; l < kc; ++l) {
        scores[l] = dot(coef.row(l), x) + bias[l];
        smax = std::max(smax, scores[l]);
      }
      double z = std::exp(0.0 - smax);
      for (std::size_t l = 0; l < kc; ++l) {
        probs[l] = std::exp(scores[l] - smax);
        z += probs[l];
      }
      const int y = protected_labels[b];
      const double log_py = (y == 0 ? 0.0 : scores[y - 1]) - smax - std::log(z);
      loss -= log_py;
      for (std::size_t l = 0; l < kc; ++l) {
        const double g = probs[l] / z - (y == static_cast<int>(l + 1) ? 1.0 : 0.0);
        axpy(g, x, gcoef.row(l));
        gbias[l] += g;
      }
    }
    loss /= static_cast<double>(bs);
    if (!std::isfinite(loss)) throw NumericError("diverged; reduce step size");
    const double inv = 1.0 / static_cast<double>(bs);
    for (std::size_t l = 0; l < kc; ++l) {
      for (std::size_t j = 0; j < d; ++j)
        coef(l, j) -= opt.step * (gcoef(l, j) * inv + l2_reg * coef(l, j));
      bias[l] -= opt.step * gbias[l] * inv;
    }
  }
  require_finite(coef.data(), "softmax coefficients");
  return transpose(coef);  // d x (K-1), one direction per column
}

SensitiveSubspace learn_subspace_softmax(const Matrix& features,
                                         const std::vector<int>& protected_labels,
                                         double l2_reg, const SoftmaxFitConfig& opt,
                                         const Matrix* extra_directions) {
  Matrix dirs = fit_softmax_directions(features, protected_labels, l2_reg, opt);
  if (extra_directions != nullptr && !extra_directions->empty()) {
    if (extra_directions->rows() != dirs.rows())
      throw ConfigError("learn_subspace_softmax: extra direction dimension mismatch");
    Matrix joined(dirs.rows(), dirs.cols() + extra_directions->cols());
    for (std::size_t i = 0; i < dirs.rows(); ++i) {
      for (std::size_t j = 0; j < dirs.cols(); ++j) joined(i, j) = dirs(i, j);
      for (std::size_t j = 0; j < extra_directions->cols(); ++j)
        joined(i, dirs.cols() + j) = (*extra_directions)(i, j);
    }
    dirs = std::move(joined);
  }
  return SensitiveSubspace::from_directions(std::move(dirs));
}

SensitiveSubspace learn_subspace_factor(const std::vector<ComparableGroup>& groups,
                                        std::size_t k) {
  if (groups.empty()) throw ConfigError("learn_subspace_factor: no groups");
  const std::size_t d = groups.front().members.cols();
  std::size_t total_rows = 0;
  for (const auto& g : groups) {
    if (g.members.rows() < 2) throw ConfigError("learn_subspace_factor: group needs >= 2 members");
    if (g.members.cols() != d) throw ConfigError("learn_subspace_factor: group dimension mismatch");
    total_rows += g.members.rows();
  }
  if (k == 0 || k > d) throw ConfigError("learn_subspace_factor: bad k");
  if (k > total_rows) throw ConfigError("learn_subspace_factor: k exceeds total centered-row rank");

  // Stack the de-meaned groups; their row space estimates the sensitive span.
  Matrix stacked(total_rows, d);
  std::size_t at = 0;
  for (const auto& g : groups) {
    const std::size_t m = g.members.rows();
    Vector mean(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) axpy(1.0, g.members.row(i), mean);
    for (double& v : mean) v /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < d; ++j) stacked(at, j) = g.members(i, j) - mean[j];
      ++at;
    }
  }

  Svd svd = truncated_svd(stacked, k);
  if (svd.singular_values[0] <= 0.0 ||
      svd.singular_values[k - 1] <= 1e-10 * svd.singular_values[0])
    throw ConfigError("learn_subspace_factor: k exceeds total centered-row rank");
  return SensitiveSubspace::from_directions(std::move(svd.right_vectors));
}

}  // namespace sensr
