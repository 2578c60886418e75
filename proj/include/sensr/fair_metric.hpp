#ifndef SENSR_FAIR_METRIC_HPP
#define SENSR_FAIR_METRIC_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "sensr/linalg.hpp"

namespace sensr {

// Span of directions a fair model should ignore: the raw directions plus an
// orthonormal basis of their span (rank-deficient directions collapse).
struct SensitiveSubspace {
  Matrix directions;  // d x k
  Matrix basis;       // d x r, orthonormal, r = numerical rank

  std::size_t dim() const { return basis.rows(); }
  std::size_t rank() const { return basis.cols(); }

  // Orthonormalizes and validates basisᵀbasis = I and span containment.
  static SensitiveSubspace from_directions(Matrix directions);
};

// PSD quadratic form x ↦ xᵀ Σ x used as the squared fair distance. The main
// instance is the orthogonal-complement projector I - QQᵀ.
struct MahalanobisMetric {
  Matrix sigma;  // d x d

  std::size_t dim() const { return sigma.rows(); }

  // Validates symmetry (1e-12) and PSD (min eigenvalue >= -1e-10).
  static MahalanobisMetric from_sigma(Matrix sigma);
};

// sigma = I - QQᵀ. Requires 1 <= rank < d.
MahalanobisMetric projection_complement(const SensitiveSubspace& subspace);

// (x1-x2)ᵀ Σ (x1-x2); clamped at 0 against roundoff.
double distance_sq(const MahalanobisMetric& metric, std::span<const double> x1,
                   std::span<const double> x2);

// d_x² when labels agree, +inf sentinel otherwise.
double transport_cost(const MahalanobisMetric& metric, std::span<const double> x1, int y1,
                      std::span<const double> x2, int y2);

// Metric bundle the auditor and trainer consume: the projector (or any PSD
// sigma) plus the subspace that parameterizes the attack's first phase. The
// subspace may be empty (rank 0), e.g. for the plain Euclidean cost.
struct FairMetric {
  SensitiveSubspace subspace;  // may have rank 0
  MahalanobisMetric sigma;

  std::size_t dim() const { return sigma.dim(); }

  static FairMetric from_subspace(SensitiveSubspace subspace);
  static FairMetric euclidean(std::size_t d);
};

struct SoftmaxFitConfig {
  double step = 0.1;
  std::size_t epochs = 2000;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
};

// Fits a multinomial logistic regression of the protected attribute on the
// features (reference-class parametrization, squared-l2 penalty on the
// coefficients, bias unpenalized) and returns the span of the coefficient
// vectors. `extra_directions` columns (e.g. protected-coordinate axes) are
// appended before orthonormalization.
SensitiveSubspace learn_subspace_softmax(const Matrix& features,
                                         const std::vector<int>& protected_labels,
                                         double l2_reg, const SoftmaxFitConfig& opt,
                                         const Matrix* extra_directions = nullptr);

// Coefficient matrix (d x (K-1)) of the fit above, exposed for callers that
// need the raw hyperplanes (w_g in the softmax-subspace pipeline).
Matrix fit_softmax_directions(const Matrix& features, const std::vector<int>& protected_labels,
                              double l2_reg, const SoftmaxFitConfig& opt);

// Rows of one comparable group (at least 2).
struct ComparableGroup {
  Matrix members;
};

// Centers each group, stacks the centered rows, and takes the top-k right
// singular vectors as the sensitive directions.
SensitiveSubspace learn_subspace_factor(const std::vector<ComparableGroup>& groups,
                                        std::size_t k);

}  // namespace sensr

#endif
