#include "sensr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sensr/errors.hpp"
#include "sensr/parallel.hpp"

namespace sensr {

void require_finite(std::span<const double> values, const std::string& what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError(what + ": non-finite entry");
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows_ * cols_) throw ConfigError("matrix: entry count does not match shape");
  require_finite(data_, "matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) throw ConfigError("matrix: empty input");
  const std::size_t c = rows.front().size();
  Matrix m(rows.size(), c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != c) throw ConfigError("matrix: ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  require_finite(m.data(), "matrix");
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

namespace {

inline void multiply_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const std::size_t n = a.cols(), p = b.cols();
  double* out = c.row(i).data();
  for (std::size_t k = 0; k < n; ++k) {
    const double aik = a(i, k);
    const double* brow = b.row(k).data();
    for (std::size_t j = 0; j < p; ++j) out[j] += aik * brow[j];
  }
}

}  // namespace

Matrix multiply_serial(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ConfigError("multiply: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) multiply_row(a, b, c, i);
  return c;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ConfigError("multiply: inner dimensions differ");
  const double flops = static_cast<double>(a.rows()) * a.cols() * b.cols();
  if (flops < 1e6 || effective_threads() == 1) return multiply_serial(a, b);
  Matrix c(a.rows(), b.cols());
  parallel_for(a.rows(), [&](std::size_t i) { multiply_row(a, b, c, i); });
  return c;
}

void matvec_into(const Matrix& a, std::span<const double> x, std::span<double> out) {
  if (a.cols() != x.size() || a.rows() != out.size())
    throw ConfigError("matvec: dimension mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  Vector y(a.rows(), 0.0);
  matvec_into(a, x, y);
  return y;
}

void matvec_transpose_into(const Matrix& a, std::span<const double> x, std::span<double> out) {
  if (a.rows() != x.size() || a.cols() != out.size())
    throw ConfigError("matvec_transpose: dimension mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) axpy(x[i], a.row(i), out);
}

Vector matvec_transpose(const Matrix& a, std::span<const double> x) {
  Vector y(a.cols(), 0.0);
  matvec_transpose_into(a, x, y);
  return y;
}

double frobenius_norm(const Matrix& m) { return norm2(m.data()); }

double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double e : m.data()) v = std::max(v, std::abs(e));
  return v;
}

Matrix qr_orthonormal(const Matrix& m) {
  if (m.empty()) throw ConfigError("qr_orthonormal: empty input");
  if (m.rows() < m.cols()) throw ConfigError("qr_orthonormal: needs rows >= cols");
  const std::size_t n = m.rows(), k = m.cols();
  Matrix r = m;

  const double rank_tol = 1e-10;
  std::vector<Vector> reflectors;
  Vector diag;

  std::size_t rank = 0;
  for (std::size_t t = 0; t < k; ++t) {
    // Column pivot: largest remaining column norm below row t.
    std::size_t best = t;
    double best_norm = -1.0;
    for (std::size_t j = t; j < k; ++j) {
      double s = 0.0;
      for (std::size_t i = t; i < n; ++i) s += r(i, j) * r(i, j);
      if (s > best_norm) {
        best_norm = s;
        best = j;
      }
    }
    const double col_norm = std::sqrt(std::max(best_norm, 0.0));
    if (t == 0 && col_norm == 0.0) return Matrix(n, 0);  // zero matrix spans {0}
    if (t > 0 && col_norm < rank_tol * std::abs(diag[0])) break;
    if (best != t)
      for (std::size_t i = 0; i < n; ++i) std::swap(r(i, t), r(i, best));

    // Householder reflector for column t.
    Vector v(n - t, 0.0);
    for (std::size_t i = t; i < n; ++i) v[i - t] = r(i, t);
    const double alpha = (v[0] >= 0.0 ? -col_norm : col_norm);
    v[0] -= alpha;
    const double vnorm_sq = dot(v, v);
    if (vnorm_sq > 0.0) {
      const double beta = 2.0 / vnorm_sq;
      for (std::size_t j = t; j < k; ++j) {
        double proj = 0.0;
        for (std::size_t i = t; i < n; ++i) proj += v[i - t] * r(i, j);
        proj *= beta;
        for (std::size_t i = t; i < n; ++i) r(i, j) -= proj * v[i - t];
      }
    }
    r(t, t) = alpha;
    reflectors.push_back(std::move(v));
    diag.push_back(alpha);
    ++rank;
  }

  // Thin Q: apply reflectors in reverse order to the first `rank` identity columns.
  Matrix q(n, rank);
  for (std::size_t j = 0; j < rank; ++j) q(j, j) = 1.0;
  for (std::size_t ti = rank; ti-- > 0;) {
    const Vector& v = reflectors[ti];
    const double vnorm_sq = dot(v, v);
    if (vnorm_sq == 0.0) continue;
    const double beta = 2.0 / vnorm_sq;
    for (std::size_t j = 0; j < rank; ++j) {
      double proj = 0.0;
      for (std::size_t i = ti; i < n; ++i) proj += v[i - ti] * q(i, j);
      proj *= beta;
      for (std::size_t i = ti; i < n; ++i) q(i, j) -= proj * v[i - ti];
    }
  }
  // Fix signs so diag(R) >= 0; keeps already-orthonormal inputs unchanged.
  for (std::size_t j = 0; j < rank; ++j) {
    if (diag[j] < 0.0)
      for (std::size_t i = 0; i < n; ++i) q(i, j) = -q(i, j);
  }
  return q;
}

Svd truncated_svd(const Matrix& m, std::size_t k) {
  if (m.empty()) throw ConfigError("truncated_svd: empty input");
  if (k == 0) throw ConfigError("truncated_svd: k must be positive");
  if (k > std::min(m.rows(), m.cols())) throw ConfigError("truncated_svd: k exceeds min(rows, cols)");

  const std::size_t n = m.rows(), d = m.cols();
  Matrix w = m;                       // columns get rotated into u_j * sigma_j
  Matrix v = Matrix::identity(d);     // accumulates the right rotations

  double scale_sq = 0.0;  // largest initial column squared norm
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w(i, j) * w(i, j);
    scale_sq = std::max(scale_sq, s);
  }

  const int max_sweeps = 64;
  const double tol = 1e-14;
  const double negligible = 1e-28 * scale_sq;  // pairs of effectively-zero columns
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          app += wp * wp;
          aqq += wq * wq;
          apq += wp * wq;
        }
        if (std::abs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0 ||
            std::sqrt(app * aqq) <= negligible)
          continue;
        converged = false;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : 1.0 / (tau - std::sqrt(1.0 + tau * tau)));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < d; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
  }
  if (!converged) throw NumericError("svd did not converge");

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  Vector norms(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w(i, j) * w(i, j);
    norms[j] = std::sqrt(s);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  Svd out;
  out.singular_values.resize(k);
  out.right_vectors = Matrix(d, k);
  for (std::size_t j = 0; j < k; ++j) {
    out.singular_values[j] = norms[order[j]];
    for (std::size_t i = 0; i < d; ++i) out.right_vectors(i, j) = v(i, order[j]);
  }
  return out;
}

std::pair<Vector, Matrix> symmetric_eigen(const Matrix& s) {
  if (s.rows() != s.cols()) throw ConfigError("symmetric_eigen: matrix not square");
  const std::size_t n = s.rows();
  Matrix a = s;
  Matrix v = Matrix::identity(n);
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-14 * (1.0 + frobenius_norm(a))) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (tau >= 0.0 ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : 1.0 / (tau - std::sqrt(1.0 + tau * tau)));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - sn * aiq;
          a(i, q) = sn * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - sn * aqi;
          a(q, i) = sn * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - sn * viq;
          v(i, q) = sn * vip + c * viq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  Vector evals(n);
  Matrix evecs(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    evals[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) evecs(i, j) = v(i, order[j]);
  }
  return {std::move(evals), std::move(evecs)};
}

}  // namespace sensr
