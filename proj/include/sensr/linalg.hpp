#ifndef SENSR_LINALG_HPP
#define SENSR_LINALG_HPP

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sensr {

using Vector = std::vector<double>;

// Throws ConfigError naming `what` if any entry is NaN/Inf.
void require_finite(std::span<const double> values, const std::string& what);

// Dense row-major matrix of doubles. Construction from data validates
// finiteness; the default/zero constructors are trivially finite.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Vector helpers.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

Matrix transpose(const Matrix& m);
// OpenMP over output rows for large products; entries are computed
// independently so the result is bit-identical to multiply_serial.
Matrix multiply(const Matrix& a, const Matrix& b);
// Serial reference used by tests and the benchmark.
Matrix multiply_serial(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, std::span<const double> x);
// returns aᵀx
Vector matvec_transpose(const Matrix& a, std::span<const double> x);
// allocation-free variants for hot loops
void matvec_into(const Matrix& a, std::span<const double> x, std::span<double> out);
void matvec_transpose_into(const Matrix& a, std::span<const double> x, std::span<double> out);
double frobenius_norm(const Matrix& m);
double max_abs(const Matrix& m);

// Orthonormal basis of the column space via Householder QR with column
// pivoting. Rank-deficient columns are dropped at the relative threshold
// |R_tt| < 1e-10 |R_00|; Q's column signs are fixed so diag(R) >= 0.
Matrix qr_orthonormal(const Matrix& m);

struct Svd {
  Vector singular_values;  // nonincreasing, length k
  Matrix right_vectors;    // d x k, orthonormal columns
};

// Top-k singular values / right singular vectors by one-sided Jacobi
// (Hestenes) orthogonalization of the columns. Throws NumericError
// "svd did not converge" past the sweep cap.
Svd truncated_svd(const Matrix& m, std::size_t k);

// Eigendecomposition of a symmetric matrix by cyclic two-sided Jacobi.
// Returns (eigenvalues desc, eigenvectors as columns). Used for PSD checks.
std::pair<Vector, Matrix> symmetric_eigen(const Matrix& s);

}  // namespace sensr

#endif
