#pragma once

// Small dense real matrices. Dimensions in this library are tiny (p, l rarely
// above 10), so everything is row-major std::vector storage with O(n^3)
// textbook kernels: Cholesky for inverse/logdet, cyclic Jacobi for eigen.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace compdes {

using Vector = std::vector<double>;

struct LinalgTolerances {
  // |a_kl - a_lk| <= symmetry * max(1, |a_kl|)
  double symmetry = 1e-12;
  // Cholesky pivot must exceed pivot * max diagonal entry.
  double pivot = 1e-12;
  // Jacobi stops when the off-diagonal Frobenius norm drops below this
  // fraction of the full norm.
  double jacobi_offdiag = 1e-16;
  int jacobi_max_sweeps = 100;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, Vector row_major);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix outer(std::span<const double> a, std::span<const double> b);
  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }
  bool is_square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  Matrix transpose() const;
  double trace() const;
  double max_abs() const;
  bool all_finite() const;
  bool is_symmetric(double tol = LinalgTolerances{}.symmetry) const;
  // (A + A^T) / 2
  Matrix symmetrized() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend Vector operator*(const Matrix& a, std::span<const double> x);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

// max_kl |a_kl - b_kl|; ShapeMismatch on differing shapes.
double max_abs_diff(const Matrix& a, const Matrix& b);

// A symmetric positive definite matrix together with its lower Cholesky
// factor. Positive definiteness means the factorization succeeded with every
// pivot above LinalgTolerances::pivot times the largest diagonal entry.
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix a, const LinalgTolerances& tol = {});

  std::size_t dim() const { return a_.rows(); }
  const Matrix& matrix() const { return a_; }
  const Matrix& cholesky_factor() const { return lower_; }

  Vector solve(std::span<const double> b) const;
  Matrix solve(const Matrix& b) const;

 private:
  Matrix a_;
  Matrix lower_;
};

// Returns true and writes the factor when `a` (assumed symmetric) passes the
// pivot test.
bool try_cholesky(const Matrix& a, Matrix& lower, const LinalgTolerances& tol = {});

// Inverse as a plain matrix (exactly symmetric), without refactorizing.
Matrix inverse_matrix(const SpdMatrix& a);

SpdMatrix spd_inverse(const SpdMatrix& a);
SpdMatrix spd_sqrt_inverse(const SpdMatrix& a);
double logdet(const SpdMatrix& a);

// tr(a * b) without forming the product.
double trace_product(const Matrix& a, const Matrix& b);

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // column k belongs to values[k]
};

SymmetricEigen jacobi_eigen(const Matrix& a, const LinalgTolerances& tol = {});
double min_eigenvalue(const Matrix& a, const LinalgTolerances& tol = {});

// F with F F^T = a for symmetric PSD a; negative round-off eigenvalues are
// clamped to zero.
Matrix psd_factor(const Matrix& a, const LinalgTolerances& tol = {});

}  // namespace compdes
