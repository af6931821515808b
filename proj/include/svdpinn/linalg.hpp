#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace svdpinn {

using Vector = std::vector<double>;

/// Dense row-major matrix of finite doubles.
class Matrix {
 public:
  Matrix() = default;
  /// Zero-filled rows x cols matrix.
  Matrix(std::size_t rows, std::size_t cols);
  /// Takes ownership of row-major `entries`; throws DimensionError on a size
  /// mismatch and NumericError on non-finite input.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;
  double frobenius_norm() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

/// Largest absolute entry of a - b.
double max_abs_diff(const Matrix& a, const Matrix& b);
/// Largest absolute entry of QᵀQ - I.
double orthonormality_defect(const Matrix& q);

/// A = U · diag(sigma) · Vᵀ for a square A.
struct SvdFactors {
  Matrix u;
  Vector sigma;
  Matrix v;
};

struct SvdOptions {
  /// Pairs whose column cosine is below this are treated as orthogonal.
  double tolerance = 1e-14;
  int max_sweeps = 60;
};

/// Full SVD of a square matrix by cyclic one-sided Jacobi rotations.
///
/// Singular values come back sorted descending (stable on ties). Each column
/// of U has its largest-magnitude entry made nonnegative, with the paired V
/// column flipped to match, so the factors are a deterministic function of
/// the input. Columns of U attached to numerically null singular values are
/// completed to an orthonormal basis.
SvdFactors svd(const Matrix& a, const SvdOptions& options = {});

/// U · diag(sigma) · Vᵀ.
Matrix reconstruct(const SvdFactors& f);

}  // namespace svdpinn
