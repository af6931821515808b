#include "svdpinn/linalg.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <string>

#include "svdpinn/errors.hpp"

namespace svdpinn {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                         " given " + std::to_string(data_.size()) + " entries");
  }
  for (double x : data_) {
    if (!std::isfinite(x)) throw NumericError("matrix constructed with non-finite entry");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matrix product " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("matrix difference");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DimensionError("matrix-vector product");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < ai.size(); ++j) s += ai[j] * x[j];
    y[i] = s;
  }
  return y;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

double orthonormality_defect(const Matrix& q) {
  return max_abs_diff(q.transposed() * q, Matrix::identity(q.cols()));
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Rows of `basis` flagged in `filled` are orthonormal; fill the rest with an
// orthonormal completion drawn from the standard basis.
void complete_basis(Matrix& basis, std::vector<bool>& filled) {
  const std::size_t n = basis.cols();
  for (std::size_t slot = 0; slot < basis.rows(); ++slot) {
    if (filled[slot]) continue;
    Vector best;
    double best_norm = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
      Vector w(n, 0.0);
      w[k] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < basis.rows(); ++j) {
          if (!filled[j]) continue;
          const double proj = dot(basis.row(j), w);
          auto bj = basis.row(j);
          for (std::size_t i = 0; i < n; ++i) w[i] -= proj * bj[i];
        }
      }
      const double nw = std::sqrt(dot(w, w));
      if (nw > best_norm) {
        best_norm = nw;
        best = std::move(w);
      }
    }
    auto row = basis.row(slot);
    for (std::size_t i = 0; i < n; ++i) row[i] = best[i] / best_norm;
    filled[slot] = true;
  }
}

}  // namespace

SvdFactors svd(const Matrix& a, const SvdOptions& options) {
  if (!a.square()) {
    throw DimensionError("svd expects a square matrix, got " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  for (double x : a.data()) {
    if (!std::isfinite(x)) throw NumericError("svd input has non-finite entry");
  }
  const std::size_t m = a.rows();
  const double norm_a = a.frobenius_norm();

  // Columns of A and V are kept as rows so every rotation touches contiguous
  // memory.
  Matrix cols = a.transposed();
  Matrix vcols = Matrix::identity(m);

  // The computed column dot products carry O(m·eps) relative error, so the
  // cosine threshold cannot sit below that floor.
  const double tol = std::max(options.tolerance, static_cast<double>(m) * DBL_EPSILON);
  const double null_sq = (DBL_EPSILON * norm_a) * (DBL_EPSILON * norm_a);

  bool converged = (norm_a == 0.0);
  double worst_cosine = 0.0;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    worst_cosine = 0.0;
    for (std::size_t p = 0; p + 1 < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        auto bp = cols.row(p);
        auto bq = cols.row(q);
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += bp[i] * bp[i];
          beta += bq[i] * bq[i];
          gamma += bp[i] * bq[i];
        }
        if (gamma == 0.0 || std::min(alpha, beta) <= null_sq) continue;
        const double cosine = std::abs(gamma) / std::sqrt(alpha * beta);
        worst_cosine = std::max(worst_cosine, cosine);
        if (cosine <= tol) continue;

        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double x = bp[i], y = bq[i];
          bp[i] = c * x - s * y;
          bq[i] = s * x + c * y;
        }
        auto vp = vcols.row(p);
        auto vq = vcols.row(q);
        for (std::size_t i = 0; i < m; ++i) {
          const double x = vp[i], y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw ConvergenceError("one-sided Jacobi SVD did not converge in " +
                               std::to_string(options.max_sweeps) +
                               " sweeps; worst column cosine " + std::to_string(worst_cosine),
                           worst_cosine);
  }

  Vector sigma(m);
  for (std::size_t p = 0; p < m; ++p) sigma[p] = std::sqrt(dot(cols.row(p), cols.row(p)));

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

  const double null_sigma = DBL_EPSILON * norm_a;
  Matrix ucols(m, m);
  Matrix vsorted(m, m);
  Vector sorted_sigma(m);
  std::vector<bool> filled(m, false);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t p = order[k];
    sorted_sigma[k] = sigma[p];
    std::ranges::copy(vcols.row(p), vsorted.row(k).begin());
    if (sigma[p] > null_sigma) {
      auto src = cols.row(p);
      auto dst = ucols.row(k);
      for (std::size_t i = 0; i < m; ++i) dst[i] = src[i] / sigma[p];
      filled[k] = true;
    }
  }
  complete_basis(ucols, filled);

  for (std::size_t k = 0; k < m; ++k) {
    auto uk = ucols.row(k);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (std::abs(uk[i]) > std::abs(uk[arg])) arg = i;
    }
    if (uk[arg] < 0.0) {
      for (double& x : uk) x = -x;
      for (double& x : vsorted.row(k)) x = -x;
    }
  }

  return {ucols.transposed(), std::move(sorted_sigma), vsorted.transposed()};
}

Matrix reconstruct(const SvdFactors& f) {
  const std::size_t m = f.sigma.size();
  if (f.u.rows() != f.u.cols() || f.v.rows() != f.v.cols() || f.u.cols() != m ||
      f.v.cols() != m || f.u.rows() != f.v.rows()) {
    throw DimensionError("reconstruct: inconsistent factor shapes");
  }
  Matrix us = f.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t k = 0; k < m; ++k) us(i, k) *= f.sigma[k];
  return us * f.v.transposed();
}

}  // namespace svdpinn
