#include "swarm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "swarm/errors.hpp"

namespace swarm::linalg {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw InputError("ragged initializer for Matrix");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double c) {
  for (auto& v : data_) v *= c;
  return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

double inf_norm(const Matrix& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    for (double v : m.row(i)) sum += std::abs(v);
    best = std::max(best, sum);
  }
  return best;
}

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double v : m.flat()) best = std::max(best, std::abs(v));
  return best;
}

Matrix symmetrized(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = 0.5 * (m(i, j) + m(j, i));
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

// Sum of squares of the strict upper triangle; convergence measure for the
// Jacobi sweeps.
double off_diagonal_sq(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
  return s;
}

}  // namespace

SpectralDecomposition spectral_decompose(const Matrix& input) {
  if (input.rows() != input.cols()) throw InputError("spectral_decompose: matrix not square");
  if (!input.all_finite()) throw InputError("spectral_decompose: non-finite entries");
  const std::size_t n = input.rows();

  Matrix a = symmetrized(input);
  Matrix v = Matrix::identity(n);

  double scale = 0.0;
  for (double x : a.flat()) scale += x * x;
  scale = std::sqrt(scale);
  const double threshold = (scale == 0.0) ? 0.0 : 1e-15 * scale;

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (std::sqrt(off_diagonal_sq(a)) <= threshold) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= threshold / static_cast<double>(n)) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&a](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  SpectralDecomposition dec;
  dec.eigenvalues.resize(n);
  dec.eigenvectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    dec.eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) dec.eigenvectors(i, j) = v(i, order[j]);
  }
  return dec;
}

ProjectionPair kernel_projection(const Matrix& a, const SpectralDecomposition& dec,
                                 double zero_tol) {
  if (zero_tol <= 0.0) throw InputError("kernel_projection: zero_tol must be positive");
  const std::size_t n = dec.eigenvalues.size();
  const double lambda_max = n == 0 ? 0.0 : dec.eigenvalues.back();
  const double cutoff = zero_tol * std::max(1.0, lambda_max);

  std::size_t kernel_dim = 0;
  for (double lambda : dec.eigenvalues) {
    if (lambda < -cutoff) {
      throw NotPsdError("coupling matrix is not positive semidefinite: eigenvalue " +
                        std::to_string(lambda));
    }
    if (std::abs(lambda) <= cutoff) ++kernel_dim;
  }

  ProjectionPair pair;
  pair.kernel_dim = kernel_dim;
  pair.kernel_basis = Matrix(n, kernel_dim);
  // Ascending order puts the kernel block first.
  for (std::size_t j = 0; j < kernel_dim; ++j)
    for (std::size_t i = 0; i < n; ++i)
      pair.kernel_basis(i, j) = dec.eigenvectors(i, j);

  pair.Q = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < kernel_dim; ++k)
        s += pair.kernel_basis(i, k) * pair.kernel_basis(j, k);
      pair.Q(i, j) = s;
    }
  // Exact symmetry regardless of rounding in the products above.
  pair.Q = symmetrized(pair.Q);

  shifted_inverse(a, dec, pair);
  return pair;
}

void shifted_inverse(const Matrix& a, const SpectralDecomposition& dec,
                     ProjectionPair& pair) {
  const std::size_t n = dec.eigenvalues.size();
  pair.S = symmetrized(a) + pair.Q;

  // S shares A's eigenbasis; kernel directions become eigenvalue 1.
  std::vector<double> shifted(n);
  for (std::size_t j = 0; j < n; ++j)
    shifted[j] = (j < pair.kernel_dim) ? 1.0 : dec.eigenvalues[j];

  double smin = 1.0, smax = 1.0;
  if (n > 0) {
    smin = *std::min_element(shifted.begin(), shifted.end());
    smax = *std::max_element(shifted.begin(), shifted.end());
  }
  if (smin <= 0.0 || smax / smin > 1e12) {
    throw DecompositionError("shifted matrix S is numerically singular (condition estimate " +
                             std::to_string(smin <= 0.0 ? -1.0 : smax / smin) + ")");
  }

  pair.S_inv = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += dec.eigenvectors(i, k) * dec.eigenvectors(j, k) / shifted[k];
      pair.S_inv(i, j) = s;
    }
  pair.S_inv = symmetrized(pair.S_inv);

  const Matrix residual = pair.S_inv * symmetrized(a) - (Matrix::identity(n) - pair.Q);
  pair.identity_residual = inf_norm(residual);
}

ProjectionPair analyze_psd(const Matrix& a, double zero_tol) {
  return kernel_projection(a, spectral_decompose(a), zero_tol);
}

}  // namespace swarm::linalg
