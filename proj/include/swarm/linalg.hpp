// Dense matrix type and the symmetric spectral tools the coupling analysis
// is built on: eigendecomposition, projection onto the kernel, and the
// shifted matrix S = A + Q with its inverse.
//
// Matrices here are small (n = agent count, at most a few hundred), so a
// cyclic Jacobi eigensolver is used: it is simple, backward-stable, and
// produces orthonormal eigenvectors to machine precision.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace swarm::linalg {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> flat() { return {data_.data(), data_.size()}; }
  std::span<const double> flat() const { return {data_.data(), data_.size()}; }

  Matrix transposed() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double c);

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double c) { return a *= c; }
  friend Matrix operator*(double c, Matrix a) { return a *= c; }
  friend Matrix operator*(const Matrix& a, const Matrix& b);  // matrix product

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Max absolute row sum (the operator infinity norm); also used for
// rectangular residual blocks.
double inf_norm(const Matrix& m);

// Largest |entry|.
double max_abs(const Matrix& m);

// (M + M^T)/2. Config files carry rounded entries, so inputs are
// symmetrized before any spectral work.
Matrix symmetrized(const Matrix& m);

// Small-vector helpers shared across modules.
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

struct SpectralDecomposition {
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // orthonormal columns, same order
};

struct ProjectionPair {
  Matrix Q;             // orthogonal projection onto ker(A)
  Matrix kernel_basis;  // n x kernel_dim orthonormal columns
  std::size_t kernel_dim = 0;
  Matrix S;      // A + Q
  Matrix S_inv;  // inverse of S (symmetric positive-definite)
  double identity_residual = 0.0;  // ||S^{-1} A - (I - Q)||_inf
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. The input is
// symmetrized first. Throws InputError on non-finite entries.
SpectralDecomposition spectral_decompose(const Matrix& a);

// Classifies eigenvalues with |lambda| <= zero_tol * max(1, lambda_max) as
// kernel and builds Q = K K^T. Throws NotPsdError if an eigenvalue lies
// below -zero_tol * max(1, lambda_max). Q and S fields are filled; call
// shifted_inverse to complete S_inv.
ProjectionPair kernel_projection(const Matrix& a, const SpectralDecomposition& dec,
                                 double zero_tol);

// Fills S = A + Q and S_inv (via the shared eigenbasis: kernel directions
// get eigenvalue 1) and records the identity residual ||S^{-1}A - (I-Q)||.
// Throws DecompositionError when the condition estimate exceeds 1e12.
void shifted_inverse(const Matrix& a, const SpectralDecomposition& dec,
                     ProjectionPair& pair);

// Convenience: decompose, project, invert, in one call.
ProjectionPair analyze_psd(const Matrix& a, double zero_tol = 1e-9);

}  // namespace swarm::linalg
