#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "swarm/errors.hpp"
#include "swarm/linalg.hpp"
#include "test_util.hpp"

using namespace swarm;
using namespace swarm::linalg;
using test_util::random_psd;

TEST_CASE("inf norm is the max absolute row sum") {
  CHECK(inf_norm(Matrix::from_rows({{1, -2}, {3, 0.5}})) == doctest::Approx(3.5));
  CHECK(inf_norm(Matrix::identity(5)) == doctest::Approx(1.0));
  Matrix j(4, 4, 0.25);  // J/n: rows sum to 1
  CHECK(inf_norm(j) == doctest::Approx(1.0));
}

TEST_CASE("spectral decomposition of a diagonal matrix is trivial") {
  const auto dec = spectral_decompose(Matrix::from_rows({{2, 0}, {0, 3}}));
  CHECK(dec.eigenvalues[0] == doctest::Approx(2.0));
  CHECK(dec.eigenvalues[1] == doctest::Approx(3.0));
  CHECK(std::abs(dec.eigenvectors(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(dec.eigenvectors(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("hand eigen-solve of the 2x2 graph Laplacian") {
  const auto dec = spectral_decompose(Matrix::from_rows({{1, -1}, {-1, 1}}));
  CHECK(dec.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(dec.eigenvalues[1] == doctest::Approx(2.0));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  // Kernel eigenvector is (1,1)/sqrt(2) up to sign.
  CHECK(std::abs(dec.eigenvectors(0, 0)) == doctest::Approx(inv_sqrt2));
  CHECK(dec.eigenvectors(0, 0) == doctest::Approx(dec.eigenvectors(1, 0)));
  CHECK(dec.eigenvectors(0, 1) == doctest::Approx(-dec.eigenvectors(1, 1)));
}

TEST_CASE("random symmetric reconstruction oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 8;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.uniform(-2, 2);
    a = symmetrized(a);
    const auto dec = spectral_decompose(a);

    Matrix recon(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k)
          s += dec.eigenvectors(i, k) * dec.eigenvalues[k] * dec.eigenvectors(j, k);
        recon(i, j) = s;
      }
    CHECK(inf_norm(recon - a) <= 1e-9 * std::max(1.0, inf_norm(a)));
    const Matrix vtv = dec.eigenvectors.transposed() * dec.eigenvectors;
    CHECK(inf_norm(vtv - Matrix::identity(n)) <= 1e-10);
    for (std::size_t k = 1; k < n; ++k)
      CHECK(dec.eigenvalues[k - 1] <= dec.eigenvalues[k]);
  }
}

TEST_CASE("non-finite input is rejected") {
  Matrix bad = Matrix::from_rows({{1.0, 0.0}, {0.0, std::nan("")}});
  CHECK_THROWS_AS(spectral_decompose(bad), InputError);
}

TEST_CASE("kernel projection of the averaging model") {
  // A = I - J/3 has kernel span{(1,1,1)} and Q = J/3.
  const std::size_t n = 3;
  Matrix a = Matrix::identity(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) -= 1.0 / 3.0;
  const auto pair = analyze_psd(a);
  CHECK(pair.kernel_dim == 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) CHECK(pair.Q(i, j) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("kernel projection of the 2x2 Laplacian") {
  const auto pair = analyze_psd(Matrix::from_rows({{1, -1}, {-1, 1}}));
  CHECK(pair.kernel_dim == 1);
  CHECK(pair.Q(0, 0) == doctest::Approx(0.5));
  CHECK(pair.Q(0, 1) == doctest::Approx(0.5));
  CHECK(pair.Q(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("invertible matrix gets the zero projection") {
  const auto pair = analyze_psd(Matrix::from_rows({{1, 0}, {0, 2}}));
  CHECK(pair.kernel_dim == 0);
  CHECK(max_abs(pair.Q) == 0.0);
  // S = A and S^{-1} A = I.
  CHECK(inf_norm(pair.S - Matrix::from_rows({{1, 0}, {0, 2}})) <= 1e-12);
  CHECK(inf_norm(pair.S_inv * pair.S - Matrix::identity(2)) <= 1e-12);
}

TEST_CASE("negative eigenvalue raises the PSD error") {
  CHECK_THROWS_AS(analyze_psd(Matrix::from_rows({{1, 0}, {0, -0.5}})), NotPsdError);
}

TEST_CASE("shifted inverse of the 2x2 Laplacian, by hand") {
  const auto pair = analyze_psd(Matrix::from_rows({{1, -1}, {-1, 1}}));
  CHECK(pair.S(0, 0) == doctest::Approx(1.5));
  CHECK(pair.S(0, 1) == doctest::Approx(-0.5));
  CHECK(pair.S_inv(0, 0) == doctest::Approx(0.75));
  CHECK(pair.S_inv(0, 1) == doctest::Approx(0.25));
  CHECK(pair.identity_residual <= 1e-12);
}

TEST_CASE("shifted-inverse identity over random PSD matrices") {
  Rng rng(23);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t kernel = rng.below(3);
    const Matrix a = random_psd(6, kernel, rng);
    const auto pair = analyze_psd(a);
    CHECK(pair.kernel_dim == kernel);
    worst = std::max(worst, pair.identity_residual);
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("projection and shift invariants on random PSD inputs") {
  Rng rng(37);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 3 + rng.below(14);  // up to 16
    const std::size_t kernel = rng.below(std::min<std::size_t>(4, n));
    const Matrix a = random_psd(n, kernel, rng);
    const auto dec = spectral_decompose(a);
    const auto pair = kernel_projection(a, dec, 1e-9);

    const double scale = std::max(1.0, inf_norm(a));
    CHECK(inf_norm(pair.Q - pair.Q.transposed()) <= 1e-12);
    CHECK(inf_norm(pair.Q * pair.Q - pair.Q) <= 1e-10);
    CHECK(inf_norm(a * pair.Q) <= 1e-10 * scale);
    CHECK(inf_norm(pair.Q * a) <= 1e-10 * scale);
    CHECK(inf_norm(pair.S_inv * a - (Matrix::identity(n) - pair.Q)) <= 1e-9);

    // Spectrum of S = spectrum of A with kernel zeros replaced by 1.
    const auto s_dec = spectral_decompose(pair.S);
    std::vector<double> expected = dec.eigenvalues;
    for (std::size_t i = 0; i < kernel; ++i) expected[i] = 1.0;
    std::sort(expected.begin(), expected.end());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(test_util::abs_err(s_dec.eigenvalues[i], expected[i]) <= 1e-9);
  }
}
