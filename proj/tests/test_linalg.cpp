#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "channelscope/linalg.hpp"

using namespace channelscope;

namespace {

Matrix random_hermitian(int d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
  return Matrix(0.5 * (a + a.adjoint()));
}

Matrix random_state(int d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
  Matrix rho = a * a.adjoint();
  rho /= rho.trace();
  return rho;
}

}  // namespace

TEST_CASE("pauli matrices multiply the usual way", "[linalg]") {
  REQUIRE((pauli_x() * pauli_y() - cxi * pauli_z()).cwiseAbs().maxCoeff() < 1e-15);
  REQUIRE((pauli(0) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  for (int j = 1; j <= 3; ++j) {
    REQUIRE((pauli(j) * pauli(j) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE(std::abs(pauli(j).trace()) < 1e-15);
  }
}

TEST_CASE("basis is Hermitian and orthonormal in every dimension", "[linalg]") {
  for (int d : {2, 3, 4, 5}) {
    const auto basis = gell_mann_basis(d);
    REQUIRE(basis.size() == static_cast<std::size_t>(d * d));
    REQUIRE((basis[0] - Matrix::Identity(d, d) / std::sqrt(static_cast<double>(d)))
                .cwiseAbs()
                .maxCoeff() < 1e-15);
    for (std::size_t a = 0; a < basis.size(); ++a) {
      REQUIRE(hermiticity_defect(basis[a]) < 1e-15);
      for (std::size_t b = 0; b < basis.size(); ++b) {
        const double want = a == b ? 1.0 : 0.0;
        REQUIRE(std::abs((basis[a] * basis[b]).trace().real() - want) < 1e-14);
        REQUIRE(std::abs((basis[a] * basis[b]).trace().imag()) < 1e-14);
      }
    }
  }
}

TEST_CASE("qubit basis is the scaled pauli triple", "[linalg]") {
  const auto basis = shared_basis(2);
  const double s = 1.0 / std::sqrt(2.0);
  REQUIRE((basis[1] - s * pauli_x()).cwiseAbs().maxCoeff() < 1e-15);
  REQUIRE((basis[2] - s * pauli_y()).cwiseAbs().maxCoeff() < 1e-15);
  REQUIRE((basis[3] - s * pauli_z()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("bloch coordinates invert state_from_bloch", "[linalg]") {
  for (int d : {2, 3, 4}) {
    const Matrix rho = random_state(d, 7 * d);
    const RealVector x = bloch_coordinates(rho);
    REQUIRE(std::abs(x(0) - 1.0) < 1e-12);  // unit trace pins the first coordinate
    REQUIRE((state_from_bloch(x, d) - rho).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("herm_eig symmetrizes small defects and refuses big ones", "[linalg]") {
  Matrix a = random_hermitian(3, 11);
  a(0, 1) += Complex(0.0, 1e-12);
  const EigResult eig = herm_eig(a);
  REQUIRE(eig.values.size() == 3);
  double recon = (eig.vectors * eig.values.asDiagonal() * eig.vectors.adjoint() - a)
                     .cwiseAbs()
                     .maxCoeff();
  REQUIRE(recon < 1e-11);

  a(0, 1) += Complex(0.0, 1e-3);
  REQUIRE_THROWS_MATCHES(herm_eig(a), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == errc::not_hermitian;
                         }));
}

TEST_CASE("trace norm agrees with eigenvalue sums", "[linalg]") {
  REQUIRE(trace_norm(pauli_z()) == Catch::Approx(2.0).margin(1e-13));
  const Matrix delta = random_state(3, 3) - random_state(3, 4);
  const EigResult eig = herm_eig(delta);
  REQUIRE(trace_norm(delta) == Catch::Approx(eig.values.cwiseAbs().sum()).margin(1e-12));
}

TEST_CASE("partial trace peels off kron factors", "[linalg]") {
  const Matrix a = random_state(2, 21);
  const Matrix b = random_state(3, 22);
  const Matrix ab = kron(a, b);
  REQUIRE((partial_trace(ab, 2, 3, Subsystem::B) - a).cwiseAbs().maxCoeff() < 1e-13);
  REQUIRE((partial_trace(ab, 2, 3, Subsystem::A) - b).cwiseAbs().maxCoeff() < 1e-13);
  REQUIRE_THROWS_AS(partial_trace(ab, 2, 4, Subsystem::A), Error);
}

TEST_CASE("real matrix exponential matches the diagonal case", "[linalg]") {
  RealMatrix d = RealMatrix::Zero(3, 3);
  d(0, 0) = -1.0;
  d(1, 1) = 0.5;
  d(2, 2) = 0.0;
  const RealMatrix e = real_exp(d);
  REQUIRE(e(0, 0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-12));
  REQUIRE(e(1, 1) == Catch::Approx(std::exp(0.5)).epsilon(1e-12));
  REQUIRE(e(2, 2) == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE(std::abs(e(0, 1)) < 1e-14);

  // non-normal case against the 2x2 closed form exp([[0, a], [0, 0]]) = I + that
  RealMatrix n = RealMatrix::Zero(2, 2);
  n(0, 1) = 0.7;
  const RealMatrix en = real_exp(n);
  REQUIRE(en(0, 1) == Catch::Approx(0.7).epsilon(1e-12));
  REQUIRE(en(0, 0) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("min_eigenvalue sees through tiny antihermitian noise", "[linalg]") {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -0.25;
  a(0, 1) = Complex(0.0, 1e-13);
  REQUIRE(min_eigenvalue(a) == Catch::Approx(-0.25).margin(1e-12));
}

TEST_CASE("square-shape guards raise non_square", "[linalg]") {
  REQUIRE_THROWS_MATCHES(require_square(Matrix::Zero(2, 3), "t"), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == errc::non_square;
                         }));
}
