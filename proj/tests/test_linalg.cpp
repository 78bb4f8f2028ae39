// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "support.hpp"

#include "vmimo/linalg.hpp"

using namespace vmimo;
using vmimo::testing::random_psd;
using vmimo::testing::random_vector;

TEST_SUITE("linalg") {

TEST_CASE("hermitian_solve multiplies back") {
    std::mt19937_64 gen(11);
    for (int n : {1, 2, 4, 8, 16}) {
        HermitianMatrix a = random_psd(n, gen) + 0.1 * HermitianMatrix::Identity(n, n);
        const ComplexVector b = random_vector(n, gen);
        const ComplexVector x = hermitian_solve(a, b);
        CHECK((a * x - b).norm() <= 1e-10 * b.norm() * a.norm());
    }
}

TEST_CASE("hermitian_solve rejects indefinite and mismatched input") {
    HermitianMatrix a = HermitianMatrix::Identity(2, 2);
    a(1, 1) = -1.0;
    CHECK_THROWS_AS(hermitian_solve(a, ComplexVector(ComplexVector::Ones(2))), SingularCovariance);
    CHECK_THROWS_AS(hermitian_solve(HermitianMatrix(HermitianMatrix::Identity(2, 2)),
                                    ComplexVector(ComplexVector::Ones(3))),
                    std::invalid_argument);
}

TEST_CASE("mmse_sinr matches explicit inverse") {
    std::mt19937_64 gen(12);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 8;
        const HermitianMatrix k = random_psd(n, gen) + HermitianMatrix::Identity(n, n);
        const ComplexVector h = random_vector(n, gen);
        const double expected = vmimo::testing::sinr_by_inverse(h, k);
        CHECK(mmse_sinr(h, k) == doctest::Approx(expected).epsilon(1e-11));
    }
}

TEST_CASE("mmse_sinr in white noise is energy over noise") {
    ComplexVector h(3);
    h << std::complex<double>(1, 1), 2.0, std::complex<double>(0, -1);
    const HermitianMatrix k = 0.5 * HermitianMatrix::Identity(3, 3);
    CHECK(mmse_sinr(h, k) == doctest::Approx(h.squaredNorm() / 0.5));
}

TEST_CASE("quadratic_form is real and matches the sum") {
    std::mt19937_64 gen(13);
    const HermitianMatrix q = random_psd(5, gen);
    const ComplexVector w = random_vector(5, gen);
    std::complex<double> s = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            s += std::conj(w(i)) * q(i, j) * w(j);
    CHECK(quadratic_form(q, w) == doctest::Approx(s.real()).epsilon(1e-12));
    CHECK(std::abs(s.imag()) <= 1e-10 * std::abs(s.real()));
}

TEST_CASE("dominant_eigenvector agrees with SelfAdjointEigenSolver") {
    std::mt19937_64 gen(14);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + trial % 6;
        HermitianMatrix q = random_psd(n, gen);
        Eigen::SelfAdjointEigenSolver<HermitianMatrix> es(q);
        const auto ev = es.eigenvalues();
        // Skip near-degenerate tops where power iteration legitimately crawls.
        if (ev(n - 1) - ev(n - 2) < 0.05 * ev(n - 1))
            continue;
        const EigenPair<double> top = dominant_eigenvector(q);
        CHECK(top.value == doctest::Approx(ev(n - 1)).epsilon(1e-9));
        const std::complex<double> overlap = es.eigenvectors().col(n - 1).dot(top.vector);
        CHECK(std::abs(overlap) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("dominant_eigenvector edge cases") {
    const HermitianMatrix zero = HermitianMatrix::Zero(3, 3);
    CHECK(dominant_eigenvector(zero).value == 0.0);
    CHECK_THROWS_AS(dominant_eigenvector(HermitianMatrix(0, 0)), std::invalid_argument);

    // Equal top eigenvalues: any unit vector in the span is fine, but the
    // iteration must finish immediately.
    const HermitianMatrix id = HermitianMatrix::Identity(4, 4);
    const EigenPair<double> p = dominant_eigenvector(id);
    CHECK(p.value == doctest::Approx(1.0));
    CHECK(p.vector.norm() == doctest::Approx(1.0));

    HermitianMatrix slow = HermitianMatrix::Zero(2, 2);
    slow(0, 0) = 1.0;
    slow(1, 1) = 1.0 - 1e-9;
    CHECK_THROWS_AS(dominant_eigenvector(slow, 1e-15, 5), EigenNotConverged<double>);
}

TEST_CASE("float instantiation") {
    CVector<float> h(2);
    h << 1.0f, std::complex<float>(0.0f, 1.0f);
    const CMatrix<float> k = CMatrix<float>::Identity(2, 2);
    CHECK(mmse_sinr(h, k) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(is_hermitian(k));
}

TEST_CASE("erf wrapper") {
    CHECK(vmimo::erf(0.0) == 0.0);
    CHECK(vmimo::erf(1.0) == doctest::Approx(0.8427007929497149).epsilon(1e-15));
    CHECK(vmimo::erf(-2.0) == doctest::Approx(-0.9953222650189527).epsilon(1e-15));
}

}
