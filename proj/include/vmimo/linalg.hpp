// SPDX-License-Identifier: Apache-2.0
//
// Small dense complex-Hermitian kernels shared by the rate engine, the
// precoder and the bounds. Matrices here never exceed a few dozen rows.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace vmimo {

template <typename Scalar>
using CVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using CMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

using ComplexVector = CVector<double>;
using HermitianMatrix = CMatrix<double>;

class SingularCovariance : public std::runtime_error {
public:
    SingularCovariance() : std::runtime_error("singular covariance") {}
};

// Thrown by dominant_eigenvector when the iteration cap is reached. The best
// iterate seen so far is carried along so callers may still use it.
template <typename Scalar>
class EigenNotConverged : public std::runtime_error {
public:
    EigenNotConverged(Scalar value, CVector<Scalar> vector)
        : std::runtime_error("power iteration did not converge"),
          eigenvalue(value), eigenvector(std::move(vector)) {}

    Scalar eigenvalue;
    CVector<Scalar> eigenvector;
};

template <typename Scalar>
bool is_hermitian(const CMatrix<Scalar> &a, Scalar rel_tol = Scalar(1e-12)) {
    if (a.rows() != a.cols())
        return false;
    const Scalar scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<Scalar>::min());
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Solves A x = b for Hermitian positive-definite A by Cholesky.
/// Throws SingularCovariance when the factorization hits a non-positive pivot.
template <typename Scalar>
CVector<Scalar> hermitian_solve(const CMatrix<Scalar> &a, const CVector<Scalar> &b) {
    if (a.rows() != a.cols() || a.rows() != b.size())
        throw std::invalid_argument("hermitian_solve: dimension mismatch");
    Eigen::LLT<CMatrix<Scalar>> llt(a);
    if (llt.info() != Eigen::Success)
        throw SingularCovariance();
    return llt.solve(b);
}

/// h^H K^{-1} h, the post-MMSE SINR of signature h in coloured noise K.
template <typename Scalar>
Scalar mmse_sinr(const CVector<Scalar> &h, const CMatrix<Scalar> &k) {
    if (k.rows() != k.cols() || k.rows() != h.size())
        throw std::invalid_argument("mmse_sinr: dimension mismatch");
    Eigen::LLT<CMatrix<Scalar>> llt(k);
    if (llt.info() != Eigen::Success)
        throw SingularCovariance();
    // ||L^{-1} h||^2 is real by construction, no imaginary residue to discard.
    return llt.matrixL().solve(h).squaredNorm();
}

template <typename Scalar>
Scalar quadratic_form(const CMatrix<Scalar> &q, const CVector<Scalar> &w) {
    return std::real(w.dot(q * w));
}

template <typename Scalar>
struct EigenPair {
    Scalar value;
    CVector<Scalar> vector;
};

/// Top eigenpair of a Hermitian positive-semidefinite matrix by power
/// iteration from a fixed pseudo-random complex start. Stops once
/// ||Q v - mu v|| <= tol |mu|.
template <typename Scalar>
EigenPair<Scalar> dominant_eigenvector(const CMatrix<Scalar> &q, Scalar tol = Scalar(1e-10),
                                       int max_iterations = 10000) {
    const Eigen::Index n = q.rows();
    if (n == 0 || q.cols() != n)
        throw std::invalid_argument("dominant_eigenvector: matrix must be square and non-empty");

    std::mt19937_64 gen(0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(n));
    std::normal_distribution<Scalar> normal;
    CVector<Scalar> v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = {normal(gen), normal(gen)};
    v.normalize();

    if (q.cwiseAbs().maxCoeff() == Scalar(0))
        return {Scalar(0), v};

    Scalar best_residual = std::numeric_limits<Scalar>::infinity();
    EigenPair<Scalar> best{Scalar(0), v};
    for (int it = 0; it < max_iterations; ++it) {
        CVector<Scalar> qv = q * v;
        const Scalar mu = std::real(v.dot(qv));
        const Scalar residual = (qv - mu * v).norm();
        if (residual < best_residual) {
            best_residual = residual;
            best = {mu, v};
        }
        if (residual <= tol * std::abs(mu))
            return {mu, v};
        const Scalar norm = qv.norm();
        if (norm == Scalar(0))
            return {Scalar(0), v};
        v = qv / norm;
    }
    throw EigenNotConverged<Scalar>(best.value, best.vector);
}

/// Error function. Wraps the C library erf, which is accurate to a few ulp.
inline double erf(double x) { return std::erf(x); }

} // namespace vmimo
