#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <type_traits>
#include <vector>

// Dense kernels shared by every integrator. Matrices are Eigen's default
// column-major storage; every routine is generic over the scalar type and is
// used with double and std::complex<double>. Transposes are always conjugate
// transposes, which coincide with plain transposes for real data.

namespace rkbug {

using Index = Eigen::Index;
using Complex = std::complex<double>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using RealVector = Eigen::VectorXd;

template <typename Scalar>
inline constexpr bool is_complex_v = false;
template <typename T>
inline constexpr bool is_complex_v<std::complex<T>> = true;

/// Relative pivot threshold used by ortho() when none is given.
inline constexpr double kDefaultDropTol = 1e-12;

template <typename Scalar>
struct SvdResult
{
    Matrix<Scalar> left;   // columns orthonormal
    RealVector values;     // nonincreasing, nonnegative
    Matrix<Scalar> right;  // columns orthonormal
};

template <typename Derived>
double frobenius_norm(const Eigen::MatrixBase<Derived>& m)
{
    return m.norm();
}

/// Frobenius inner product <A, B> = trace(A^H B).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar frobenius_inner(const Eigen::MatrixBase<DerivedA>& a,
                                          const Eigen::MatrixBase<DerivedB>& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("frobenius_inner: shape mismatch");
    return a.conjugate().cwiseProduct(b).sum();
}

/// ||Q^H Q - I||_max, the orthonormality defect of the columns of q.
template <typename Derived>
double orthonormality_defect(const Eigen::MatrixBase<Derived>& q)
{
    using Scalar = typename Derived::Scalar;
    if (q.cols() == 0)
        return 0.0;
    const Matrix<Scalar> gram = q.adjoint() * q;
    return (gram - Matrix<Scalar>::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

/// Orthonormal basis of range(m) from a column-pivoted Householder QR.
///
/// Trailing columns whose |R_ii| falls at or below drop_tol * |R_00| are
/// discarded, so the result has as many columns as the numerical rank of m.
/// An all-zero input yields the first canonical basis vector, which keeps
/// augmented bases non-empty downstream.
template <typename Derived>
Matrix<typename Derived::Scalar> ortho(const Eigen::MatrixBase<Derived>& m,
                                       double drop_tol = kDefaultDropTol)
{
    using Scalar = typename Derived::Scalar;
    if (m.rows() == 0 || m.cols() == 0)
        throw std::invalid_argument("ortho: empty matrix");
    if (drop_tol < 0.0)
        throw std::invalid_argument("ortho: negative drop tolerance");
    if (!m.allFinite())
        throw std::domain_error("ortho: non-finite input");

    const Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(m);
    const auto& packed = qr.matrixQR();
    const Index diag = std::min(m.rows(), m.cols());
    const double lead = std::abs(packed(0, 0));

    Index rank = 0;
    if (lead > 0.0) {
        const double cut = drop_tol * lead;
        while (rank < diag && std::abs(packed(rank, rank)) > cut)
            ++rank;
    }
    if (rank == 0) {
        Matrix<Scalar> e1 = Matrix<Scalar>::Zero(m.rows(), 1);
        e1(0, 0) = Scalar(1);
        return e1;
    }
    Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(m.rows(), rank);
    return q;
}

/// Orthonormal basis of range([base, extra]) whose leading columns span
/// range(base).
///
/// `base` must have full column rank; it is re-orthonormalized without
/// pivoting so none of its directions are dropped. `extra` is projected out of
/// span(base) twice, new directions come from a pivoted QR of the remainder,
/// and directions whose |R_ii| is at most drop_tol times the largest column
/// norm of `extra` are discarded.
template <typename Scalar>
Matrix<Scalar> augment_basis(const Matrix<Scalar>& base, const Matrix<Scalar>& extra,
                             double drop_tol = kDefaultDropTol)
{
    if (extra.rows() != base.rows())
        throw std::invalid_argument("augment_basis: row mismatch");
    if (!extra.allFinite())
        throw std::domain_error("augment_basis: non-finite input");
    Matrix<Scalar> q0;
    const Matrix<Scalar> gram = base.adjoint() * base;
    const Eigen::LLT<Matrix<Scalar>> chol(gram);
    const auto identity = Matrix<Scalar>::Identity(base.cols(), base.cols());
    if (chol.info() == Eigen::Success && (gram - identity).cwiseAbs().maxCoeff() < 1e-6) {
        // Cholesky QR of a nearly orthonormal basis
        q0 = chol.matrixU().template solve<Eigen::OnTheRight>(base);
    } else {
        const Eigen::HouseholderQR<Matrix<Scalar>> base_qr(base);
        q0 = base_qr.householderQ() * Matrix<Scalar>::Identity(base.rows(), base.cols());
        for (Index j = 0; j < q0.cols(); ++j)
            if (std::real(base_qr.matrixQR()(j, j)) < 0.0)
                q0.col(j) = -q0.col(j);
    }
    if (extra.cols() == 0 || base.cols() >= base.rows())
        return q0;
    const double scale = extra.colwise().norm().maxCoeff();
    if (scale == 0.0)
        return q0;

    Matrix<Scalar> w = extra - q0 * (q0.adjoint() * extra);
    w -= q0 * (q0.adjoint() * w);

    const Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(w);
    const auto& packed = qr.matrixQR();
    const Index diag = std::min(w.rows(), w.cols());
    const double cut = drop_tol * scale;
    Index rank = 0;
    while (rank < diag && rank + base.cols() < base.rows() && std::abs(packed(rank, rank)) > cut)
        ++rank;
    if (rank == 0)
        return q0;

    // Directions recovered from small remainders carry the rounding of the
    // projection; project once more and re-orthonormalize.
    Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(w.rows(), rank);
    q -= q0 * (q0.adjoint() * q);
    const Eigen::HouseholderQR<Matrix<Scalar>> reqr(q);
    q = reqr.householderQ() * Matrix<Scalar>::Identity(w.rows(), rank);

    Matrix<Scalar> out(base.rows(), base.cols() + rank);
    out << q0, q;
    return out;
}

/// Thin singular value decomposition.
///
/// Divide and conquer (one-sided Jacobi below 16 columns); Eigen 3.4's
/// divide and conquer occasionally returns NaNs on rank-deficient input, in
/// which case the decomposition is recomputed with two-sided Jacobi.
template <typename Derived>
SvdResult<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& m)
{
    using Scalar = typename Derived::Scalar;
    if (m.rows() == 0 || m.cols() == 0)
        throw std::invalid_argument("svd: empty matrix");
    if (!m.allFinite())
        throw std::domain_error("svd: non-finite input");

    constexpr unsigned options = Eigen::ComputeThinU | Eigen::ComputeThinV;
    Eigen::BDCSVD<Matrix<Scalar>> solver(m, options);
    SvdResult<Scalar> out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
    if (out.left.allFinite() && out.values.allFinite() && out.right.allFinite())
        return out;

    Eigen::JacobiSVD<Matrix<Scalar>> fallback(m, options);
    return {fallback.matrixU(), fallback.singularValues(), fallback.matrixV()};
}

/// Number of singular values above rel_tol * sigma_max.
template <typename Derived>
Index numerical_rank(const Eigen::MatrixBase<Derived>& m, double rel_tol = 1e-12)
{
    const RealVector sigma = svd(m).values;
    if (sigma.size() == 0 || sigma(0) == 0.0)
        return 0;
    return (sigma.array() > rel_tol * sigma(0)).count();
}

/// Horizontal concatenation of equally tall blocks.
template <typename Scalar>
Matrix<Scalar> hcat(const std::vector<const Matrix<Scalar>*>& blocks)
{
    if (blocks.empty())
        throw std::invalid_argument("hcat: no blocks");
    const Index rows = blocks.front()->rows();
    Index cols = 0;
    for (const auto* b : blocks) {
        if (b->rows() != rows)
            throw std::invalid_argument("hcat: row mismatch");
        cols += b->cols();
    }
    Matrix<Scalar> out(rows, cols);
    Index at = 0;
    for (const auto* b : blocks) {
        out.middleCols(at, b->cols()) = *b;
        at += b->cols();
    }
    return out;
}

} // namespace rkbug
