#pragma once

#include "rkbug/matrix_kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace rkbug {

/// Factored matrix Y = U S V^H with orthonormal U (n x r) and V (m x r).
///
/// The core S is r x r and need not be diagonal or invertible; truncation may
/// leave zero singular values in it.
template <typename Scalar>
struct LowRankMatrix
{
    Matrix<Scalar> U;
    Matrix<Scalar> S;
    Matrix<Scalar> V;

    Index rows() const { return U.rows(); }
    Index cols() const { return V.rows(); }
    Index rank() const { return U.cols(); }

    /// Largest deviation of U^H U and V^H V from the identity.
    double orthonormality_defect() const
    {
        return std::max(rkbug::orthonormality_defect(U), rkbug::orthonormality_defect(V));
    }

    void check_shape() const
    {
        if (U.cols() != S.rows() || V.cols() != S.cols() || S.rows() != S.cols())
            throw std::invalid_argument("LowRankMatrix: factor shapes do not match");
        if (rank() > std::min(rows(), cols()))
            throw std::invalid_argument("LowRankMatrix: rank exceeds dimensions");
    }
};

template <typename Scalar>
struct Truncation
{
    LowRankMatrix<Scalar> value;
    double residual = 0.0;  // Frobenius norm of the discarded part
};

template <typename Scalar>
Matrix<Scalar> densify(const LowRankMatrix<Scalar>& y)
{
    return y.U * y.S * y.V.adjoint();
}

namespace detail {

inline double tail_norm(const RealVector& sigma, Index r)
{
    if (r >= sigma.size())
        return 0.0;
    return sigma.tail(sigma.size() - r).norm();
}

template <typename Scalar>
Matrix<Scalar> diagonal_core(const RealVector& sigma, Index r)
{
    Matrix<Scalar> core = Matrix<Scalar>::Zero(r, r);
    for (Index i = 0; i < r; ++i)
        core(i, i) = Scalar(sigma(i));
    return core;
}

} // namespace detail

/// Best rank-r approximation of x in the Frobenius norm, with its error.
template <typename Derived>
Truncation<typename Derived::Scalar> truncate_with_residual(const Eigen::MatrixBase<Derived>& x, Index r)
{
    using Scalar = typename Derived::Scalar;
    if (r < 1)
        throw std::invalid_argument("truncate: rank must be positive");
    if (r > std::min(x.rows(), x.cols()))
        throw std::invalid_argument("truncate: rank exceeds dimensions");

    const auto dec = svd(x);
    Truncation<Scalar> out;
    out.value.U = dec.left.leftCols(r);
    out.value.S = detail::diagonal_core<Scalar>(dec.values, r);
    out.value.V = dec.right.leftCols(r);
    out.residual = detail::tail_norm(dec.values, r);
    return out;
}

template <typename Derived>
LowRankMatrix<typename Derived::Scalar> truncate(const Eigen::MatrixBase<Derived>& x, Index r)
{
    return truncate_with_residual(x, r).value;
}

/// Rank-r truncation of U_hat S_hat V_hat^H computed from the SVD of the small
/// core only. S_hat may be rectangular when the two augmented bases have
/// different widths.
template <typename Scalar>
Truncation<Scalar> truncate_core_with_residual(const Matrix<Scalar>& u_hat, const Matrix<Scalar>& s_hat,
                                               const Matrix<Scalar>& v_hat, Index r)
{
    if (u_hat.cols() != s_hat.rows() || v_hat.cols() != s_hat.cols())
        throw std::invalid_argument("truncate_core: dimension mismatch");
    if (r < 1)
        throw std::invalid_argument("truncate_core: rank must be positive");
    if (r > std::min(s_hat.rows(), s_hat.cols()))
        throw std::invalid_argument("truncate_core: rank exceeds dimensions");

    const auto dec = svd(s_hat);
    Truncation<Scalar> out;
    out.value.U = u_hat * dec.left.leftCols(r);
    out.value.S = detail::diagonal_core<Scalar>(dec.values, r);
    out.value.V = v_hat * dec.right.leftCols(r);
    out.residual = detail::tail_norm(dec.values, r);
    return out;
}

template <typename Scalar>
LowRankMatrix<Scalar> truncate_core(const Matrix<Scalar>& u_hat, const Matrix<Scalar>& s_hat,
                                    const Matrix<Scalar>& v_hat, Index r)
{
    return truncate_core_with_residual(u_hat, s_hat, v_hat, r).value;
}

/// Orthogonal projection of z onto the tangent space of the rank-r manifold at y:
/// U U^H Z - U U^H Z V V^H + Z V V^H.
template <typename Scalar, typename Derived>
Matrix<Scalar> tangent_project(const LowRankMatrix<Scalar>& y, const Eigen::MatrixBase<Derived>& z)
{
    if (z.rows() != y.rows() || z.cols() != y.cols())
        throw std::invalid_argument("tangent_project: shape mismatch");
    const Matrix<Scalar> uh_z = y.U.adjoint() * z;  // r x m
    const Matrix<Scalar> z_v = z * y.V;             // n x r
    const Matrix<Scalar> core = uh_z * y.V;         // r x r
    return y.U * uh_z - y.U * core * y.V.adjoint() + z_v * y.V.adjoint();
}

} // namespace rkbug
