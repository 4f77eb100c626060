#pragma once

#include "rkbug/errors.hpp"
#include "rkbug/matrix_kernel.hpp"
#include "rkbug/rhs.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <type_traits>

// Benchmark matrix ODEs on n x n grids.
//
// Stencils are pure tridiagonal matrices without wrap-around corners. Grid
// points are x_i = a + (i-1)(b-a)/n, i = 1..n, so the right endpoint is not
// duplicated. Schrödinger indices are 1-based integer coordinates.

namespace rkbug {

enum class ProblemKind { allen_cahn, lyapunov, schrodinger };

std::string to_string(ProblemKind k);
ProblemKind parse_problem(const std::string& name);  // throws ConfigError

struct ProblemDefaults
{
    double theta;
    double t_final;
};
ProblemDefaults problem_defaults(ProblemKind k);

/// Symmetric tridiagonal matrix with constant diagonal and off-diagonal.
struct Tridiagonal
{
    double diag = 0.0;
    double off = 0.0;

    Eigen::MatrixXd dense(Index n) const
    {
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
        t.diagonal().setConstant(diag);
        t.diagonal(1).setConstant(off);
        t.diagonal(-1).setConstant(off);
        return t;
    }

    /// T A + A T in O(nm) work.
    template <typename Scalar>
    Matrix<Scalar> sandwich(const Matrix<Scalar>& a) const
    {
        const Index n = a.rows(), m = a.cols();
        Matrix<Scalar> out = (2.0 * diag) * a;
        if (n > 1) {
            out.topRows(n - 1) += off * a.bottomRows(n - 1);
            out.bottomRows(n - 1) += off * a.topRows(n - 1);
        }
        if (m > 1) {
            out.leftCols(m - 1) += off * a.rightCols(m - 1);
            out.rightCols(m - 1) += off * a.leftCols(m - 1);
        }
        return out;
    }
};

template <typename Scalar>
struct ProblemSpec
{
    ProblemKind kind;
    Index n = 0;
    double theta = 0.0;
    double t_final = 0.0;
    Tridiagonal stencil;        // Laplacian (allen_cahn, lyapunov) or hopping D (schrodinger)
    Matrix<Scalar> forcing;     // Lyapunov C before normalization, empty otherwise
    Matrix<Scalar> initial;     // A_0
    RhsOperator<Scalar> rhs;

    Eigen::MatrixXd stencil_matrix() const { return stencil.dense(n); }
};

namespace detail {

inline void require_grid(Index n)
{
    if (n < 4)
        throw ConfigError("problem size n must be at least 4");
}

inline Eigen::VectorXd grid(Index n, double lo, double hi)
{
    Eigen::VectorXd x(n);
    for (Index i = 0; i < n; ++i)
        x(i) = lo + static_cast<double>(i) * (hi - lo) / static_cast<double>(n);
    return x;
}

inline Tridiagonal laplacian(Index n)
{
    const double scale = static_cast<double>(n) * static_cast<double>(n) / (4.0 * std::numbers::pi * std::numbers::pi);
    return {-2.0 * scale, scale};
}

} // namespace detail

/// Allen-Cahn: F(A) = theta (L A + A L) + A - A.*A.*A on [0, 2pi)^2.
template <typename Scalar>
ProblemSpec<Scalar> make_allen_cahn(Index n, double theta = 1e-2, double t_final = 10.0)
{
    detail::require_grid(n);
    ProblemSpec<Scalar> p;
    p.kind = ProblemKind::allen_cahn;
    p.n = n;
    p.theta = theta;
    p.t_final = t_final;
    p.stencil = detail::laplacian(n);

    const Eigen::VectorXd x = detail::grid(n, 0.0, 2.0 * std::numbers::pi);
    p.initial.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            const double xi = x(i), yj = x(j);
            const double ti = std::tan(xi), tj = std::tan(yj);
            const double num = (std::exp(-ti * ti) + std::exp(-tj * tj)) * std::sin(xi) * std::sin(yj);
            const double den = 1.0 + std::exp(std::abs(1.0 / std::sin(-xi / 2.0)))
                               + std::exp(std::abs(1.0 / std::sin(-yj / 2.0)));
            const double v = num / den;
            // tan and csc blow up at isolated nodes where the formula tends to 0
            p.initial(i, j) = Scalar(std::isfinite(v) ? v : 0.0);
        }
    }

    const Tridiagonal lap = p.stencil;
    p.rhs = RhsOperator<Scalar>("allen_cahn", n, n, [lap, theta](double, const Matrix<Scalar>& a) {
        Matrix<Scalar> out = theta * lap.sandwich(a);
        out += a;
        out -= a.cwiseProduct(a).cwiseProduct(a);
        return out;
    });
    return p;
}

/// Lyapunov: F(A) = L A + A L + theta C / ||C||_F on [-pi, pi)^2.
template <typename Scalar>
ProblemSpec<Scalar> make_lyapunov(Index n, double theta = 1e-5, double t_final = 1.0)
{
    detail::require_grid(n);
    ProblemSpec<Scalar> p;
    p.kind = ProblemKind::lyapunov;
    p.n = n;
    p.theta = theta;
    p.t_final = t_final;
    p.stencil = detail::laplacian(n);

    const Eigen::VectorXd x = detail::grid(n, -std::numbers::pi, std::numbers::pi);
    p.initial.resize(n, n);
    p.forcing.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            p.initial(i, j) = Scalar(std::sin(x(i)) * std::sin(x(j)));
            const double r2 = x(i) * x(i) + x(j) * x(j);
            double c = 0.0;
            for (int l = 1; l <= 11; ++l)
                c += std::pow(10.0, -(l - 1)) * std::exp(-l * r2);
            p.forcing(i, j) = Scalar(c);
        }
    }

    const Matrix<Scalar> source = (theta / p.forcing.norm()) * p.forcing;
    const Tridiagonal lap = p.stencil;
    p.rhs = RhsOperator<Scalar>("lyapunov", n, n, [lap, source](double, const Matrix<Scalar>& a) {
        Matrix<Scalar> out = lap.sandwich(a);
        out += source;
        return out;
    });
    return p;
}

/// Schrödinger: F(A) = 0.5 i (D A + A D) + theta i |A|^2 .* A.
inline ProblemSpec<Complex> make_schrodinger(Index n, double theta = 0.1, double t_final = 5.0)
{
    detail::require_grid(n);
    ProblemSpec<Complex> p;
    p.kind = ProblemKind::schrodinger;
    p.n = n;
    p.theta = theta;
    p.t_final = t_final;
    p.stencil = {0.0, 1.0};

    p.initial.resize(n, n);
    for (Index l = 0; l < n; ++l) {
        for (Index j = 0; j < n; ++j) {
            const double jj = static_cast<double>(j + 1), ll = static_cast<double>(l + 1);
            p.initial(j, l) = std::exp(-(jj - 60) * (jj - 60) / 100.0 - (ll - 50) * (ll - 50) / 100.0)
                              + std::exp(-(jj - 50) * (jj - 50) / 100.0 - (ll - 40) * (ll - 40) / 100.0);
        }
    }

    const Tridiagonal hop = p.stencil;
    const Complex half_i(0.0, 0.5), theta_i(0.0, theta);
    p.rhs = RhsOperator<Complex>("schrodinger", n, n, [hop, half_i, theta_i](double, const Matrix<Complex>& a) {
        Matrix<Complex> out = half_i * hop.sandwich(a);
        out += theta_i * (a.cwiseAbs2().template cast<Complex>().cwiseProduct(a));
        return out;
    });
    return p;
}

} // namespace rkbug
