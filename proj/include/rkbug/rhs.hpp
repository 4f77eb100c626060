#pragma once

#include "rkbug/matrix_kernel.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace rkbug {

/// Right-hand side F(t, Y) of a matrix ODE, evaluated on dense states.
template <typename Scalar>
class RhsOperator
{
public:
    using Function = std::function<Matrix<Scalar>(double, const Matrix<Scalar>&)>;

    RhsOperator() = default;
    RhsOperator(std::string name, Index rows, Index cols, Function f)
        : name_(std::move(name)), rows_(rows), cols_(cols), f_(std::move(f))
    {}

    Matrix<Scalar> operator()(double t, const Matrix<Scalar>& y) const
    {
        if (y.rows() != rows_ || y.cols() != cols_)
            throw std::invalid_argument("rhs '" + name_ + "': state shape mismatch");
        Matrix<Scalar> out = f_(t, y);
        if (out.rows() != rows_ || out.cols() != cols_)
            throw std::logic_error("rhs '" + name_ + "': output shape mismatch");
        return out;
    }

    const std::string& name() const { return name_; }
    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    static constexpr bool is_complex() { return is_complex_v<Scalar>; }

private:
    std::string name_;
    Index rows_ = 0;
    Index cols_ = 0;
    Function f_;
};

template <typename Scalar>
RhsOperator<Scalar> zero_rhs(Index rows, Index cols)
{
    return {"zero", rows, cols, [rows, cols](double, const Matrix<Scalar>&) {
                return Matrix<Scalar>::Zero(rows, cols).eval();
            }};
}

} // namespace rkbug
