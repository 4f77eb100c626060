#pragma once

#include "rkbug/errors.hpp"
#include "rkbug/low_rank.hpp"
#include "rkbug/rhs.hpp"
#include "rkbug/tableau.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace rkbug {

enum class Method { dense, bug_euler, rk_bug, prk };

std::string to_string(Method m);
Method parse_method(const std::string& name);  // throws ConfigError

template <typename Scalar>
using State = std::variant<Matrix<Scalar>, LowRankMatrix<Scalar>>;

template <typename Scalar>
Matrix<Scalar> densify(const State<Scalar>& s)
{
    if (const auto* d = std::get_if<Matrix<Scalar>>(&s))
        return *d;
    return densify(std::get<LowRankMatrix<Scalar>>(s));
}

template <typename Scalar>
struct StepRecord
{
    double time = 0.0;
    State<Scalar> state;
    Index augmented_rank_used = 0;   // 0 for dense steppers
    double truncation_residual = 0.0;
};

template <typename Scalar>
struct LowRankStep
{
    LowRankMatrix<Scalar> value;
    Index augmented_rank_used = 0;
    double truncation_residual = 0.0;
};

/// Intermediate quantities of one rk_bug_step, for diagnostics.
/// Index i of the stage vectors refers to stage i+1; stage_left[i] and
/// stage_right[i] are the augmented bases of stage i+2.
template <typename Scalar>
struct RkBugTrace
{
    std::vector<LowRankMatrix<Scalar>> stage_states;
    std::vector<Matrix<Scalar>> stage_rhs;
    std::vector<Matrix<Scalar>> stage_left;
    std::vector<Matrix<Scalar>> stage_right;
    Matrix<Scalar> final_left;
    Matrix<Scalar> final_right;
};

namespace detail {

template <typename Scalar>
void require_finite(const Matrix<Scalar>& m, Index stage)
{
    if (!m.allFinite())
        throw BlowUpError::at_stage(static_cast<int>(stage));
}

inline void require_positive_step(double h)
{
    if (!(h > 0.0) || !std::isfinite(h))
        throw std::invalid_argument("step size must be positive and finite");
}

inline void require_valid(const ButcherTableau& tab)
{
    const auto issues = validate(tab);
    if (!issues.empty())
        throw ConfigError("invalid tableau '" + tab.name + "': " + issues.front());
}

/// Rank-r truncation of U^ S^ V^H. An r x r core already has rank <= r and
/// is kept unfactored, which makes full-rank steps SVD-free.
template <typename Scalar>
Truncation<Scalar> truncate_augmented(const Matrix<Scalar>& u_hat, const Matrix<Scalar>& s_hat,
                                      const Matrix<Scalar>& v_hat, Index r)
{
    if (s_hat.rows() == r && s_hat.cols() == r && u_hat.cols() == r && v_hat.cols() == r)
        return {{u_hat, s_hat, v_hat}, 0.0};
    return truncate_core_with_residual(u_hat, s_hat, v_hat, r);
}

} // namespace detail

/// One explicit Runge-Kutta step on a dense state.
template <typename Scalar>
Matrix<Scalar> dense_rk_step(const RhsOperator<Scalar>& f, double t, const Matrix<Scalar>& z, double h,
                             const ButcherTableau& tab)
{
    detail::require_positive_step(h);
    const Index s = tab.stages();
    std::vector<Matrix<Scalar>> k;
    k.reserve(s);
    for (Index i = 0; i < s; ++i) {
        Matrix<Scalar> zi = z;
        for (Index j = 0; j < i; ++j)
            if (tab.alpha(i, j))
                zi.noalias() += (h * tab.a(i, j)) * k[j];
        detail::require_finite(zi, i + 1);
        k.push_back(f(t + h * tab.c(i), zi));
        detail::require_finite(k.back(), i + 1);
    }
    Matrix<Scalar> out = z;
    for (Index i = 0; i < s; ++i)
        if (tab.beta(i))
            out.noalias() += (h * tab.b(i)) * k[i];
    detail::require_finite(out, s);
    return out;
}

/// Number of steps of size h covering [t0, t_final]; throws ConfigError when
/// the ratio is not a positive integer within 1e-9 relative.
inline long step_count(double t0, double t_final, double h)
{
    if (!(h > 0.0))
        throw ConfigError("step size must be positive");
    const double ratio = (t_final - t0) / h;
    const double rounded = std::round(ratio);
    if (!(rounded >= 1.0))
        throw ConfigError("non-integer step count: empty time interval");
    if (std::abs(ratio - rounded) > 1e-9 * rounded)
        throw ConfigError("non-integer step count");
    return static_cast<long>(rounded);
}

/// Fixed-step Runge-Kutta-Fehlberg (fifth-order weights) trajectory sampled
/// every h_out, which must be a multiple of h_ref.
template <typename Scalar>
std::vector<StepRecord<Scalar>> reference_solve(const RhsOperator<Scalar>& f, double t0, const Matrix<Scalar>& a0,
                                                double t_final, double h_ref, std::optional<double> h_out = {})
{
    const double out_step = h_out.value_or(h_ref);
    const long stride = step_count(0.0, out_step, h_ref);
    const long outputs = step_count(t0, t_final, out_step);
    const auto tab = registry_get("rkf45-high");

    std::vector<StepRecord<Scalar>> out;
    out.reserve(outputs + 1);
    out.push_back({t0, a0, 0, 0.0});
    Matrix<Scalar> a = a0;
    long k = 0;
    for (long q = 1; q <= outputs; ++q) {
        for (long p = 0; p < stride; ++p, ++k) {
            try {
                a = dense_rk_step(f, t0 + static_cast<double>(k) * h_ref, a, h_ref, tab);
            } catch (BlowUpError& e) {
                e.set_step(k);
                throw;
            }
        }
        out.push_back({t0 + static_cast<double>(q) * out_step, a, 0, 0.0});
    }
    return out;
}

/// First-order BUG step: K- and L-steps augment the bases with F V and F^H U,
/// the S-step is the Galerkin projection of the forward Euler update, then the
/// core is truncated back to the input rank.
template <typename Scalar>
LowRankStep<Scalar> bug_euler_step(const RhsOperator<Scalar>& f, double t, const LowRankMatrix<Scalar>& y,
                                   double h)
{
    detail::require_positive_step(h);
    y.check_shape();
    const Index r = y.rank();

    const Matrix<Scalar> fk = f(t, densify(y));
    detail::require_finite(fk, 1);

    const Matrix<Scalar> fv = fk * y.V;
    const Matrix<Scalar> fhu = fk.adjoint() * y.U;
    const Matrix<Scalar> u_hat = augment_basis(y.U, fv);
    const Matrix<Scalar> v_hat = augment_basis(y.V, fhu);

    Matrix<Scalar> s_hat = (u_hat.adjoint() * y.U) * y.S * (y.V.adjoint() * v_hat);
    s_hat.noalias() += Scalar(h) * (u_hat.adjoint() * fk * v_hat);

    const auto t_res = detail::truncate_augmented(u_hat, s_hat, v_hat, r);
    return {t_res.value, std::max(u_hat.cols(), v_hat.cols()), t_res.residual};
}

/// Runge-Kutta BUG step for an arbitrary explicit tableau.
///
/// Every stage is a BUG step from Y_k: the bases are augmented with U_k, V_k
/// and the {U_(j), F_(j) V_(j)} / {V_(j), F_(j)^H U_(j)} blocks of the stages
/// with nonzero coefficients, the core is the Galerkin projection of the stage
/// update, and the result is truncated to the input rank. Stage one's own
/// bases coincide with U_k, V_k and are never appended twice.
template <typename Scalar>
LowRankStep<Scalar> rk_bug_step(const RhsOperator<Scalar>& f, double t, const LowRankMatrix<Scalar>& y, double h,
                                const ButcherTableau& tab, RkBugTrace<Scalar>* trace = nullptr)
{
    detail::require_positive_step(h);
    detail::require_valid(tab);
    y.check_shape();
    const Index s = tab.stages();
    const Index r = y.rank();

    std::vector<LowRankMatrix<Scalar>> ys;
    std::vector<Matrix<Scalar>> fs, fv, fhu;
    ys.reserve(s);
    fs.reserve(s);
    fv.reserve(s);
    fhu.reserve(s);
    ys.push_back(y);

    auto evaluate = [&](Index i) {
        fs.push_back(f(t + h * tab.c(i), densify(ys[i])));
        detail::require_finite(fs.back(), i + 1);
        fv.push_back(fs.back() * ys[i].V);
        fhu.push_back(fs.back().adjoint() * ys[i].U);
    };

    struct Galerkin
    {
        Matrix<Scalar> left, right;
        Truncation<Scalar> result;
    };

    // Galerkin update Y_k + h sum_j coeff(j) F_(j) over the first `count` stages.
    auto galerkin = [&](const auto& coeff, const auto& mask, Index count, Index bound, Index stage) {
        std::vector<const Matrix<Scalar>*> left, right;
        for (Index j = 0; j < count; ++j) {
            if (!mask(j))
                continue;
            if (j > 0) {
                left.push_back(&ys[j].U);
                right.push_back(&ys[j].V);
            }
            left.push_back(&fv[j]);
            right.push_back(&fhu[j]);
        }
        Galerkin g;
        g.left = left.empty() ? y.U : augment_basis(y.U, hcat<Scalar>(left));
        g.right = right.empty() ? y.V : augment_basis(y.V, hcat<Scalar>(right));
        if (g.left.cols() > bound || g.right.cols() > bound)
            throw std::logic_error("rk_bug_step: augmented rank exceeds 2rs bound");

        Matrix<Scalar> s_hat = (g.left.adjoint() * y.U) * y.S * (y.V.adjoint() * g.right);
        for (Index j = 0; j < count; ++j)
            if (mask(j))
                s_hat.noalias() += Scalar(h * coeff(j)) * (g.left.adjoint() * fs[j] * g.right);
        detail::require_finite(s_hat, stage);
        g.result = detail::truncate_augmented(g.left, s_hat, g.right, r);
        return g;
    };

    evaluate(0);
    for (Index i = 1; i < s; ++i) {
        auto g = galerkin(tab.a.row(i), tab.alpha.row(i), i, 2 * r * i, i + 1);
        ys.push_back(std::move(g.result.value));
        evaluate(i);
        if (trace) {
            trace->stage_left.push_back(std::move(g.left));
            trace->stage_right.push_back(std::move(g.right));
        }
    }
    auto g = galerkin(tab.b, tab.beta, s, 2 * r * s, s);

    LowRankStep<Scalar> out{std::move(g.result.value), std::max(g.left.cols(), g.right.cols()),
                            g.result.residual};
    if (trace) {
        trace->stage_states = std::move(ys);
        trace->stage_rhs = std::move(fs);
        trace->final_left = std::move(g.left);
        trace->final_right = std::move(g.right);
    }
    return out;
}

/// Projected Runge-Kutta comparator: stage derivatives are projected onto the
/// tangent space at the (truncated) stage value and every stage is truncated
/// back to rank r.
template <typename Scalar>
LowRankStep<Scalar> projected_rk_step(const RhsOperator<Scalar>& f, double t, const LowRankMatrix<Scalar>& y,
                                      double h, const ButcherTableau& tab)
{
    detail::require_positive_step(h);
    detail::require_valid(tab);
    y.check_shape();
    const Index s = tab.stages();
    const Index r = y.rank();
    const Matrix<Scalar> yk = densify(y);

    std::vector<Matrix<Scalar>> g;
    g.reserve(s);
    LowRankMatrix<Scalar> stage = y;
    for (Index i = 0; i < s; ++i) {
        if (i > 0) {
            Matrix<Scalar> z = yk;
            for (Index j = 0; j < i; ++j)
                if (tab.alpha(i, j))
                    z.noalias() += (h * tab.a(i, j)) * g[j];
            detail::require_finite(z, i + 1);
            stage = truncate(z, r);
        }
        const Matrix<Scalar> fi = f(t + h * tab.c(i), densify(stage));
        detail::require_finite(fi, i + 1);
        g.push_back(tangent_project(stage, fi));
    }
    Matrix<Scalar> z = yk;
    for (Index i = 0; i < s; ++i)
        if (tab.beta(i))
            z.noalias() += (h * tab.b(i)) * g[i];
    detail::require_finite(z, s);

    const auto dec = svd(z);
    LowRankStep<Scalar> out;
    out.value.U = dec.left.leftCols(r);
    out.value.S = detail::diagonal_core<Scalar>(dec.values, r);
    out.value.V = dec.right.leftCols(r);
    out.truncation_residual = detail::tail_norm(dec.values, r);
    out.augmented_rank_used =
        dec.values(0) > 0.0 ? (dec.values.array() > 1e-12 * dec.values(0)).count() : 0;
    if (out.augmented_rank_used > 2 * r * s)
        throw std::logic_error("projected_rk_step: augmented rank exceeds 2rs bound");
    return out;
}

/// Time stepper holding either a dense or a factored state.
template <typename Scalar>
class Stepper
{
public:
    /// Low-rank methods start from the best rank-r approximation of a0.
    Stepper(Method method, const RhsOperator<Scalar>& f, ButcherTableau tab, Index rank,
            const Matrix<Scalar>& a0, double t0)
        : method_(method), f_(&f), tab_(std::move(tab)), rank_(rank), t0_(t0)
    {
        detail::require_valid(tab_);
        if (method_ == Method::bug_euler && tab_.stages() != 1)
            tab_ = registry_get("euler");
        if (method_ == Method::dense) {
            state_ = a0;
        } else {
            auto tr = truncate_with_residual(a0, rank_);
            state_ = std::move(tr.value);
        }
    }

    /// Advances one step of size h from t0 + k h.
    void step(double h)
    {
        const double t = t0_ + static_cast<double>(k_) * h;
        try {
            if (method_ == Method::dense) {
                auto& z = std::get<Matrix<Scalar>>(state_);
                z = dense_rk_step(*f_, t, z, h, tab_);
                last_rank_ = 0;
                last_residual_ = 0.0;
            } else {
                const auto& y = std::get<LowRankMatrix<Scalar>>(state_);
                LowRankStep<Scalar> next;
                switch (method_) {
                case Method::bug_euler: next = bug_euler_step(*f_, t, y, h); break;
                case Method::rk_bug: next = rk_bug_step(*f_, t, y, h, tab_); break;
                case Method::prk: next = projected_rk_step(*f_, t, y, h, tab_); break;
                case Method::dense: break;
                }
                if (next.augmented_rank_used > 2 * rank_ * tab_.stages())
                    throw std::logic_error("augmented rank exceeds 2rs bound");
                state_ = std::move(next.value);
                last_rank_ = next.augmented_rank_used;
                last_residual_ = next.truncation_residual;
            }
        } catch (BlowUpError& e) {
            e.set_step(k_);
            throw;
        }
        ++k_;
    }

    const State<Scalar>& state() const { return state_; }
    Matrix<Scalar> dense_state() const { return densify(state_); }
    long steps_taken() const { return k_; }
    Index last_augmented_rank() const { return last_rank_; }
    double last_truncation_residual() const { return last_residual_; }

private:
    Method method_;
    const RhsOperator<Scalar>* f_;
    ButcherTableau tab_;
    Index rank_;
    double t0_;
    State<Scalar> state_;
    long k_ = 0;
    Index last_rank_ = 0;
    double last_residual_ = 0.0;
};

/// Fixed-step trajectory on t_k = t0 + k h, k = 0..N_t, for any method.
template <typename Scalar>
std::vector<StepRecord<Scalar>> integrate(Method method, const RhsOperator<Scalar>& f, const Matrix<Scalar>& a0,
                                          double t0, double t_final, double h, const ButcherTableau& tab,
                                          Index rank)
{
    const long steps = step_count(t0, t_final, h);
    Stepper<Scalar> stepper(method, f, tab, rank, a0, t0);
    std::vector<StepRecord<Scalar>> out;
    out.reserve(steps + 1);
    out.push_back({t0, stepper.state(), 0, 0.0});
    for (long k = 1; k <= steps; ++k) {
        stepper.step(h);
        out.push_back({t0 + static_cast<double>(k) * h, stepper.state(), stepper.last_augmented_rank(),
                       stepper.last_truncation_residual()});
    }
    return out;
}

} // namespace rkbug
