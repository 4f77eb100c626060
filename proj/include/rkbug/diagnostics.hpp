#pragma once

#include "rkbug/harness.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

// Property sweeps on single Runge-Kutta BUG steps.
//
// Galerkin sweep: for every stage block that feeds an augmented basis pair
// (U^, V^), the Galerkin projection U^ U^H F V^ V^H must approximate that
// block's F at least as well as the tangent-space projection at the block's
// own stage value.
//
// Residual ladder: the truncation residual of one step from a fixed state
// must shrink at least by a constant factor per halving of h.

namespace rkbug {

struct DiagnosticsConfig
{
    ProblemParams problem{ProblemKind::lyapunov, 32, 1.0, 1.0};
    std::string tableau;            // empty: each Galerkin instance draws a registry method
    Index r = 5;
    int instances = 100;
    double h_min = 1e-4;            // Galerkin step sizes are log-uniform in [h_min, h_max]
    double h_max = 1e-2;
    double ladder_h = 1e-2;         // first rung of the residual ladder
    int ladder_rungs = 6;           // number of halvings
    double perturbation = 1e-2;     // relative size of the random perturbation of A_0
    std::uint64_t seed = 1;
    double tolerance = 1e-9;
    double ratio_limit = 0.75;
    double residual_floor = 1e-12;
};

/// One random instance of the Galerkin sweep, enough to regenerate it.
struct GalerkinInstance
{
    int index = 0;
    std::string tableau;
    double h = 0.0;
    double perturbation = 0.0;
};

struct GalerkinCheck
{
    GalerkinInstance instance;
    Index stage = 0;          // 1-based stage whose bases are tested; s + 1 for the final update
    Index block = 0;          // 1-based stage whose F is projected
    double galerkin = 0.0;    // ||F - U^ U^H F V^ V^H||_F
    double tangent = 0.0;     // ||F - P(Y) F||_F
    double violation() const { return galerkin - tangent; }
};

struct GalerkinReport
{
    int instances = 0;
    long checks = 0;
    long violations = 0;
    double max_violation = -std::numeric_limits<double>::infinity();
    std::optional<GalerkinCheck> worst;
    bool passed() const { return violations == 0; }
};

struct LadderReport
{
    std::string tableau;
    std::vector<double> h;
    std::vector<double> residual;
    std::vector<double> ratio;        // residual[q + 1] / residual[q]
    std::vector<bool> checked;        // ratio[q] is subject to the limit
    bool passed = true;
};

std::vector<std::string> method_tableaux();  // registry names without the reference method

/// Galerkin-versus-tangent sweep over cfg.instances random steps.
GalerkinReport galerkin_sweep(const DiagnosticsConfig& cfg);

/// Regenerates a single instance of galerkin_sweep.
GalerkinReport galerkin_replay(const DiagnosticsConfig& cfg, int index);

/// Truncation residual of one step for h = ladder_h * 2^-q, q = 0..ladder_rungs.
/// The first halving is reported but not checked.
LadderReport residual_ladder(const DiagnosticsConfig& cfg, const std::string& tableau);

namespace detail {

template <typename Scalar>
Matrix<Scalar> gaussian(Index rows, Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    Matrix<Scalar> g(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) {
            if constexpr (is_complex_v<Scalar>)
                g(i, j) = Scalar(normal(rng), normal(rng));
            else
                g(i, j) = normal(rng);
        }
    return g;
}

/// Rank-r truncation of A_0 plus a Gaussian perturbation of relative size eps.
template <typename Scalar>
LowRankMatrix<Scalar> perturbed_start(const ProblemSpec<Scalar>& p, Index r, double eps, std::mt19937_64& rng)
{
    Matrix<Scalar> g = gaussian<Scalar>(p.n, p.n, rng);
    g *= eps * frobenius_norm(p.initial) / frobenius_norm(g);
    return truncate(Matrix<Scalar>(p.initial + g), r);
}

inline std::mt19937_64 instance_rng(std::uint64_t seed, int index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index)};
    return std::mt19937_64(seq);
}

template <typename Scalar>
double galerkin_defect(const Matrix<Scalar>& f, const Matrix<Scalar>& left, const Matrix<Scalar>& right)
{
    return frobenius_norm(f - left * (left.adjoint() * f * right) * right.adjoint());
}

template <typename Scalar>
void galerkin_instance(const DiagnosticsConfig& cfg, const ProblemSpec<Scalar>& p, int index, GalerkinReport& out)
{
    auto rng = instance_rng(cfg.seed, index);
    GalerkinInstance inst;
    inst.index = index;
    if (cfg.tableau.empty()) {
        const auto names = method_tableaux();
        inst.tableau = names[std::uniform_int_distribution<std::size_t>(0, names.size() - 1)(rng)];
    } else {
        inst.tableau = cfg.tableau;
    }
    const double lo = std::log(cfg.h_min), hi = std::log(cfg.h_max);
    inst.h = std::exp(std::uniform_real_distribution<double>(lo, hi)(rng));
    inst.perturbation = cfg.perturbation * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto y = perturbed_start(p, cfg.r, inst.perturbation, rng);
    const auto tab = registry_get(inst.tableau);

    RkBugTrace<Scalar> trace;
    rk_bug_step(p.rhs, 0.0, y, inst.h, tab, &trace);

    auto check = [&](Index stage, Index block, const Matrix<Scalar>& left, const Matrix<Scalar>& right) {
        GalerkinCheck c;
        c.instance = inst;
        c.stage = stage;
        c.block = block;
        const auto& f = trace.stage_rhs[static_cast<std::size_t>(block - 1)];
        c.galerkin = galerkin_defect(f, left, right);
        c.tangent = frobenius_norm(f - tangent_project(trace.stage_states[static_cast<std::size_t>(block - 1)], f));
        ++out.checks;
        if (c.violation() > cfg.tolerance)
            ++out.violations;
        if (c.violation() > out.max_violation) {
            out.max_violation = c.violation();
            out.worst = c;
        }
    };
    const Index s = tab.stages();
    for (Index i = 1; i < s; ++i)
        for (Index j = 0; j < i; ++j)
            if (tab.alpha(i, j))
                check(i + 1, j + 1, trace.stage_left[static_cast<std::size_t>(i - 1)],
                      trace.stage_right[static_cast<std::size_t>(i - 1)]);
    for (Index j = 0; j < s; ++j)
        if (tab.beta(j))
            check(s + 1, j + 1, trace.final_left, trace.final_right);
    ++out.instances;
}

template <typename Scalar>
LadderReport residual_ladder(const DiagnosticsConfig& cfg, const ProblemSpec<Scalar>& p, const std::string& tableau)
{
    auto rng = instance_rng(cfg.seed, -1);
    const auto y = perturbed_start(p, cfg.r, cfg.perturbation, rng);
    const auto tab = registry_get(tableau);

    LadderReport out;
    out.tableau = tableau;
    for (int q = 0; q <= cfg.ladder_rungs; ++q) {
        const double h = std::ldexp(cfg.ladder_h, -q);
        out.h.push_back(h);
        out.residual.push_back(rk_bug_step(p.rhs, 0.0, y, h, tab).truncation_residual);
    }
    for (std::size_t q = 0; q + 1 < out.residual.size(); ++q) {
        const double prev = out.residual[q], next = out.residual[q + 1];
        out.ratio.push_back(prev > 0.0 ? next / prev : 0.0);
        out.checked.push_back(q > 0);
        if (q > 0 && next > cfg.ratio_limit * prev + cfg.residual_floor)
            out.passed = false;
    }
    return out;
}

} // namespace detail

} // namespace rkbug
