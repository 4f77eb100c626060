#pragma once

#include "rkbug/errors.hpp"
#include "rkbug/integrators.hpp"
#include "rkbug/problems.hpp"
#include "rkbug/tableau.hpp"

#include <chrono>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace rkbug {

struct MethodSpec
{
    Method stepper = Method::rk_bug;
    std::string tableau = "rk2m";

    bool operator==(const MethodSpec&) const = default;
};

struct ProblemParams
{
    ProblemKind kind = ProblemKind::lyapunov;
    Index n = 64;
    double theta = 1e-5;
    double t_final = 1.0;

    bool operator==(const ProblemParams&) const = default;
};

struct StudyConfig
{
    ProblemParams problem;
    std::vector<MethodSpec> methods;
    std::vector<double> h_values;   // decreasing
    std::vector<Index> r_values;    // increasing
    double h_ref = 0.0;             // 0 selects min(h_values) / 10
    std::string output = "results";
    std::uint64_t seed = 1;
    int jobs = 1;
    bool record_runtime = true;
    std::vector<ButcherTableau> custom_tableaux;
};

/// Thresholds of the slope and plateau heuristics.
struct Heuristics
{
    double window_tolerance = 0.25;  // successive ratios within 25% of the window median
    double plateau_ratio = 1.3;      // error ratio per halving below which a point is h-independent
    double rank_slack = 2.0;         // allowed growth of the plateau between increasing ranks
    double precision_floor = 1e-9;
};

struct ConvergenceRecord
{
    std::string problem;
    double theta = 0.0;
    Index n = 0;
    std::string method;
    std::string tableau;
    double h = 0.0;
    Index r = 0;
    double error = 0.0;            // max_k ||Y_k - A_k||_F, k = 0..N_t
    double runtime_seconds = 0.0;
    double max_truncation_residual = 0.0;
    bool plateau = false;
    bool failed = false;           // blow-up; error is +inf
};

struct OrderEstimate
{
    double slope = 0.0;                  // NaN when every pair sits on the plateau
    double h_lo = 0.0;
    double h_hi = 0.0;
    std::optional<double> plateau_level;
    std::vector<double> h;               // usable points, h decreasing
    std::vector<bool> plateau_flags;     // aligned with h
};

struct RankPlateau
{
    Index r = 0;
    double level = 0.0;
    bool detected = false;  // false: no plateau seen, level is the smallest error (an upper bound)
};

/// Effective reference step (explicit h_ref or min(h) / 10).
double effective_h_ref(const StudyConfig& cfg);

/// Registry lookup that also searches the config's custom tableaux.
ButcherTableau lookup_tableau(const StudyConfig& cfg, const std::string& name);

/// Throws ConfigError on the first violated invariant.
void validate_config(const StudyConfig& cfg);

/// Least-squares slope of log(error) over log(h) on the largest window of
/// near-constant successive ratios, plus the level of the h-independent floor.
OrderEstimate estimate_order(std::span<const double> h, std::span<const double> error,
                             const Heuristics& heur = {});

/// Plateau level per rank for the records of one (method, tableau).
std::vector<RankPlateau> plateau_vs_rank(const std::vector<ConvergenceRecord>& records,
                                         const Heuristics& heur = {});

/// Non-increasing within the slack factor, or already below the precision floor.
bool plateaus_monotone(const std::vector<RankPlateau>& levels, const Heuristics& heur = {});

/// Sets ConvergenceRecord::plateau from estimate_order per (method, tableau, r).
void flag_plateaus(std::vector<ConvergenceRecord>& records, const Heuristics& heur = {});

std::string records_to_csv(const std::vector<ConvergenceRecord>& records);

/// Runs every (method, tableau, h, r) cell of the study against one shared
/// reference trajectory. Output order follows the config order and does not
/// depend on cfg.jobs.
std::vector<ConvergenceRecord> run_study(const StudyConfig& cfg);

struct TrajectoryRow
{
    long k = 0;
    double t = 0.0;
    double error = 0.0;
    double truncation_residual = 0.0;
    Index augmented_rank = 0;
};

/// Single (method, tableau, h, r) trajectory with per-step errors against the
/// reference; the config must hold exactly one of each.
std::vector<TrajectoryRow> run_single(const StudyConfig& cfg);

std::string trajectory_to_csv(const std::vector<TrajectoryRow>& rows);

namespace detail {

/// Calls fn(i) for i in [0, count) on up to `jobs` threads; rethrows the first error.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn)
{
    const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex guard;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers)
                    fn(i);
            } catch (...) {
                std::lock_guard lock(guard);
                if (!failure)
                    failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

/// Builds the problem and calls fn with it (real for Allen-Cahn and
/// Lyapunov, complex for Schrödinger).
template <typename Fn>
auto with_problem(const ProblemParams& p, Fn&& fn)
{
    switch (p.kind) {
    case ProblemKind::allen_cahn: return fn(make_allen_cahn<double>(p.n, p.theta, p.t_final));
    case ProblemKind::lyapunov: return fn(make_lyapunov<double>(p.n, p.theta, p.t_final));
    case ProblemKind::schrodinger: break;
    }
    return fn(make_schrodinger(p.n, p.theta, p.t_final));
}

template <typename Scalar>
struct Cell
{
    ConvergenceRecord record;
    long stride = 1;                   // in reference steps
    std::optional<Stepper<Scalar>> stepper;
};

} // namespace detail

template <typename Scalar>
std::vector<ConvergenceRecord> run_study(const StudyConfig& cfg, const ProblemSpec<Scalar>& problem)
{
    validate_config(cfg);
    const double h_ref = effective_h_ref(cfg);
    const double t_final = problem.t_final;
    const long total = step_count(0.0, t_final, h_ref);

    std::vector<long> strides;
    for (double h : cfg.h_values) {
        strides.push_back(step_count(0.0, h, h_ref));
        step_count(0.0, t_final, h);
    }
    long sample = 0, period = 1;
    for (long s : strides) {
        sample = std::gcd(sample, s);
        period = std::lcm(period, s);
    }
    // Grow the chunk while it still divides the horizon and holds few samples.
    long chunk = period;
    for (long f = 2; f * period <= total && f * period / sample <= 256; ++f)
        if (total % (f * period) == 0)
            chunk = f * period;

    using Clock = std::chrono::steady_clock;
    std::vector<detail::Cell<Scalar>> cells;
    for (const auto& m : cfg.methods) {
        const ButcherTableau tab = lookup_tableau(cfg, m.tableau);
        for (std::size_t hi = 0; hi < cfg.h_values.size(); ++hi) {
            for (Index r : cfg.r_values) {
                detail::Cell<Scalar> c;
                c.record.problem = to_string(problem.kind);
                c.record.theta = problem.theta;
                c.record.n = problem.n;
                c.record.method = to_string(m.stepper);
                c.record.tableau = m.stepper == Method::bug_euler ? std::string("euler") : m.tableau;
                c.record.h = cfg.h_values[hi];
                c.record.r = r;
                c.stride = strides[hi];
                const auto start = Clock::now();
                c.stepper.emplace(m.stepper, problem.rhs, tab, r, problem.initial, 0.0);
                c.record.error = frobenius_norm(c.stepper->dense_state() - problem.initial);
                if (cfg.record_runtime)
                    c.record.runtime_seconds += std::chrono::duration<double>(Clock::now() - start).count();
                cells.push_back(std::move(c));
            }
        }
    }

    const auto rkf = registry_get("rkf45-high");
    Matrix<Scalar> reference = problem.initial;
    std::vector<Matrix<Scalar>> samples;
    for (long begin = 0; begin < total; begin += chunk) {
        samples.clear();
        for (long q = 1; q <= chunk; ++q) {
            reference = dense_rk_step(problem.rhs, static_cast<double>(begin + q - 1) * h_ref, reference, h_ref, rkf);
            if (q % sample == 0)
                samples.push_back(reference);
        }
        detail::parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
            auto& c = cells[i];
            if (c.record.failed)
                return;
            const auto start = Clock::now();
            try {
                for (long p = 1; p * c.stride <= chunk; ++p) {
                    c.stepper->step(c.record.h);
                    const auto& ref = samples[static_cast<std::size_t>(p * c.stride / sample - 1)];
                    c.record.error = std::max(c.record.error, frobenius_norm(c.stepper->dense_state() - ref));
                    c.record.max_truncation_residual =
                        std::max(c.record.max_truncation_residual, c.stepper->last_truncation_residual());
                }
            } catch (const BlowUpError&) {
                c.record.failed = true;
                c.record.error = std::numeric_limits<double>::infinity();
                c.stepper.reset();
            }
            if (cfg.record_runtime)
                c.record.runtime_seconds += std::chrono::duration<double>(Clock::now() - start).count();
        });
    }

    std::vector<ConvergenceRecord> out;
    out.reserve(cells.size());
    for (auto& c : cells) {
        if (!c.record.failed && !std::isfinite(c.record.error)) {
            c.record.failed = true;
            c.record.error = std::numeric_limits<double>::infinity();
        }
        out.push_back(std::move(c.record));
    }
    flag_plateaus(out);
    return out;
}

template <typename Scalar>
std::vector<TrajectoryRow> run_single(const StudyConfig& cfg, const ProblemSpec<Scalar>& problem)
{
    validate_config(cfg);
    if (cfg.methods.size() != 1 || cfg.h_values.size() != 1 || cfg.r_values.size() != 1)
        throw ConfigError("run: exactly one method, step size and rank are required");
    const double h = cfg.h_values.front();
    const double h_ref = effective_h_ref(cfg);
    const long steps = step_count(0.0, problem.t_final, h);
    const long stride = step_count(0.0, h, h_ref);
    const auto& m = cfg.methods.front();

    Stepper<Scalar> stepper(m.stepper, problem.rhs, lookup_tableau(cfg, m.tableau), cfg.r_values.front(),
                            problem.initial, 0.0);
    const auto rkf = registry_get("rkf45-high");
    Matrix<Scalar> reference = problem.initial;

    std::vector<TrajectoryRow> rows;
    rows.reserve(steps + 1);
    rows.push_back({0, 0.0, frobenius_norm(stepper.dense_state() - reference), 0.0, 0});
    long ref_k = 0;
    for (long k = 1; k <= steps; ++k) {
        stepper.step(h);
        for (long p = 0; p < stride; ++p, ++ref_k)
            reference = dense_rk_step(problem.rhs, static_cast<double>(ref_k) * h_ref, reference, h_ref, rkf);
        rows.push_back({k, static_cast<double>(k) * h, frobenius_norm(stepper.dense_state() - reference),
                        stepper.last_truncation_residual(), stepper.last_augmented_rank()});
    }
    return rows;
}

} // namespace rkbug
