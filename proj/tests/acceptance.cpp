// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "oracles.hpp"

#include "rkbug/diagnostics.hpp"
#include "rkbug/harness.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace rkbug;
namespace fs = std::filesystem;

namespace {

struct Verdict
{
    bool passed = false;
    std::string detail;
};

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::vector<double> dyadic(double h0, int first, int last)
{
    std::vector<double> h;
    for (int q = first; q <= last; ++q)
        h.push_back(std::ldexp(h0, -q));
    return h;
}

std::vector<std::string> methods()
{
    return method_tableaux();
}

Verdict full_rank_equivalence()
{
    double worst = 0.0;
    bool ok = true;
    for (const auto& name : methods()) {
        const auto tab = registry_get(name);
        for (int seed = 0; seed < 20; ++seed) {
            std::mt19937_64 rng(1000 + seed);
            const auto f = oracle::random_rhs<Complex>(8, rng);
            const auto y = oracle::random_low_rank<Complex>(8, 8, 8, rng);
            const Matrix<Complex> dense = dense_rk_step(f, 0.0, densify(y), 0.1, tab);
            const double diff = (densify(rk_bug_step(f, 0.0, y, 0.1, tab).value) - dense).norm();
            const double scaled = diff / (1.0 + dense.norm());
            worst = std::max(worst, scaled);
            ok = ok && scaled <= 1e-9;
        }
    }
    return {ok, "max |rk_bug - dense| / (1 + |dense|) = " + sci(worst) + " over 120 steps"};
}

Verdict euler_specialization()
{
    double worst = 0.0;
    for (int seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(2000 + seed);
        const auto f = oracle::random_rhs<double>(10, rng);
        const auto y = oracle::random_low_rank<double>(10, 10, 3, rng);
        const auto a = rk_bug_step(f, 0.0, y, 0.05, registry_get("euler"));
        const auto b = bug_euler_step(f, 0.0, y, 0.05);
        worst = std::max(worst, (densify(a.value) - densify(b.value)).norm());
    }
    return {worst <= 1e-12, "max difference " + sci(worst) + " over 50 steps"};
}

Verdict eckart_young()
{
    double tail_gap = 0.0, margin = std::numeric_limits<double>::infinity();
    for (int seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(3000 + seed);
        const Index n = 6 + seed % 5, m = 5 + seed % 4, r = 1 + seed % 4;
        const Eigen::MatrixXd x = oracle::random_matrix<double>(n, m, rng);
        const auto t = truncate_with_residual(x, r);
        const double err = (x - densify(t.value)).norm();
        Eigen::JacobiSVD<Eigen::MatrixXd> jac(x);
        const Eigen::VectorXd sigma = jac.singularValues();
        const double tail = sigma.tail(sigma.size() - r).norm();
        tail_gap = std::max({tail_gap, std::abs(err - tail), std::abs(t.residual - tail)});
        for (int k = 0; k < 1000; ++k) {
            const Eigen::MatrixXd z = oracle::random_matrix<double>(n, r, rng) * oracle::random_matrix<double>(r, m, rng);
            margin = std::min(margin, (x - z).norm() - err);
        }
    }
    return {tail_gap <= 1e-10 && margin >= 0.0,
            "max |error - tail sigma| = " + sci(tail_gap) + ", min competitor margin " + sci(margin)};
}

Verdict galerkin()
{
    bool ok = true;
    std::string detail;
    for (auto kind : {ProblemKind::lyapunov, ProblemKind::allen_cahn, ProblemKind::schrodinger}) {
        DiagnosticsConfig cfg;
        cfg.problem = {kind, 32, kind == ProblemKind::lyapunov ? 1.0 : problem_defaults(kind).theta, 1.0};
        const auto rep = galerkin_sweep(cfg);
        ok = ok && rep.passed() && rep.instances == 100;
        detail += (detail.empty() ? "" : "; ") + to_string(kind) + ": " + std::to_string(rep.violations) + "/"
                  + std::to_string(rep.checks) + " violations, max " + sci(rep.max_violation);
    }
    return {ok, detail};
}

Verdict residual_scaling()
{
    DiagnosticsConfig cfg;
    bool ok = true;
    double worst = 0.0;
    for (const auto& name : methods()) {
        const auto ladder = residual_ladder(cfg, name);
        ok = ok && ladder.passed;
        for (std::size_t q = 0; q < ladder.ratio.size(); ++q)
            if (ladder.checked[q])
                worst = std::max(worst, ladder.ratio[q]);
    }
    return {ok, "largest checked ratio " + sci(worst) + " (h from " + sci(cfg.ladder_h) + ", "
                    + std::to_string(cfg.ladder_rungs) + " halvings, six tableaux)"};
}

Verdict convergence_orders()
{
    StudyConfig cfg;
    cfg.problem = {ProblemKind::lyapunov, 64, 1e-5, 1.0};
    cfg.methods = {{Method::bug_euler, "euler"}, {Method::rk_bug, "rk2m"}, {Method::rk_bug, "rk2h"},
                   {Method::rk_bug, "rk3s"}, {Method::rk_bug, "rk3h"}, {Method::rk_bug, "rk4"}};
    cfg.h_values = dyadic(1e-3, 0, 4);
    cfg.r_values = {5};
    cfg.record_runtime = false;
    const auto recs = run_study(cfg);

    bool ok = true;
    std::string detail;
    for (const auto& m : cfg.methods) {
        std::vector<double> h, e;
        for (const auto& r : recs)
            if (r.tableau == m.tableau) {
                h.push_back(r.h);
                e.push_back(r.error);
            }
        const auto tab = registry_get(m.tableau);
        const double tol = tab.order == 4 ? 0.5 : 0.3;
        double slope = std::numeric_limits<double>::quiet_NaN();
        try {
            slope = estimate_order(h, e).slope;
        } catch (const Error&) {
        }
        ok = ok && std::abs(slope - tab.order) <= tol;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s %.2f", m.tableau.c_str(), slope);
        detail += (detail.empty() ? "slopes " : ", ") + std::string(buf);
    }
    return {ok, detail};
}

Verdict plateau_vs_rank_check()
{
    StudyConfig ranks;
    ranks.problem = {ProblemKind::allen_cahn, 64, 1e-2, 2.0};
    ranks.methods = {{Method::rk_bug, "rk2m"}};
    ranks.h_values = dyadic(0.1, 0, 8);
    ranks.r_values = {5, 10, 20};
    ranks.record_runtime = false;
    ranks.jobs = 4;
    auto recs = run_study(ranks);

    StudyConfig full = ranks;
    full.h_values = dyadic(0.1, 7, 11);
    full.r_values = {64};
    const auto full_recs = run_study(full);
    recs.insert(recs.end(), full_recs.begin(), full_recs.end());

    const auto levels = plateau_vs_rank(recs);
    const bool monotone = plateaus_monotone(levels);
    const double full_level = levels.back().level;
    std::string detail;
    for (const auto& l : levels)
        detail += (detail.empty() ? "" : ", ") + std::string("r=") + std::to_string(l.r) + " " + sci(l.level)
                  + (l.detected ? "" : " (no plateau, smallest error)");
    return {monotone && full_level <= 1e-8, detail};
}

Verdict reference_consistency()
{
    bool ok = true;
    std::string detail;
    for (auto kind : {ProblemKind::lyapunov, ProblemKind::allen_cahn, ProblemKind::schrodinger}) {
        const double t_final = kind == ProblemKind::allen_cahn ? 2.0 : problem_defaults(kind).t_final;
        const ProblemParams params{kind, 32, problem_defaults(kind).theta, t_final};
        const double change = detail::with_problem(params, [&](const auto& p) {
            const auto coarse = reference_solve(p.rhs, 0.0, p.initial, t_final, 1e-3, t_final);
            const auto fine = reference_solve(p.rhs, 0.0, p.initial, t_final, 5e-4, t_final);
            return frobenius_norm(densify(coarse.back().state) - densify(fine.back().state));
        });
        ok = ok && change < 1e-10;
        detail += (detail.empty() ? "" : "; ") + to_string(kind) + " " + sci(change);
    }
    return {ok, detail + " (h_ref 1e-3 vs 5e-4)"};
}

Verdict rank_bound()
{
    long steps = 0;
    double worst = 0.0;
    bool ok = true;
    for (auto kind : {ProblemKind::lyapunov, ProblemKind::allen_cahn, ProblemKind::schrodinger}) {
        const ProblemParams params{kind, 32, kind == ProblemKind::lyapunov ? 1.0 : problem_defaults(kind).theta, 1.0};
        detail::with_problem(params, [&](const auto& p) {
            using Scalar = typename std::decay_t<decltype(p.initial)>::Scalar;
            for (const auto& name : methods()) {
                const auto tab = registry_get(name);
                const Index s = tab.stages();
                for (Index r : {1, 4, 9}) {
                    auto y = truncate(p.initial, r);
                    for (int k = 0; k < 10; ++k) {
                        RkBugTrace<Scalar> trace;
                        auto out = rk_bug_step(p.rhs, 1e-3 * k, y, 1e-3, tab, &trace);
                        for (std::size_t i = 0; i < trace.stage_left.size(); ++i) {
                            const Index bound = 2 * r * static_cast<Index>(i + 1);
                            ok = ok && trace.stage_left[i].cols() <= bound && trace.stage_right[i].cols() <= bound;
                        }
                        ok = ok && out.augmented_rank_used <= 2 * r * s;
                        worst = std::max(worst, static_cast<double>(out.augmented_rank_used) / (2.0 * r * s));
                        y = std::move(out.value);
                        ++steps;
                    }
                }
            }
            return 0;
        });
    }
    return {ok, std::to_string(steps) + " steps, largest augmented rank / 2rs = " + sci(worst)};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Verdict determinism()
{
    const auto root = fs::temp_directory_path() / "rkbug_acceptance_jobs";
    fs::remove_all(root);
    const std::string common = std::string(RKBUG_CLI)
                               + " convergence --problem allen_cahn --n 32 --t-final 0.5 --h 0.05,0.025,0.0125 "
                                 "--r 5,10 --no-timing --output ";
    std::string csv[2];
    int i = 0;
    for (int jobs : {1, 4}) {
        const fs::path dir = root / ("jobs" + std::to_string(jobs));
        const std::string cmd = common + dir.string() + " --jobs " + std::to_string(jobs) + " >/dev/null";
        const int status = std::system(cmd.c_str());
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
            return {false, "convergence command failed with --jobs " + std::to_string(jobs)};
        csv[i++] = slurp(dir / "convergence.csv");
    }
    fs::remove_all(root);
    const bool same = !csv[0].empty() && csv[0] == csv[1];
    return {same, std::to_string(csv[0].size()) + " bytes, " + (same ? "identical" : "different")};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"full-rank equivalence", full_rank_equivalence},
        {"Euler specialization", euler_specialization},
        {"best approximation", eckart_young},
        {"Galerkin versus tangent projection", galerkin},
        {"truncation residual scaling", residual_scaling},
        {"convergence orders", convergence_orders},
        {"plateau versus rank", plateau_vs_rank_check},
        {"reference self-consistency", reference_consistency},
        {"augmented rank bound", rank_bound},
        {"thread-count determinism", determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += v.passed ? 0 : 1;
        std::printf("%s %2zu %s: %s [%.1f s]\n", v.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
