#include "rkbug/config.hpp"
#include "rkbug/diagnostics.hpp"
#include "rkbug/harness.hpp"
#include "rkbug/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace rkbug;

namespace {

enum Exit { ok = 0, check_failed = 1, usage = 2, blow_up = 3 };

struct Overrides
{
    std::string config;
    std::optional<std::string> problem;
    std::optional<double> theta;
    std::optional<Index> n;
    std::optional<double> t_final;
    std::optional<std::string> method;
    std::optional<std::string> tableau;
    std::vector<std::string> methods;
    std::vector<double> h;
    std::vector<Index> r;
    std::optional<double> h_ref;
    std::optional<std::string> output;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    bool full = false;
    bool no_timing = false;
    bool dump_config = false;
};

struct DiagnosticOptions
{
    std::optional<int> instances;
    std::optional<double> ladder_h;
    std::optional<int> rungs;
};

void add_study_options(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "JSON study configuration")->check(CLI::ExistingFile);
    cmd->add_option("--problem", o.problem, "allen_cahn, lyapunov or schrodinger");
    cmd->add_option("--theta", o.theta, "problem parameter");
    cmd->add_option("--n", o.n, "grid size");
    cmd->add_option("--t-final", o.t_final, "final time");
    cmd->add_option("--method", o.method, "dense, bug_euler, rk_bug or prk");
    cmd->add_option("--tableau", o.tableau, "Butcher tableau name");
    cmd->add_option("--methods", o.methods, "stepper:tableau pairs")->delimiter(',');
    cmd->add_option("--h", o.h, "step sizes, decreasing")->delimiter(',');
    cmd->add_option("--r", o.r, "ranks, increasing")->delimiter(',');
    cmd->add_option("--h-ref", o.h_ref, "reference step (default min(h) / 10)");
    cmd->add_option("--output", o.output, "output directory");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--jobs", o.jobs, "worker threads");
    cmd->add_flag("--full", o.full, "full benchmark defaults (n = 128, long horizons)");
    cmd->add_flag("--no-timing", o.no_timing, "write 0 to runtime_s for reproducible output");
    cmd->add_flag("--dump-config", o.dump_config, "print the effective configuration and exit");
}

MethodSpec parse_method_spec(const std::string& text)
{
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ConfigError("method '" + text + "' must have the form stepper:tableau");
    return {parse_method(text.substr(0, colon)), text.substr(colon + 1)};
}

StudyConfig effective_config(const Overrides& o)
{
    if (o.full && !o.config.empty())
        throw ConfigError("--full selects built-in defaults and cannot be combined with --config");

    StudyConfig cfg;
    if (!o.config.empty()) {
        cfg = load_study(o.config);
        if (o.problem)
            cfg.problem.kind = parse_problem(*o.problem);
    } else {
        cfg = default_study(o.problem ? parse_problem(*o.problem) : ProblemKind::lyapunov, o.full);
    }

    if (o.theta)
        cfg.problem.theta = *o.theta;
    if (o.n)
        cfg.problem.n = *o.n;
    if (o.t_final)
        cfg.problem.t_final = *o.t_final;

    if (!o.methods.empty()) {
        if (o.method || o.tableau)
            throw ConfigError("--methods cannot be combined with --method or --tableau");
        cfg.methods.clear();
        for (const auto& m : o.methods)
            cfg.methods.push_back(parse_method_spec(m));
    } else if (o.method || o.tableau) {
        const Method stepper = o.method ? parse_method(*o.method) : Method::rk_bug;
        if (o.tableau) {
            cfg.methods = {{stepper, *o.tableau}};
        } else if (stepper == Method::bug_euler) {
            cfg.methods = {{stepper, "euler"}};
        } else {
            for (auto& m : cfg.methods)
                m.stepper = stepper;
        }
    }

    if (!o.h.empty())
        cfg.h_values = o.h;
    if (!o.r.empty())
        cfg.r_values = o.r;
    if (o.h_ref)
        cfg.h_ref = *o.h_ref;
    if (o.output)
        cfg.output = *o.output;
    if (o.seed)
        cfg.seed = *o.seed;
    if (o.jobs)
        cfg.jobs = *o.jobs;
    if (o.no_timing)
        cfg.record_runtime = false;

    for (const auto& m : cfg.methods)
        lookup_tableau(cfg, m.tableau);
    return cfg;
}

Json sidecar(const StudyConfig& cfg)
{
    return {{"config", to_json(cfg)}, {"build", build_metadata()}};
}

Json json_number(double v)
{
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

int cmd_run(const StudyConfig& cfg)
{
    if (cfg.methods.size() != 1 || cfg.h_values.size() != 1 || cfg.r_values.size() != 1)
        throw ConfigError("run needs exactly one method (--method/--tableau), one --h and one --r");
    const auto rows = run_single(cfg);

    double max_error = 0.0, max_residual = 0.0;
    Index max_rank = 0;
    for (const auto& row : rows) {
        max_error = std::max(max_error, row.error);
        max_residual = std::max(max_residual, row.truncation_residual);
        max_rank = std::max(max_rank, row.augmented_rank);
    }
    const fs::path dir = cfg.output;
    write_file_atomic(dir / "run.csv", trajectory_to_csv(rows));
    Json summary = sidecar(cfg);
    summary["steps"] = rows.size() - 1;
    summary["final_error"] = json_number(rows.back().error);
    summary["max_error"] = json_number(max_error);
    summary["max_trunc_residual"] = json_number(max_residual);
    summary["max_augmented_rank"] = max_rank;
    write_file_atomic(dir / "run.json", summary.dump(2) + "\n");

    std::cout << "steps " << rows.size() - 1 << ", final error " << rows.back().error << ", max error "
              << max_error << "\nwrote " << (dir / "run.csv").string() << "\n";
    return ok;
}

int cmd_convergence(const StudyConfig& cfg)
{
    const auto records = run_study(cfg);

    Json estimates = Json::array();
    std::vector<std::pair<std::string, std::string>> seen;
    for (const auto& rec : records) {
        const std::pair key{rec.method, rec.tableau};
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            continue;
        seen.push_back(key);
        std::vector<ConvergenceRecord> group;
        for (const auto& other : records)
            if (other.method == rec.method && other.tableau == rec.tableau)
                group.push_back(other);

        Json ranks = Json::array();
        for (Index r : cfg.r_values) {
            std::vector<double> h, e;
            for (const auto& g : group)
                if (g.r == r) {
                    h.push_back(g.h);
                    e.push_back(g.error);
                }
            Json entry = {{"r", r}};
            try {
                const auto est = estimate_order(h, e);
                entry["slope"] = json_number(est.slope);
                entry["window"] = {est.h_lo, est.h_hi};
                entry["plateau"] = est.plateau_level ? Json(*est.plateau_level) : Json(nullptr);
            } catch (const Error& err) {
                entry["slope"] = nullptr;
                entry["note"] = err.what();
            }
            ranks.push_back(entry);
        }
        const auto plateaus = plateau_vs_rank(group);
        estimates.push_back({{"method", rec.method},
                             {"tableau", rec.tableau},
                             {"ranks", ranks},
                             {"plateaus_monotone", plateaus_monotone(plateaus)}});

        std::cout << rec.method << "/" << rec.tableau << ":";
        for (const auto& entry : ranks) {
            std::cout << "  r=" << entry["r"].get<Index>() << " slope=";
            if (entry["slope"].is_number())
                std::cout << std::setprecision(3) << entry["slope"].get<double>();
            else
                std::cout << "n/a";
        }
        std::cout << "\n";
    }

    const fs::path dir = cfg.output;
    write_file_atomic(dir / "convergence.csv", records_to_csv(records));
    Json meta = sidecar(cfg);
    meta["h_ref"] = effective_h_ref(cfg);
    meta["estimates"] = estimates;
    write_file_atomic(dir / "convergence.json", meta.dump(2) + "\n");
    write_file_atomic(dir / "convergence.gp", gnuplot_script(records, cfg, "convergence.csv"));
    std::cout << "wrote " << (dir / "convergence.csv").string() << " (" << records.size() << " records)\n";
    return ok;
}

Json check_to_json(const GalerkinCheck& c)
{
    return {{"instance", c.instance.index},
            {"tableau", c.instance.tableau},
            {"h", c.instance.h},
            {"perturbation", c.instance.perturbation},
            {"stage", c.stage},
            {"block", c.block},
            {"galerkin_defect", c.galerkin},
            {"tangent_defect", c.tangent}};
}

int cmd_diagnostics(const StudyConfig& cfg, const Overrides& o, const DiagnosticOptions& d)
{
    DiagnosticsConfig dc;
    dc.problem = cfg.problem;
    if (o.tableau)
        dc.tableau = *o.tableau;
    dc.r = cfg.r_values.front();
    dc.seed = cfg.seed;
    if (d.instances)
        dc.instances = *d.instances;
    if (d.ladder_h)
        dc.ladder_h = *d.ladder_h;
    if (d.rungs)
        dc.ladder_rungs = *d.rungs;

    const auto sweep = galerkin_sweep(dc);
    std::cout << "galerkin sweep: " << sweep.instances << " steps, " << sweep.checks << " checks, "
              << sweep.violations << " violations, max violation " << sweep.max_violation << "\n";

    Json report = {{"problem", to_json(cfg)["problem"]}, {"r", dc.r}, {"seed", dc.seed}, {"build", build_metadata()}};
    report["galerkin"] = {{"instances", sweep.instances},
                          {"checks", sweep.checks},
                          {"violations", sweep.violations},
                          {"max_violation", json_number(sweep.max_violation)},
                          {"tolerance", dc.tolerance}};
    bool passed = sweep.passed();
    if (!sweep.passed() && sweep.worst) {
        report["galerkin"]["offending"] = check_to_json(*sweep.worst);
        std::cerr << "galerkin check failed; replay with --seed " << dc.seed << ":\n"
                  << check_to_json(*sweep.worst).dump() << "\n";
    }

    Json ladders = Json::array();
    const auto names = dc.tableau.empty() ? method_tableaux() : std::vector<std::string>{dc.tableau};
    for (const auto& name : names) {
        const auto ladder = residual_ladder(dc, name);
        passed = passed && ladder.passed;
        std::cout << "residual ladder " << name << (ladder.passed ? " ok:" : " FAILED:");
        for (double q : ladder.ratio)
            std::cout << " " << std::setprecision(3) << q;
        std::cout << "\n";
        Json rows = Json::array();
        for (std::size_t i = 0; i < ladder.h.size(); ++i)
            rows.push_back({{"h", ladder.h[i]}, {"residual", ladder.residual[i]}});
        ladders.push_back({{"tableau", name}, {"rungs", rows}, {"ratios", ladder.ratio}, {"passed", ladder.passed}});
        if (!ladder.passed)
            std::cerr << "residual ladder failed for " << name << ":\n" << ladders.back().dump() << "\n";
    }
    report["ladder"] = {{"ratio_limit", dc.ratio_limit}, {"results", ladders}};
    report["passed"] = passed;
    write_file_atomic(fs::path(cfg.output) / "diagnostics.json", report.dump(2) + "\n");
    return passed ? ok : check_failed;
}

int cmd_tableaux()
{
    for (const auto& name : registry_names()) {
        const auto tab = registry_get(name);
        const auto issues = validate(tab);
        std::cout << tab.name << ": stages " << tab.stages() << ", order " << tab.order
                  << (issues.empty() ? "" : ", INVALID") << "\n";
        std::cout << tableau_to_json(tab).dump() << "\n";
    }
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Runge-Kutta basis-update Galerkin integrators for matrix ODEs"};
    app.set_help_flag("--help", "print this help message and exit");
    app.require_subcommand(1);
    app.set_version_flag("--version", build_metadata()["version"].get<std::string>());

    Overrides run_o, conv_o, diag_o;
    DiagnosticOptions diag_d;
    auto* run = app.add_subcommand("run", "single trajectory with per-step errors against the reference");
    add_study_options(run, run_o);
    auto* conv = app.add_subcommand("convergence", "error study over step sizes and ranks");
    add_study_options(conv, conv_o);
    auto* diag = app.add_subcommand("diagnostics", "Galerkin-versus-tangent sweep and residual ladder");
    add_study_options(diag, diag_o);
    diag->add_option("--instances", diag_d.instances, "random steps in the Galerkin sweep");
    diag->add_option("--ladder-h", diag_d.ladder_h, "first step of the residual ladder");
    diag->add_option("--rungs", diag_d.rungs, "halvings in the residual ladder");
    auto* tabs = app.add_subcommand("tableaux", "list the registered Butcher tableaux");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : usage;
    }

    try {
        if (tabs->parsed())
            return cmd_tableaux();
        const bool is_run = run->parsed(), is_conv = conv->parsed();
        const Overrides& o = is_run ? run_o : is_conv ? conv_o : diag_o;
        StudyConfig cfg = effective_config(o);
        if (!is_run && !is_conv) {
            // the diagnostics sweep works at n = 32 unless asked otherwise
            if (o.config.empty() && !o.n)
                cfg.problem.n = 32;
            if (o.config.empty() && !o.theta && cfg.problem.kind == ProblemKind::lyapunov)
                cfg.problem.theta = 1.0;
            if (o.config.empty() && o.r.empty())
                cfg.r_values = {5};
        }
        validate_config(cfg);
        if (o.dump_config) {
            std::cout << to_json(cfg).dump(2) << "\n";
            return ok;
        }
        if (is_run)
            return cmd_run(cfg);
        if (is_conv)
            return cmd_convergence(cfg);
        return cmd_diagnostics(cfg, o, diag_d);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const BlowUpError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return blow_up;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return check_failed;
    }
}
