#include "rkbug/diagnostics.hpp"

namespace rkbug {

namespace {

void validate_diagnostics(const DiagnosticsConfig& cfg)
{
    if (cfg.problem.n < 4)
        throw ConfigError("problem size n must be at least 4");
    if (cfg.r < 1 || cfg.r > cfg.problem.n)
        throw ConfigError("ranks must lie in [1, n]");
    if (cfg.instances < 0)
        throw ConfigError("instance count must be nonnegative");
    if (!(cfg.h_min > 0.0) || !(cfg.h_max >= cfg.h_min))
        throw ConfigError("diagnostic step range must satisfy 0 < h_min <= h_max");
    if (!(cfg.ladder_h > 0.0) || cfg.ladder_rungs < 2)
        throw ConfigError("residual ladder needs a positive first step and at least two halvings");
    if (!cfg.tableau.empty())
        registry_get(cfg.tableau);
}

} // namespace

std::vector<std::string> method_tableaux()
{
    std::vector<std::string> out;
    for (const auto& name : registry_names())
        if (name != "rkf45-high")
            out.push_back(name);
    return out;
}

GalerkinReport galerkin_sweep(const DiagnosticsConfig& cfg)
{
    validate_diagnostics(cfg);
    return detail::with_problem(cfg.problem, [&](const auto& p) {
        GalerkinReport out;
        for (int i = 0; i < cfg.instances; ++i)
            detail::galerkin_instance(cfg, p, i, out);
        return out;
    });
}

GalerkinReport galerkin_replay(const DiagnosticsConfig& cfg, int index)
{
    validate_diagnostics(cfg);
    return detail::with_problem(cfg.problem, [&](const auto& p) {
        GalerkinReport out;
        detail::galerkin_instance(cfg, p, index, out);
        return out;
    });
}

LadderReport residual_ladder(const DiagnosticsConfig& cfg, const std::string& tableau)
{
    validate_diagnostics(cfg);
    return detail::with_problem(cfg.problem,
                                [&](const auto& p) { return detail::residual_ladder(cfg, p, tableau); });
}

} // namespace rkbug
