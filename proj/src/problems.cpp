#include "rkbug/problems.hpp"

namespace rkbug {

std::string to_string(ProblemKind k)
{
    switch (k) {
    case ProblemKind::allen_cahn: return "allen_cahn";
    case ProblemKind::lyapunov: return "lyapunov";
    case ProblemKind::schrodinger: return "schrodinger";
    }
    return "unknown";
}

ProblemKind parse_problem(const std::string& name)
{
    if (name == "allen_cahn")
        return ProblemKind::allen_cahn;
    if (name == "lyapunov")
        return ProblemKind::lyapunov;
    if (name == "schrodinger")
        return ProblemKind::schrodinger;
    throw ConfigError("unknown problem '" + name + "'; available: allen_cahn lyapunov schrodinger");
}

ProblemDefaults problem_defaults(ProblemKind k)
{
    switch (k) {
    case ProblemKind::allen_cahn: return {1e-2, 10.0};
    case ProblemKind::lyapunov: return {1e-5, 1.0};
    case ProblemKind::schrodinger: return {0.1, 5.0};
    }
    return {0.0, 1.0};
}

} // namespace rkbug
