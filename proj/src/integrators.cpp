#include "rkbug/integrators.hpp"

namespace rkbug {

std::string to_string(Method m)
{
    switch (m) {
    case Method::dense: return "dense";
    case Method::bug_euler: return "bug_euler";
    case Method::rk_bug: return "rk_bug";
    case Method::prk: return "prk";
    }
    return "unknown";
}

Method parse_method(const std::string& name)
{
    if (name == "dense")
        return Method::dense;
    if (name == "bug_euler")
        return Method::bug_euler;
    if (name == "rk_bug")
        return Method::rk_bug;
    if (name == "prk")
        return Method::prk;
    throw ConfigError("unknown method '" + name + "'; available: dense bug_euler rk_bug prk");
}

} // namespace rkbug
