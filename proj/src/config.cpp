#include "rkbug/config.hpp"

#include <Eigen/Core>

#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#ifndef RKBUG_VERSION
#define RKBUG_VERSION "unknown"
#endif

namespace rkbug {

namespace {

std::vector<double> dyadic(double h_max, int count)
{
    std::vector<double> h;
    for (int q = 0; q < count; ++q)
        h.push_back(std::ldexp(h_max, -q));
    return h;
}

std::vector<MethodSpec> rk_bug_methods()
{
    std::vector<MethodSpec> m;
    for (const char* t : {"rk2m", "rk2h", "rk3s", "rk3h", "rk4"})
        m.push_back({Method::rk_bug, t});
    return m;
}

template <typename T>
T get_as(const Json& doc, const char* key)
{
    try {
        return doc.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

void reject_unknown(const Json& doc, const std::set<std::string>& allowed, const std::string& where)
{
    if (!doc.is_object())
        throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : doc.items())
        if (!allowed.contains(key))
            throw ConfigError(where + ": unknown key '" + key + "'");
}

} // namespace

StudyConfig default_study(ProblemKind kind, bool full)
{
    StudyConfig cfg;
    const auto defaults = problem_defaults(kind);
    cfg.problem = {kind, full ? 128 : 64, defaults.theta, defaults.t_final};
    cfg.methods = rk_bug_methods();
    switch (kind) {
    case ProblemKind::allen_cahn:
        if (!full)
            cfg.problem.t_final = 2.0;
        cfg.h_values = dyadic(0.1, 7);
        cfg.r_values = {5, 10, 20};
        break;
    case ProblemKind::lyapunov:
        cfg.h_values = full ? dyadic(1.0 / 2000.0, 5) : dyadic(1.0 / 1000.0, 5);
        cfg.r_values = {5};
        break;
    case ProblemKind::schrodinger:
        cfg.h_values = dyadic(0.1, 6);
        cfg.r_values = {5, 10, 15};
        break;
    }
    return cfg;
}

Json tableau_to_json(const ButcherTableau& tab)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < tab.stages(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < i; ++j)
            row.push_back(tab.a(i, j));
        rows.push_back(row);
    }
    return {{"name", tab.name},
            {"A", rows},
            {"b", std::vector<double>(tab.b.data(), tab.b.data() + tab.b.size())},
            {"c", std::vector<double>(tab.c.data(), tab.c.data() + tab.c.size())},
            {"order", tab.order}};
}

ButcherTableau tableau_from_json(const Json& doc)
{
    reject_unknown(doc, {"name", "A", "b", "c", "order"}, "tableau");
    const auto name = get_as<std::string>(doc, "name");
    const auto rows = get_as<std::vector<std::vector<double>>>(doc, "A");
    const auto b = get_as<std::vector<double>>(doc, "b");
    const auto c = get_as<std::vector<double>>(doc, "c");
    const int order = get_as<int>(doc, "order");

    const auto s = static_cast<Eigen::Index>(b.size());
    if (static_cast<Eigen::Index>(rows.size()) != s || static_cast<Eigen::Index>(c.size()) != s)
        throw ConfigError("tableau '" + name + "': A, b and c disagree on the number of stages");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(s, s);
    for (Eigen::Index i = 0; i < s; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) > s)
            throw ConfigError("tableau '" + name + "': row of A longer than the stage count");
        for (std::size_t j = 0; j < row.size(); ++j)
            a(i, static_cast<Eigen::Index>(j)) = row[j];
    }
    return make_tableau(name, a, Eigen::Map<const Eigen::VectorXd>(b.data(), s),
                        Eigen::Map<const Eigen::VectorXd>(c.data(), s), order);
}

StudyConfig study_from_json(const Json& doc)
{
    reject_unknown(doc, {"problem", "methods", "h_values", "r_values", "h_ref", "output", "seed", "jobs",
                         "record_runtime", "tableaux"},
                   "config");
    if (!doc.contains("problem"))
        throw ConfigError("config: missing 'problem'");
    const Json& p = doc.at("problem");
    reject_unknown(p, {"kind", "n", "theta", "t_final"}, "problem");
    const auto kind = parse_problem(get_as<std::string>(p, "kind"));

    StudyConfig cfg = default_study(kind);
    if (p.contains("n"))
        cfg.problem.n = get_as<Index>(p, "n");
    if (p.contains("theta"))
        cfg.problem.theta = get_as<double>(p, "theta");
    if (p.contains("t_final"))
        cfg.problem.t_final = get_as<double>(p, "t_final");

    if (doc.contains("methods")) {
        cfg.methods.clear();
        if (!doc.at("methods").is_array())
            throw ConfigError("config key 'methods': expected an array");
        for (const auto& m : doc.at("methods")) {
            reject_unknown(m, {"stepper", "tableau"}, "method");
            MethodSpec spec;
            spec.stepper = parse_method(get_as<std::string>(m, "stepper"));
            spec.tableau = m.contains("tableau") ? get_as<std::string>(m, "tableau") : std::string("euler");
            cfg.methods.push_back(spec);
        }
    }
    if (doc.contains("h_values"))
        cfg.h_values = get_as<std::vector<double>>(doc, "h_values");
    if (doc.contains("r_values"))
        cfg.r_values = get_as<std::vector<Index>>(doc, "r_values");
    if (doc.contains("h_ref"))
        cfg.h_ref = get_as<double>(doc, "h_ref");
    if (doc.contains("output"))
        cfg.output = get_as<std::string>(doc, "output");
    if (doc.contains("seed"))
        cfg.seed = get_as<std::uint64_t>(doc, "seed");
    if (doc.contains("jobs"))
        cfg.jobs = get_as<int>(doc, "jobs");
    if (doc.contains("record_runtime"))
        cfg.record_runtime = get_as<bool>(doc, "record_runtime");
    if (doc.contains("tableaux")) {
        if (!doc.at("tableaux").is_array())
            throw ConfigError("config key 'tableaux': expected an array");
        for (const auto& t : doc.at("tableaux"))
            cfg.custom_tableaux.push_back(tableau_from_json(t));
    }
    return cfg;
}

Json to_json(const StudyConfig& cfg)
{
    Json methods = Json::array();
    for (const auto& m : cfg.methods)
        methods.push_back({{"stepper", to_string(m.stepper)}, {"tableau", m.tableau}});
    Json tableaux = Json::array();
    for (const auto& t : cfg.custom_tableaux)
        tableaux.push_back(tableau_to_json(t));
    return {{"problem",
             {{"kind", to_string(cfg.problem.kind)},
              {"n", cfg.problem.n},
              {"theta", cfg.problem.theta},
              {"t_final", cfg.problem.t_final}}},
            {"methods", methods},
            {"h_values", cfg.h_values},
            {"r_values", cfg.r_values},
            {"h_ref", cfg.h_ref},
            {"output", cfg.output},
            {"seed", cfg.seed},
            {"jobs", cfg.jobs},
            {"record_runtime", cfg.record_runtime},
            {"tableaux", tableaux}};
}

StudyConfig load_study(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path.string() + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path.string() + "': " + e.what());
    }
    return study_from_json(doc);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out)
            throw Error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

Json build_metadata()
{
    std::ostringstream compiler;
#if defined(__clang__)
    compiler << "clang " << __clang_major__ << "." << __clang_minor__;
#elif defined(__GNUC__)
    compiler << "gcc " << __GNUC__ << "." << __GNUC_MINOR__;
#else
    compiler << "unknown";
#endif
    std::ostringstream eigen;
    eigen << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION;
#if defined(__linux__)
    const char* os = "linux";
#elif defined(__APPLE__)
    const char* os = "macos";
#else
    const char* os = "other";
#endif
    return {{"version", RKBUG_VERSION}, {"compiler", compiler.str()}, {"eigen", eigen.str()}, {"os", os}};
}

} // namespace rkbug
