#include "rkbug/tableau.hpp"

#include "rkbug/errors.hpp"

#include <cmath>
#include <sstream>

namespace rkbug {

namespace {

constexpr double kTol = 1e-14;

ButcherTableau lower(std::string name, std::initializer_list<std::initializer_list<double>> rows,
                     std::initializer_list<double> b, std::initializer_list<double> c, int order)
{
    const auto s = static_cast<Eigen::Index>(b.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(s, s);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (double v : row)
            a(i, j++) = v;
        ++i;
    }
    return make_tableau(std::move(name), std::move(a),
                        Eigen::Map<const Eigen::VectorXd>(b.begin(), s),
                        Eigen::Map<const Eigen::VectorXd>(c.begin(), s), order);
}

} // namespace

ButcherTableau make_tableau(std::string name, Eigen::MatrixXd a, Eigen::VectorXd b,
                            Eigen::VectorXd c, int order)
{
    ButcherTableau t;
    t.name = std::move(name);
    t.a = std::move(a);
    t.b = std::move(b);
    t.c = std::move(c);
    t.order = order;
    t.alpha = t.a.array() != 0.0;
    t.beta = t.b.array() != 0.0;
    return t;
}

std::vector<std::string> validate(const ButcherTableau& tab)
{
    std::vector<std::string> out;
    const Eigen::Index s = tab.stages();
    if (s < 1)
        out.emplace_back("no stages");
    if (tab.a.rows() != s || tab.a.cols() != s || tab.c.size() != s) {
        out.emplace_back("shape: A, b and c must describe the same number of stages");
        return out;
    }
    if (tab.order < 1)
        out.emplace_back("order must be positive");
    if (!tab.a.allFinite() || !tab.b.allFinite() || !tab.c.allFinite())
        out.emplace_back("non-finite coefficient");

    for (Eigen::Index i = 0; i < s; ++i) {
        for (Eigen::Index j = i; j < s; ++j) {
            if (tab.a(i, j) != 0.0) {
                std::ostringstream msg;
                msg << "not strictly lower triangular at (" << i + 1 << "," << j + 1 << ")";
                out.push_back(msg.str());
            }
        }
    }

    const double sum_b = tab.b.sum();
    if (std::abs(sum_b - 1.0) > kTol) {
        std::ostringstream msg;
        msg << "consistency: Σb = " << sum_b;
        out.push_back(msg.str());
    }

    for (Eigen::Index i = 0; i < s; ++i) {
        const double row = tab.a.row(i).sum();
        if (std::abs(row - tab.c(i)) > kTol) {
            std::ostringstream msg;
            msg << "row-sum at stage " << i + 1 << ": c = " << tab.c(i) << " but Σa = " << row
                << " (residual " << std::abs(row - tab.c(i)) << ")";
            out.push_back(msg.str());
        }
    }

    if (tab.alpha.rows() != s || tab.alpha.cols() != s || tab.beta.size() != s
        || tab.alpha != BoolMatrix(tab.a.array() != 0.0) || tab.beta != BoolVector(tab.b.array() != 0.0))
        out.emplace_back("masks inconsistent with coefficients");
    return out;
}

const std::vector<std::string>& registry_names()
{
    static const std::vector<std::string> names{"euler", "rk2m", "rk2h", "rk3s", "rk3h", "rk4", "rkf45-high"};
    return names;
}

ButcherTableau registry_get(const std::string& name)
{
    if (name == "euler")
        return lower(name, {{0.0}}, {1.0}, {0.0}, 1);
    if (name == "rk2m")
        return lower(name, {{}, {1.0 / 2.0}}, {0.0, 1.0}, {0.0, 1.0 / 2.0}, 2);
    if (name == "rk2h")
        return lower(name, {{}, {1.0}}, {1.0 / 2.0, 1.0 / 2.0}, {0.0, 1.0}, 2);
    if (name == "rk3s")
        return lower(name, {{}, {1.0}, {1.0 / 4.0, 1.0 / 4.0}},
                     {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}, {0.0, 1.0, 1.0 / 2.0}, 3);
    if (name == "rk3h")
        return lower(name, {{}, {1.0 / 3.0}, {0.0, 2.0 / 3.0}},
                     {1.0 / 4.0, 0.0, 3.0 / 4.0}, {0.0, 1.0 / 3.0, 2.0 / 3.0}, 3);
    if (name == "rk4")
        return lower(name, {{}, {1.0 / 2.0}, {0.0, 1.0 / 2.0}, {0.0, 0.0, 1.0}},
                     {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0}, {0.0, 1.0 / 2.0, 1.0 / 2.0, 1.0}, 4);
    if (name == "rkf45-high") {
        // Fehlberg's six-stage pair, fifth-order weights.
        return lower(name,
                     {{},
                      {1.0 / 4.0},
                      {3.0 / 32.0, 9.0 / 32.0},
                      {1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0},
                      {439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0},
                      {-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0}},
                     {16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0},
                     {0.0, 1.0 / 4.0, 3.0 / 8.0, 12.0 / 13.0, 1.0, 1.0 / 2.0}, 5);
    }

    std::string msg = "unknown tableau '" + name + "'; available:";
    for (const auto& n : registry_names())
        msg += " " + n;
    throw ConfigError(msg);
}

} // namespace rkbug
