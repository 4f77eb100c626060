#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rkbug {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
using BoolVector = Eigen::Matrix<bool, Eigen::Dynamic, 1>;

/// Coefficients of an explicit Runge-Kutta method.
///
/// alpha(i, j) and beta(i) flag the nonzero entries of A and b; the low-rank
/// steppers use them to skip basis blocks that do not contribute to a stage.
struct ButcherTableau
{
    std::string name;
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    int order = 1;
    BoolMatrix alpha;
    BoolVector beta;

    Eigen::Index stages() const { return b.size(); }
};

/// Builds a tableau and derives its masks by exact-zero tests. Shapes are
/// not checked here; use validate().
ButcherTableau make_tableau(std::string name, Eigen::MatrixXd a, Eigen::VectorXd b,
                            Eigen::VectorXd c, int order);

/// Empty iff the tableau is explicit, consistent and row-sum consistent.
std::vector<std::string> validate(const ButcherTableau& tab);

/// Names accepted by registry_get, in registry order.
const std::vector<std::string>& registry_names();

/// One of euler, rk2m, rk2h, rk3s, rk3h, rk4 or rkf45-high.
/// Throws ConfigError listing the available names otherwise.
ButcherTableau registry_get(const std::string& name);

} // namespace rkbug
