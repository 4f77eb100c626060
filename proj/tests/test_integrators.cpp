#include "oracles.hpp"

#include "rkbug/problems.hpp"

#include <doctest.h>

#include <cmath>

using namespace rkbug;

namespace {

RhsOperator<double> scalar_linear(double lambda)
{
    return {"linear", 1, 1, [lambda](double, const Eigen::MatrixXd& a) { return Eigen::MatrixXd(lambda * a); }};
}

template <typename Scalar>
Matrix<Scalar> random_unitary(Index n, std::mt19937_64& rng)
{
    return oracle::random_orthonormal<Scalar>(n, n, rng);
}

std::vector<std::string> methods()
{
    return {"euler", "rk2m", "rk2h", "rk3s", "rk3h", "rk4"};
}

const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);

} // namespace

TEST_CASE("dense step with a zero right-hand side")
{
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd z = oracle::random_matrix<double>(5, 4, rng);
    const auto f = zero_rhs<double>(5, 4);
    for (const auto& name : methods())
        CHECK(dense_rk_step(f, 0.0, z, 0.3, registry_get(name)) == z);
}

TEST_CASE("rk4 on a scalar linear ODE reproduces the truncated exponential")
{
    const Eigen::MatrixXd a1 = dense_rk_step(scalar_linear(1.0), 0.0, one, 0.1,
                                             registry_get("rk4"));
    double series = 0.0, term = 1.0;
    for (int q = 0; q <= 4; ++q) {
        series += term;
        term *= 0.1 / (q + 1);
    }
    CHECK(std::abs(a1(0, 0) - series) < 1e-15);
    CHECK(a1(0, 0) == doctest::Approx(1.1051708333).epsilon(1e-10));
}

TEST_CASE("rk4 on a heat-type matrix ODE matches the exponential series")
{
    const auto p = make_lyapunov<double>(8, 0.0, 1.0);
    const Eigen::MatrixXd lap = p.stencil_matrix();
    const double h = 1e-3;
    Eigen::MatrixXd expect = p.initial, term = p.initial;
    for (int q = 1; q <= 4; ++q) {
        term = (h / q) * (lap * term + term * lap);
        expect += term;
    }
    const Eigen::MatrixXd got = dense_rk_step(p.rhs, 0.0, p.initial, h, registry_get("rk4"));
    CHECK((got - expect).norm() < 1e-12);
}

TEST_CASE("dense step detects blow-up")
{
    RhsOperator<double> f("nan", 1, 1, [](double, const Eigen::MatrixXd& a) {
        return Eigen::MatrixXd(a.array() * std::numeric_limits<double>::infinity());
    });
    try {
        dense_rk_step(f, 0.0, one, 0.1, registry_get("rk2m"));
        FAIL("no exception");
    } catch (const BlowUpError& e) {
        CHECK(std::string(e.what()) == "blow-up at stage 1");
        CHECK(e.stage() == 1);
    }
    CHECK_THROWS_AS(dense_rk_step(f, 0.0, one, 0.0, registry_get("rk2m")),
                    std::invalid_argument);
}

TEST_CASE("reference solve")
{
    const auto none = reference_solve(zero_rhs<double>(3, 3), 0.0, Eigen::MatrixXd(Eigen::MatrixXd::Identity(3, 3)), 1.0, 0.25);
    REQUIRE(none.size() == 5);
    for (const auto& rec : none)
        CHECK(densify(rec.state) == Eigen::MatrixXd::Identity(3, 3));

    const auto decay = reference_solve(scalar_linear(-1.0), 0.0, one, 1.0, 1e-3, 0.5);
    REQUIRE(decay.size() == 3);
    CHECK(decay.back().time == 1.0);
    CHECK(std::abs(densify(decay.back().state)(0, 0) - std::exp(-1.0)) < 1e-12);
    CHECK(std::abs(densify(decay[1].state)(0, 0) - std::exp(-0.5)) < 1e-12);

    CHECK_THROWS_AS(reference_solve(scalar_linear(-1.0), 0.0, one, 1.0, 0.3, 0.5),
                    ConfigError);
}

TEST_CASE("step count")
{
    CHECK(step_count(0.0, 1.0, 0.1) == 10);
    CHECK(step_count(0.0, 1.0, 1e-3) == 1000);
    CHECK_THROWS_WITH_AS(step_count(0.0, 1.0, 0.3), "non-integer step count", ConfigError);
    CHECK_THROWS_AS(step_count(0.0, 0.0, 0.1), ConfigError);
    CHECK_THROWS_AS(step_count(0.0, 1.0, -0.1), ConfigError);
}

TEST_CASE_TEMPLATE("BUG Euler step", Scalar, double, Complex)
{
    std::mt19937_64 rng(2);
    SUBCASE("zero right-hand side")
    {
        const auto y = oracle::random_low_rank<Scalar>(6, 5, 2, rng);
        const auto out = bug_euler_step(zero_rhs<Scalar>(6, 5), 0.0, y, 0.1);
        CHECK((densify(out.value) - densify(y)).norm() < 1e-12);
        CHECK(out.truncation_residual < 1e-12);
    }
    SUBCASE("full rank is forward Euler")
    {
        const auto f = oracle::random_rhs<Scalar>(6, rng);
        const auto y = oracle::random_low_rank<Scalar>(6, 6, 6, rng);
        const auto out = bug_euler_step(f, 0.0, y, 0.1);
        const Matrix<Scalar> yd = densify(y);
        CHECK((densify(out.value) - (yd + Scalar(0.1) * f(0.0, yd))).norm() < 1e-10);
    }
    SUBCASE("random instances against the projector oracle")
    {
        for (int trial = 0; trial < 20; ++trial) {
            const auto f = oracle::random_rhs<Scalar>(6, rng);
            const auto y = oracle::random_low_rank<Scalar>(6, 6, 2, rng);
            const auto out = bug_euler_step(f, 0.0, y, 0.1);
            CHECK((densify(out.value) - oracle::bug_euler(f, 0.0, y, 0.1)).norm() < 1e-10);
            CHECK(out.value.orthonormality_defect() < 1e-10);
            CHECK(out.augmented_rank_used <= 4);
        }
    }
}

TEST_CASE("Runge-Kutta BUG with the Euler tableau is the BUG Euler step")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = oracle::random_rhs<double>(7, rng);
        const auto y = oracle::random_low_rank<double>(7, 7, 3, rng);
        const auto a = rk_bug_step(f, 0.2, y, 0.05, registry_get("euler"));
        const auto b = bug_euler_step(f, 0.2, y, 0.05);
        CHECK((densify(a.value) - densify(b.value)).norm() < 1e-12);
    }
}

TEST_CASE_TEMPLATE("Runge-Kutta BUG at full rank is the underlying Runge-Kutta method", Scalar, double, Complex)
{
    std::mt19937_64 rng(4);
    for (const auto& name : methods()) {
        const auto tab = registry_get(name);
        const auto f = oracle::random_rhs<Scalar>(8, rng);
        const auto y = oracle::random_low_rank<Scalar>(8, 8, 8, rng);
        const Matrix<Scalar> dense = dense_rk_step(f, 0.0, densify(y), 0.1, tab);
        const auto out = rk_bug_step(f, 0.0, y, 0.1, tab);
        CAPTURE(name);
        CHECK((densify(out.value) - dense).norm() <= 1e-10 * (1.0 + dense.norm()));
        const auto prk = projected_rk_step(f, 0.0, y, 0.1, tab);
        CHECK((densify(prk.value) - dense).norm() <= 1e-10 * (1.0 + dense.norm()));
    }
}

TEST_CASE("explicit midpoint BUG against the straight-line oracle")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = oracle::random_rhs<double>(8, rng);
        const auto y = oracle::random_low_rank<double>(8, 8, 3, rng);
        const auto out = rk_bug_step(f, 0.0, y, 0.1, registry_get("rk2m"));
        CHECK((densify(out.value) - oracle::rk2m_bug(f, 0.0, y, 0.1)).norm() < 1e-9);
    }
}

TEST_CASE_TEMPLATE("Runge-Kutta BUG against the dense transcription for every tableau", Scalar, double, Complex)
{
    std::mt19937_64 rng(6);
    for (const auto& name : methods()) {
        const auto tab = registry_get(name);
        for (int trial = 0; trial < 5; ++trial) {
            const auto f = oracle::random_rhs<Scalar>(9, rng);
            const auto y = oracle::random_low_rank<Scalar>(9, 9, 2, rng);
            const auto out = rk_bug_step(f, 0.1, y, 0.05, tab);
            CAPTURE(name);
            CHECK((densify(out.value) - oracle::rk_bug(f, 0.1, y, 0.05, tab)).norm() < 1e-9);
        }
    }
}

TEST_CASE("Runge-Kutta BUG rank bounds and orthonormal bases")
{
    std::mt19937_64 rng(7);
    for (const auto& name : methods()) {
        const auto tab = registry_get(name);
        const Index r = 2, s = tab.stages();
        for (int trial = 0; trial < 5; ++trial) {
            const auto f = oracle::random_rhs<double>(20, rng);
            const auto y = oracle::random_low_rank<double>(20, 20, r, rng);
            RkBugTrace<double> trace;
            const auto out = rk_bug_step(f, 0.0, y, 0.05, tab, &trace);
            CAPTURE(name);
            CHECK(out.augmented_rank_used <= 2 * r * s);
            CHECK(out.truncation_residual >= 0.0);
            REQUIRE(trace.stage_left.size() == static_cast<std::size_t>(s - 1));
            for (Index i = 0; i + 1 < s; ++i) {
                CHECK(trace.stage_left[i].cols() <= 2 * r * (i + 1));
                CHECK(trace.stage_right[i].cols() <= 2 * r * (i + 1));
                CHECK(orthonormality_defect(trace.stage_left[i]) < 1e-10);
                CHECK(orthonormality_defect(trace.stage_right[i]) < 1e-10);
            }
            CHECK(trace.final_left.cols() <= 2 * r * s);
            CHECK(orthonormality_defect(trace.final_left) < 1e-10);
            CHECK(orthonormality_defect(trace.final_right) < 1e-10);
            CHECK(out.value.orthonormality_defect() < 1e-10);
        }
    }
}

TEST_CASE("Runge-Kutta BUG is invariant under a change of factor gauge")
{
    std::mt19937_64 rng(8);
    for (const auto& name : methods()) {
        const auto tab = registry_get(name);
        const auto f = oracle::random_rhs<Complex>(10, rng);
        const auto y = oracle::random_low_rank<Complex>(10, 10, 3, rng);
        const Matrix<Complex> q1 = random_unitary<Complex>(3, rng), q2 = random_unitary<Complex>(3, rng);
        const LowRankMatrix<Complex> z{y.U * q1, q1.adjoint() * y.S * q2, y.V * q2};
        const auto a = rk_bug_step(f, 0.0, y, 0.05, tab);
        const auto b = rk_bug_step(f, 0.0, z, 0.05, tab);
        CAPTURE(name);
        CHECK((densify(a.value) - densify(b.value)).norm() < 1e-10);
    }
}

TEST_CASE("low-rank steps with a zero right-hand side keep the state")
{
    std::mt19937_64 rng(9);
    const auto y = oracle::random_low_rank<double>(8, 6, 3, rng);
    const auto f = zero_rhs<double>(8, 6);
    for (const auto& name : methods()) {
        const auto tab = registry_get(name);
        CHECK((densify(rk_bug_step(f, 0.0, y, 0.1, tab).value) - densify(y)).norm() < 1e-12);
        CHECK((densify(projected_rk_step(f, 0.0, y, 0.1, tab).value) - densify(y)).norm() < 1e-12);
    }
}

TEST_CASE("projected Euler step against the direct formula")
{
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = oracle::random_rhs<double>(7, rng);
        const auto y = oracle::random_low_rank<double>(7, 7, 2, rng);
        const Eigen::MatrixXd yd = densify(y), fy = f(0.0, yd);
        const Eigen::MatrixXd pu = y.U * y.U.transpose(), pv = y.V * y.V.transpose();
        const Eigen::MatrixXd expect = oracle::dense_truncate<double>(yd + 0.1 * (pu * fy - pu * fy * pv + fy * pv), 2);
        const auto out = projected_rk_step(f, 0.0, y, 0.1, registry_get("euler"));
        CHECK((densify(out.value) - expect).norm() < 1e-10);
    }
}

TEST_CASE("steppers reject invalid input")
{
    std::mt19937_64 rng(11);
    const auto y = oracle::random_low_rank<double>(6, 6, 2, rng);
    const auto f = oracle::random_rhs<double>(6, rng);
    CHECK_THROWS_AS(rk_bug_step(f, 0.0, y, -0.1, registry_get("rk2m")), std::invalid_argument);
    const auto bad = make_tableau("bad", Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, 0.5),
                                  Eigen::VectorXd::Zero(1), 1);
    CHECK_THROWS_AS(rk_bug_step(f, 0.0, y, 0.1, bad), ConfigError);
    LowRankMatrix<double> broken = y;
    broken.S = Eigen::MatrixXd::Zero(3, 3);
    CHECK_THROWS_AS(bug_euler_step(f, 0.0, broken, 0.1), std::invalid_argument);
}

TEST_CASE("integrate drives every method on the time grid")
{
    std::mt19937_64 rng(12);
    const auto y0 = densify(oracle::random_low_rank<double>(6, 6, 2, rng));
    const auto f = zero_rhs<double>(6, 6);
    for (auto method : {Method::dense, Method::bug_euler, Method::rk_bug, Method::prk}) {
        const auto traj = integrate(method, f, y0, 0.0, 1.0, 0.25, registry_get("rk3s"), 2);
        REQUIRE(traj.size() == 5);
        for (std::size_t k = 0; k < traj.size(); ++k) {
            CHECK(traj[k].time == doctest::Approx(0.25 * static_cast<double>(k)));
            CHECK((densify(traj[k].state) - y0).norm() < 1e-12);
        }
    }
    CHECK_THROWS_AS(integrate(Method::rk_bug, f, y0, 0.0, 0.0, 0.25, registry_get("rk2m"), 2), ConfigError);
    CHECK_THROWS_AS(integrate(Method::rk_bug, f, y0, 0.0, 1.0, 0.3, registry_get("rk2m"), 2), ConfigError);
}

TEST_CASE("integrate reports the failing step on blow-up")
{
    RhsOperator<double> f("grow", 4, 4, [](double t, const Eigen::MatrixXd& a) {
        if (t > 0.25)
            return Eigen::MatrixXd(a.array() * std::numeric_limits<double>::quiet_NaN());
        return a;
    });
    try {
        integrate(Method::rk_bug, f, Eigen::MatrixXd(Eigen::MatrixXd::Identity(4, 4)), 0.0, 1.0, 0.25,
                  registry_get("euler"), 2);
        FAIL("no exception");
    } catch (const BlowUpError& e) {
        CHECK(e.step() == 2);
    }
}

TEST_CASE("Runge-Kutta BUG converges at the classical order on a stable Lyapunov problem")
{
    const auto p = make_lyapunov<double>(16, 1e-5, 0.1);
    const auto ref = reference_solve(p.rhs, 0.0, p.initial, 0.1, 1e-4, 0.1);
    const Eigen::MatrixXd exact = densify(ref.back().state);
    auto err = [&](double h) {
        const auto traj = integrate(Method::rk_bug, p.rhs, p.initial, 0.0, 0.1, h, registry_get("rk4"), 5);
        return (densify(traj.back().state) - exact).norm();
    };
    const double e1 = err(0.01), e2 = err(0.005);
    CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.15));
}
