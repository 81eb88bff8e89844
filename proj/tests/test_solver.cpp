#include <dphase/solver.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace dphase;

namespace {

ScalarField constant(double c)
{
    return [c](const Point&) { return c; };
}

const std::vector<Point> one_point{{0.5, 0.0}};
const double two_pi2 = 2.0 * std::numbers::pi * std::numbers::pi;

} // namespace

TEST(Constants, UpperAndLower)
{
    const auto cube = make_power(1.0, 4.0);
    EXPECT_EQ(find_upper_constant(cube, 10.0, 2.0, one_point), 4.0);
    EXPECT_EQ(find_lower_constant(cube, 10.0, 2.0, one_point), -4.0);
    EXPECT_EQ(find_upper_constant(make_power(2.0, 5.0), 2.0, 2.0, one_point), 1.0);
    EXPECT_THROW(find_upper_constant(make_power(1.0, 2.0), 2.0, 2.0, one_point), SuperlinearityError);
    EXPECT_THROW(find_lower_constant(make_power(1.0, 2.0), 2.0, 2.0, one_point), SuperlinearityError);
    EXPECT_THROW(find_upper_constant(cube, -1.0, 2.0, one_point), InputError);
}

TEST(Truncation, PositiveBranchPieces)
{
    const auto cube = make_power(1.0, 4.0);
    const double lambda = 10.0, ub = 4.0;
    const Truncation t = truncation_h_plus(cube, lambda, ub, 2.0);
    const Point x{0.3, 0.0};
    EXPECT_EQ(t.h(x, -1.0), 0.0);
    EXPECT_DOUBLE_EQ(t.h(x, ub / 2), lambda * ub / 2 - std::pow(ub / 2, 3));
    EXPECT_DOUBLE_EQ(t.h(x, 2 * ub), lambda * ub - std::pow(ub, 3));
    EXPECT_EQ(t.H(x, -3.0), 0.0);
    EXPECT_EQ(t.H(x, 0.0), 0.0);
    EXPECT_NEAR(t.H(x, 1.0), 4.75, 1e-14);
    EXPECT_THROW(truncation_h_plus(cube, lambda, -1.0, 2.0), InputError);
    EXPECT_THROW(truncation_h_minus(cube, lambda, 1.0, 2.0), InputError);
}

TEST(Truncation, NegativeBranchMirrorsPositiveForOddF)
{
    const auto f = make_f1(constant(1.5), 3.5);
    const Truncation plus = truncation_h_plus(f, 7.0, 8.0, 1.8);
    const Truncation minus = truncation_h_minus(f, 7.0, -8.0, 1.8);
    const Point x{0.2, 0.7};
    for (double s : {-20.0, -8.0, -3.0, -0.5, 0.0, 0.5, 3.0, 8.0, 20.0}) {
        EXPECT_DOUBLE_EQ(minus.h(x, -s), -plus.h(x, s));
        EXPECT_NEAR(minus.H(x, -s), plus.H(x, s), 1e-12 * (1.0 + std::abs(plus.H(x, s))));
    }
}

// H' = h by central differences, including across the truncation level and
// for a reaction whose primitive is computed numerically.
TEST(Truncation, PrimitiveDerivativeMatchesTruncatedReaction)
{
    const Point x{0.4, 0.0};
    for (const auto& f : {make_power(1.0, 4.0), make_f3(2.0, 3.0), make_f2(constant(1.0), 3.0)}) {
        const double lambda = 12.0;
        const double ub = find_upper_constant(f, lambda, 2.0, {x});
        const double vb = find_lower_constant(f, lambda, 2.0, {x});
        for (const Truncation& t : {truncation_h_plus(f, lambda, ub, 2.0), truncation_h_minus(f, lambda, vb, 2.0)}) {
            const double b = t.data().bound;
            for (int k = -19; k <= 19; ++k) {
                const double s = 2.0 * std::abs(b) * k / 20.0 + 1e-3;
                const double step = 1e-5;
                const double fd = (t.H(x, s + step) - t.H(x, s - step)) / (2 * step);
                EXPECT_NEAR(fd, t.h(x, s), 1e-6 * (1.0 + std::abs(t.h(x, s)))) << f.tag << " s=" << s;
            }
            // One-sided values at the truncation level agree.
            EXPECT_NEAR(t.H(x, b * (1 + 1e-12)), t.H(x, b * (1 - 1e-12)), 1e-10 * (1.0 + std::abs(t.H(x, b))));
            const double right = (t.H(x, b + 1e-6) - t.H(x, b)) / 1e-6;
            const double left = (t.H(x, b) - t.H(x, b - 1e-6)) / 1e-6;
            EXPECT_NEAR(right, left, 1e-4 * (1.0 + std::abs(left)));
        }
    }
}

TEST(Phi, ZeroNegativeNearOriginAndCoercive)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 64);
    const Problem pr(m, {2.0, 3.0, 1}, constant(0.0));
    const auto f = make_power(1.0, 4.0);
    const EigenPair eig = solve_first_eigenpair(m, 2.0);
    const double lambda = 1.5 * eig.lambda_1;
    const Truncation t = truncation_h_plus(f, lambda, find_upper_constant(f, lambda, 2.0, one_point), 2.0);
    EXPECT_EQ(phi(pr, t, FemFunction(m)), 0.0);
    EXPECT_LT(phi(pr, t, eig.eigenfunction.scaled(1e-3)), 0.0);
    double prev = phi(pr, t, eig.eigenfunction.scaled(50.0));
    EXPECT_GT(prev, 0.0);
    for (double s : {100.0, 200.0, 400.0, 800.0}) {
        const double v = phi(pr, t, eig.eigenfunction.scaled(s));
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(PhiGradient, MatchesFiniteDifferences)
{
    const auto m = build_mesh(Rectangle{0.0, 1.0, 0.0, 1.0}, 5);
    const Problem pr(m, {2.2, 3.1, 2}, [](const Point& x) { return x[0]; });
    const auto f = make_power(1.0, 4.0);
    const Truncation t = truncation_h_plus(f, 30.0, 8.0, 2.2);
    FemFunction u(m);
    for (int i : m->interior_vertices())
        u[i] = 1.0 + 0.3 * std::sin(3.0 * i);
    const auto g = phi_gradient(pr, t, u);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const int v = m->interior_vertices()[k];
        FemFunction a = u, b = u;
        a[v] += 1e-6;
        b[v] -= 1e-6;
        EXPECT_NEAR((phi(pr, t, a) - phi(pr, t, b)) / 2e-6, g[k], 1e-6);
    }
}

// With p = 2, mu = 0 and h(x,s) = 1 - s inside the truncation band, the
// Euler-Lagrange equation is the linear system (K + M) u = b.
TEST(Minimize, LinearCaseMatchesDirectSolve)
{
    const int n = 64;
    const double hh = 1.0 / n;
    const auto m = build_mesh(Interval{0.0, 1.0}, n);
    const Problem pr(m, {2.0, 3.0, 1}, constant(0.0));
    const double lambda = 1.0, c = 2.0; // lambda s - (c s - 1) = 1 - s
    Nonlinearity f{[c](const Point&, double s) { return c * s - 1.0; },
                   [c](const Point&, double s) { return 0.5 * c * s * s - s; }, "affine"};
    const Truncation t(f, {10.0, lambda, 2.0, Branch::positive});
    MinimizeOptions opts;
    opts.tol = 1e-12;
    opts.absolute = true;
    const MinimizeResult res = minimize_phi(pr, t, FemFunction(m), opts);
    EXPECT_LE(res.residual, 1e-12);

    const std::size_t k = n - 1;
    const auto want = oracle::thomas(std::vector<double>(k, -1.0 / hh + hh / 6.0),
                                     std::vector<double>(k, 2.0 / hh + 4.0 * hh / 6.0),
                                     std::vector<double>(k, -1.0 / hh + hh / 6.0), std::vector<double>(k, hh));
    for (std::size_t i = 0; i < k; ++i)
        EXPECT_NEAR(res.solution[i + 1], want[i], 1e-11);

    // A critical point as start: nothing left to do.
    const MinimizeResult again = minimize_phi(pr, t, res.solution, opts);
    EXPECT_LE(again.iterations, 1);
    for (std::size_t i = 0; i < res.solution.size(); ++i)
        EXPECT_NEAR(again.solution[i], res.solution[i], 1e-13);
}

TEST(Minimize, HistoryStrictlyDecreasesAndBudgetErrors)
{
    const auto m = build_mesh(Rectangle{0.0, 1.0, 0.0, 1.0}, 10);
    const Problem pr(m, {1.5, 2.5, 2}, constant(1.0));
    const auto f = make_power(1.0, 3.0);
    const EigenPair eig = solve_first_eigenpair(m, 1.5);
    const double lambda = 2.0 * eig.lambda_1;
    const Truncation t = truncation_h_plus(f, lambda, find_upper_constant(f, lambda, 1.5, one_point), 1.5);
    const MinimizeResult res = minimize_phi(pr, t, eig.eigenfunction.scaled(0.5), {1e-9, 500, true});
    ASSERT_GE(res.history.size(), 2u);
    for (std::size_t k = 1; k < res.history.size(); ++k)
        EXPECT_LT(res.history[k], res.history[k - 1]);
    try {
        minimize_phi(pr, t, eig.eigenfunction.scaled(0.5), {1e-14, 1, true});
        FAIL() << "expected a convergence error";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.best_iterate().size(), m->num_vertices());
        EXPECT_GT(e.best_residual(), 0.0);
    }
    FemFunction bad(m);
    bad[0] = 1.0;
    EXPECT_THROW(minimize_phi(pr, t, bad), InputError);
}

TEST(Solve, CubicReactionTwoSolutions)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 128);
    const Problem pr(m, {2.0, 3.0, 1}, constant(0.0));
    const auto f = make_power(1.0, 4.0);
    const EigenPair eig = solve_first_eigenpair(m, 2.0);
    const SolveReport plus = solve_positive(pr, f, two_pi2, eig);
    const SolveReport minus = solve_negative(pr, f, two_pi2, eig);
    EXPECT_LT(plus.phi_value, 0.0);
    EXPECT_LT(minus.phi_value, 0.0);
    EXPECT_GE(plus.min_value, -1e-8);
    EXPECT_LE(minus.max_value, 1e-8);
    EXPECT_LE(plus.max_value, std::sqrt(two_pi2) + 1e-6);
    EXPECT_LE(plus.original_residual, 1e-8);
    EXPECT_LE(minus.original_residual, 1e-8);
    EXPECT_LE(plus.max_value, plus.bound);
    EXPECT_LE(plus.seed_phi, 0.0);
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < m->num_vertices(); ++i) {
        scale = std::max(scale, std::abs(plus.solution[i]));
        diff = std::max(diff, std::abs(plus.solution[i] + minus.solution[i]));
    }
    EXPECT_LE(diff, 1e-10 * scale);
    // Truncated residual equals the original one: the bound is inactive.
    EXPECT_LE(plus.residual_dual_norm, 1e-8);
}

TEST(Solve, NegativeBoundMirrors)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 32);
    const Problem pr(m, {2.0, 3.0, 1}, constant(0.0));
    const SolveReport r = solve_negative(pr, make_power(1.0, 4.0), 10.5);
    EXPECT_EQ(r.bound, -4.0);
    for (double v : r.solution.values())
        EXPECT_LE(v, 1e-8);
}

TEST(Solve, GateError)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 64);
    const Problem pr(m, {2.0, 3.0, 1}, constant(0.0));
    const EigenPair eig = solve_first_eigenpair(m, 2.0);
    try {
        solve_positive(pr, make_power(1.0, 4.0), 0.5 * eig.lambda_1, eig);
        FAIL() << "expected a gate error";
    } catch (const GateError& e) {
        EXPECT_EQ(e.code(), ExitCode::gate_error);
        EXPECT_DOUBLE_EQ(e.lambda1(), eig.lambda_1);
    }
    EXPECT_THROW(solve_negative(pr, make_power(1.0, 4.0), eig.lambda_1, eig), GateError);
}

TEST(Solve, SeedErrorWhenQPhaseDominates)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 32);
    const Problem pr(m, {2.0, 3.0, 1}, constant(1e12));
    const EigenPair eig = solve_first_eigenpair(m, 2.0);
    EXPECT_THROW(solve_positive(pr, make_power(1.0, 4.0), eig.lambda_1 * (1 + 1e-4), eig), SeedError);
}

TEST(Solve, DoublePhaseSquare)
{
    const auto m = build_mesh(Rectangle{0.0, 1.0, 0.0, 1.0}, 16);
    const Problem pr(m, {1.2, 1.4, 2}, [](const Point& x) { return x[0]; });
    const auto f = make_f1(constant(1.0), 1.5);
    const EigenPair eig = solve_first_eigenpair(m, 1.2);
    const SolveReport r = solve_positive(pr, f, 2.0 * eig.lambda_1, eig);
    EXPECT_GE(r.min_value, -1e-6 * r.bound);
    EXPECT_LE(r.max_value, r.bound);
    EXPECT_LE(r.original_residual, 1e-8);
    EXPECT_TRUE(r.hypotheses.all_pass());
    EXPECT_TRUE(r.hf.all_pass());
}

TEST(Solve, EigenpairFromDifferentMeshRejected)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 16);
    const Problem pr(m, {2.0, 3.0, 1}, constant(0.0));
    const EigenPair other = solve_first_eigenpair(build_mesh(Interval{0.0, 1.0}, 16), 2.0);
    EXPECT_THROW(solve_positive(pr, make_power(1.0, 4.0), 3.0 * other.lambda_1, other), InputError);
}

TEST(CheckHf, Examples)
{
    const std::vector<Point> pts{{0.1, 0.2}, {0.9, 0.5}};
    EXPECT_TRUE(check_Hf(make_f1(constant(2.0), 4.0), 2.0, 3.0, pts).all_pass());
    const auto homogeneous = check_Hf(make_power(1.0, 2.0), 2.0, 3.0, pts);
    EXPECT_FALSE(homogeneous.small_at_zero);
    for (double r : homogeneous.zero_ratios)
        EXPECT_NEAR(r, 1.0, 1e-12);
    const auto linear = check_Hf(make_power(1.0, 2.0), 1.5, 3.0, pts);
    EXPECT_FALSE(linear.superlinear);
    EXPECT_TRUE(check_Hf(make_f3(1.2, 1.4), 1.2, 1.4, pts).all_pass());
}

TEST(Summary, KeyValueFormat)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 32);
    const Problem pr(m, {2.0, 3.0, 1}, constant(0.0));
    const SolveReport r = solve_positive(pr, make_power(1.0, 4.0), 20.0);
    const std::string s = to_summary(r);
    EXPECT_NE(s.find("branch=positive\n"), std::string::npos);
    EXPECT_NE(s.find("bound=8\n"), std::string::npos);
    EXPECT_NE(s.find("lambda=20\n"), std::string::npos);
}
