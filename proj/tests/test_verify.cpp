#include <dphase/solver.hpp>
#include <dphase/verify.hpp>

#include <gtest/gtest.h>

#include <numbers>

using namespace dphase;

namespace {

ScalarField constant(double c)
{
    return [c](const Point&) { return c; };
}

constexpr double pi = std::numbers::pi;

double manufactured_residual(int n)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, n);
    const Problem pr(m, {2.0, 3.0, 1}, constant(0.0));
    const auto u = interpolate(m, [](const Point& x) { return std::sin(pi * x[0]); });
    return weak_residual(pr, u, [](const Point& x, double) { return pi * pi * std::sin(pi * x[0]); }).euclidean;
}

} // namespace

TEST(WeakResidual, ZeroFunctionZeroRhs)
{
    const auto m = build_mesh(Rectangle{0.0, 1.0, 0.0, 1.0}, 4);
    const Problem pr(m, {1.5, 2.0, 2}, constant(1.0));
    const auto r = weak_residual(pr, FemFunction(m), [](const Point&, double) { return 0.0; });
    EXPECT_EQ(r.euclidean, 0.0);
    EXPECT_EQ(r.max, 0.0);
}

TEST(WeakResidual, ManufacturedDecreasesUnderRefinement)
{
    double prev = manufactured_residual(4);
    for (int n : {8, 16, 32}) {
        const double cur = manufactured_residual(n);
        EXPECT_GE(prev / cur, 3.5) << "n = " << n;
        prev = cur;
    }
}

TEST(WeakResidual, SolverOutputAgainstTruncatedRhs)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 64);
    const Problem pr(m, {2.0, 3.0, 1}, constant(0.0));
    const auto f = make_power(1.0, 4.0);
    const SolveReport r = solve_positive(pr, f, 25.0);
    const Truncation t = truncation_h_plus(f, 25.0, r.bound, 2.0);
    const auto res = weak_residual(pr, r.solution, [&](const Point& x, double s) { return t.h(x, s); });
    EXPECT_LE(res.euclidean, 1e-8);
    EXPECT_LE(res.max, res.euclidean);
}

TEST(CheckHg, ZeroConvection)
{
    const auto samples = default_growth_samples({{0.5, 0.0}});
    const auto rep = check_Hg([](const Point&, double, const Point&) { return 0.0; }, {0, 0, 0, 3.0}, 2.0, samples);
    EXPECT_TRUE(rep.holds);
    EXPECT_EQ(rep.fitted.c1, 0.0);
    EXPECT_EQ(rep.fitted.c2, 0.0);
    EXPECT_EQ(rep.fitted.c3, 0.0);
}

TEST(CheckHg, ReactionWithF1Growth)
{
    const double lambda = 7.0, a = 2.5, p = 2.0, r = 4.0;
    const auto f = make_f1(constant(a), r);
    const Convection g = [&](const Point& x, double s, const Point&) {
        return lambda * detail::signed_power(s, p) - f.f(x, s);
    };
    const auto samples = default_growth_samples({{0.1, 0.0}, {0.7, 0.0}});
    EXPECT_TRUE(check_Hg(g, {0.0, lambda + a, lambda, r}, p, samples).holds);
    const auto fitted = check_Hg(g, {0.0, 0.0, 0.0, r}, p, samples);
    EXPECT_TRUE(fitted.growth_bounded);
    EXPECT_LE(fitted.fitted.c1, 1e-12 * fitted.fitted.c2);
    EXPECT_TRUE(check_Hg(g, fitted.fitted, p, samples).holds);
}

TEST(CheckHg, ExponentialViolates)
{
    const Convection g = [](const Point&, double s, const Point&) { return std::exp(std::abs(s)); };
    const auto fit = check_Hg(g, {0, 0, 0, 3.0}, 2.0, default_growth_samples({{0.5, 0.0}}, 10.0));
    EXPECT_FALSE(check_Hg(g, fit.fitted, 2.0, default_growth_samples({{0.5, 0.0}}, 1e3)).holds);
    EXPECT_FALSE(check_Hg(g, {0, 0, 0, 3.0}, 2.0, default_growth_samples({{0.5, 0.0}}, 1e3)).growth_bounded);
    EXPECT_THROW(check_Hg(g, {-1.0, 0, 0, 3.0}, 2.0, default_growth_samples({{0.5, 0.0}})), InputError);
}

TEST(CutQuadrature, ExactOnEachSide)
{
    const auto seg = build_mesh(Interval{0.0, 1.0}, 1);
    const auto x = interpolate(seg, [](const Point& p) { return p[0]; });
    double total = 0.0, weights = 0.0;
    detail::for_each_cut_quadrature_point(x, default_quadrature(1), 0, 0.3, [&](const Point& pt, double w, const auto& b) {
        EXPECT_NEAR(x.value_at(0, b), pt[0], 1e-15);
        total += w * std::min(pt[0], 0.3);
        weights += w;
    });
    EXPECT_NEAR(total, 0.255, 1e-15);
    EXPECT_NEAR(weights, 1.0, 1e-15);

    const auto tri = std::make_shared<const Mesh>(2, std::vector<Point>{{0, 0}, {1, 0}, {0, 1}},
                                                  std::vector<std::array<int, 3>>{{0, 1, 2}},
                                                  std::vector<char>{1, 1, 1}, 0.5);
    const auto s = interpolate(tri, [](const Point& p) { return p[0] + p[1]; });
    total = weights = 0.0;
    detail::for_each_cut_quadrature_point(s, default_quadrature(2), 0, 0.5, [&](const Point& pt, double w, const auto&) {
        total += w * std::min(pt[0] + pt[1], 0.5);
        weights += w;
    });
    EXPECT_NEAR(weights, 0.5, 1e-15);
    EXPECT_NEAR(total, 0.125 / 3.0 + 0.1875, 1e-14);
}

TEST(Moser, InactiveTruncation)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 40);
    const Problem pr(m, {2.0, 3.0, 1}, constant(0.7));
    const auto u = interpolate(m, [](const Point& x) { return std::sin(pi * x[0]); });
    const Convection g = [](const Point&, double s, const Point&) { return 1.0 - s; };
    const double kappa = 0.75, kp = kappa * 2.0;
    const MoserReport rep = moser_identity_check(pr, u, g, 2.0, kappa);
    EXPECT_NEAR(rep.lhs_terms[1], kp * rep.lhs_terms[0], 1e-12 * rep.lhs_terms[0]);
    EXPECT_NEAR(rep.lhs_terms[3], kp * rep.lhs_terms[2], 1e-12 * rep.lhs_terms[2]);
    // rhs = int g u^{kp+1} by direct quadrature.
    const auto quad = default_quadrature(1);
    double want = 0.0;
    for (std::size_t e = 0; e < m->num_elements(); ++e)
        for_each_quadrature_point(*m, quad, e, [&](const Point&, double w, const auto& b) {
            const double s = u.value_at(e, b);
            want += w * (1.0 - s) * std::pow(s, kp + 1.0);
        });
    EXPECT_NEAR(rep.rhs, want, 1e-13);
    EXPECT_TRUE(rep.mu_terms_nonnegative);
}

TEST(Moser, DegenerateExponentMatchesResidualPairing)
{
    const auto m = build_mesh(Rectangle{0.0, 1.0, 0.0, 1.0}, 8);
    const Problem pr(m, {2.0, 2.5, 2}, [](const Point& x) { return x[0]; });
    const auto u = interpolate(m, [](const Point& x) {
        return std::sin(pi * x[0]) * std::sin(pi * x[1]) * (1.0 + 0.3 * x[0]);
    });
    const Convection g = [](const Point& x, double s, const Point&) { return 3.0 + x[1] - s * s; };
    const MoserReport rep = moser_identity_check(pr, u, g, 0.5, 1e-8);
    const auto res = weak_residual_vector(pr, u, [&](const Point& x, double s) { return g(x, s, Point{}); });
    EXPECT_NEAR(rep.gap, std::abs(pairing(*m, res, u)), 1e-6);
}

TEST(Moser, SolverOutputGapShrinks)
{
    const auto f = make_power(1.0, 4.0);
    const double lambda = 2.0 * pi * pi;
    double prev = 1e300;
    for (int n : {64, 128, 256, 512}) {
        const auto m = build_mesh(Interval{0.0, 1.0}, n);
        const Problem pr(m, {2.0, 3.0, 1}, constant(0.0));
        const SolveReport r = solve_positive(pr, f, lambda);
        const Convection g = [&](const Point& x, double s, const Point&) { return lambda * s - f.f(x, s); };
        const MoserReport rep = moser_identity_check(pr, r.solution, g, 0.5 * r.max_value, 1.0);
        EXPECT_GE(rep.lhs_terms[2], -1e-12);
        EXPECT_GE(rep.lhs_terms[3], -1e-12);
        EXPECT_LT(rep.gap, prev) << "n = " << n;
        EXPECT_LE(rep.gap, 100.0 * m->mesh_size());
        prev = rep.gap;
    }
}

TEST(Moser, InputErrors)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 8);
    const Problem pr(m, {2.0, 3.0, 1}, constant(0.0));
    const Convection g = [](const Point&, double, const Point&) { return 0.0; };
    auto u = interpolate(m, [](const Point& x) { return x[0] * (1 - x[0]); });
    EXPECT_THROW(moser_identity_check(pr, u, g, 0.0, 1.0), InputError);
    EXPECT_THROW(moser_identity_check(pr, u, g, 1.0, 0.0), InputError);
    u[3] = -1e-3;
    EXPECT_THROW(moser_identity_check(pr, u, g, 1.0, 1.0), InputError);
    u[3] = -1e-12; // within tolerance
    EXPECT_NO_THROW(moser_identity_check(pr, u, g, 1.0, 1.0));
}

TEST(SupNorm, Examples)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 7);
    EXPECT_EQ(sup_norm_report(FemFunction(m)).sup, 0.0);
    const auto s = interpolate(m, [](const Point& x) { return std::sin(pi * x[0]); });
    const auto rep = sup_norm_report(s, 1.0);
    double mx = 0.0;
    for (double v : s.values())
        mx = std::max(mx, v);
    EXPECT_EQ(rep.sup, mx);
    EXPECT_LE(rep.sup, 1.0);
    EXPECT_TRUE(rep.within_bar);
    EXPECT_FALSE(sup_norm_report(s.scaled(3.0), 1.0).within_bar);
}
