#include <dphase/mesh.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

using namespace dphase;

TEST(BuildMesh, IntervalFourCells)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 4);
    EXPECT_EQ(m->dimension(), 1);
    EXPECT_EQ(m->num_vertices(), 5u);
    EXPECT_EQ(m->num_elements(), 4u);
    EXPECT_TRUE(m->on_boundary(0));
    EXPECT_TRUE(m->on_boundary(4));
    for (int i = 1; i < 4; ++i)
        EXPECT_FALSE(m->on_boundary(i));
    EXPECT_EQ(m->num_interior(), 3u);
    EXPECT_EQ(m->interior_index(0), -1);
    EXPECT_EQ(m->interior_index(1), 0);
}

TEST(BuildMesh, SquareTwoByTwo)
{
    const auto m = build_mesh(Rectangle{0.0, 1.0, 0.0, 1.0}, 2);
    EXPECT_EQ(m->num_vertices(), 9u);
    EXPECT_EQ(m->num_elements(), 8u);
    EXPECT_EQ(m->num_interior(), 1u);
    EXPECT_FALSE(m->on_boundary(4));
}

TEST(BuildMesh, RejectsBadResolutionAndDomain)
{
    EXPECT_THROW(build_mesh(Interval{0.0, 1.0}, 0), InputError);
    EXPECT_THROW(build_mesh(Interval{1.0, 1.0}, 4), InputError);
    EXPECT_THROW(build_mesh(Rectangle{0.0, 1.0, 0.0, 1.0}, 3, -1), InputError);
    EXPECT_THROW(build_mesh(Rectangle{0.0, 1.0, 2.0, 1.0}, 3), InputError);
}

TEST(BuildMesh, MeasuresSumToDomainAndArePositive)
{
    for (const auto& m : {build_mesh(Interval{-1.0, 2.5}, 7), build_mesh(Rectangle{0.0, 2.0, -1.0, 0.5}, 5, 3)}) {
        double total = 0.0;
        for (std::size_t e = 0; e < m->num_elements(); ++e) {
            EXPECT_GT(m->geometry(e).measure, 0.0);
            total += m->geometry(e).measure;
        }
        EXPECT_NEAR(total, m->domain_measure(), 1e-12 * m->domain_measure());
    }
}

TEST(BuildMesh, BoundaryMaskMatchesGeometry)
{
    const auto m = build_mesh(Rectangle{0.0, 1.0, 0.0, 2.0}, 4, 6);
    for (std::size_t i = 0; i < m->num_vertices(); ++i) {
        const auto& v = m->vertex(i);
        const bool edge = v[0] == 0.0 || v[0] == 1.0 || v[1] == 0.0 || v[1] == 2.0;
        EXPECT_EQ(m->on_boundary(i), edge);
    }
}

TEST(MeshConstructor, RejectsInvalidConnectivity)
{
    std::vector<Point> v{{0, 0}, {1, 0}};
    EXPECT_THROW(Mesh(1, v, {{0, 2, 0}}, {1, 1}, 1.0), InputError);
    EXPECT_THROW(Mesh(1, v, {{1, 0, 0}}, {1, 1}, 1.0), InputError); // negative length
    EXPECT_THROW(Mesh(1, v, {{0, 1, 0}}, {1}, 1.0), InputError);
    EXPECT_THROW(Mesh(3, v, {{0, 1, 0}}, {1, 1}, 1.0), InputError);
}

TEST(Interpolate, Examples)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 2);
    const auto one = interpolate(m, [](const Point&) { return 1.0; });
    for (double v : one.values())
        EXPECT_EQ(v, 1.0);
    const auto x = interpolate(m, [](const Point& p) { return p[0]; });
    EXPECT_EQ(x[0], 0.0);
    EXPECT_EQ(x[1], 0.5);
    EXPECT_EQ(x[2], 1.0);
    const auto s = interpolate(build_mesh(Interval{0.0, 1.0}, 8), [](const Point& p) { return std::sin(std::numbers::pi * p[0]); });
    EXPECT_EQ(s[0], 0.0);
}

TEST(ElementGradient, Examples)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 5);
    const auto x = interpolate(m, [](const Point& p) { return p[0]; });
    for (std::size_t e = 0; e < m->num_elements(); ++e)
        EXPECT_NEAR(element_gradient(x, e)[0], 1.0, 1e-13);

    const auto sq = build_mesh(Rectangle{0.0, 1.0, 0.0, 1.0}, 3, 4);
    const auto c = interpolate(sq, [](const Point&) { return 3.0; });
    const auto lin = interpolate(sq, [](const Point& p) { return p[0] + 2.0 * p[1]; });
    for (std::size_t e = 0; e < sq->num_elements(); ++e) {
        EXPECT_EQ(norm(element_gradient(c, e)), 0.0);
        const auto g = element_gradient(lin, e);
        EXPECT_NEAR(g[0], 1.0, 1e-12);
        EXPECT_NEAR(g[1], 2.0, 1e-12);
    }
}

TEST(Integrate, Examples)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 3);
    const auto q1 = default_quadrature(1);
    EXPECT_NEAR(integrate(*m, q1, [](const Point&, std::size_t) { return 1.0; }), 1.0, 1e-14);
    EXPECT_NEAR(integrate(*m, q1, [](const Point& x, std::size_t) { return x[0]; }), 0.5, 1e-14);
    const auto sq = build_mesh(Rectangle{0.0, 1.0, 0.0, 1.0}, 4);
    EXPECT_NEAR(integrate(*sq, default_quadrature(2), [](const Point&, std::size_t) { return 1.0; }), 1.0, 1e-14);
}

TEST(Quadrature, PolynomialExactness)
{
    // Degree-5 Gauss on one segment: int_0^1 x^5 = 1/6; degree-4 rule on the
    // unit triangle: int x^2 y^2 = 1/180, int x^4 = 1/30.
    const auto seg = build_mesh(Interval{0.0, 1.0}, 1);
    EXPECT_NEAR(integrate(*seg, gauss_segment(3), [](const Point& x, std::size_t) { return std::pow(x[0], 5); }),
                1.0 / 6.0, 1e-15);
    const Mesh tri(2, {{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {1, 1, 1}, 0.5);
    EXPECT_NEAR(integrate(tri, triangle_rule(4), [](const Point& x, std::size_t) { return x[0] * x[0] * x[1] * x[1]; }),
                1.0 / 180.0, 1e-14);
    EXPECT_NEAR(integrate(tri, triangle_rule(4), [](const Point& x, std::size_t) { return std::pow(x[0], 4); }),
                1.0 / 30.0, 1e-14);
    EXPECT_THROW(gauss_segment(7), InputError);
    EXPECT_THROW(triangle_rule(3), InputError);
}

TEST(Csv, RoundTripIsBitwise)
{
    for (const auto& m : {build_mesh(Interval{0.0, 1.0}, 37), build_mesh(Rectangle{0.0, 1.0, 0.0, 1.0}, 6, 5)}) {
        auto u = interpolate(m, [](const Point& x) { return std::exp(x[0]) * std::sin(3.1 * x[1] + 0.3) / 7.0; });
        const FemFunction back = from_csv(m, to_csv(u));
        for (std::size_t i = 0; i < u.size(); ++i)
            EXPECT_EQ(std::memcmp(&u.values()[i], &back.values()[i], sizeof(double)), 0);
    }
}

TEST(Csv, RejectsMismatch)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 4);
    const auto other = build_mesh(Interval{0.0, 2.0}, 4);
    const std::string text = to_csv(FemFunction(other));
    EXPECT_THROW(from_csv(m, text), InputError);
    EXPECT_THROW(from_csv(m, "x,value\n0,1\n"), InputError);
    EXPECT_THROW(from_csv(m, "x,value\n0,abc\n"), InputError);
    EXPECT_THROW(from_csv(m, ""), InputError);
}

TEST(FemFunction, DirichletConformingAndScaling)
{
    const auto m = build_mesh(Interval{0.0, 1.0}, 4);
    FemFunction u(m);
    u[2] = 1.5;
    EXPECT_TRUE(u.dirichlet_conforming());
    EXPECT_EQ(u.scaled(-2.0)[2], -3.0);
    u[0] = 1e-300;
    EXPECT_FALSE(u.dirichlet_conforming());
    EXPECT_THROW(FemFunction(m, std::vector<double>(3, 0.0)), InputError);
}
