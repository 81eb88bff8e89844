#pragma once

// Post-hoc diagnostics: weak residuals, growth-condition sampling for the
// convection term g(x,s,xi), the Moser test-function identity and sup norms.

#include <dphase/double_phase.hpp>
#include <dphase/errors.hpp>
#include <dphase/mesh.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dphase {

using Convection = std::function<double(const Point&, double, const Point&)>;

struct WeakResidual {
    double euclidean = 0.0;
    double max = 0.0;
};

/// Size of apply_A(u) minus the pairing of rhs(x, u(x)) with every interior basis function.
template <class Rhs>
WeakResidual weak_residual(const Problem& problem, const FemFunction& u, Rhs&& rhs)
{
    const DualVector r = weak_residual_vector(problem, u, std::forward<Rhs>(rhs));
    return {euclidean_norm(r), max_norm(r)};
}

struct GrowthConstants {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double r = 2.0;
};

struct GrowthSamples {
    std::vector<Point> points;
    std::vector<double> values;     // s
    std::vector<double> magnitudes; // |xi|; sampled along two directions
};

/// Points x, values s in {0, +-1e-2, ..., +-max_value} (decades) and gradient
/// magnitudes in {0, 1e-2, ..., max_gradient}.
inline GrowthSamples default_growth_samples(std::vector<Point> points, double max_value = 1e3,
                                            double max_gradient = 1e3)
{
    GrowthSamples g;
    g.points = std::move(points);
    g.values.push_back(0.0);
    g.magnitudes.push_back(0.0);
    for (double s = 1e-2; s <= max_value * (1 + 1e-12); s *= 10.0) {
        g.values.push_back(s);
        g.values.push_back(-s);
    }
    for (double m = 1e-2; m <= max_gradient * (1 + 1e-12); m *= 10.0)
        g.magnitudes.push_back(m);
    return g;
}

struct HgReport {
    /// The supplied constants bound |g| at every sample.
    bool holds = true;
    /// Largest |g| / (c1 |xi|^{p(r-1)/r} + c2 |s|^{r-1} + c3) over the samples.
    double max_ratio = 0.0;
    /// Smallest constants satisfying the bound on the samples, fitted in the
    /// order c3 (s = 0, xi = 0), c2 (xi = 0), c1 (rest).
    GrowthConstants fitted;
    /// max |g| / (1 + |s|^{r-1} + |xi|^{p(r-1)/r}) per decade of |s|.
    std::vector<double> level_ratios;
    /// The level ratios do not blow up towards the largest sampled |s|.
    bool growth_bounded = true;
};

/// Report-only sampling of |g(x,s,xi)| <= c1 |xi|^{p(r-1)/r} + c2 |s|^{r-1} + c3.
inline HgReport check_Hg(const Convection& g, const GrowthConstants& constants, double p, const GrowthSamples& samples)
{
    if (constants.c1 < 0.0 || constants.c2 < 0.0 || constants.c3 < 0.0)
        throw InputError("growth constants must be nonnegative");
    const double r = constants.r;
    const double grad_exp = p * (r - 1.0) / r;
    HgReport rep;
    rep.fitted.r = r;

    const std::vector<Point> dirs{{1.0, 0.0}, {std::sqrt(0.5), std::sqrt(0.5)}};
    auto for_each_sample = [&](auto&& fn) {
        for (const auto& x : samples.points)
            for (double s : samples.values)
                for (double m : samples.magnitudes)
                    for (const auto& d : dirs) {
                        const Point xi{m * d[0], m * d[1]};
                        fn(x, s, m, std::abs(g(x, s, xi)));
                        if (m == 0.0)
                            break;
                    }
    };

    for_each_sample([&](const Point&, double s, double m, double val) {
        const double bound = constants.c1 * std::pow(m, grad_exp) + constants.c2 * std::pow(std::abs(s), r - 1.0) +
                             constants.c3;
        if (!(val <= bound * (1.0 + 1e-12)))
            rep.holds = false;
        const double ratio = bound > 0.0 ? val / bound : (val > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        rep.max_ratio = std::isnan(ratio) ? std::numeric_limits<double>::infinity() : std::max(rep.max_ratio, ratio);
    });

    auto& fit = rep.fitted;
    for_each_sample([&](const Point&, double s, double m, double val) {
        if (s == 0.0 && m == 0.0)
            fit.c3 = std::max(fit.c3, val);
    });
    for_each_sample([&](const Point&, double s, double m, double val) {
        if (m == 0.0 && s != 0.0)
            fit.c2 = std::max(fit.c2, (val - fit.c3) / std::pow(std::abs(s), r - 1.0));
    });
    for_each_sample([&](const Point&, double s, double m, double val) {
        if (m != 0.0)
            fit.c1 = std::max(fit.c1, (val - fit.c3 - fit.c2 * std::pow(std::abs(s), r - 1.0)) / std::pow(m, grad_exp));
    });

    std::vector<double> levels;
    for (double s : samples.values)
        if (s > 0.0)
            levels.push_back(s);
    std::sort(levels.begin(), levels.end());
    for (double level : levels) {
        double worst = 0.0;
        for_each_sample([&](const Point&, double s, double m, double val) {
            if (std::abs(s) != level)
                return;
            const double ratio = val / (1.0 + std::pow(level, r - 1.0) + std::pow(m, grad_exp));
            worst = std::isnan(ratio) ? std::numeric_limits<double>::infinity() : std::max(worst, ratio);
        });
        rep.level_ratios.push_back(worst);
    }
    const std::size_t n = rep.level_ratios.size();
    if (n >= 2) {
        const double last = rep.level_ratios[n - 1];
        const double prev = rep.level_ratios[n - 2];
        rep.growth_bounded = std::isfinite(last) && last <= 2.0 * prev + 1e-300;
    }
    return rep;
}

namespace detail {

/// Quadrature over element e with the simplex split along the level set
/// {u = level} when it crosses the element, so integrands that switch
/// behaviour across the level set are integrated piecewise smoothly.
/// fn receives (x, weight, barycentric point in the parent element).
template <class Fn>
void for_each_cut_quadrature_point(const FemFunction& u, const QuadratureRule& quad, std::size_t e, double level,
                                   Fn&& fn)
{
    const Mesh& mesh = u.mesh();
    const auto& el = mesh.element(e);
    const int nodes = mesh.nodes_per_element();
    using Bary = std::array<double, 3>;
    std::array<double, 3> val{};
    int above = 0;
    for (int k = 0; k < nodes; ++k) {
        val[k] = u[el[k]];
        above += val[k] >= level ? 1 : 0;
    }
    if (above == 0 || above == nodes) {
        for_each_quadrature_point(mesh, quad, e, fn);
        return;
    }
    auto unit = [](int k) {
        Bary b{0.0, 0.0, 0.0};
        b[k] = 1.0;
        return b;
    };
    auto lerp = [](const Bary& a, const Bary& b, double t) {
        return Bary{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])};
    };
    std::vector<std::array<Bary, 3>> pieces;
    if (nodes == 2) {
        const double t = (level - val[0]) / (val[1] - val[0]);
        const Bary cut = lerp(unit(0), unit(1), t);
        pieces.push_back({unit(0), cut, Bary{}});
        pieces.push_back({cut, unit(1), Bary{}});
    } else {
        // The vertex alone on its side of the level set.
        int lone = 0;
        for (int k = 0; k < 3; ++k) {
            const bool side = val[k] >= level;
            int same = 0;
            for (int j = 0; j < 3; ++j)
                same += (val[j] >= level) == side ? 1 : 0;
            if (same == 1)
                lone = k;
        }
        const int i = (lone + 1) % 3, j = (lone + 2) % 3;
        const Bary pi = lerp(unit(lone), unit(i), (level - val[lone]) / (val[i] - val[lone]));
        const Bary pj = lerp(unit(lone), unit(j), (level - val[lone]) / (val[j] - val[lone]));
        pieces.push_back({unit(lone), pi, pj});
        pieces.push_back({pi, unit(i), unit(j)});
        pieces.push_back({pi, unit(j), pj});
    }
    const double parent = mesh.geometry(e).measure / quad.reference_measure();
    for (const auto& piece : pieces) {
        double fraction;
        if (nodes == 2) {
            fraction = std::abs(piece[1][1] - piece[0][1]);
        } else {
            const double a1 = piece[1][1] - piece[0][1], a2 = piece[1][2] - piece[0][2];
            const double b1 = piece[2][1] - piece[0][1], b2 = piece[2][2] - piece[0][2];
            fraction = std::abs(a1 * b2 - a2 * b1);
        }
        if (fraction == 0.0)
            continue;
        for (std::size_t k = 0; k < quad.weights.size(); ++k) {
            Bary b{0.0, 0.0, 0.0};
            for (int v = 0; v < nodes; ++v)
                for (int c = 0; c < 3; ++c)
                    b[c] += quad.points[k][v] * piece[v][c];
            fn(map_point(mesh, e, b), quad.weights[k] * parent * fraction, b);
        }
    }
}

} // namespace detail

struct MoserReport {
    double h = 0.0;
    double kappa = 0.0;
    /// int |grad u|^p u_h^{kp}, kp int |grad u|^{p-2} grad u . grad u_h u_h^{kp-1} u,
    /// and the two mu-weighted analogues.
    std::array<double, 4> lhs_terms{};
    /// int g(x,u,grad u) u u_h^{kp}.
    double rhs = 0.0;
    double gap = 0.0;
    bool mu_terms_nonnegative = true;
};

/// Evaluates both sides of the identity obtained by testing with v = u u_h^{kp},
/// u_h = min(u, h), where the truncation is applied at quadrature points and
/// elements crossed by the level set {u = h} are integrated piecewise.
inline MoserReport moser_identity_check(const Problem& problem, const FemFunction& u, const Convection& g, double h,
                                        double kappa)
{
    if (!(h > 0.0) || !(kappa > 0.0))
        throw InputError("moser_identity_check needs h > 0 and kappa > 0");
    for (double v : u.values())
        if (v < -1e-10)
            throw InputError("moser_identity_check needs a nonnegative function");
    const Mesh& mesh = problem.mesh();
    const double p = problem.p(), q = problem.q();
    const double kp = kappa * p;
    MoserReport rep;
    rep.h = h;
    rep.kappa = kappa;
    auto& t = rep.lhs_terms;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const Point xi = element_gradient(u, e);
        const double gn = norm(xi);
        double local[5] = {0, 0, 0, 0, 0};
        detail::for_each_cut_quadrature_point(u, problem.quadrature(), e, h, [&](const Point& x, double w, const auto& bary) {
            const double s = std::max(u.value_at(e, bary), 0.0);
            const double mu = problem.mu()(x);
            const double uh = std::min(s, h);
            const bool active = s < h; // grad u_h = grad u below the level, 0 above
            const double weight = std::pow(uh, kp);
            local[0] += w * std::pow(gn, p) * weight;
            local[2] += w * mu * std::pow(gn, q) * weight;
            if (active && uh > 0.0) {
                const double cross = kp * std::pow(uh, kp - 1.0) * s;
                local[1] += w * std::pow(gn, p) * cross;
                local[3] += w * mu * std::pow(gn, q) * cross;
            }
            local[4] += w * g(x, s, xi) * s * weight;
        });
        for (int k = 0; k < 4; ++k)
            t[k] += local[k];
        rep.rhs += local[4];
    }
    rep.gap = std::abs(t[0] + t[1] + t[2] + t[3] - rep.rhs);
    rep.mu_terms_nonnegative = t[2] >= -1e-12 && t[3] >= -1e-12;
    return rep;
}

struct SupNormReport {
    double sup = 0.0;
    bool within_bar = true;
};

/// Largest absolute nodal value; within_bar when sup <= u_bar (1 + 1e-6).
inline SupNormReport sup_norm_report(const FemFunction& u, std::optional<double> u_bar = std::nullopt)
{
    SupNormReport r;
    for (double v : u.values())
        r.sup = std::max(r.sup, std::abs(v));
    if (u_bar)
        r.within_bar = r.sup <= *u_bar + 1e-6 * std::abs(*u_bar);
    return r;
}

/// key=value lines for the residual and Moser reports of one solution.
inline std::string to_summary(const WeakResidual& res, const MoserReport& m, const SupNormReport& sup)
{
    using detail::format_double;
    std::string s;
    auto kv = [&s](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
    kv("residual_euclidean", format_double(res.euclidean));
    kv("residual_max", format_double(res.max));
    kv("moser_h", format_double(m.h));
    kv("moser_kappa", format_double(m.kappa));
    for (int k = 0; k < 4; ++k)
        kv("moser_term" + std::to_string(k + 1), format_double(m.lhs_terms[k]));
    kv("moser_rhs", format_double(m.rhs));
    kv("moser_gap", format_double(m.gap));
    kv("moser_mu_terms_nonnegative", m.mu_terms_nonnegative ? "1" : "0");
    kv("sup", format_double(sup.sup));
    kv("within_bar", sup.within_bar ? "1" : "0");
    return s;
}

} // namespace dphase
