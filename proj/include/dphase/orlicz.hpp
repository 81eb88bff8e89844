#pragma once

// Musielak-Orlicz modulus for H(x,t) = t^p + mu(x) t^q, its Luxemburg norm,
// the weighted seminorm and structural hypothesis diagnostics.

#include <dphase/errors.hpp>
#include <dphase/mesh.hpp>

#include <functional>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dphase {

using ScalarField = std::function<double(const Point&)>;

struct Exponents {
    double p = 2.0;
    double q = 3.0;
    int N = 2;

    void validate() const
    {
        if (!(p > 1.0))
            throw InputError("p > 1 required");
        if (!(p < q))
            throw InputError("p < q required");
        if (N < 1)
            throw InputError("N >= 1 required");
    }
};

/// Sobolev critical exponent Np/(N-p), +inf when p >= N.
inline double critical_exponent(double p, int N)
{
    return p < N ? N * p / (N - p) : std::numeric_limits<double>::infinity();
}

/// Magnitudes |v|, weights mu and quadrature weights at every quadrature
/// point. All modulus-type quantities are weighted sums over these.
struct ModulusSamples {
    std::vector<double> weight;
    std::vector<double> magnitude;
    std::vector<double> mu;

    /// sum w |v|^s
    double power(double s) const
    {
        double t = 0.0;
        for (std::size_t k = 0; k < weight.size(); ++k)
            t += weight[k] * std::pow(magnitude[k], s);
        return t;
    }

    /// sum w mu |v|^s
    double weighted_power(double s) const
    {
        double t = 0.0;
        for (std::size_t k = 0; k < weight.size(); ++k)
            t += weight[k] * mu[k] * std::pow(magnitude[k], s);
        return t;
    }

    bool all_zero() const
    {
        for (double m : magnitude)
            if (m != 0.0)
                return false;
        return true;
    }
};

namespace detail {

inline double checked_mu(const ScalarField& mu, const Point& x)
{
    const double m = mu(x);
    if (!(m >= 0.0))
        throw InputError("mu >= 0 required (negative weight sample)");
    return m;
}

} // namespace detail

/// Samples of |u| at the quadrature points.
inline ModulusSamples sample_values(const FemFunction& u, const ScalarField& mu, const QuadratureRule& quad)
{
    ModulusSamples s;
    const Mesh& mesh = u.mesh();
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        for_each_quadrature_point(mesh, quad, e, [&](const Point& x, double w, const auto& bary) {
            s.weight.push_back(w);
            s.magnitude.push_back(std::abs(u.value_at(e, bary)));
            s.mu.push_back(detail::checked_mu(mu, x));
        });
    }
    return s;
}

/// Samples of |grad u| at the quadrature points.
inline ModulusSamples sample_gradients(const FemFunction& u, const ScalarField& mu, const QuadratureRule& quad)
{
    ModulusSamples s;
    const Mesh& mesh = u.mesh();
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const double g = norm(element_gradient(u, e));
        for_each_quadrature_point(mesh, quad, e, [&](const Point& x, double w, const auto&) {
            s.weight.push_back(w);
            s.magnitude.push_back(g);
            s.mu.push_back(detail::checked_mu(mu, x));
        });
    }
    return s;
}

/// rho_H = sum w (|v|^p + mu |v|^q).
inline double modulus(const ModulusSamples& s, const Exponents& exps)
{
    double t = 0.0;
    for (std::size_t k = 0; k < s.weight.size(); ++k)
        t += s.weight[k] * (std::pow(s.magnitude[k], exps.p) + s.mu[k] * std::pow(s.magnitude[k], exps.q));
    return t;
}

/// Luxemburg norm: the tau with rho_H(v/tau) = 1. rho_H(v/tau) = A tau^-p + B tau^-q
/// is strictly decreasing in tau, so the root is bracketed by doubling or
/// halving from tau = 1 and refined by 60 bisection steps.
inline double luxemburg_norm(const ModulusSamples& s, const Exponents& exps)
{
    if (s.all_zero())
        return 0.0;
    const double a = s.power(exps.p);
    const double b = s.weighted_power(exps.q);
    auto rho = [&](double tau) { return a * std::pow(tau, -exps.p) + b * std::pow(tau, -exps.q); };
    double lo = 1.0, hi = 1.0;
    if (rho(1.0) > 1.0) {
        while (rho(hi) > 1.0)
            hi *= 2.0;
        lo = hi / 2.0;
    } else {
        while (rho(lo) <= 1.0)
            lo /= 2.0;
        hi = lo * 2.0;
    }
    // rho(lo) > 1 >= rho(hi)
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (rho(mid) > 1.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline double modulus(const FemFunction& u, const ScalarField& mu, const Exponents& exps,
                      const QuadratureRule& quad)
{
    return modulus(sample_values(u, mu, quad), exps);
}

inline double modulus(const FemFunction& u, const ScalarField& mu, const Exponents& exps)
{
    return modulus(u, mu, exps, default_quadrature(u.mesh().dimension()));
}

inline double luxemburg_norm(const FemFunction& u, const ScalarField& mu, const Exponents& exps,
                             const QuadratureRule& quad)
{
    return luxemburg_norm(sample_values(u, mu, quad), exps);
}

inline double luxemburg_norm(const FemFunction& u, const ScalarField& mu, const Exponents& exps)
{
    return luxemburg_norm(u, mu, exps, default_quadrature(u.mesh().dimension()));
}

/// ||u||_{q,mu} = (int mu |u|^q)^(1/q).
inline double seminorm_q_mu(const FemFunction& u, const ScalarField& mu, double q, const QuadratureRule& quad)
{
    return std::pow(sample_values(u, mu, quad).weighted_power(q), 1.0 / q);
}

inline double seminorm_q_mu(const FemFunction& u, const ScalarField& mu, double q)
{
    return seminorm_q_mu(u, mu, q, default_quadrature(u.mesh().dimension()));
}

struct SandwichReport {
    double lhs = 0.0;
    double mid = 0.0;
    double rhs = 0.0;
    double norm = 0.0;
    bool holds = true;
};

/// min{|v|_H^p, |v|_H^q} <= |v|_p^p + |v|_{q,mu}^q <= max{|v|_H^p, |v|_H^q},
/// with 1e-10 relative slack.
inline SandwichReport check_sandwich(const ModulusSamples& s, const Exponents& exps)
{
    SandwichReport r;
    r.norm = luxemburg_norm(s, exps);
    const double np = std::pow(r.norm, exps.p);
    const double nq = std::pow(r.norm, exps.q);
    r.lhs = std::min(np, nq);
    r.rhs = std::max(np, nq);
    r.mid = s.power(exps.p) + s.weighted_power(exps.q);
    constexpr double slack = 1e-10;
    r.holds = r.lhs <= r.mid * (1.0 + slack) + std::numeric_limits<double>::min() &&
              r.mid <= r.rhs * (1.0 + slack) + std::numeric_limits<double>::min();
    return r;
}

inline SandwichReport check_sandwich(const FemFunction& u, const ScalarField& mu, const Exponents& exps,
                                     const QuadratureRule& quad)
{
    return check_sandwich(sample_values(u, mu, quad), exps);
}

inline SandwichReport check_sandwich(const FemFunction& u, const ScalarField& mu, const Exponents& exps)
{
    return check_sandwich(u, mu, exps, default_quadrature(u.mesh().dimension()));
}

struct HypothesisReport {
    bool p_less_q = false;
    bool q_less_N = false;
    bool ratio_ok = false;       // q/p < 1 + 1/N
    bool mu_nonnegative = false;
    bool dimension_matches = false; // mesh dimension == N
    double q_over_p = 0.0;
    double lipschitz_mu = 0.0;
    double p_star = 0.0;
    std::vector<std::string> warnings;

    bool all_pass() const { return p_less_q && q_less_N && ratio_ok && mu_nonnegative; }
};

/// Report-only check of 1 < p < q < N, q/p < 1 + 1/N and mu >= 0 Lipschitz.
/// The Lipschitz constant is the largest difference quotient over mesh edges.
inline HypothesisReport check_hypotheses(const Exponents& exps, const ScalarField& mu, const Mesh& mesh)
{
    HypothesisReport r;
    r.p_less_q = exps.p > 1.0 && exps.p < exps.q;
    r.q_less_N = exps.q < exps.N;
    r.q_over_p = exps.q / exps.p;
    r.ratio_ok = r.q_over_p < 1.0 + 1.0 / exps.N;
    r.p_star = critical_exponent(exps.p, exps.N);
    r.dimension_matches = mesh.dimension() == exps.N;

    r.mu_nonnegative = true;
    for (const auto& v : mesh.vertices())
        if (!(mu(v) >= 0.0))
            r.mu_nonnegative = false;
    const auto quad = default_quadrature(mesh.dimension());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e)
        for_each_quadrature_point(mesh, quad, e, [&](const Point& x, double, const auto&) {
            if (!(mu(x) >= 0.0))
                r.mu_nonnegative = false;
        });

    std::set<std::pair<int, int>> edges;
    for (const auto& el : mesh.elements())
        for (int i = 0; i < mesh.nodes_per_element(); ++i)
            for (int j = i + 1; j < mesh.nodes_per_element(); ++j)
                edges.emplace(std::min(el[i], el[j]), std::max(el[i], el[j]));
    for (const auto& [a, b] : edges) {
        const Point& xa = mesh.vertex(a);
        const Point& xb = mesh.vertex(b);
        const double len = std::hypot(xa[0] - xb[0], xa[1] - xb[1]);
        r.lipschitz_mu = std::max(r.lipschitz_mu, std::abs(mu(xa) - mu(xb)) / len);
    }

    if (!r.p_less_q)
        r.warnings.push_back("1 < p < q violated");
    if (!r.q_less_N)
        r.warnings.push_back("q < N violated");
    if (!r.ratio_ok)
        r.warnings.push_back("q/p < 1 + 1/N violated");
    if (!r.mu_nonnegative)
        r.warnings.push_back("mu has negative samples");
    if (!r.dimension_matches)
        r.warnings.push_back("mesh dimension differs from N");
    return r;
}

} // namespace dphase
