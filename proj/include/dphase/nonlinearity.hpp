#pragma once

// Reaction terms f(x,s) with primitive F(x,s) = int_0^s f(x,t) dt.

#include <dphase/errors.hpp>
#include <dphase/mesh.hpp>
#include <dphase/orlicz.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace dphase {

using Reaction = std::function<double(const Point&, double)>;

struct Nonlinearity {
    Reaction f;
    Reaction F;
    /// "f1", "f2", "f3", "power" or "custom", plus parameters.
    std::string tag;
};

namespace detail {

/// |s|^{e-2} s, zero at s = 0.
inline double signed_power(double s, double e)
{
    if (s == 0.0)
        return 0.0;
    return std::pow(std::abs(s), e - 2.0) * s;
}

} // namespace detail

/// F(x,s) by adaptive Gauss-Kronrod quadrature of f in s; the interval
/// [0,s] is split at the given breakpoints where f is only piecewise smooth.
inline Reaction numeric_primitive(Reaction f, std::vector<double> breakpoints = {})
{
    std::sort(breakpoints.begin(), breakpoints.end());
    return [f = std::move(f), breakpoints](const Point& x, double s) {
        if (s == 0.0)
            return 0.0;
        const double lo = std::min(0.0, s), hi = std::max(0.0, s);
        std::vector<double> nodes{lo};
        for (double b : breakpoints)
            if (b > lo && b < hi)
                nodes.push_back(b);
        nodes.push_back(hi);
        auto g = [&](double t) { return f(x, t); };
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < nodes.size(); ++k)
            total += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(g, nodes[k], nodes[k + 1],
                                                                                 15, 1e-14);
        return s > 0.0 ? total : -total;
    };
}

/// f1(x,s) = a(x) |s|^{r-2} s with closed-form primitive a(x) |s|^r / r.
inline Nonlinearity make_f1(ScalarField a, double r)
{
    if (!(r > 1.0))
        throw InputError("f1 exponent r > 1 required");
    Nonlinearity n;
    n.f = [a, r](const Point& x, double s) { return a(x) * detail::signed_power(s, r); };
    n.F = [a, r](const Point& x, double s) { return a(x) * std::pow(std::abs(s), r) / r; };
    n.tag = "f1 r=" + detail::format_double(r);
    return n;
}

/// coefficient * |s|^{r-2} s; f1 with constant a.
inline Nonlinearity make_power(double coefficient, double r)
{
    Nonlinearity n = make_f1([coefficient](const Point&) { return coefficient; }, r);
    n.tag = "power c=" + detail::format_double(coefficient) + " r=" + detail::format_double(r);
    return n;
}

/// f2(x,s) = a(x) |s|^{q-2} s ln(1 + |s|). Primitive by quadrature.
inline Nonlinearity make_f2(ScalarField a, double q)
{
    Nonlinearity n;
    n.f = [a, q](const Point& x, double s) { return a(x) * detail::signed_power(s, q) * std::log1p(std::abs(s)); };
    n.F = numeric_primitive(n.f);
    n.tag = "f2 q=" + detail::format_double(q);
    return n;
}

/// f3: |s|^{q-2} s e^{-s-1} for s < -1,
///     |s|^p / 2 ((s-1) cos(s+1) + s + 1) on [-1, 1],
///     (1 + (s-1)|x|) s^{q-1} e^{s-1} for s > 1.
inline Nonlinearity make_f3(double p, double q)
{
    Nonlinearity n;
    n.f = [p, q](const Point& x, double s) {
        if (s < -1.0)
            return detail::signed_power(s, q) * std::exp(-s - 1.0);
        if (s <= 1.0)
            return 0.5 * std::pow(std::abs(s), p) * ((s - 1.0) * std::cos(s + 1.0) + s + 1.0);
        return (1.0 + (s - 1.0) * std::hypot(x[0], x[1])) * std::pow(s, q - 1.0) * std::exp(s - 1.0);
    };
    n.F = numeric_primitive(n.f, {-1.0, 1.0});
    n.tag = "f3 p=" + detail::format_double(p) + " q=" + detail::format_double(q);
    return n;
}

inline Nonlinearity make_custom(Reaction f, std::string tag, std::vector<double> breakpoints = {})
{
    Nonlinearity n;
    n.F = numeric_primitive(f, std::move(breakpoints));
    n.f = std::move(f);
    n.tag = std::move(tag);
    return n;
}

} // namespace dphase
