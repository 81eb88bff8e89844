#pragma once

// The double phase operator
//   <A(u), v> = int (|grad u|^{p-2} grad u + mu |grad u|^{q-2} grad u) . grad v dx
// and its energy int (|grad u|^p / p + mu |grad u|^q / q) dx, applied
// matrix-free element by element.

#include <dphase/mesh.hpp>
#include <dphase/orlicz.hpp>

#include <Eigen/SparseCore>

#include <vector>

namespace dphase {

/// Pairings of a functional with the nodal basis functions of interior vertices.
using DualVector = std::vector<double>;

class Problem {
public:
    Problem(MeshPtr mesh, Exponents exps, ScalarField mu)
        : Problem(mesh, exps, std::move(mu), default_quadrature(mesh->dimension())) {}

    Problem(MeshPtr mesh, Exponents exps, ScalarField mu, QuadratureRule quad)
        : mesh_(std::move(mesh)), exps_(exps), mu_(std::move(mu)), quad_(std::move(quad))
    {
        exps_.validate();
        if (quad_.dimension != mesh_->dimension())
            throw InputError("quadrature dimension differs from mesh dimension");
        mu_integral_.resize(mesh_->num_elements());
        for (std::size_t e = 0; e < mesh_->num_elements(); ++e) {
            double s = 0.0;
            for_each_quadrature_point(*mesh_, quad_, e, [&](const Point& x, double w, const auto&) {
                s += w * detail::checked_mu(mu_, x);
            });
            mu_integral_[e] = s;
        }
    }

    const Mesh& mesh() const noexcept { return *mesh_; }
    const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
    const Exponents& exponents() const noexcept { return exps_; }
    double p() const noexcept { return exps_.p; }
    double q() const noexcept { return exps_.q; }
    const ScalarField& mu() const noexcept { return mu_; }
    const QuadratureRule& quadrature() const noexcept { return quad_; }

    /// Quadrature value of int_e mu dx. The gradient is constant on e, so the
    /// q-phase integrals reduce to |grad u|^q times this number.
    double mu_integral(std::size_t e) const { return mu_integral_[e]; }

    /// Scalar factor c_e with flux = c_e * grad u on element e, premultiplied
    /// by the element integrals: meas |xi|^{p-2} + (int_e mu) |xi|^{q-2}.
    /// Zero when xi = 0 (continuous extension of xi -> |xi|^{s-2} xi).
    double flux_factor(std::size_t e, double grad_norm) const
    {
        if (grad_norm == 0.0)
            return 0.0;
        return mesh_->geometry(e).measure * std::pow(grad_norm, exps_.p - 2.0) +
               mu_integral_[e] * std::pow(grad_norm, exps_.q - 2.0);
    }

private:
    MeshPtr mesh_;
    Exponents exps_;
    ScalarField mu_;
    QuadratureRule quad_;
    std::vector<double> mu_integral_;
};

inline DualVector apply_A(const Problem& problem, const FemFunction& u)
{
    const Mesh& mesh = problem.mesh();
    DualVector out(mesh.num_interior(), 0.0);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const Point xi = element_gradient(u, e);
        const double c = problem.flux_factor(e, norm(xi));
        if (c == 0.0)
            continue;
        const auto& el = mesh.element(e);
        const auto& g = mesh.geometry(e);
        for (int k = 0; k < mesh.nodes_per_element(); ++k) {
            const int i = mesh.interior_index(el[k]);
            if (i >= 0)
                out[i] += c * dot(xi, g.basis_gradient[k]);
        }
    }
    return out;
}

inline double energy(const Problem& problem, const FemFunction& u)
{
    const Mesh& mesh = problem.mesh();
    const double p = problem.p(), q = problem.q();
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const double g = norm(element_gradient(u, e));
        total += mesh.geometry(e).measure * std::pow(g, p) / p + problem.mu_integral(e) * std::pow(g, q) / q;
    }
    return total;
}

/// Interior pairings int g(x, u(x)) phi_i dx by the problem quadrature.
template <class Rhs>
DualVector load_vector(const Problem& problem, const FemFunction& u, Rhs&& g)
{
    const Mesh& mesh = problem.mesh();
    DualVector out(mesh.num_interior(), 0.0);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.element(e);
        for_each_quadrature_point(mesh, problem.quadrature(), e, [&](const Point& x, double w, const auto& bary) {
            const double val = w * g(x, u.value_at(e, bary));
            for (int k = 0; k < mesh.nodes_per_element(); ++k) {
                const int i = mesh.interior_index(el[k]);
                if (i >= 0)
                    out[i] += val * bary[k];
            }
        });
    }
    return out;
}

/// apply_A(u) minus the load of g: the discrete weak residual of -div(...) = g(x,u).
template <class Rhs>
DualVector weak_residual_vector(const Problem& problem, const FemFunction& u, Rhs&& g)
{
    DualVector r = apply_A(problem, u);
    const DualVector b = load_vector(problem, u, std::forward<Rhs>(g));
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] -= b[i];
    return r;
}

/// sum over interior vertices of d_i * v(x_i).
inline double pairing(const Mesh& mesh, const DualVector& d, const FemFunction& v)
{
    double s = 0.0;
    const auto& interior = mesh.interior_vertices();
    for (std::size_t i = 0; i < interior.size(); ++i)
        s += d[i] * v[interior[i]];
    return s;
}

inline double euclidean_norm(const DualVector& d)
{
    double s = 0.0;
    for (double x : d)
        s += x * x;
    return std::sqrt(s);
}

inline double max_norm(const DualVector& d)
{
    double m = 0.0;
    for (double x : d)
        m = std::max(m, std::abs(x));
    return m;
}

/// Relative mismatch between the central difference of the energy along v
/// and <A(u), v>. Returns 0 when both vanish.
inline double gradient_check(const Problem& problem, const FemFunction& u, const FemFunction& v, double h)
{
    if (!(h > 0.0))
        throw InputError("gradient_check step must be positive");
    FemFunction plus(u.mesh_ptr()), minus(u.mesh_ptr());
    for (std::size_t i = 0; i < u.size(); ++i) {
        plus[i] = u[i] + h * v[i];
        minus[i] = u[i] - h * v[i];
    }
    const double fd = (energy(problem, plus) - energy(problem, minus)) / (2.0 * h);
    const double exact = pairing(problem.mesh(), apply_A(problem, u), v);
    const double scale = std::max(std::abs(fd), std::abs(exact));
    return scale == 0.0 ? 0.0 : std::abs(fd - exact) / scale;
}

/// <A(u) - A(v), u - v>, accumulated per element as
/// (c_u grad u - c_v grad v) . (grad u - grad v). For Dirichlet-conforming
/// u and v this equals the pairing over interior test functions.
inline double monotonicity_gap(const Problem& problem, const FemFunction& u, const FemFunction& v)
{
    const Mesh& mesh = problem.mesh();
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const Point gu = element_gradient(u, e);
        const Point gv = element_gradient(v, e);
        const double cu = problem.flux_factor(e, norm(gu));
        const double cv = problem.flux_factor(e, norm(gv));
        const Point diff{gu[0] - gv[0], gu[1] - gv[1]};
        total += (cu * gu[0] - cv * gv[0]) * diff[0] + (cu * gu[1] - cv * gv[1]) * diff[1];
    }
    return total;
}

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Symmetric positive definite tangent of the energy on interior vertices:
/// per element, meas D^2(|xi|^p/p) + (int_e mu) D^2(|xi|^q/q) with
/// D^2(|xi|^s/s) = |xi|^{s-2} (I + (s-2) xi xi^T / |xi|^2). |xi| is floored at
/// `floor` so the matrix stays bounded and definite where the gradient vanishes.
inline SparseMatrix tangent_matrix(const Problem& problem, const FemFunction& u, double floor)
{
    const Mesh& mesh = problem.mesh();
    const double p = problem.p(), q = problem.q();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.num_elements() * 9);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const Point xi = element_gradient(u, e);
        const double g = std::max(norm(xi), floor);
        const double meas = mesh.geometry(e).measure;
        const double ap = meas * std::pow(g, p - 2.0);
        const double aq = problem.mu_integral(e) * std::pow(g, q - 2.0);
        const double iso = ap + aq;
        const double aniso = (ap * (p - 2.0) + aq * (q - 2.0)) / (g * g);
        const auto& el = mesh.element(e);
        const auto& geo = mesh.geometry(e);
        for (int a = 0; a < mesh.nodes_per_element(); ++a) {
            const int i = mesh.interior_index(el[a]);
            if (i < 0)
                continue;
            for (int b = 0; b < mesh.nodes_per_element(); ++b) {
                const int j = mesh.interior_index(el[b]);
                if (j < 0)
                    continue;
                const auto& ga = geo.basis_gradient[a];
                const auto& gb = geo.basis_gradient[b];
                const double val = iso * dot(ga, gb) + aniso * dot(xi, ga) * dot(xi, gb);
                triplets.emplace_back(i, j, val);
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(mesh.num_interior());
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

} // namespace dphase
