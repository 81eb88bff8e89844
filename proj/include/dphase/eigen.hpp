#pragma once

// First Dirichlet eigenpair of the r-Laplacian by minimizing the Rayleigh
// quotient ||grad u||_r^r / ||u||_r^r over P1 functions.

#include <dphase/double_phase.hpp>
#include <dphase/errors.hpp>
#include <dphase/mesh.hpp>

#include <Eigen/SparseCholesky>

#include <numbers>
#include <string>
#include <vector>

namespace dphase {

struct EigenPair {
    double lambda_1 = 0.0;
    FemFunction eigenfunction;
    double r = 2.0;
    int iterations = 0;
    /// Euclidean norm of the interior pairings of -Delta_r u - lambda |u|^{r-2} u.
    double residual = 0.0;
    /// Every boundary vertex with an interior neighbour sees a positive inward difference.
    bool inward_slope_ok = false;
    /// Quotient after each accepted step (first entry: initial iterate).
    std::vector<double> history;
};

struct EigenOptions {
    double tol = 1e-10;
    int max_iter = 500;
};

inline double rayleigh_quotient(const FemFunction& u, double r, const QuadratureRule& quad)
{
    const double denom = lebesgue_power(u, quad, r);
    if (!(denom > 0.0))
        throw InputError("rayleigh_quotient of the zero function");
    return gradient_power(u, r) / denom;
}

inline double rayleigh_quotient(const FemFunction& u, double r)
{
    return rayleigh_quotient(u, r, default_quadrature(u.mesh().dimension()));
}

/// u / ||u||_r.
inline FemFunction normalize_Lr(const FemFunction& u, double r, const QuadratureRule& quad)
{
    const double n = std::pow(lebesgue_power(u, quad, r), 1.0 / r);
    if (!(n > 0.0))
        throw InputError("cannot normalize the zero function");
    return u.scaled(1.0 / n);
}

inline FemFunction normalize_Lr(const FemFunction& u, double r)
{
    return normalize_Lr(u, r, default_quadrature(u.mesh().dimension()));
}

namespace detail {

/// Interior pairings int |u|^{r-2} u phi_i dx.
inline DualVector lebesgue_pairing(const FemFunction& u, double r, const QuadratureRule& quad)
{
    const Mesh& mesh = u.mesh();
    DualVector out(mesh.num_interior(), 0.0);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.element(e);
        for_each_quadrature_point(mesh, quad, e, [&](const Point&, double w, const auto& bary) {
            const double s = u.value_at(e, bary);
            const double val = s == 0.0 ? 0.0 : std::pow(std::abs(s), r - 2.0) * s;
            for (int k = 0; k < mesh.nodes_per_element(); ++k) {
                const int i = mesh.interior_index(el[k]);
                if (i >= 0)
                    out[i] += w * val * bary[k];
            }
        });
    }
    return out;
}

/// Positive bump prod sin(pi (x - lo) / (hi - lo)) over the mesh bounding box.
inline FemFunction positive_bump(const MeshPtr& mesh)
{
    Point lo{1e300, 1e300}, hi{-1e300, -1e300};
    for (const auto& v : mesh->vertices())
        for (int d = 0; d < 2; ++d) {
            lo[d] = std::min(lo[d], v[d]);
            hi[d] = std::max(hi[d], v[d]);
        }
    const int dim = mesh->dimension();
    FemFunction u = interpolate(mesh, [&](const Point& x) {
        double v = 1.0;
        for (int d = 0; d < dim; ++d)
            v *= std::sin(std::numbers::pi * (x[d] - lo[d]) / (hi[d] - lo[d]));
        return v;
    });
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = mesh->on_boundary(i) ? 0.0 : std::max(u[i], 0.0);
    return u;
}

inline bool inward_slope_positive(const FemFunction& u)
{
    const Mesh& mesh = u.mesh();
    std::vector<char> has_neighbour(mesh.num_vertices(), 0), ok(mesh.num_vertices(), 1);
    for (const auto& el : mesh.elements())
        for (int a = 0; a < mesh.nodes_per_element(); ++a)
            for (int b = 0; b < mesh.nodes_per_element(); ++b) {
                if (!mesh.on_boundary(el[a]) || mesh.on_boundary(el[b]))
                    continue;
                has_neighbour[el[a]] = 1;
                if (!(u[el[b]] - u[el[a]] > 0.0))
                    ok[el[a]] = 0;
            }
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
        if (has_neighbour[i] && !ok[i])
            return false;
    return true;
}

} // namespace detail

/// Normalized descent on the Rayleigh quotient. Each step moves along
/// -P^{-1} g, where g are the interior pairings of -Delta_r u - R(u)|u|^{r-2}u
/// and P is the tangent of (1/r)||grad u||_r^r at u (for r = 2 this is one
/// step of inverse iteration), with Armijo backtracking on the quotient and
/// renormalization ||u||_r = 1 afterwards. Stops once the relative quotient
/// decrease drops below tol with the residual at most tol.
inline EigenPair solve_first_eigenpair(const MeshPtr& mesh, double r, EigenOptions opts = {})
{
    if (!(r > 1.0))
        throw InputError("eigenvalue exponent r > 1 required");
    if (mesh->num_interior() == 0)
        throw InputError("mesh has no interior vertices");
    const Problem laplacian(mesh, Exponents{r, r + 1.0, mesh->dimension()}, [](const Point&) { return 0.0; });
    const QuadratureRule& quad = laplacian.quadrature();
    const auto& interior = mesh->interior_vertices();

    FemFunction u = normalize_Lr(detail::positive_bump(mesh), r, quad);
    double quotient = rayleigh_quotient(u, r, quad);

    auto residual_of = [&](const FemFunction& v, double lambda) {
        DualVector res = apply_A(laplacian, v);
        const DualVector b = detail::lebesgue_pairing(v, r, quad);
        for (std::size_t i = 0; i < res.size(); ++i)
            res[i] -= lambda * b[i];
        return res;
    };

    EigenPair out{0.0, u, r, 0, 0.0, false, {quotient}};
    DualVector res = residual_of(u, quotient);
    double res_norm = euclidean_norm(res);
    bool converged = false;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        double gmax = 0.0;
        for (std::size_t e = 0; e < mesh->num_elements(); ++e)
            gmax = std::max(gmax, norm(element_gradient(u, e)));
        Eigen::SimplicialLDLT<SparseMatrix> solver(tangent_matrix(laplacian, u, 1e-10 * gmax));
        if (solver.info() != Eigen::Success)
            throw ConvergenceError("eigen preconditioner factorization failed",
                                   std::vector<double>(u.values().begin(), u.values().end()), res_norm);
        Eigen::Map<const Eigen::VectorXd> rhs(res.data(), static_cast<Eigen::Index>(res.size()));
        const Eigen::VectorXd dir = -solver.solve(rhs);

        // Quotient derivative along dir: r (g . dir) / ||u||_r^r with ||u||_r = 1.
        double slope = 0.0;
        for (std::size_t i = 0; i < res.size(); ++i)
            slope += r * res[i] * dir[static_cast<Eigen::Index>(i)];

        double alpha = 1.0;
        FemFunction trial(mesh);
        double trial_quotient = quotient;
        bool accepted = false;
        // Below this the predicted decrease is not resolvable in the quotient.
        const bool roundoff = std::abs(slope) <= 1e-12 * quotient;
        for (int ls = 0; ls < 60 && !roundoff; ++ls, alpha *= 0.5) {
            for (std::size_t i = 0; i < interior.size(); ++i)
                trial[interior[i]] = u[interior[i]] + alpha * dir[static_cast<Eigen::Index>(i)];
            if (lebesgue_power(trial, quad, r) <= 0.0)
                continue;
            trial_quotient = rayleigh_quotient(trial, r, quad);
            if (trial_quotient <= quotient + 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
        }
        DualVector trial_res;
        if (!accepted) {
            // Take the full step when it reduces the residual instead.
            for (std::size_t i = 0; i < interior.size(); ++i)
                trial[interior[i]] = u[interior[i]] + dir[static_cast<Eigen::Index>(i)];
            trial = normalize_Lr(trial, r, quad);
            trial_quotient = rayleigh_quotient(trial, r, quad);
            trial_res = residual_of(trial, trial_quotient);
            accepted = euclidean_norm(trial_res) < res_norm;
            if (accepted)
                alpha = 1.0;
        }
        if (!accepted) {
            converged = res_norm <= 10.0 * opts.tol;
            break;
        }
        u = normalize_Lr(trial, r, quad);
        const double decrease = (quotient - trial_quotient) / trial_quotient;
        quotient = trial_quotient;
        out.history.push_back(quotient);
        res = residual_of(u, quotient);
        res_norm = euclidean_norm(res);
        if (decrease < opts.tol && res_norm <= opts.tol) {
            converged = true;
            ++it;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("eigen solver did not converge in " + std::to_string(opts.max_iter) +
                                   " iterations",
                               std::vector<double>(u.values().begin(), u.values().end()), res_norm);

    double mean = 0.0;
    for (int i : interior)
        mean += u[i];
    if (mean < 0.0)
        u = u.scaled(-1.0);
    for (int i : interior)
        if (!(u[i] > 0.0))
            throw PositivityError("first eigenfunction has a nonpositive interior value");

    out.lambda_1 = quotient;
    out.eigenfunction = u;
    out.iterations = it;
    out.residual = res_norm;
    out.inward_slope_ok = detail::inward_slope_positive(u);
    return out;
}

} // namespace dphase
