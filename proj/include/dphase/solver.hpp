#pragma once

// Constant-sign solutions of
//   -div(|grad u|^{p-2} grad u + mu |grad u|^{q-2} grad u) = lambda |u|^{p-2} u - f(x,u)
// by truncation: cut the right-hand side off outside [0, u_bar] (or
// [v_bar, 0]), minimize the resulting coercive functional starting from a
// small multiple of the first p-Laplacian eigenfunction, and verify that the
// minimizer stays inside the truncation range.

#include <dphase/double_phase.hpp>
#include <dphase/eigen.hpp>
#include <dphase/errors.hpp>
#include <dphase/mesh.hpp>
#include <dphase/nonlinearity.hpp>
#include <dphase/orlicz.hpp>

#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dphase {

enum class Branch { positive, negative };

inline const char* to_string(Branch b) { return b == Branch::positive ? "positive" : "negative"; }

/// Truncation level (u_bar > 0 or v_bar < 0), lambda and p.
struct TruncationData {
    double bound = 1.0;
    double lambda = 1.0;
    double p = 2.0;
    Branch branch = Branch::positive;
};

/// The truncated reaction h(x,s) and its primitive H(x,s) = int_0^s h(x,t) dt.
/// Positive branch:
///   h+ = 0 (s < 0),  lambda s^{p-1} - f(x,s) (0 <= s <= u_bar),
///        lambda u_bar^{p-1} - f(x,u_bar) (s > u_bar).
/// The negative branch mirrors this on [v_bar, 0] and vanishes for s > 0.
class Truncation {
public:
    Truncation(Nonlinearity f, TruncationData data) : f_(std::move(f)), data_(data)
    {
        if (data_.branch == Branch::positive && !(data_.bound > 0.0))
            throw InputError("positive truncation needs u_bar > 0");
        if (data_.branch == Branch::negative && !(data_.bound < 0.0))
            throw InputError("negative truncation needs v_bar < 0");
    }

    const TruncationData& data() const noexcept { return data_; }
    const Nonlinearity& nonlinearity() const noexcept { return f_; }

    /// Untruncated right-hand side lambda |s|^{p-2} s - f(x,s).
    double original(const Point& x, double s) const
    {
        return data_.lambda * detail::signed_power(s, data_.p) - f_.f(x, s);
    }

    double h(const Point& x, double s) const
    {
        if (outside_sign(s))
            return 0.0;
        if (beyond_bound(s))
            return original(x, data_.bound);
        return original(x, s);
    }

    double H(const Point& x, double s) const
    {
        if (outside_sign(s) || s == 0.0)
            return 0.0;
        if (beyond_bound(s)) {
            const double b = data_.bound;
            return inner_primitive(x, b) + original(x, b) * (s - b);
        }
        return inner_primitive(x, s);
    }

private:
    bool outside_sign(double s) const { return data_.branch == Branch::positive ? s < 0.0 : s > 0.0; }
    bool beyond_bound(double s) const
    {
        return data_.branch == Branch::positive ? s > data_.bound : s < data_.bound;
    }
    double inner_primitive(const Point& x, double s) const
    {
        return data_.lambda * std::pow(std::abs(s), data_.p) / data_.p - f_.F(x, s);
    }

    Nonlinearity f_;
    TruncationData data_;
};

/// Quadrature points of the mesh; the sample set for pointwise conditions in x.
inline std::vector<Point> quadrature_points(const Mesh& mesh, const QuadratureRule& quad)
{
    std::vector<Point> pts;
    pts.reserve(mesh.num_elements() * quad.weights.size());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e)
        for_each_quadrature_point(mesh, quad, e, [&](const Point& x, double, const auto&) { pts.push_back(x); });
    return pts;
}

/// Smallest s in 1, 2, 4, ... <= cap with lambda s^{p-1} - f(x,s) <= 0 at every sample.
inline double find_upper_constant(const Nonlinearity& f, double lambda, double p, const std::vector<Point>& samples,
                                  double cap = std::ldexp(1.0, 40))
{
    if (!(lambda > 0.0))
        throw InputError("lambda > 0 required");
    if (!(cap > 1.0))
        throw InputError("cap > 1 required");
    for (double s = 1.0; s <= cap; s *= 2.0) {
        bool ok = true;
        for (const auto& x : samples)
            if (!(lambda * std::pow(s, p - 1.0) - f.f(x, s) <= 0.0)) {
                ok = false;
                break;
            }
        if (ok)
            return s;
    }
    throw SuperlinearityError("no upper constant u_bar <= cap: f is not superlinear enough at +infinity");
}

/// Largest s in -1, -2, -4, ... >= -cap with lambda |s|^{p-2} s - f(x,s) >= 0 at every sample.
inline double find_lower_constant(const Nonlinearity& f, double lambda, double p, const std::vector<Point>& samples,
                                  double cap = std::ldexp(1.0, 40))
{
    if (!(lambda > 0.0))
        throw InputError("lambda > 0 required");
    if (!(cap > 1.0))
        throw InputError("cap > 1 required");
    for (double s = -1.0; s >= -cap; s *= 2.0) {
        bool ok = true;
        for (const auto& x : samples)
            if (!(lambda * detail::signed_power(s, p) - f.f(x, s) >= 0.0)) {
                ok = false;
                break;
            }
        if (ok)
            return s;
    }
    throw SuperlinearityError("no lower constant v_bar >= -cap: f is not superlinear enough at -infinity");
}

inline Truncation truncation_h_plus(const Nonlinearity& f, double lambda, double u_bar, double p)
{
    return Truncation(f, {u_bar, lambda, p, Branch::positive});
}

inline Truncation truncation_h_minus(const Nonlinearity& f, double lambda, double v_bar, double p)
{
    return Truncation(f, {v_bar, lambda, p, Branch::negative});
}

/// phi(u) = energy(u) - int H(x, u) dx.
inline double phi(const Problem& problem, const Truncation& trunc, const FemFunction& u)
{
    double reaction = 0.0;
    const Mesh& mesh = problem.mesh();
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        double local = 0.0;
        for_each_quadrature_point(mesh, problem.quadrature(), e, [&](const Point& x, double w, const auto& bary) {
            local += w * trunc.H(x, u.value_at(e, bary));
        });
        reaction += local;
    }
    return energy(problem, u) - reaction;
}

/// Interior pairings of phi'(u): apply_A(u) minus the load of h(x,u).
inline DualVector phi_gradient(const Problem& problem, const Truncation& trunc, const FemFunction& u)
{
    return weak_residual_vector(problem, u, [&](const Point& x, double s) { return trunc.h(x, s); });
}

struct MinimizeOptions {
    double tol = 1e-8;
    int max_iter = 500;
    /// Stop on ||r|| <= tol instead of ||r|| <= tol (1 + ||r_0||).
    bool absolute = false;
};

struct MinimizeResult {
    FemFunction solution;
    double phi_value = 0.0;
    double residual = 0.0;     // Euclidean norm of the interior residual
    double residual_max = 0.0; // max-abs entry
    double initial_residual = 0.0;
    int iterations = 0;
    /// phi at the start and after every accepted step.
    std::vector<double> history;
};

namespace detail {

/// Central difference of s -> h(x,s) with a step symmetric in s.
inline double truncation_slope(const Truncation& trunc, const Point& x, double s)
{
    const double d = 1e-6 * std::max(1.0, std::abs(s));
    return (trunc.h(x, s + d) - trunc.h(x, s - d)) / (2.0 * d);
}

/// Tangent of the energy plus the mass matrix weighted by -dh/ds at the
/// quadrature points. With `convexify` only the positive part of -dh/ds is kept,
/// which leaves the matrix positive definite.
inline SparseMatrix phi_hessian(const Problem& problem, const Truncation& trunc, const FemFunction& u, bool convexify)
{
    const Mesh& mesh = problem.mesh();
    double gmax = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e)
        gmax = std::max(gmax, norm(element_gradient(u, e)));
    SparseMatrix k = tangent_matrix(problem, u, std::max(1e-10 * gmax, 1e-8));
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.element(e);
        for_each_quadrature_point(mesh, problem.quadrature(), e, [&](const Point& x, double w, const auto& bary) {
            double c = -truncation_slope(trunc, x, u.value_at(e, bary));
            if (convexify)
                c = std::max(c, 0.0);
            if (c == 0.0 || !std::isfinite(c))
                return;
            for (int a = 0; a < mesh.nodes_per_element(); ++a) {
                const int i = mesh.interior_index(el[a]);
                if (i < 0)
                    continue;
                for (int b = 0; b < mesh.nodes_per_element(); ++b) {
                    const int j = mesh.interior_index(el[b]);
                    if (j >= 0)
                        triplets.emplace_back(i, j, w * c * bary[a] * bary[b]);
                }
            }
        });
    }
    SparseMatrix m(k.rows(), k.cols());
    m.setFromTriplets(triplets.begin(), triplets.end());
    return k + m;
}

} // namespace detail

/// Descent on phi from u0. The search direction solves H d = -r with H the
/// Hessian of phi when it is positive definite, and its convexified version
/// otherwise; the step length comes from Armijo backtracking on phi. Once the
/// predicted decrease drops below the rounding level of phi the full step is
/// taken if it reduces the residual.
inline MinimizeResult minimize_phi(const Problem& problem, const Truncation& trunc, const FemFunction& u0,
                                   MinimizeOptions opts = {})
{
    if (!u0.dirichlet_conforming())
        throw InputError("minimize_phi needs a Dirichlet-conforming start");
    const Mesh& mesh = problem.mesh();
    const auto& interior = mesh.interior_vertices();

    MinimizeResult out{u0, phi(problem, trunc, u0), 0.0, 0.0, 0.0, 0, {}};
    FemFunction& u = out.solution;
    DualVector res = phi_gradient(problem, trunc, u);
    double res_norm = euclidean_norm(res);
    out.initial_residual = res_norm;
    out.history.push_back(out.phi_value);
    const double target = opts.absolute ? opts.tol : opts.tol * (1.0 + res_norm);

    int it = 0;
    bool converged = res_norm <= target;
    for (; !converged && it < opts.max_iter; ++it) {
        Eigen::Map<const Eigen::VectorXd> rhs(res.data(), static_cast<Eigen::Index>(res.size()));
        Eigen::VectorXd dir;
        {
            Eigen::SimplicialLLT<SparseMatrix> full(detail::phi_hessian(problem, trunc, u, false));
            if (full.info() == Eigen::Success)
                dir = -full.solve(rhs);
        }
        if (dir.size() == 0 || !(rhs.dot(dir) < 0.0)) {
            Eigen::SimplicialLLT<SparseMatrix> convex(detail::phi_hessian(problem, trunc, u, true));
            if (convex.info() != Eigen::Success)
                throw ConvergenceError("preconditioner factorization failed",
                                       std::vector<double>(u.values().begin(), u.values().end()), res_norm);
            dir = -convex.solve(rhs);
        }
        const double slope = rhs.dot(dir);

        FemFunction trial(u.mesh_ptr());
        auto set_trial = [&](double alpha) {
            for (std::size_t i = 0; i < interior.size(); ++i)
                trial[interior[i]] = u[interior[i]] + alpha * dir[static_cast<Eigen::Index>(i)];
        };
        const double current = out.phi_value;
        double trial_phi = current;
        bool accepted = false;
        const bool roundoff = std::abs(slope) <= 1e-12 * (1.0 + std::abs(current));
        double alpha = 1.0;
        for (int ls = 0; ls < 60 && !roundoff; ++ls, alpha *= 0.5) {
            set_trial(alpha);
            trial_phi = phi(problem, trunc, trial);
            if (trial_phi <= current + 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
        }
        DualVector trial_res;
        if (accepted) {
            trial_res = phi_gradient(problem, trunc, trial);
        } else {
            set_trial(1.0);
            trial_phi = phi(problem, trunc, trial);
            trial_res = phi_gradient(problem, trunc, trial);
            accepted = euclidean_norm(trial_res) < res_norm &&
                       trial_phi <= current + 1e-13 * (1.0 + std::abs(current));
        }
        if (!accepted)
            break;
        u = trial;
        out.phi_value = trial_phi;
        out.history.push_back(trial_phi);
        res = std::move(trial_res);
        res_norm = euclidean_norm(res);
        converged = res_norm <= target;
    }
    out.iterations = it;
    out.residual = res_norm;
    out.residual_max = max_norm(res);
    if (!converged)
        throw ConvergenceError("minimization stopped at residual " + detail::format_double(res_norm) +
                                   " after " + std::to_string(it) + " iterations",
                               std::vector<double>(u.values().begin(), u.values().end()), res_norm);
    return out;
}

struct HfReport {
    bool bounded = false;
    double bounded_max = 0.0;
    bool superlinear = false;
    /// min over samples of f(x,s) s / |s|^q at |s| = 10, 1e2, 1e3, 1e4 (both signs).
    std::vector<double> superlinear_ratios;
    bool small_at_zero = false;
    /// max over samples of |f(x,s) / (|s|^{p-2} s)| at |s| = 1e-1 ... 1e-6 (both signs).
    std::vector<double> zero_ratios;

    bool all_pass() const { return bounded && superlinear && small_at_zero; }
};

/// Sampling diagnostic for boundedness on bounded sets, superlinear growth
/// beyond |s|^{q-1} at infinity and o(|s|^{p-1}) behaviour at zero.
/// Limits are not certified; the report only reflects the samples.
inline HfReport check_Hf(const Nonlinearity& f, double p, double q, const std::vector<Point>& samples,
                         double bound_range = 10.0, double superlinear_threshold = 1.0)
{
    HfReport r;
    r.bounded = true;
    for (const auto& x : samples)
        for (int k = -40; k <= 40; ++k) {
            const double v = std::abs(f.f(x, bound_range * k / 40.0));
            if (!std::isfinite(v))
                r.bounded = false;
            else
                r.bounded_max = std::max(r.bounded_max, v);
        }

    for (double s : {1e1, 1e2, 1e3, 1e4}) {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& x : samples)
            for (double t : {s, -s}) {
                const double ratio = f.f(x, t) * t / std::pow(std::abs(t), q);
                worst = std::isnan(ratio) ? -std::numeric_limits<double>::infinity() : std::min(worst, ratio);
            }
        r.superlinear_ratios.push_back(worst);
    }
    r.superlinear = r.superlinear_ratios.back() > superlinear_threshold;
    for (std::size_t k = 1; k < r.superlinear_ratios.size(); ++k)
        if (!(r.superlinear_ratios[k] >= r.superlinear_ratios[k - 1]) &&
            !(std::isinf(r.superlinear_ratios[k]) && r.superlinear_ratios[k] > 0))
            r.superlinear = false;

    for (double s = 1e-1; s >= 0.99e-6; s /= 10.0) {
        double worst = 0.0;
        for (const auto& x : samples)
            for (double t : {s, -s})
                worst = std::max(worst, std::abs(f.f(x, t) / detail::signed_power(t, p)));
        r.zero_ratios.push_back(worst);
    }
    r.small_at_zero = r.zero_ratios.back() < 0.5 * r.zero_ratios.front();
    for (std::size_t k = 1; k < r.zero_ratios.size(); ++k)
        if (!(r.zero_ratios[k] < r.zero_ratios[k - 1]))
            r.small_at_zero = false;
    return r;
}

struct SolveOptions {
    /// Bound on the Euclidean norm of the original-problem residual.
    double tol = 1e-8;
    /// Sign/bound slack relative to |bound|.
    double tol_bound_rel = 1e-6;
    int max_iter = 500;
    double cap = std::ldexp(1.0, 40);
    /// Seeds t = 2^-k, k = 0..seed_levels.
    int seed_levels = 20;
    EigenOptions eigen{};
};

struct SolveReport {
    SolveReport(Branch b, FemFunction u) : branch(b), solution(std::move(u)) {}

    Branch branch = Branch::positive;
    FemFunction solution;
    double phi_value = 0.0;
    /// Residual of the truncated problem (Euclidean / max entry).
    double residual_dual_norm = 0.0;
    double residual_max = 0.0;
    /// Residual with right-hand side lambda |u|^{p-2} u - f(x,u).
    double original_residual = 0.0;
    int iterations = 0;
    double min_value = 0.0;
    double max_value = 0.0;
    double bound = 0.0;
    double lambda = 0.0;
    double lambda1 = 0.0;
    double seed_t = 0.0;
    double seed_phi = 0.0;
    /// t^p (lambda1 - lambda + eps)/p + t^q ||grad u1||_{q,mu}^q / q with eps = (lambda - lambda1)/2.
    double seed_estimate = 0.0;
    std::vector<double> phi_history;
    HypothesisReport hypotheses;
    HfReport hf;
};

namespace detail {

inline double original_residual(const Problem& problem, const Truncation& trunc, const FemFunction& u)
{
    return euclidean_norm(
        weak_residual_vector(problem, u, [&](const Point& x, double s) { return trunc.original(x, s); }));
}

inline SolveReport solve_branch(const Problem& problem, const Nonlinearity& f, double lambda, const EigenPair& eig,
                                Branch branch, const SolveOptions& opts)
{
    const double p = problem.p(), q = problem.q();
    if (!(lambda > eig.lambda_1))
        throw GateError("lambda = " + format_double(lambda) + " does not exceed lambda_1,p = " +
                            format_double(eig.lambda_1),
                        lambda, eig.lambda_1);
    if (eig.eigenfunction.mesh_ptr() != problem.mesh_ptr())
        throw InputError("eigenpair computed on a different mesh");

    const auto samples = quadrature_points(problem.mesh(), problem.quadrature());
    const double bound = branch == Branch::positive ? find_upper_constant(f, lambda, p, samples, opts.cap)
                                                    : find_lower_constant(f, lambda, p, samples, opts.cap);
    const Truncation trunc(f, {bound, lambda, p, branch});
    const double sign = branch == Branch::positive ? 1.0 : -1.0;

    SolveReport rep(branch, eig.eigenfunction);
    rep.bound = bound;
    rep.lambda = lambda;
    rep.lambda1 = eig.lambda_1;
    rep.hypotheses = check_hypotheses(problem.exponents(), problem.mu(), problem.mesh());
    rep.hf = check_Hf(f, p, q, samples);

    // Most negative phi along the ray t u_1, t = 2^-k.
    std::optional<FemFunction> seed;
    rep.seed_phi = 0.0;
    for (int k = 0; k <= opts.seed_levels; ++k) {
        const double t = std::ldexp(1.0, -k);
        FemFunction candidate = eig.eigenfunction.scaled(sign * t);
        const double value = phi(problem, trunc, candidate);
        if (value < rep.seed_phi) {
            rep.seed_phi = value;
            rep.seed_t = t;
            seed = std::move(candidate);
        }
    }
    if (!seed)
        throw SeedError("phi is nonnegative at every scanned multiple of the first eigenfunction");
    {
        const double eps = 0.5 * (lambda - eig.lambda_1);
        const double t = rep.seed_t;
        const double qmu = sample_gradients(eig.eigenfunction, problem.mu(), problem.quadrature()).weighted_power(q);
        rep.seed_estimate = std::pow(t, p) * (eig.lambda_1 - lambda + eps) / p + std::pow(t, q) * qmu / q;
    }

    MinimizeResult min = minimize_phi(problem, trunc, *seed, {opts.tol, opts.max_iter, true});
    rep.solution = std::move(min.solution);
    rep.phi_value = min.phi_value;
    rep.residual_dual_norm = min.residual;
    rep.residual_max = min.residual_max;
    rep.iterations = min.iterations;
    rep.phi_history = std::move(min.history);
    rep.original_residual = original_residual(problem, trunc, rep.solution);

    const auto vals = rep.solution.values();
    rep.min_value = *std::min_element(vals.begin(), vals.end());
    rep.max_value = *std::max_element(vals.begin(), vals.end());

    const double slack = opts.tol_bound_rel * std::abs(bound);
    if (branch == Branch::positive) {
        if (rep.min_value < -slack)
            throw VerificationError("u+ has negative values beyond tolerance: min " + format_double(rep.min_value));
        if (rep.max_value > bound + slack)
            throw VerificationError("u+ exceeds u_bar: max " + format_double(rep.max_value));
    } else {
        if (rep.max_value > slack)
            throw VerificationError("u- has positive values beyond tolerance: max " + format_double(rep.max_value));
        if (rep.min_value < bound - slack)
            throw VerificationError("u- is below v_bar: min " + format_double(rep.min_value));
    }
    if (!(rep.phi_value < 0.0))
        throw VerificationError("minimum of phi is not negative: trivial solution");
    if (!(rep.original_residual <= opts.tol))
        throw VerificationError("original-problem residual " + format_double(rep.original_residual) +
                                " exceeds tolerance");
    return rep;
}

} // namespace detail

/// Nonnegative solution from the global minimizer of phi+.
inline SolveReport solve_positive(const Problem& problem, const Nonlinearity& f, double lambda,
                                  const EigenPair& eig, const SolveOptions& opts = {})
{
    return detail::solve_branch(problem, f, lambda, eig, Branch::positive, opts);
}

inline SolveReport solve_positive(const Problem& problem, const Nonlinearity& f, double lambda,
                                  const SolveOptions& opts = {})
{
    return solve_positive(problem, f, lambda, solve_first_eigenpair(problem.mesh_ptr(), problem.p(), opts.eigen),
                          opts);
}

/// Nonpositive solution from the global minimizer of phi-.
inline SolveReport solve_negative(const Problem& problem, const Nonlinearity& f, double lambda,
                                  const EigenPair& eig, const SolveOptions& opts = {})
{
    return detail::solve_branch(problem, f, lambda, eig, Branch::negative, opts);
}

inline SolveReport solve_negative(const Problem& problem, const Nonlinearity& f, double lambda,
                                  const SolveOptions& opts = {})
{
    return solve_negative(problem, f, lambda, solve_first_eigenpair(problem.mesh_ptr(), problem.p(), opts.eigen),
                          opts);
}

/// Flat key=value serialization (numbers in shortest round-trip form).
inline std::string to_summary(const SolveReport& r)
{
    using detail::format_double;
    std::string s;
    auto kv = [&s](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
    kv("branch", to_string(r.branch));
    kv("lambda", format_double(r.lambda));
    kv("lambda1", format_double(r.lambda1));
    kv("bound", format_double(r.bound));
    kv("phi", format_double(r.phi_value));
    kv("residual", format_double(r.residual_dual_norm));
    kv("residual_max", format_double(r.residual_max));
    kv("original_residual", format_double(r.original_residual));
    kv("iterations", std::to_string(r.iterations));
    kv("min", format_double(r.min_value));
    kv("max", format_double(r.max_value));
    kv("sup", format_double(std::max(std::abs(r.min_value), std::abs(r.max_value))));
    kv("seed_t", format_double(r.seed_t));
    kv("seed_phi", format_double(r.seed_phi));
    kv("seed_estimate", format_double(r.seed_estimate));
    kv("hf_bounded", r.hf.bounded ? "1" : "0");
    kv("hf_superlinear", r.hf.superlinear ? "1" : "0");
    kv("hf_small_at_zero", r.hf.small_at_zero ? "1" : "0");
    kv("hyp_p_less_q", r.hypotheses.p_less_q ? "1" : "0");
    kv("hyp_q_less_N", r.hypotheses.q_less_N ? "1" : "0");
    kv("hyp_ratio", r.hypotheses.ratio_ok ? "1" : "0");
    kv("hyp_mu_nonnegative", r.hypotheses.mu_nonnegative ? "1" : "0");
    kv("hyp_lipschitz_mu", format_double(r.hypotheses.lipschitz_mu));
    kv("hyp_p_star", format_double(r.hypotheses.p_star));
    return s;
}

} // namespace dphase
