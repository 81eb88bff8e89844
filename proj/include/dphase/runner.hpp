#pragma once

// Configuration-driven experiment runner behind the dphase command-line tool.
// Every artifact is plain text; numbers use the shortest round-trip form so
// identical configurations reproduce byte-identical files.

#include <dphase/config.hpp>
#include <dphase/double_phase.hpp>
#include <dphase/eigen.hpp>
#include <dphase/errors.hpp>
#include <dphase/nonlinearity.hpp>
#include <dphase/solver.hpp>
#include <dphase/verify.hpp>

#include <filesystem>
#include <future>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dphase {

/// Everything derived from a configuration that the subcommands share.
class Experiment {
public:
    explicit Experiment(ExperimentConfig cfg)
        : cfg_(std::move(cfg)), mesh_(cfg_.build_mesh()), problem_(mesh_, cfg_.exps, cfg_.mu_field()),
          f_(cfg_.nonlinearity())
    {
        opts_.tol = cfg_.tol;
        opts_.tol_bound_rel = cfg_.tol_bound;
        opts_.max_iter = cfg_.max_iter;
        opts_.eigen.tol = cfg_.eigen_tol;
        opts_.eigen.max_iter = cfg_.eigen_max_iter;
    }

    const ExperimentConfig& config() const noexcept { return cfg_; }
    const MeshPtr& mesh() const noexcept { return mesh_; }
    const Problem& problem() const noexcept { return problem_; }
    const Nonlinearity& nonlinearity() const noexcept { return f_; }
    const SolveOptions& solve_options() const noexcept { return opts_; }

    EigenPair eigenpair() const { return solve_first_eigenpair(mesh_, cfg_.exps.p, opts_.eigen); }

    /// Absolute lambda values of the configuration.
    std::vector<double> lambdas(double lambda1) const
    {
        std::vector<double> out;
        for (double v : cfg_.lambda.values)
            out.push_back(cfg_.lambda.multiple ? v * lambda1 : v);
        return out;
    }

    /// u_bar (positive) or v_bar (negative) for the given lambda.
    double bound(double lambda, Branch branch) const
    {
        const auto samples = quadrature_points(*mesh_, problem_.quadrature());
        return branch == Branch::positive ? find_upper_constant(f_, lambda, cfg_.exps.p, samples, opts_.cap)
                                          : find_lower_constant(f_, lambda, cfg_.exps.p, samples, opts_.cap);
    }

    /// g(x,s,xi) = lambda |s|^{p-2} s - f(x,s), the right-hand side of the original problem.
    Convection convection(double lambda) const
    {
        return [f = f_.f, lambda, p = cfg_.exps.p](const Point& x, double s, const Point&) {
            return lambda * detail::signed_power(s, p) - f(x, s);
        };
    }

private:
    ExperimentConfig cfg_;
    MeshPtr mesh_;
    Problem problem_;
    Nonlinearity f_;
    SolveOptions opts_;
};

inline std::string eigen_summary(const EigenPair& eig)
{
    using detail::format_double;
    return "r=" + format_double(eig.r) + "\nlambda=" + format_double(eig.lambda_1) +
           "\niterations=" + std::to_string(eig.iterations) + "\nresidual=" + format_double(eig.residual) +
           "\ninward_slope_ok=" + (eig.inward_slope_ok ? "1" : "0") + "\n";
}

/// Residual, Moser and sup-norm report of one constant-sign solution. The
/// Moser identity needs u >= 0, so a nonpositive solution is reflected
/// together with its right-hand side.
inline std::string verification_report(const Experiment& ex, const FemFunction& u, double lambda, double bound,
                                       Branch branch)
{
    const Convection g = ex.convection(lambda);
    const WeakResidual res =
        weak_residual(ex.problem(), u, [&](const Point& x, double s) { return g(x, s, Point{0.0, 0.0}); });
    const SupNormReport sup = sup_norm_report(u, std::abs(bound));

    const bool reflect = branch == Branch::negative;
    const FemFunction w = reflect ? u.scaled(-1.0) : u;
    const Convection gw = reflect ? Convection([g](const Point& x, double s, const Point& xi) {
        return -g(x, -s, Point{-xi[0], -xi[1]});
    })
                                  : g;
    const double h = sup.sup > 0.0 ? 0.5 * sup.sup : 1.0;
    const MoserReport moser = moser_identity_check(ex.problem(), w, gw, h, 1.0);
    return std::string("branch=") + to_string(branch) + "\nlambda=" + detail::format_double(lambda) +
           "\nbound=" + detail::format_double(bound) + "\n" + to_summary(res, moser, sup);
}

/// One row of the run summary table.
struct SummaryRow {
    double lambda = 0.0;
    double lambda1 = 0.0;
    std::optional<SolveReport> plus;
    std::optional<SolveReport> minus;
    std::string status = "ok";
    ExitCode code = ExitCode::success;
};

inline const char* status_name(ExitCode c)
{
    switch (c) {
    case ExitCode::success:
        return "ok";
    case ExitCode::config_error:
        return "input_error";
    case ExitCode::gate_error:
        return "gate_error";
    case ExitCode::convergence_error:
        return "convergence_error";
    case ExitCode::verification_error:
        return "verification_error";
    }
    return "error";
}

inline std::string summary_csv_header()
{
    return "lambda,lambda1,u_bar,v_bar,phi_plus,phi_minus,sup_plus,sup_minus,residual_plus,residual_minus,"
           "iterations_plus,iterations_minus,status\n";
}

inline std::string summary_csv_row(const SummaryRow& row)
{
    using detail::format_double;
    auto field = [](const std::optional<SolveReport>& r, auto&& get) { return r ? get(*r) : std::string(); };
    auto sup = [](const SolveReport& r) { return format_double(std::max(std::abs(r.min_value), std::abs(r.max_value))); };
    std::string s = format_double(row.lambda) + "," + format_double(row.lambda1) + ",";
    s += field(row.plus, [](const SolveReport& r) { return format_double(r.bound); }) + ",";
    s += field(row.minus, [](const SolveReport& r) { return format_double(r.bound); }) + ",";
    s += field(row.plus, [](const SolveReport& r) { return format_double(r.phi_value); }) + ",";
    s += field(row.minus, [](const SolveReport& r) { return format_double(r.phi_value); }) + ",";
    s += field(row.plus, sup) + ",";
    s += field(row.minus, sup) + ",";
    s += field(row.plus, [](const SolveReport& r) { return format_double(r.original_residual); }) + ",";
    s += field(row.minus, [](const SolveReport& r) { return format_double(r.original_residual); }) + ",";
    s += field(row.plus, [](const SolveReport& r) { return std::to_string(r.iterations); }) + ",";
    s += field(row.minus, [](const SolveReport& r) { return std::to_string(r.iterations); }) + ",";
    return s + row.status + "\n";
}

inline std::string summary_text(const SummaryRow& row)
{
    using detail::format_double;
    std::string s = "lambda=" + format_double(row.lambda) + "\nlambda1=" + format_double(row.lambda1) +
                    "\nstatus=" + row.status + "\nexit_code=" + std::to_string(static_cast<int>(row.code)) + "\n";
    auto section = [&s](const char* prefix, const std::optional<SolveReport>& r) {
        if (!r)
            return;
        const std::string body = to_summary(*r);
        std::size_t pos = 0;
        while (pos < body.size()) {
            const auto nl = body.find('\n', pos);
            s += prefix + body.substr(pos, nl - pos + 1);
            pos = nl + 1;
        }
    };
    section("plus.", row.plus);
    section("minus.", row.minus);
    return s;
}

/// Solves both branches for one lambda and writes the per-solution
/// artifacts into `dir`. Module errors are recorded in the row.
inline SummaryRow solve_lambda(const Experiment& ex, const EigenPair& eig, double lambda,
                               const std::filesystem::path& dir)
{
    SummaryRow row;
    row.lambda = lambda;
    row.lambda1 = eig.lambda_1;
    std::vector<std::string> failures;
    auto attempt = [&](Branch branch, std::optional<SolveReport>& slot, const char* tag) {
        try {
            slot = detail::solve_branch(ex.problem(), ex.nonlinearity(), lambda, eig, branch, ex.solve_options());
            write_text((dir / (std::string("u_") + tag + ".csv")).string(), to_csv(slot->solution));
            write_text((dir / (std::string("solve_") + tag + ".txt")).string(), to_summary(*slot));
            write_text((dir / (std::string("verify_") + tag + ".txt")).string(),
                       verification_report(ex, slot->solution, lambda, slot->bound, branch));
        } catch (const ConvergenceError& e) {
            // Keep the best iterate for inspection.
            write_text((dir / (std::string("u_") + tag + "_best.csv")).string(),
                       to_csv(FemFunction(ex.mesh(), e.best_iterate())));
            if (row.code == ExitCode::success)
                row.code = e.code();
            failures.push_back(std::string(tag) + ":" + status_name(e.code()));
        } catch (const Error& e) {
            if (row.code == ExitCode::success)
                row.code = e.code();
            failures.push_back(std::string(tag) + ":" + status_name(e.code()));
        }
    };
    attempt(Branch::positive, row.plus, "plus");
    attempt(Branch::negative, row.minus, "minus");
    if (!failures.empty()) {
        // Both branches failing the same way collapse to one status word.
        const bool same = failures.size() == 2 && failures[0].substr(failures[0].find(':')) ==
                                                      failures[1].substr(failures[1].find(':'));
        row.status = same ? status_name(row.code) : failures[0] + (failures.size() > 1 ? ";" + failures[1] : "");
    }
    return row;
}

struct RunResult {
    ExitCode code = ExitCode::success;
    /// Text echoed to the console unless quiet.
    std::string message;
};

inline void ensure_directory(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

inline EigenPair write_eigen(const Experiment& ex, const std::filesystem::path& dir)
{
    EigenPair eig = ex.eigenpair();
    write_text((dir / "eigen.csv").string(), to_csv(eig.eigenfunction));
    write_text((dir / "eigen_summary.txt").string(), eigen_summary(eig));
    return eig;
}

inline RunResult run_eigen(const Experiment& ex, const std::filesystem::path& dir)
{
    ensure_directory(dir);
    return {ExitCode::success, eigen_summary(write_eigen(ex, dir))};
}

inline RunResult run_solve(const Experiment& ex, const std::filesystem::path& dir)
{
    if (ex.config().lambda.sweep)
        throw InputError("solve needs lambda.value or lambda.multiple; use the sweep subcommand for lists");
    ensure_directory(dir);
    const EigenPair eig = write_eigen(ex, dir);
    const SummaryRow row = solve_lambda(ex, eig, ex.lambdas(eig.lambda_1).front(), dir);
    write_text((dir / "summary.csv").string(), summary_csv_header() + summary_csv_row(row));
    const std::string text = summary_text(row);
    write_text((dir / "summary.txt").string(), text);
    return {row.code, text};
}

/// One sub-directory per lambda (entry_<k>), solved concurrently; the
/// summary table is merged afterwards in configuration order. The exit code
/// is the first failure other than a gate error, 3 when every entry is
/// gated, and 0 otherwise.
inline RunResult run_sweep(const Experiment& ex, const std::filesystem::path& dir)
{
    ensure_directory(dir);
    const EigenPair eig = write_eigen(ex, dir);
    const auto lambdas = ex.lambdas(eig.lambda_1);
    std::vector<std::future<SummaryRow>> jobs;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const auto sub = dir / ("entry_" + std::to_string(k));
        ensure_directory(sub);
        jobs.push_back(std::async(std::launch::async, [&ex, &eig, lambda = lambdas[k], sub] {
            return solve_lambda(ex, eig, lambda, sub);
        }));
    }
    std::string table = summary_csv_header(), text;
    ExitCode code = ExitCode::success;
    bool all_gated = !jobs.empty();
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        const SummaryRow row = jobs[k].get();
        table += summary_csv_row(row);
        text += "[entry_" + std::to_string(k) + "]\n" + summary_text(row);
        if (row.code != ExitCode::gate_error)
            all_gated = false;
        if (code == ExitCode::success && row.code != ExitCode::success && row.code != ExitCode::gate_error)
            code = row.code;
    }
    if (code == ExitCode::success && all_gated)
        code = ExitCode::gate_error;
    write_text((dir / "summary.csv").string(), table);
    write_text((dir / "summary.txt").string(), text);
    return {code, text};
}

/// Recomputes verify_plus.txt / verify_minus.txt from the solution CSVs in
/// `dir` (or from a single CSV given by `solution`, whose sign selects the branch).
inline RunResult run_verify(const Experiment& ex, const std::filesystem::path& dir,
                            const std::optional<std::filesystem::path>& solution = std::nullopt)
{
    if (ex.config().lambda.sweep)
        throw InputError("verify needs lambda.value or lambda.multiple");
    ensure_directory(dir);
    double lambda = ex.config().lambda.values.front();
    if (ex.config().lambda.multiple)
        lambda *= ex.eigenpair().lambda_1;

    std::vector<std::pair<Branch, std::filesystem::path>> inputs;
    if (solution) {
        const FemFunction u = from_csv(ex.mesh(), read_text(solution->string()));
        double sum = 0.0;
        for (double v : u.values())
            sum += v;
        inputs.emplace_back(sum >= 0.0 ? Branch::positive : Branch::negative, *solution);
    } else {
        inputs.emplace_back(Branch::positive, dir / "u_plus.csv");
        inputs.emplace_back(Branch::negative, dir / "u_minus.csv");
    }
    std::string text;
    for (const auto& [branch, path] : inputs) {
        const FemFunction u = from_csv(ex.mesh(), read_text(path.string()));
        const std::string report = verification_report(ex, u, lambda, ex.bound(lambda, branch), branch);
        const char* tag = branch == Branch::positive ? "plus" : "minus";
        write_text((dir / (std::string("verify_") + tag + ".txt")).string(), report);
        text += report;
    }
    return {ExitCode::success, text};
}

/// Hypothesis diagnostics plus a seeded randomized battery of the Orlicz
/// sandwich inequality and operator monotonicity on the configured mesh.
/// Exits with a verification error when the battery finds a violation.
inline RunResult run_check(const Experiment& ex, const std::filesystem::path& dir, int instances = 200)
{
    using detail::format_double;
    ensure_directory(dir);
    const auto& cfg = ex.config();
    const Problem& problem = ex.problem();
    const double p = cfg.exps.p, q = cfg.exps.q;
    const auto samples = quadrature_points(*ex.mesh(), problem.quadrature());

    std::string s;
    auto kv = [&s](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
    const HypothesisReport hyp = check_hypotheses(cfg.exps, problem.mu(), *ex.mesh());
    kv("hyp_p_less_q", hyp.p_less_q ? "1" : "0");
    kv("hyp_q_less_N", hyp.q_less_N ? "1" : "0");
    kv("hyp_ratio", hyp.ratio_ok ? "1" : "0");
    kv("hyp_mu_nonnegative", hyp.mu_nonnegative ? "1" : "0");
    kv("hyp_dimension_matches", hyp.dimension_matches ? "1" : "0");
    kv("hyp_q_over_p", format_double(hyp.q_over_p));
    kv("hyp_lipschitz_mu", format_double(hyp.lipschitz_mu));
    kv("hyp_p_star", format_double(hyp.p_star));
    for (const auto& w : hyp.warnings)
        kv("hyp_warning", w);

    const HfReport hf = check_Hf(ex.nonlinearity(), p, q, samples);
    kv("hf_bounded", hf.bounded ? "1" : "0");
    kv("hf_superlinear", hf.superlinear ? "1" : "0");
    kv("hf_small_at_zero", hf.small_at_zero ? "1" : "0");

    // Growth exponent of the reaction: r for power laws, otherwise midway
    // between q and min(p*, q + 1).
    double r = 0.5 * (q + std::min(hyp.p_star, q + 1.0));
    if (cfg.f.kind == ReactionSpec::Kind::power || cfg.f.kind == ReactionSpec::Kind::f1)
        r = cfg.f.r;
    double lambda = cfg.lambda.values.front();
    if (cfg.lambda.multiple)
        lambda *= ex.eigenpair().lambda_1;
    const HgReport hg = check_Hg(ex.convection(lambda), {0.0, 0.0, 0.0, r}, p, default_growth_samples(samples));
    kv("hg_lambda", format_double(lambda));
    kv("hg_r", format_double(r));
    kv("hg_c1", format_double(hg.fitted.c1));
    kv("hg_c2", format_double(hg.fitted.c2));
    kv("hg_c3", format_double(hg.fitted.c3));
    kv("hg_growth_bounded", hg.growth_bounded ? "1" : "0");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    int sandwich_violations = 0, monotone_violations = 0;
    const auto& interior = ex.mesh()->interior_vertices();
    auto random_function = [&] {
        FemFunction u(ex.mesh());
        for (int v : interior)
            u[v] = unif(rng);
        return u;
    };
    for (int k = 0; k < instances; ++k) {
        const FemFunction u = random_function();
        const FemFunction v = random_function();
        if (!check_sandwich(u, problem.mu(), cfg.exps, problem.quadrature()).holds)
            ++sandwich_violations;
        if (monotonicity_gap(problem, u, v) < -1e-12)
            ++monotone_violations;
    }
    kv("property_seed", std::to_string(cfg.seed));
    kv("property_instances", std::to_string(instances));
    kv("sandwich_violations", std::to_string(sandwich_violations));
    kv("monotonicity_violations", std::to_string(monotone_violations));
    write_text((dir / "check.txt").string(), s);
    const bool ok = sandwich_violations == 0 && monotone_violations == 0;
    return {ok ? ExitCode::success : ExitCode::verification_error, s};
}

} // namespace dphase
