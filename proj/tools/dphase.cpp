// dphase: command-line runner for double phase experiments.
//
//   dphase <eigen|solve|sweep|verify|check> --config PATH [--out DIR] [--quiet]
//
// Exit codes: 0 success, 2 configuration/input error, 3 gate error
// (lambda <= lambda_1,p), 4 convergence error, 5 verification error.

#include <dphase/runner.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Constant-sign solutions of double phase Dirichlet problems"};
    app.require_subcommand(1);

    std::string config_path, out_dir, solution;
    bool quiet = false;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
        sub->add_flag("--quiet", quiet, "do not echo the run summary");
    };
    auto* eigen = app.add_subcommand("eigen", "first eigenpair of the p-Laplacian");
    auto* solve = app.add_subcommand("solve", "positive and negative solutions for one lambda");
    auto* sweep = app.add_subcommand("sweep", "solve for every lambda in the sweep list");
    auto* verify = app.add_subcommand("verify", "regenerate residual and Moser reports from solution CSVs");
    auto* check = app.add_subcommand("check", "hypothesis diagnostics and randomized property battery");
    for (auto* sub : {eigen, solve, sweep, verify, check})
        add_common(sub);
    verify->add_option("--solution", solution, "single solution CSV to verify")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(dphase::ExitCode::config_error);
    }

    try {
        const dphase::ExperimentConfig cfg = dphase::parse_config(dphase::read_text(config_path));
        const dphase::Experiment ex(cfg);
        const std::filesystem::path dir = out_dir.empty() ? cfg.output_dir : out_dir;
        dphase::RunResult result;
        if (*eigen)
            result = dphase::run_eigen(ex, dir);
        else if (*solve)
            result = dphase::run_solve(ex, dir);
        else if (*sweep)
            result = dphase::run_sweep(ex, dir);
        else if (*verify)
            result = dphase::run_verify(ex, dir, solution.empty() ? std::nullopt
                                                                  : std::optional<std::filesystem::path>(solution));
        else
            result = dphase::run_check(ex, dir);
        if (!quiet)
            std::cout << result.message;
        if (result.code != dphase::ExitCode::success)
            std::cerr << "dphase: finished with status " << dphase::status_name(result.code) << "\n";
        return static_cast<int>(result.code);
    } catch (const dphase::Error& e) {
        std::cerr << "dphase: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "dphase: " << e.what() << "\n";
        return static_cast<int>(dphase::ExitCode::config_error);
    }
}
