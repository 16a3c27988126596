#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "steinshrink/cli.hpp"

namespace cli = steinshrink::cli;

int main(int argc, char** argv) {
    CLI::App app{"Stein-loss covariance shrinkage estimators and Monte Carlo risk engine"};
    app.require_subcommand(1);

    cli::SimulateOptions sim;
    std::string sim_out;
    std::string sim_format;
    unsigned sim_workers = 0;
    bool no_timing = false;
    auto* simulate = app.add_subcommand("simulate", "Run a risk simulation from a JSON config");
    simulate->add_option("--config", sim.config_path, "JSON config path")->required();
    auto* out_opt = simulate->add_option("--out", sim_out, "Output path ('-' for stdout)");
    auto* fmt_opt = simulate->add_option("--format", sim_format, "csv or json");
    auto* workers_opt = simulate->add_option("--workers", sim_workers, "Worker threads")->check(CLI::PositiveNumber);
    simulate->add_flag("--no-timing", no_timing, "Omit the wall-time field from JSON output");

    long er_n = 0;
    long er_r = 0;
    auto* exact = app.add_subcommand("exact-risk", "Exact risks of the BC and JS estimators");
    exact->add_option("--n", er_n, "Sample size")->required();
    exact->add_option("--r", er_r, "Rank of Sigma")->required();

    cli::EstimateOptions est;
    std::string est_b;
    std::string est_out;
    long est_rank = 0;
    auto* estimate = app.add_subcommand("estimate", "Apply an estimator to a data matrix");
    estimate->add_option("--data", est.data_path, "CSV with p rows and n columns")->required();
    estimate->add_option("--estimator", est.estimator, "Label such as UB, JS, EB(b0), HF(1)")->required();
    auto* b_opt = estimate->add_option("--b", est_b, "b0, b1, bstar or a number");
    auto* est_out_opt = estimate->add_option("--out", est_out, "Output path for the estimate");
    auto* rank_opt = estimate->add_option("--rank", est_rank, "Known rank r of Sigma (default p)");

    std::string suite;
    std::uint64_t verify_seed = 20241016;
    auto* verify = app.add_subcommand("verify", "Run a numerical property suite");
    verify->add_option("--suite", suite, "Suite name or 'all'")->required();
    verify->add_option("--seed", verify_seed, "Seed");

    std::string cells = "desk";
    long rt_reps = 2000;
    std::uint64_t rt_seed = 20241016;
    unsigned rt_workers = 1;
    auto* reftable = app.add_subcommand("ref-table", "Re-simulate reference risk table cells");
    reftable->add_option("--cells", cells, "desk, all, or case:p:n[,case:p:n...]");
    reftable->add_option("--replications", rt_reps, "Replications per cell");
    reftable->add_option("--seed", rt_seed, "Master seed");
    reftable->add_option("--workers", rt_workers, "Worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kUsageError;
    }

    if (*simulate) {
        if (*out_opt) sim.out = sim_out;
        if (*fmt_opt) sim.format = sim_format;
        if (*workers_opt) sim.workers = sim_workers;
        sim.timing = !no_timing;
        return cli::cmd_simulate(sim, std::cout, std::cerr);
    }
    if (*exact) return cli::cmd_exact_risk(er_n, er_r, std::cout, std::cerr);
    if (*estimate) {
        if (*b_opt) est.b = est_b;
        if (*est_out_opt) est.out = est_out;
        if (*rank_opt) est.rank = est_rank;
        return cli::cmd_estimate(est, std::cout, std::cerr);
    }
    if (*verify) return cli::cmd_verify(suite, verify_seed, std::cout, std::cerr);
    return cli::cmd_ref_table(cells, rt_reps, rt_seed, rt_workers, std::cout, std::cerr);
}
