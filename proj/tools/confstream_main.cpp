#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "conformal/cli.hpp"

namespace cli = conformal::cli;

int main(int argc, char** argv) {
    CLI::App app{"Streaming prediction intervals via online conformal methods"};
    app.require_subcommand(1);

    // run ----------------------------------------------------------------
    cli::RunOptions run;
    std::string run_eval_range;
    std::string run_calibrate;
    auto* run_cmd = app.add_subcommand("run", "run one method over a CSV stream");
    run_cmd->add_option("--input", run.input, "input CSV (t,y,mu_hat[,group])")->required();
    run_cmd->add_flag("--flusight", run.flusight, "parse the FluSight point-estimate schema");
    run_cmd->add_option("--method", run.method, "ACI|AgACI|FACI|SF-OGD|SAOCP")->required();
    run_cmd->add_option("--alpha", run.alpha, "target coverage in (0,1)")->required();
    run_cmd->add_option("--constructor", run.constructor, "linear|quantile");
    run_cmd->add_option("--gamma", run.gamma, "learning rate");
    run_cmd->add_option("--gamma-grid", run.gamma_grid, "candidate learning rates")
        ->delimiter(',');
    run_cmd->add_option("--D", run.max_radius, "maximum radius bound");
    run_cmd->add_option("--calibrate-D", run_calibrate,
                        "rows start:end used to estimate D as max |y - mu_hat|");
    run_cmd->add_option("--theta1", run.theta1, "starting parameter value");
    run_cmd->add_option("--lifetime-g", run.lifetime_g, "SAOCP lifetime multiplier");
    run_cmd->add_option("--interval-length", run.interval_length, "FACI interval length |I|");
    run_cmd->add_option("--eval-range", run_eval_range, "metric range start:end (1-based)");
    run_cmd->add_option("--sa-windows", run.sa_windows,
                        "window lengths for strongly adaptive regret")
        ->delimiter(',');
    run_cmd->add_flag("--log-transform", run.log_transform,
                      "run on log(y), log(mu_hat); bounds exponentiated on output");
    run_cmd->add_option("--group", run.group, "restrict grouped input to one group");
    run_cmd->add_option("--out", run.out_dir, "output directory")->required();

    // bench --------------------------------------------------------------
    cli::BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "run a built-in simulation study");
    bench_cmd->add_option("--study", bench.study, "arma|shift")->required();
    bench_cmd->add_option("--methods", bench.methods, "methods (default AgACI,SF-OGD,SAOCP,FACI)")
        ->delimiter(',');
    bench_cmd->add_option("--alphas", bench.alphas, "target coverage levels")->delimiter(',');
    bench_cmd->add_option("--seeds", bench.seeds, "number of seeds (1..N)");
    bench_cmd->add_option("--params", bench.params,
                          "study parameters (arma: psi=xi; shift: delta)")
        ->delimiter(',');
    bench_cmd->add_option("--predictor", bench.predictor, "oracle|ridge (arma study)");
    bench_cmd->add_option("--workers", bench.workers, "worker threads (0 = auto)");
    bench_cmd->add_option("--out", bench.out_dir, "output directory")->required();

    // plotdata -----------------------------------------------------------
    cli::PlotdataOptions plot;
    auto* plot_cmd = app.add_subcommand("plotdata", "reshape a run directory for plotting");
    plot_cmd->add_option("--run", plot.run_dir, "run directory containing intervals.csv")
        ->required();

    // gen ----------------------------------------------------------------
    cli::GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "dump one generated study stream");
    gen_cmd->add_option("--study", gen.study, "arma|shift")->required();
    gen_cmd->add_option("--seed", gen.seed, "stream seed");
    gen_cmd->add_option("--param", gen.param, "study parameter");
    gen_cmd->add_option("--predictor", gen.predictor, "oracle|ridge (arma study)");
    gen_cmd->add_option("--out", gen.out_file, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::kExitOk : cli::kExitUsage;
    }

    if (run_cmd->parsed()) {
        if (!run_eval_range.empty()) {
            const auto range = cli::parse_index_range(run_eval_range);
            if (!range) {
                std::cerr << "error: bad --eval-range, expected start:end\n";
                return cli::kExitUsage;
            }
            run.eval_range = range;
        }
        if (!run_calibrate.empty()) {
            const auto range = cli::parse_index_range(run_calibrate);
            if (!range) {
                std::cerr << "error: bad --calibrate-D, expected start:end\n";
                return cli::kExitUsage;
            }
            run.calibrate_D = range;
        }
        return cli::cmd_run(run, std::cerr);
    }
    if (bench_cmd->parsed()) return cli::cmd_bench(bench, std::cerr);
    if (plot_cmd->parsed()) return cli::cmd_plotdata(plot, std::cerr);
    if (gen_cmd->parsed()) return cli::cmd_gen(gen, std::cerr);
    return cli::kExitUsage;
}
