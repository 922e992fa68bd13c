// dilution: command-line front end. See README.md for the subcommands.

#include <CLI11.hpp>

#include <iostream>

#include "dilution/cli.hpp"

using dilution::cli::Command;
using dilution::cli::RunConfig;

int main(int argc, char** argv) {
    CLI::App app{"Bayesian analysis of dilution-series plate counts"};
    app.require_subcommand(1);

    RunConfig config;
    double M = 0, b = 0, q = 0, lambda = 0, threshold = 0;
    std::size_t iters = 0;

    auto common = [&](CLI::App* sub, Command cmd) {
        sub->add_option("--design", config.design, "design file (key = value)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", config.out, "output directory")->capture_default_str();
        sub->add_option("--seed", config.seed, "master seed")->capture_default_str();
        sub->add_option("--q", q, "override the drop loss probability q");
        sub->add_option("--M", M, "override the log10 abundance cap M");
        sub->add_option("--b", b, "override the prior scale b of A");
        sub->callback([&config, cmd] { config.command = cmd; });
    };
    auto mcmc_flags = [&](CLI::App* sub) {
        sub->add_option("--iters", iters, "sampler iterations (>= 10000)");
        sub->add_option("--credibility", config.credibility, "credible level")->capture_default_str();
        sub->add_option("--parallel-chains", config.parallel_chains, "chains run at once")->capture_default_str();
    };

    auto* analyze = app.add_subcommand("analyze", "posterior of E, A and each x_k for one experiment");
    common(analyze, Command::Analyze);
    mcmc_flags(analyze);
    analyze->add_option("--counts", config.counts, "counts table")->required()->check(CLI::ExistingFile);
    analyze->add_option("--threshold", threshold, "report P(E < threshold)");

    auto* lod = app.add_subcommand("lod", "limit of detection after K all-zero repetitions");
    common(lod, Command::Lod);
    mcmc_flags(lod);
    lod->add_option("--K", config.K, "numbers of repetitions")->capture_default_str();

    auto* bf = app.add_subcommand("bf", "beta-binomial vs binomial Bayes factor per tube");
    common(bf, Command::Bf);
    bf->add_option("--counts", config.counts, "counts table")->required()->check(CLI::ExistingFile);
    bf->add_option("--lambda", lambda, "beta-binomial lambda (default 1/s* + 1 per tube)");

    auto* lr = app.add_subcommand("lr", "log reduction between a control and a treated experiment");
    common(lr, Command::Lr);
    mcmc_flags(lr);
    lr->add_option("--control", config.control, "control counts")->required()->check(CLI::ExistingFile);
    lr->add_option("--treated", config.treated, "treated counts")->required()->check(CLI::ExistingFile);
    lr->add_option("--threshold", threshold, "report P(LR > threshold), default 3");

    auto* interlab = app.add_subcommand("interlab", "inter-laboratory model and reproducibility metrics");
    common(interlab, Command::Interlab);
    mcmc_flags(interlab);
    interlab->add_option("--labs", config.labs, "control counts with a lab column")->required()->check(CLI::ExistingFile);
    interlab->add_option("--treated", config.treated, "treated counts with a lab column")->check(CLI::ExistingFile);
    interlab->add_option("--threshold", threshold, "LR threshold, default 3");

    auto* simulate = app.add_subcommand("simulate", "simulate a dilution-series experiment");
    common(simulate, Command::Simulate);
    simulate->add_option("--n0", config.n0, "true abundance in tube 0")->capture_default_str();
    simulate->add_option("--reps", config.reps, "number of repetitions")->capture_default_str();

    auto* study = app.add_subcommand("study", "all-dilution vs first-dilution comparison");
    common(study, Command::Study);
    study->add_option("--n0", config.n0, "true abundance in tube 0")->capture_default_str();
    study->add_option("--n-sims", config.n_sims, "simulated data sets")->capture_default_str();
    study->add_option("--parallel-chains", config.parallel_chains, "worker threads")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    auto set = [&](const char* flag, auto& field, auto value) {
        for (auto* sub : app.get_subcommands()) {
            const auto* opt = sub->get_option_no_throw(flag);
            if (opt && opt->count()) field = value;
        }
    };
    set("--M", config.M, M);
    set("--b", config.b, b);
    set("--q", config.q, q);
    set("--lambda", config.lambda, lambda);
    set("--threshold", config.threshold, threshold);
    set("--iters", config.iterations, iters);
    return dilution::cli::run(config);
}
