#include <iostream>

#include <CLI11.hpp>

#include "hepm/pipeline.hpp"

namespace {

void add_data_options(CLI::App* sub, hepm::RunConfig& c) {
    sub->add_option("--events", c.events, "event CSV with header t,src,dst")->required();
    sub->add_option("--covariates", c.covariates, "pair covariate CSV src,dst,x1..xD");
    sub->add_option("--covariate-dim", c.covariate_dim, "covariate dimension D");
    sub->add_option("--time-scale", c.time_scale, "divide raw times by this");
    sub->add_option("--horizon", c.horizon, "observation end T (default: last event time)");
}

void add_common(CLI::App* sub, hepm::RunConfig& c) {
    sub->add_option("-o,--output-dir", c.output_dir, "artifact directory (HEPM_OUTPUT_DIR overrides)");
    sub->add_flag("--no-timings", [&c](std::int64_t) { c.timings = false; }, "write NaN instead of wall times");
    sub->add_flag("--serial", [&c](std::int64_t) { c.parallel = false; }, "disable parallel kernels");
}

}  // namespace

int main(int argc, char** argv) {
    hepm::RunConfig c;
    std::uint64_t seed = 0;
    CLI::App app{"Hawkes edge partition model: simulation, inference and link-prediction evaluation"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "simulate a block-structured scenario");
    sim->add_option("--scenario", c.scenario, "scenario JSON (V, alpha, delta, block_rates, T, max_events)");
    sim->add_option("--horizon", c.horizon, "observation end T");

    auto* fs_ = app.add_subcommand("fit-static", "stage 1: community structure from the aggregated graph");
    add_data_options(fs_, c);
    fs_->add_option("--k-max", c.k_max, "community truncation level");
    fs_->add_option("--sweeps", c.sweeps, "Gibbs sweeps (first half discarded)");

    auto* em = app.add_subcommand("fit-em", "stage 2: MAP of the Hawkes dynamics by EM");
    auto* gb = app.add_subcommand("fit-gibbs", "stage 2: posterior mean by Gibbs sampling");
    for (auto* sub : {em, gb}) {
        add_data_options(sub, c);
        sub->add_option("--checkpoint", c.checkpoint, "community checkpoint (default <out>/xi.json)");
        sub->add_option("--delta", c.delta, "kernel time scale");
        sub->add_option("--tau", c.tau, "regression noise precision");
    }
    em->add_option("--iters", c.iters, "maximum EM iterations");
    em->add_option("--tol", c.tol, "relative objective change to stop at");
    gb->add_option("--iters", c.iters, "Gibbs iterations");
    gb->add_option("--burn-in", c.burn_in, "discarded iterations (default half)");

    auto* ev = app.add_subcommand("evaluate", "chronological-split link prediction for all models");
    add_data_options(ev, c);
    ev->add_option("--p", c.train_fractions, "train fractions")->delimiter(',');
    ev->add_option("--window", c.window, "prediction window");
    ev->add_option("--models", c.models, "pp,mhp,chip,hawkes_sbm,hawkes_epm")->delimiter(',');
    ev->add_option("--k-max", c.k_max, "community truncation level");
    ev->add_option("--sweeps", c.sweeps, "stage-1 sweeps");
    ev->add_option("--delta", c.delta, "kernel time scale");
    ev->add_option("--stage2", c.stage2, "em or gibbs");
    ev->add_option("--iters", c.iters, "stage-2 iterations");
    ev->add_option("--tol", c.tol, "EM tolerance");
    ev->add_option("--blocks", c.block_k, "CHIP / Hawkes-SBM blocks (default: active communities)");
    ev->add_flag("--dump-scores", c.dump_scores, "per-pair scores in metrics.json");

    auto* pr = app.add_subcommand("predict", "link probabilities of all pairs from a Hawkes checkpoint");
    add_data_options(pr, c);
    pr->add_option("--checkpoint", c.checkpoint, "Hawkes checkpoint (default <out>/theta_em.json)");
    pr->add_option("--at", c.predict_at, "prediction time (default: horizon)");
    pr->add_option("--window", c.window, "prediction window");

    for (auto* sub : {sim, fs_, em, gb, ev, pr}) {
        add_common(sub, c);
        sub->add_option("--seed", seed, "root seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    auto* chosen = app.get_subcommands().front();
    c.command = chosen->get_name();
    if (chosen->count("--seed") > 0) c.seed = seed;

    try {
        const auto files = hepm::run_pipeline(c);
        for (const auto& f : files) std::cout << (hepm::resolve_output_dir(c) / f).string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hepm::exit_code_for(e);
    }
    return 0;
}
