#include "hepm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "hepm/community.hpp"
#include "hepm/em.hpp"
#include "hepm/eval.hpp"
#include "hepm/gibbs.hpp"
#include "hepm/hawkes_model.hpp"
#include "hepm/io.hpp"

namespace hepm {

using json = nlohmann::json;

namespace {

bool stochastic(const std::string& command) {
    return command == "simulate" || command == "fit-static" || command == "fit-gibbs" || command == "evaluate";
}

struct Data {
    EventSequence events;
    Vocabulary vocab;
    CovariateMatrix covs;
};

Data load_data(const RunConfig& cfg, Vocabulary base = {}) {
    if (cfg.events.empty()) throw DomainError(cfg.command + " needs --events");
    auto loaded = load_events(cfg.events, std::nullopt, std::move(base));
    std::vector<Event> ev(loaded.events.begin(), loaded.events.end());
    double last = 0.0;
    for (auto& e : ev) {
        e.t /= cfg.time_scale;
        last = std::max(last, e.t);
    }
    double T = cfg.horizon.value_or(last > 0.0 ? last : 1.0);
    if (T < last) throw DataError("--horizon precedes the last event time " + format_double(last));
    Data d;
    d.events = EventSequence(std::move(ev), T, loaded.vocab.size());
    d.vocab = std::move(loaded.vocab);
    if (!cfg.covariates.empty()) d.covs = load_covariates(cfg.covariates, d.vocab, cfg.covariate_dim);
    return d;
}

const CovariateMatrix* covs_of(const Data& d) { return d.covs.dim() > 0 ? &d.covs : nullptr; }

std::ofstream open_csv(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(1) << "\n";
}

fs::path require(const fs::path& path, const std::string& stage) {
    if (!fs::exists(path)) throw StageError(path.string() + " not found; run `" + stage + "` first");
    return path;
}

Data stage_two_data(const RunConfig& cfg, const fs::path& dir, CommunityParams& xi) {
    const auto vocab = load_vocabulary(require(dir / "vocab.json", "fit-static"));
    xi = load_community_checkpoint(require(cfg.checkpoint.empty() ? dir / "xi.json" : cfg.checkpoint, "fit-static"));
    auto d = load_data(cfg, vocab);
    if (d.vocab.size() != xi.num_nodes())
        throw DataError("events mention " + std::to_string(d.vocab.size() - xi.num_nodes()) +
                        " node(s) unknown to the fit-static vocabulary");
    return d;
}

HawkesParams initial_theta(const RunConfig& cfg, const CommunityParams& xi, int dim) {
    auto p = make_hawkes_params(xi.phi, xi.omega, cfg.delta, dim);
    p.tau = cfg.tau;
    return p;
}

std::vector<std::string> run_simulate(const RunConfig& cfg, const fs::path& dir) {
    ScenarioConfig sc;
    if (!cfg.scenario.empty()) sc = load_scenario(cfg.scenario);
    sc.blocks.seed = *cfg.seed;
    sc.sim.seed = *cfg.seed;
    if (cfg.horizon) sc.sim.horizon = *cfg.horizon;
    auto truth = make_block_scenario(sc.blocks);
    if (sc.alpha_matrix) truth.params.alpha = *sc.alpha_matrix;
    truth.params.validate();
    auto sim = simulate(truth.params, sc.sim);
    if (!sim.stationary) std::cerr << "warning: some alpha * delta >= 1; the process is not stationary\n";

    Vocabulary vocab;
    for (int u = 0; u < truth.params.num_nodes; ++u) vocab.intern(std::to_string(u));
    save_events(dir / "events.csv", sim.events, &vocab);
    save_checkpoint(dir / "theta_true.json", truth.params);
    save_assignment(dir / "truth.json", sim.truth);
    auto out = open_csv(dir / "blocks.csv");
    out << "node,block\n";
    for (std::size_t u = 0; u < truth.block.size(); ++u) out << u << ',' << truth.block[u] << '\n';
    return {"events.csv", "theta_true.json", "truth.json", "blocks.csv"};
}

std::vector<std::string> run_fit_static(const RunConfig& cfg, const fs::path& dir) {
    auto d = load_data(cfg);
    StaticFitOptions so;
    so.k_max = cfg.k_max;
    so.sweeps = cfg.sweeps;
    so.seed = *cfg.seed;
    auto fit = fit_map(aggregate(d.events), so);
    auto xi = prune_communities(fit.estimate);
    save_vocabulary(dir / "vocab.json", d.vocab);
    save_checkpoint(dir / "xi.json", xi);
    auto out = open_csv(dir / "static_trace.csv");
    out << "sweep,log_density,active\n";
    for (std::size_t s = 0; s < fit.log_density_trace.size(); ++s)
        out << s << ',' << format_double(fit.log_density_trace[s]) << ',' << fit.active_trace[s] << '\n';
    return {"vocab.json", "xi.json", "static_trace.csv"};
}

std::vector<std::string> run_fit_em(const RunConfig& cfg, const fs::path& dir) {
    CommunityParams xi;
    auto d = stage_two_data(cfg, dir, xi);
    EMOptions eo;
    eo.max_iter = cfg.iters;
    eo.tol = cfg.tol;
    eo.parallel = cfg.parallel;
    auto fit = fit_em(initial_theta(cfg, xi, d.covs.dim()), d.events, covs_of(d), eo);
    save_checkpoint(dir / "theta_em.json", fit.params);
    json report{{"iterations", fit.iterations},
                {"converged", fit.converged},
                {"seconds", cfg.timings ? json(fit.seconds) : json(nullptr)},
                {"objective_trace", fit.state.objective_trace},
                {"regression_trace", fit.state.regression_trace}};
    write_json_file(dir / "em_report.json", report);
    return {"theta_em.json", "em_report.json"};
}

std::vector<std::string> run_fit_gibbs(const RunConfig& cfg, const fs::path& dir) {
    CommunityParams xi;
    auto d = stage_two_data(cfg, dir, xi);
    GibbsOptions go;
    go.iterations = cfg.iters;
    go.burn_in = cfg.burn_in;
    go.seed = *cfg.seed;
    go.parallel = cfg.parallel;
    auto chain = run_chain(initial_theta(cfg, xi, d.covs.dim()), d.events, covs_of(d), go);
    save_checkpoint(dir / "theta_gibbs.json", chain.posterior_mean);
    auto out = open_csv(dir / "chain.csv");
    const int P = chain.posterior_mean.patterns();
    out << "iteration,log_posterior,mean_stored_mu,exogenous,endogenous";
    for (int p = 0; p < P; ++p) out << ",alpha_" << p / chain.posterior_mean.num_communities << '_'
                                    << p % chain.posterior_mean.num_communities;
    out << '\n';
    for (const auto& r : chain.trace) {
        out << r.iteration << ',' << format_double(r.log_posterior) << ',' << format_double(r.mean_stored_mu) << ','
            << format_double(r.exogenous) << ',' << format_double(r.endogenous);
        for (double a : r.alpha) out << ',' << format_double(a);
        out << '\n';
    }
    return {"theta_gibbs.json", "chain.csv"};
}

std::vector<std::string> run_evaluate(const RunConfig& cfg, const fs::path& dir) {
    auto d = load_data(cfg);
    ExperimentConfig ec;
    ec.train_fractions = cfg.train_fractions;
    ec.window = cfg.window;
    ec.models = cfg.models;
    ec.seed = *cfg.seed;
    ec.k_max = cfg.k_max;
    ec.sweeps = cfg.sweeps;
    ec.delta = cfg.delta;
    ec.stage2 = cfg.stage2;
    ec.em.max_iter = cfg.iters;
    ec.em.tol = cfg.tol;
    ec.em.parallel = cfg.parallel;
    ec.gibbs_iterations = cfg.iters;
    ec.block_k = cfg.block_k;
    ec.timings = cfg.timings;
    ec.keep_scores = cfg.dump_scores;
    auto rows = run_experiment(d.events, covs_of(d), ec);
    for (const auto& r : rows)
        if (!r.error.empty()) std::cerr << "warning: " << r.model << " at p=" << r.p << ": " << r.error << "\n";
    write_metrics_csv(dir / "metrics.csv", rows);
    write_metrics_json(dir / "metrics.json", rows);
    return {"metrics.csv", "metrics.json"};
}

std::vector<std::string> run_predict(const RunConfig& cfg, const fs::path& dir) {
    const auto vocab = load_vocabulary(require(dir / "vocab.json", "fit-static"));
    auto theta = load_hawkes_checkpoint(require(cfg.checkpoint.empty() ? dir / "theta_em.json" : cfg.checkpoint,
                                                "fit-em"));
    auto d = load_data(cfg, vocab);
    if (d.vocab.size() != theta.num_nodes)
        throw DataError("events mention node(s) unknown to the checkpoint");
    const double t = cfg.predict_at.value_or(d.events.horizon());
    if (t < d.events.horizon()) throw DomainError("--at precedes the end of the observed history");
    HawkesEpmModel model(std::move(theta), d.events, covs_of(d));
    auto out = open_csv(dir / "predictions.csv");
    out << "src,dst,probability\n";
    for (int u = 0; u < d.vocab.size(); ++u)
        for (int v = 0; v < d.vocab.size(); ++v)
            if (u != v)
                out << d.vocab.name(u) << ',' << d.vocab.name(v) << ','
                    << format_double(link_probability(model, u, v, t, cfg.window)) << '\n';
    return {"predictions.csv"};
}

}  // namespace

void validate(const RunConfig& c) {
    static const std::vector<std::string> commands{"simulate", "fit-static", "fit-em", "fit-gibbs", "evaluate", "predict"};
    if (std::find(commands.begin(), commands.end(), c.command) == commands.end())
        throw DomainError("unknown subcommand '" + c.command + "'");
    if (stochastic(c.command) && !c.seed) throw DomainError(c.command + " needs --seed");
    if (!(c.time_scale > 0.0) || !std::isfinite(c.time_scale)) throw DomainError("--time-scale must be positive");
    if (c.horizon && !(*c.horizon > 0.0)) throw DomainError("--horizon must be positive");
    if (c.k_max < 1) throw DomainError("--k-max must be at least 1");
    if (!(c.delta > 0.0) || !std::isfinite(c.delta)) throw DomainError("--delta must be positive");
    if (c.sweeps < 2) throw DomainError("--sweeps must be at least 2");
    if (c.iters < 1) throw DomainError("--iters must be at least 1");
    if (!(c.tol >= 0.0)) throw DomainError("--tol must be non-negative");
    if (!(c.tau > 0.0)) throw DomainError("--tau must be positive");
    if (c.covariate_dim < 0) throw DomainError("--covariate-dim must be non-negative");
    if (!c.covariates.empty() && c.covariate_dim == 0) throw DomainError("--covariates needs --covariate-dim");
    if (!(c.window > 0.0)) throw DomainError("--window must be positive");
    if (c.block_k < 0) throw DomainError("--blocks must be non-negative");
    for (double p : c.train_fractions)
        if (!(p > 0.0 && p < 1.0)) throw DomainError("train fractions must lie in (0, 1)");
    if (c.stage2 != "em" && c.stage2 != "gibbs") throw DomainError("--stage2 must be em or gibbs");
}

std::string config_fingerprint(const RunConfig& c) {
    std::ostringstream s;
    s << "command=" << c.command << "\nevents=" << c.events.filename().string()
      << "\ncovariates=" << c.covariates.filename().string() << "\nD=" << c.covariate_dim
      << "\ncheckpoint=" << c.checkpoint.filename().string() << "\nscenario=" << c.scenario.filename().string()
      << "\ntime_scale=" << format_double(c.time_scale)
      << "\nhorizon=" << (c.horizon ? format_double(*c.horizon) : "auto") << "\nk_max=" << c.k_max
      << "\ndelta=" << format_double(c.delta) << "\nsweeps=" << c.sweeps << "\niters=" << c.iters
      << "\ntol=" << format_double(c.tol) << "\ntau=" << format_double(c.tau) << "\nburn_in=" << c.burn_in
      << "\nseed=" << (c.seed ? std::to_string(*c.seed) : "none") << "\np=";
    for (double p : c.train_fractions) s << format_double(p) << ';';
    s << "\nwindow=" << format_double(c.window) << "\nmodels=";
    for (const auto& m : c.models) s << m << ';';
    s << "\nstage2=" << c.stage2 << "\nblocks=" << c.block_k
      << "\nat=" << (c.predict_at ? format_double(*c.predict_at) : "horizon") << "\n";
    return s.str();
}

fs::path resolve_output_dir(const RunConfig& config) {
    if (const char* env = std::getenv("HEPM_OUTPUT_DIR"); env && *env) return fs::path(env);
    return config.output_dir;
}

std::vector<std::string> run_pipeline(const RunConfig& config) {
    validate(config);
    const auto dir = resolve_output_dir(config);
    fs::create_directories(dir);
    std::vector<std::string> files;
    if (config.command == "simulate") files = run_simulate(config, dir);
    else if (config.command == "fit-static") files = run_fit_static(config, dir);
    else if (config.command == "fit-em") files = run_fit_em(config, dir);
    else if (config.command == "fit-gibbs") files = run_fit_gibbs(config, dir);
    else if (config.command == "evaluate") files = run_evaluate(config, dir);
    else files = run_predict(config, dir);
    const auto hash = fnv1a(config_fingerprint(config));
    for (const auto& f : files) append_manifest(dir, f, hash, config.seed.value_or(0));
    return files;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NumericalError*>(&e)) return 3;
    if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const StageError*>(&e)) return 2;
    if (dynamic_cast<const DomainError*>(&e)) return 1;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return 2;
    return 3;
}

}  // namespace hepm
