#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hepm/common.hpp"

namespace hepm {

namespace fs = std::filesystem;

/// Everything a CLI invocation needs. Stages exchange artifacts through
/// `output_dir`: fit-static writes vocab.json and xi.json, fit-em / fit-gibbs
/// read them, predict reads a Hawkes checkpoint.
struct RunConfig {
    std::string command;  // simulate, fit-static, fit-em, fit-gibbs, evaluate, predict

    fs::path events;
    fs::path covariates;
    int covariate_dim{0};
    fs::path checkpoint;
    fs::path scenario;
    fs::path output_dir{"out"};

    /// Raw times are divided by this (e.g. 86400 for second stamps read in days).
    double time_scale{1.0};
    std::optional<double> horizon;

    int k_max{100};
    double delta{0.1};
    int sweeps{10000};
    int iters{500};
    double tol{1e-6};
    double tau{1.0};
    int burn_in{-1};
    std::optional<std::uint64_t> seed;

    std::vector<double> train_fractions{0.5, 0.6, 0.7, 0.8, 0.9};
    double window{50.0};
    std::vector<std::string> models{"pp", "mhp", "chip", "hawkes_sbm", "hawkes_epm"};
    std::string stage2{"em"};
    int block_k{0};
    std::optional<double> predict_at;

    bool timings{true};
    bool dump_scores{false};
    bool parallel{true};
};

/// Throws DomainError when a field is out of range or a stochastic command has no seed.
void validate(const RunConfig& config);

/// Canonical text of the fields that influence results (paths by name, no output dir).
std::string config_fingerprint(const RunConfig& config);

/// The output directory, overridden by HEPM_OUTPUT_DIR when set.
fs::path resolve_output_dir(const RunConfig& config);

/// Runs one subcommand and returns the files it wrote (relative to the output dir).
/// Throws the library's Error subclasses; a missing upstream artifact is a StageError.
std::vector<std::string> run_pipeline(const RunConfig& config);

/// 0 success, 1 usage / domain, 2 data or stage, 3 numerical.
int exit_code_for(const std::exception& e);

}  // namespace hepm
