#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hepm/community.hpp"
#include "hepm/eval.hpp"
#include "hepm/event_core.hpp"
#include "hepm/hawkes_model.hpp"
#include "hepm/hawkes_params.hpp"

namespace hepm {

namespace fs = std::filesystem;

/// Bijection between string node ids and [0, V) in order of first appearance.
class Vocabulary {
public:
    int intern(const std::string& id);
    std::optional<int> find(const std::string& id) const;
    const std::string& name(int index) const { return names_.at(static_cast<std::size_t>(index)); }
    int size() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
};

struct LoadedEvents {
    EventSequence events;
    Vocabulary vocab;
    std::size_t self_edges{0};
};

/// CSV with header `t,src,dst`. Self-edges are skipped and counted; rows are
/// sorted by time (stable). The horizon defaults to the largest time (1 when
/// there are no events or it is 0). Ids extend `vocab` when one is given.
/// Throws DataError with the line number on a malformed row.
LoadedEvents load_events(const fs::path& path, std::optional<double> horizon = std::nullopt,
                         Vocabulary vocab = {});
void save_events(const fs::path& path, const EventSequence& events, const Vocabulary* vocab = nullptr);

/// CSV `src,dst,x1..xD` with a header row. Ids must be in `vocab`; duplicate pairs are an error.
CovariateMatrix load_covariates(const fs::path& path, const Vocabulary& vocab, int dim);

void save_vocabulary(const fs::path& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const fs::path& path);

inline constexpr int kCheckpointVersion = 1;

/// JSON checkpoints. Doubles are written in shortest round-trip form, so a
/// save/load cycle reproduces every bit. Loading checks format_version and kind.
void save_checkpoint(const fs::path& path, const CommunityParams& params);
void save_checkpoint(const fs::path& path, const HawkesParams& params);
CommunityParams load_community_checkpoint(const fs::path& path);
HawkesParams load_hawkes_checkpoint(const fs::path& path);

void save_assignment(const fs::path& path, const LatentAssignment& truth);

/// Simulation scenario: block structure plus horizon and stopping rules.
struct ScenarioConfig {
    BlockScenario blocks;
    /// Full K x K excitation matrix; overrides the diagonal list when present.
    std::optional<Eigen::MatrixXd> alpha_matrix;
    SimulationOptions sim;
};

/// JSON keys: V, alpha (list = diagonal, or K x K matrix), delta, block_rates, T, seed, event_cap, max_events.
ScenarioConfig load_scenario(const fs::path& path);
ScenarioConfig parse_scenario(const std::string& json_text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

/// Appends `<file> config_hash=<16 hex> seed=<seed>` to <dir>/manifest.txt.
void append_manifest(const fs::path& dir, const std::string& file, std::uint64_t config_hash, std::uint64_t seed);

void write_metrics_csv(const fs::path& path, const std::vector<MetricRow>& rows);
void write_metrics_json(const fs::path& path, const std::vector<MetricRow>& rows);

/// Shortest decimal text that reads back as the same double.
std::string format_double(double x);

}  // namespace hepm
