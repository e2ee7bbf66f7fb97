#include "hepm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace hepm {

using json = nlohmann::json;

int Vocabulary::intern(const std::string& id) {
    auto [it, inserted] = index_.emplace(id, static_cast<int>(names_.size()));
    if (inserted) names_.push_back(id);
    return it->second;
}

std::optional<int> Vocabulary::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        // trim spaces and a trailing carriage return
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, const fs::path& path, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
        throw DataError(path.string() + ":" + std::to_string(line) + ": '" + s + "' is not a finite number");
    return v;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

json read_json(const fs::path& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("cannot parse " + path.string() + ": " + e.what());
    }
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd json_matrix(const json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw DataError(std::string("checkpoint field '") + what + "' has the wrong number of rows");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw DataError(std::string("checkpoint field '") + what + "' has the wrong number of columns");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json vector_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd json_vector(const json& j, Eigen::Index n, const char* what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
        throw DataError(std::string("checkpoint field '") + what + "' has the wrong length");
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

json checked_checkpoint(const fs::path& path, const char* kind) {
    json j = read_json(path);
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kCheckpointVersion)
            throw DataError(path.string() + ": checkpoint format_version " + std::to_string(version) +
                            " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
        const auto k = j.at("kind").get<std::string>();
        if (k != kind)
            throw DataError(path.string() + ": checkpoint kind '" + k + "', expected '" + kind + "'");
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return j;
}

void write_json(const fs::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(1) << "\n";
    if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

LoadedEvents load_events(const fs::path& path, std::optional<double> horizon, Vocabulary vocab) {
    auto in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw DataError(path.string() + ": missing header `t,src,dst`");
    ++lineno;
    const auto header = split_csv(line);
    if (header.size() != 3 || header[0] != "t" || header[1] != "src" || header[2] != "dst")
        throw DataError(path.string() + ":1: expected header `t,src,dst`");
    LoadedEvents out;
    std::vector<Event> events;
    double t_max = 0.0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 3 || cells[1].empty() || cells[2].empty())
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields `t,src,dst`");
        const double t = parse_number(cells[0], path, lineno);
        if (t < 0.0) throw DataError(path.string() + ":" + std::to_string(lineno) + ": negative time");
        if (cells[1] == cells[2]) {
            ++out.self_edges;
            continue;
        }
        const int u = vocab.intern(cells[1]);
        const int v = vocab.intern(cells[2]);
        events.push_back({t, u, v});
        t_max = std::max(t_max, t);
    }
    if (out.self_edges > 0)
        std::cerr << "warning: skipped " << out.self_edges << " self-edge row(s) in " << path.string() << "\n";
    double T = horizon.value_or(t_max > 0.0 ? t_max : 1.0);
    if (T < t_max) throw DataError(path.string() + ": horizon precedes the last event");
    out.events = EventSequence(std::move(events), T, vocab.size());
    out.vocab = std::move(vocab);
    return out;
}

void save_events(const fs::path& path, const EventSequence& events, const Vocabulary* vocab) {
    auto out = open_out(path);
    out << "t,src,dst\n";
    for (const auto& e : events) {
        out << format_double(e.t) << ',';
        if (vocab) {
            out << vocab->name(e.src) << ',' << vocab->name(e.dst) << '\n';
        } else {
            out << e.src << ',' << e.dst << '\n';
        }
    }
    if (!out) throw DataError("failed writing " + path.string());
}

CovariateMatrix load_covariates(const fs::path& path, const Vocabulary& vocab, int dim) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": missing header");
    const auto header = split_csv(line);
    if (static_cast<int>(header.size()) != dim + 2)
        throw DataError(path.string() + ":1: covariate header has " + std::to_string(header.size() - 2) +
                        " columns, expected D = " + std::to_string(dim));
    CovariateMatrix covs(dim);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (static_cast<int>(cells.size()) != dim + 2)
            throw DataError(where + ": expected " + std::to_string(dim + 2) + " fields");
        auto u = vocab.find(cells[0]);
        auto v = vocab.find(cells[1]);
        if (!u || !v) throw DataError(where + ": unknown node id '" + (u ? cells[1] : cells[0]) + "'");
        std::vector<double> x;
        for (int d = 0; d < dim; ++d) x.push_back(parse_number(cells[static_cast<std::size_t>(d + 2)], path, lineno));
        try {
            covs.set({*u, *v}, std::move(x));
        } catch (const DomainError&) {
            throw DataError(where + ": duplicate covariates for pair (" + cells[0] + "," + cells[1] + ")");
        }
    }
    return covs;
}

void save_vocabulary(const fs::path& path, const Vocabulary& vocab) {
    write_json(path, json{{"format_version", kCheckpointVersion}, {"kind", "vocabulary"}, {"ids", vocab.names()}});
}

Vocabulary load_vocabulary(const fs::path& path) {
    json j = checked_checkpoint(path, "vocabulary");
    Vocabulary v;
    try {
        for (const auto& id : j.at("ids")) {
            const auto s = id.get<std::string>();
            if (v.find(s)) throw DataError(path.string() + ": duplicate id '" + s + "'");
            v.intern(s);
        }
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return v;
}

void save_checkpoint(const fs::path& path, const CommunityParams& p) {
    p.validate();
    json j;
    j["format_version"] = kCheckpointVersion;
    j["kind"] = "community";
    j["num_nodes"] = p.num_nodes();
    j["num_communities"] = p.num_communities();
    j["phi"] = matrix_json(p.phi);
    j["omega"] = matrix_json(p.omega);
    j["r"] = vector_json(p.r);
    j["a"] = vector_json(p.a);
    j["c"] = vector_json(p.c);
    j["hyper"] = {{"c0", p.hyper.c0}, {"e0", p.hyper.e0}, {"f0", p.hyper.f0},
                  {"r0", p.hyper.r0}, {"xi", p.hyper.xi}, {"chi", p.hyper.chi}};
    write_json(path, j);
}

CommunityParams load_community_checkpoint(const fs::path& path) {
    json j = checked_checkpoint(path, "community");
    CommunityParams p;
    try {
        const auto V = j.at("num_nodes").get<Eigen::Index>();
        const auto K = j.at("num_communities").get<Eigen::Index>();
        p.phi = json_matrix(j.at("phi"), V, K, "phi");
        p.omega = json_matrix(j.at("omega"), K, K, "omega");
        p.r = json_vector(j.at("r"), K, "r");
        p.a = json_vector(j.at("a"), V, "a");
        p.c = json_vector(j.at("c"), V, "c");
        const auto& h = j.at("hyper");
        p.hyper = {h.at("c0").get<double>(), h.at("e0").get<double>(), h.at("f0").get<double>(),
                   h.at("r0").get<double>(), h.at("xi").get<double>(), h.at("chi").get<double>()};
        p.validate();
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    } catch (const DomainError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return p;
}

void save_checkpoint(const fs::path& path, const HawkesParams& p) {
    p.validate();
    json j;
    j["format_version"] = kCheckpointVersion;
    j["kind"] = "hawkes";
    j["num_nodes"] = p.num_nodes;
    j["num_communities"] = p.num_communities;
    j["covariate_dim"] = p.covariate_dim();
    j["delta"] = p.delta;
    j["alpha"] = matrix_json(p.alpha);
    j["phi"] = matrix_json(p.phi);
    j["omega"] = matrix_json(p.omega);
    json mu = json::array();
    for (std::size_t i = 0; i < p.mu.size(); ++i) {
        auto vals = p.mu.values(i);
        mu.push_back({{"src", p.mu.pairs()[i].src},
                      {"dst", p.mu.pairs()[i].dst},
                      {"values", std::vector<double>(vals.begin(), vals.end())}});
    }
    j["mu"] = std::move(mu);
    j["beta"] = matrix_json(p.beta);
    j["tau"] = p.tau;
    j["nu"] = vector_json(p.nu);
    j["exposure"] = p.exposure;
    j["alpha_shape"] = p.alpha_shape;
    j["alpha_rate"] = p.alpha_rate;
    write_json(path, j);
}

HawkesParams load_hawkes_checkpoint(const fs::path& path) {
    json j = checked_checkpoint(path, "hawkes");
    HawkesParams p;
    try {
        p.num_nodes = j.at("num_nodes").get<int>();
        p.num_communities = j.at("num_communities").get<int>();
        const int K = p.num_communities;
        const auto D = j.at("covariate_dim").get<Eigen::Index>();
        p.delta = j.at("delta").get<double>();
        p.alpha = json_matrix(j.at("alpha"), K, K, "alpha");
        p.phi = json_matrix(j.at("phi"), p.num_nodes, K, "phi");
        p.omega = json_matrix(j.at("omega"), K, K, "omega");
        std::map<NodePair, std::vector<double>> entries;
        for (const auto& e : j.at("mu")) {
            const NodePair pair{e.at("src").get<NodeId>(), e.at("dst").get<NodeId>()};
            auto vals = e.at("values").get<std::vector<double>>();
            if (!entries.emplace(pair, std::move(vals)).second)
                throw DataError(path.string() + ": duplicate mu entry");
        }
        p.mu = SparseRates(K * K);
        p.mu.assign(std::move(entries));
        p.beta = json_matrix(j.at("beta"), K * K, D, "beta");
        p.tau = j.at("tau").get<double>();
        p.nu = json_vector(j.at("nu"), D, "nu");
        p.exposure = j.at("exposure").get<double>();
        p.alpha_shape = j.at("alpha_shape").get<double>();
        p.alpha_rate = j.at("alpha_rate").get<double>();
        p.validate();
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    } catch (const DomainError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return p;
}

void save_assignment(const fs::path& path, const LatentAssignment& truth) {
    json j;
    j["format_version"] = kCheckpointVersion;
    j["kind"] = "assignment";
    j["num_patterns"] = truth.num_patterns;
    j["exogenous"] = truth.exogenous;
    j["pattern"] = truth.pattern;
    write_json(path, j);
}

ScenarioConfig parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("cannot parse scenario: ") + e.what());
    }
    ScenarioConfig cfg;
    try {
        cfg.blocks.num_nodes = j.value("V", cfg.blocks.num_nodes);
        cfg.blocks.delta = j.value("delta", cfg.blocks.delta);
        cfg.blocks.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("alpha")) {
            const auto& a = j.at("alpha");
            if (!a.is_array() || a.empty()) throw DataError("scenario alpha must be a non-empty array");
            if (a[0].is_array()) {
                const auto K = static_cast<Eigen::Index>(a.size());
                cfg.alpha_matrix = json_matrix(a, K, K, "alpha");
                cfg.blocks.alpha.assign(static_cast<std::size_t>(K), 0.0);
                for (Eigen::Index k = 0; k < K; ++k) cfg.blocks.alpha[static_cast<std::size_t>(k)] = (*cfg.alpha_matrix)(k, k);
            } else {
                cfg.blocks.alpha = a.get<std::vector<double>>();
            }
        }
        if (j.contains("K") && j.at("K").get<std::size_t>() != cfg.blocks.alpha.size())
            throw DataError("scenario K disagrees with the size of alpha");
        if (j.contains("block_rates")) cfg.blocks.block_rates = j.at("block_rates").get<std::vector<double>>();
        cfg.sim.horizon = j.value("T", cfg.sim.horizon);
        cfg.sim.seed = cfg.blocks.seed;
        cfg.sim.event_cap = j.value("event_cap", cfg.sim.event_cap);
        cfg.sim.max_events = j.value("max_events", cfg.sim.max_events);
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid scenario: ") + e.what());
    }
    return cfg;
}

ScenarioConfig load_scenario(const fs::path& path) {
    auto in = open_in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void append_manifest(const fs::path& dir, const std::string& file, std::uint64_t config_hash, std::uint64_t seed) {
    fs::create_directories(dir);
    std::ofstream out(dir / "manifest.txt", std::ios::app);
    if (!out) throw DataError("cannot write manifest in " + dir.string());
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash));
    out << file << " config_hash=" << hex << " seed=" << seed << "\n";
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricRow>& rows) {
    auto out = open_out(path);
    out << "model,p,auc_roc,auc_pr,fit_seconds\n";
    for (const auto& r : rows)
        out << r.model << ',' << format_double(r.p) << ',' << format_double(r.auc_roc) << ','
            << format_double(r.auc_pr) << ',' << format_double(r.fit_seconds) << '\n';
    if (!out) throw DataError("failed writing " + path.string());
}

void write_metrics_json(const fs::path& path, const std::vector<MetricRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        json row{{"model", r.model}, {"p", r.p}, {"auc_roc", r.auc_roc}, {"auc_pr", r.auc_pr},
                 {"fit_seconds", r.fit_seconds}};
        if (!r.error.empty()) row["error"] = r.error;
        json scores = json::array();
        for (const auto& s : r.scores) scores.push_back({s.pair.src, s.pair.dst, s.score, s.label});
        row["scores"] = std::move(scores);
        arr.push_back(std::move(row));
    }
    write_json(path, arr);
}

}  // namespace hepm
