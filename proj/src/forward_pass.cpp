#include "hepm/forward_pass.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "hepm/random.hpp"

namespace hepm {

PairBlocks::PairBlocks(const EventSequence& data) {
    std::map<NodePair, std::vector<std::uint32_t>> grouped;
    std::map<NodePair, std::uint32_t> counts;
    for (std::uint32_t i = 0; i < data.size(); ++i) {
        const auto& e = data[i];
        const NodePair key{std::min(e.src, e.dst), std::max(e.src, e.dst)};
        grouped[key].push_back(i);
        ++counts[{e.src, e.dst}];
    }
    for (auto& [pair, n] : counts) {
        active_.push_back(pair);
        counts_.push_back(n);
    }
    blocks_.reserve(grouped.size());
    for (auto& [pair, idx] : grouped) {
        PairBlock b;
        b.pair = pair;
        b.events = std::move(idx);
        for (int dir = 0; dir < 2; ++dir) {
            auto found = active_index(dir == 0 ? pair : pair.reversed());
            b.active[static_cast<std::size_t>(dir)] = found ? static_cast<int>(*found) : -1;
        }
        blocks_.push_back(std::move(b));
    }
}

std::optional<std::size_t> PairBlocks::active_index(NodePair pair) const {
    auto it = std::lower_bound(active_.begin(), active_.end(), pair);
    if (it == active_.end() || *it != pair) return std::nullopt;
    return static_cast<std::size_t>(it - active_.begin());
}

namespace {

struct BlockPartial {
    double log_intensity{0.0};
    double excitation_mass{0.0};
    std::vector<double> trigger_mass;
    std::string error;
};

/// Decides the tag weights w of one event and books its sufficient statistics.
struct Tagger {
    const PassOptions& opt;
    int P;
    PassResult& result;

    void operator()(std::uint32_t idx, int active, std::span<const double> exo,
                    std::span<const double> endo, double lam, Rng* rng, std::span<double> w) const {
        const auto up = static_cast<std::size_t>(P);
        double* mh = nullptr;
        double* mc = nullptr;
        if (opt.pair_stats && active >= 0) {
            mh = result.m_hat.data() + static_cast<std::size_t>(active) * up;
            mc = result.m_check.data() + static_cast<std::size_t>(active) * up;
        }
        switch (opt.mode) {
            case TagMode::soft: {
                const double inv = 1.0 / lam;
                for (std::size_t p = 0; p < up; ++p) {
                    const double a = exo[p] * inv;
                    const double b = endo[p] * inv;
                    w[p] = a + b;
                    if (mh) {
                        mh[p] += a;
                        mc[p] += b;
                    }
                }
                if (opt.record) {
                    auto* re = opt.record->exo_resp.data() + idx * up;
                    auto* rn = opt.record->endo_resp.data() + idx * up;
                    for (std::size_t p = 0; p < up; ++p) {
                        re[p] = exo[p] * inv;
                        rn[p] = endo[p] * inv;
                    }
                }
                break;
            }
            case TagMode::fixed: {
                const auto& fx = *opt.fixed;
                if (fx.soft) {
                    auto re = fx.exo(idx);
                    auto rn = fx.endo(idx);
                    for (std::size_t p = 0; p < up; ++p) {
                        w[p] = re[p] + rn[p];
                        if (mh) {
                            mh[p] += re[p];
                            mc[p] += rn[p];
                        }
                    }
                } else {
                    std::fill(w.begin(), w.end(), 0.0);
                    const auto q = static_cast<std::size_t>(fx.pattern[idx]);
                    w[q] = 1.0;
                    if (mh) (fx.exogenous[idx] ? mh : mc)[q] += 1.0;
                }
                break;
            }
            case TagMode::sample: {
                double exo_total = 0.0;
                double endo_total = 0.0;
                for (std::size_t p = 0; p < up; ++p) {
                    exo_total += exo[p];
                    endo_total += endo[p];
                }
                const bool exogenous =
                    endo_total <= 0.0 || (exo_total > 0.0 && uniform01(*rng) * lam < exo_total);
                const std::size_t q = exogenous ? sample_categorical(exo, exo_total, *rng)
                                                : sample_categorical(endo, endo_total, *rng);
                std::fill(w.begin(), w.end(), 0.0);
                w[q] = 1.0;
                if (mh) (exogenous ? mh : mc)[q] += 1.0;
                if (opt.record) {
                    opt.record->exogenous[idx] = exogenous ? 1 : 0;
                    opt.record->pattern[idx] = static_cast<int>(q);
                }
                break;
            }
        }
    }
};

void check_options(const HawkesParams& params, const EventSequence& data, const PassOptions& opt) {
    params.validate();
    if (data.node_count() > params.num_nodes)
        throw DomainError("data has more nodes than the parameters");
    const auto P = params.patterns();
    if (opt.mode == TagMode::fixed) {
        if (!opt.fixed || opt.fixed->size() != data.size() || opt.fixed->num_patterns != P)
            throw DomainError("fixed tagging needs an assignment covering every event");
    }
    if (opt.record) {
        const bool ok = opt.record->size() == data.size() && opt.record->num_patterns == P &&
                        opt.record->soft == (opt.mode == TagMode::soft);
        if (opt.mode != TagMode::fixed && !ok)
            throw DomainError("record assignment must match the data and tagging mode");
    }
}

PassResult make_result(const PairBlocks& blocks, const EventSequence& data, int P,
                       const PassOptions& opt) {
    PassResult r;
    r.trigger_mass.assign(static_cast<std::size_t>(P), 0.0);
    if (opt.pair_stats) {
        r.m_hat.assign(blocks.active_pairs().size() * static_cast<std::size_t>(P), 0.0);
        r.m_check.assign(r.m_hat.size(), 0.0);
    }
    if (opt.event_intensity) r.event_intensity.assign(data.size(), 0.0);
    return r;
}

std::string zero_intensity_message(std::uint32_t idx, const Event& e, double lam) {
    return "intensity " + std::to_string(lam) + " at event " + std::to_string(idx) + " (t=" +
           std::to_string(e.t) + ", " + std::to_string(e.src) + "->" + std::to_string(e.dst) + ")";
}

void run_block(const HawkesParams& params, const EventSequence& data, const PairBlock& blk,
               std::size_t block_id, const std::vector<double>& alpha, const PassOptions& opt,
               const Tagger& tag, PassResult& result, BlockPartial& out) {
    const int P = params.patterns();
    const int K = params.num_communities;
    const auto up = static_cast<std::size_t>(P);
    const double delta = params.delta;
    const double T = data.horizon();

    std::array<std::vector<double>, 2> mu{std::vector<double>(up), std::vector<double>(up)};
    pair_base_rates(params, opt.covs, blk.pair, mu[0]);
    pair_base_rates(params, opt.covs, blk.pair.reversed(), mu[1]);
    // R[dir][p]: tag mass exciting pattern p of direction dir, valid at t_ref.
    std::array<std::vector<double>, 2> R{std::vector<double>(up, 0.0), std::vector<double>(up, 0.0)};
    double t_ref = 0.0;
    std::vector<double> exo(up), endo(up);
    std::vector<double> pending_w;
    std::vector<int> pending_dir;
    out.trigger_mass.assign(up, 0.0);

    Rng rng;
    if (opt.mode == TagMode::sample) rng = make_stream(opt.seed, {opt.iteration, block_id});

    const auto& ev = blk.events;
    std::size_t g = 0;
    while (g < ev.size()) {
        const double t = data[ev[g]].t;
        std::size_t h = g;
        while (h < ev.size() && data[ev[h]].t == t) ++h;
        const double f = std::exp(-(t - t_ref) / delta);
        for (int d = 0; d < 2; ++d)
            for (auto& x : R[static_cast<std::size_t>(d)]) x *= f;
        t_ref = t;
        pending_w.assign((h - g) * up, 0.0);
        pending_dir.assign(h - g, 0);

        const double g_comp = -delta * std::expm1(-(T - t) / delta);
        for (std::size_t i = g; i < h; ++i) {
            const std::uint32_t idx = ev[i];
            const int dir = data[idx].src == blk.pair.src ? 0 : 1;
            const auto& m = mu[static_cast<std::size_t>(dir)];
            const auto& r = R[static_cast<std::size_t>(dir)];
            double lam = 0.0;
            for (std::size_t p = 0; p < up; ++p) {
                exo[p] = m[p];
                endo[p] = alpha[p] * r[p];
                lam += exo[p] + endo[p];
            }
            if (!(lam > 0.0) || !std::isfinite(lam)) {
                out.error = zero_intensity_message(idx, data[idx], lam);
                return;
            }
            out.log_intensity += std::log(lam);
            if (opt.event_intensity) result.event_intensity[idx] = lam;

            std::span<double> w{pending_w.data() + (i - g) * up, up};
            tag(idx, blk.active[static_cast<std::size_t>(dir)], exo, endo, lam, &rng, w);
            pending_dir[i - g] = 1 - dir;
            for (std::size_t q = 0; q < up; ++q) {
                if (w[q] == 0.0) continue;
                const auto rq = static_cast<std::size_t>(reverse_pattern(static_cast<int>(q), K));
                out.trigger_mass[rq] += w[q] * g_comp;
                out.excitation_mass += alpha[rq] * w[q] * g_comp;
            }
        }
        for (std::size_t i = 0; i < h - g; ++i) {
            auto& target = R[static_cast<std::size_t>(pending_dir[i])];
            for (std::size_t q = 0; q < up; ++q) {
                const double wq = pending_w[i * up + q];
                if (wq != 0.0) target[static_cast<std::size_t>(reverse_pattern(static_cast<int>(q), K))] += wq;
            }
        }
        g = h;
    }

    if (opt.horizon_state) {
        const double f = std::exp(-(T - t_ref) / delta);
        for (int d = 0; d < 2; ++d) {
            if (blk.active[static_cast<std::size_t>(1 - d)] < 0) continue;
            std::vector<double> state(R[static_cast<std::size_t>(d)]);
            for (auto& x : state) x *= f;
            const NodePair excited = d == 0 ? blk.pair : blk.pair.reversed();
            // distinct blocks write distinct keys, but std::map insertion is not thread-safe
#pragma omp critical(hepm_horizon_state)
            result.horizon_state.emplace(excited, std::move(state));
        }
    }
}

}  // namespace

PassResult forward_pass(const HawkesParams& params, const EventSequence& data,
                        const PairBlocks& blocks, const PassOptions& options) {
    check_options(params, data, options);
    const int P = params.patterns();
    PassResult result = make_result(blocks, data, P, options);
    const auto alpha = params.alpha_flat();
    const Tagger tag{options, P, result};
    const auto& blks = blocks.blocks();
    std::vector<BlockPartial> partial(blks.size());
    const auto nblocks = static_cast<std::ptrdiff_t>(blks.size());

#pragma omp parallel for schedule(dynamic, 16) if (options.parallel)
    for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
        const auto ub = static_cast<std::size_t>(b);
        try {
            run_block(params, data, blks[ub], ub, alpha, options, tag, result, partial[ub]);
        } catch (const std::exception& e) {
            partial[ub].error = e.what();
        }
    }

    for (const auto& part : partial) {
        if (!part.error.empty()) throw NumericalError(part.error);
        result.log_intensity += part.log_intensity;
        result.excitation_mass += part.excitation_mass;
        for (std::size_t p = 0; p < part.trigger_mass.size(); ++p)
            result.trigger_mass[p] += part.trigger_mass[p];
    }
    return result;
}

PassResult forward_pass_reference(const HawkesParams& params, const EventSequence& data,
                                  const PairBlocks& blocks, const PassOptions& options) {
    check_options(params, data, options);
    const int P = params.patterns();
    const int K = params.num_communities;
    const auto up = static_cast<std::size_t>(P);
    const double delta = params.delta;
    const double T = data.horizon();
    PassResult result = make_result(blocks, data, P, options);
    const auto alpha = params.alpha_flat();
    const Tagger tag{options, P, result};

    // block id of every event, so sampled tags reuse the per-block streams
    std::vector<std::size_t> block_of(data.size());
    const auto& blks = blocks.blocks();
    for (std::size_t b = 0; b < blks.size(); ++b)
        for (auto idx : blks[b].events) block_of[idx] = b;
    std::map<std::size_t, Rng> streams;

    std::vector<double> tags(data.size() * up, 0.0);
    std::vector<double> mu(up), exo(up), endo(up);
    for (std::uint32_t i = 0; i < data.size(); ++i) {
        const auto& e = data[i];
        const NodePair pair{e.src, e.dst};
        pair_base_rates(params, options.covs, pair, mu);
        std::fill(endo.begin(), endo.end(), 0.0);
        for (std::uint32_t j = 0; j < i; ++j) {
            const auto& o = data[j];
            if (o.src != e.dst || o.dst != e.src || !(o.t < e.t)) continue;
            const double decay = std::exp(-(e.t - o.t) / delta);
            for (std::size_t q = 0; q < up; ++q) {
                const auto rq = static_cast<std::size_t>(reverse_pattern(static_cast<int>(q), K));
                endo[rq] += alpha[rq] * tags[j * up + q] * decay;
            }
        }
        double lam = 0.0;
        for (std::size_t p = 0; p < up; ++p) {
            exo[p] = mu[p];
            lam += exo[p] + endo[p];
        }
        if (!(lam > 0.0) || !std::isfinite(lam))
            throw NumericalError(zero_intensity_message(i, e, lam));
        result.log_intensity += std::log(lam);
        if (options.event_intensity) result.event_intensity[i] = lam;

        Rng* rng = nullptr;
        if (options.mode == TagMode::sample) {
            const auto b = block_of[i];
            auto it = streams.find(b);
            if (it == streams.end())
                it = streams.emplace(b, make_stream(options.seed, {options.iteration, b})).first;
            rng = &it->second;
        }
        const auto active = blocks.active_index(pair);
        std::span<double> w{tags.data() + i * up, up};
        tag(i, active ? static_cast<int>(*active) : -1, exo, endo, lam, rng, w);

        const double g_comp = delta * (1.0 - std::exp(-(T - e.t) / delta));
        for (std::size_t q = 0; q < up; ++q) {
            const auto rq = static_cast<std::size_t>(reverse_pattern(static_cast<int>(q), K));
            result.trigger_mass[rq] += w[q] * g_comp;
            result.excitation_mass += alpha[rq] * w[q] * g_comp;
        }
    }

    if (options.horizon_state) {
        for (std::uint32_t j = 0; j < data.size(); ++j) {
            const auto& o = data[j];
            auto& state = result.horizon_state[{o.dst, o.src}];
            if (state.empty()) state.assign(up, 0.0);
            const double decay = std::exp(-(T - o.t) / delta);
            for (std::size_t q = 0; q < up; ++q)
                state[static_cast<std::size_t>(reverse_pattern(static_cast<int>(q), K))] +=
                    tags[j * up + q] * decay;
        }
    }
    return result;
}

}  // namespace hepm
