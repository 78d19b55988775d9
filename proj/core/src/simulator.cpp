#include "shardplan/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <unordered_map>

#include "shardplan/rng.hpp"

namespace shardplan {

int SimConfig::batch_for(const BucketKey& key) const {
    auto it = batch_size.find(key);
    return it == batch_size.end() ? default_batch : it->second;
}

std::map<BucketKey, std::int64_t> steps_count_bound(const CountMatrix& counts,
                                                    const SimConfig& cfg) {
    std::map<BucketKey, std::int64_t> steps;
    for (std::size_t b = 0; b < counts.index.buckets.size(); ++b) {
        const BucketKey& key = counts.index.buckets[b];
        std::int64_t batch = cfg.batch_for(key);
        if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
        std::int64_t min_steps = 0;
        for (std::size_t r = 0; r < counts.n.size(); ++r) {
            std::int64_t rank_steps = counts.n[r][b] / batch;
            if (r == 0 || rank_steps < min_steps) min_steps = rank_steps;
        }
        steps[key] = counts.n.empty() ? 0 : min_steps;
    }
    return steps;
}

double utilization_count_bound(const CountMatrix& counts, const SimConfig& cfg) {
    std::int64_t available = counts.total();
    if (available == 0) return 1.0;  // vacuous epoch
    auto steps = steps_count_bound(counts, cfg);
    std::int64_t consumed = 0;
    for (const auto& [key, s] : steps) {
        consumed += s * static_cast<std::int64_t>(counts.ranks()) * cfg.batch_for(key);
    }
    return static_cast<double>(consumed) / static_cast<double>(available);
}

namespace {

struct StreamEntry {
    int col = 0;        // bucket column
    int shard = 0;      // dense shard index (per corpus or per plan)
    std::int64_t offset = 0;   // position within the shard's clip list
    bool last_in_shard = false;
};

struct RunResult {
    std::vector<std::int64_t> steps_done;  // per column
    std::int64_t consumed = 0;
    std::int64_t wasted = 0;
    std::int64_t fetches = 0;
    std::int64_t sequential = 0;
};

/// Synchronized epoch over per-rank streams: each scheduled step demands
/// batch samples of one bucket from every rank; mismatched pulls buffer up
/// to `capacity`, overflow is discarded. The epoch ends at the first step any
/// rank cannot fill.
RunResult order_sensitive_run(const std::vector<std::vector<StreamEntry>>& streams,
                              const std::vector<int>& schedule,
                              const std::vector<std::int64_t>& batch_per_col,
                              std::int64_t capacity) {
    const std::size_t ranks = streams.size();
    const std::size_t cols = batch_per_col.size();

    RunResult result;
    result.steps_done.assign(cols, 0);

    struct RankState {
        std::size_t next = 0;
        std::vector<std::deque<StreamEntry>> buffered;
        std::int64_t buffered_total = 0;
        // streaming-reader position: a fetch is sequential iff it continues
        // the open file, or opens a file at its start right after finishing
        // one (or as the very first read)
        int open_shard = -1;
        std::int64_t open_offset = -1;
        bool at_file_boundary = true;
    };
    std::vector<RankState> state(ranks);
    for (RankState& rs : state) rs.buffered.resize(cols);

    auto fetch = [&](RankState& rs, const std::vector<StreamEntry>& stream) -> StreamEntry {
        const StreamEntry& e = stream[rs.next++];
        ++result.fetches;
        bool continues_file = e.shard == rs.open_shard && e.offset == rs.open_offset + 1;
        bool opens_next_file = rs.at_file_boundary && e.offset == 0;
        if (continues_file || opens_next_file) ++result.sequential;
        rs.open_shard = e.shard;
        rs.open_offset = e.offset;
        rs.at_file_boundary = e.last_in_shard;
        return e;
    };

    for (int scheduled_col : schedule) {
        auto col = static_cast<std::size_t>(scheduled_col);
        std::int64_t need_per_rank = batch_per_col[col];
        bool starved = false;

        for (std::size_t r = 0; r < ranks && !starved; ++r) {
            RankState& rs = state[r];
            std::int64_t need = need_per_rank;

            while (need > 0 && !rs.buffered[col].empty()) {
                rs.buffered[col].pop_front();
                --rs.buffered_total;
                --need;
            }
            while (need > 0 && rs.next < streams[r].size()) {
                StreamEntry e = fetch(rs, streams[r]);
                if (e.col == scheduled_col) {
                    --need;
                } else if (rs.buffered_total < capacity) {
                    rs.buffered[static_cast<std::size_t>(e.col)].push_back(e);
                    ++rs.buffered_total;
                } else {
                    ++result.wasted;
                }
            }
            if (need > 0) starved = true;
        }

        if (starved) break;  // partial step does not count
        ++result.steps_done[col];
        result.consumed += need_per_rank * static_cast<std::int64_t>(ranks);
    }
    return result;
}

struct StreamSetup {
    std::vector<std::vector<StreamEntry>> streams;
    std::vector<BucketKey> col_keys;
    std::vector<std::int64_t> batch_per_col;
    std::int64_t available = 0;
};

std::vector<int> build_schedule(const StreamSetup& setup,
                                const std::vector<std::vector<std::int64_t>>& rank_col_counts) {
    // Count-bound steps per column, interleaved maximally evenly.
    std::map<std::string, std::int64_t> steps;
    std::map<std::string, int> col_of;
    for (std::size_t c = 0; c < setup.col_keys.size(); ++c) {
        std::int64_t min_steps = 0;
        for (std::size_t r = 0; r < rank_col_counts.size(); ++r) {
            std::int64_t s = rank_col_counts[r][c] / setup.batch_per_col[c];
            if (r == 0 || s < min_steps) min_steps = s;
        }
        std::string key = setup.col_keys[c].str();
        if (min_steps > 0) steps[key] = min_steps;
        col_of[key] = static_cast<int>(c);
    }
    std::vector<int> schedule;
    if (steps.empty()) return schedule;
    for (const std::string& key : interleave_schedule(steps)) {
        schedule.push_back(col_of.at(key));
    }
    return schedule;
}

SimReport report_from_runs(const std::vector<PerSeedStats>& per_seed,
                           const std::map<BucketKey, std::int64_t>& first_steps,
                           std::int64_t available, const std::string& mode) {
    SimReport report;
    report.mode = mode;
    report.steps_per_bucket = first_steps;
    report.available = available;
    report.per_seed = per_seed;

    double n = static_cast<double>(per_seed.size());
    double mean_util = 0.0, mean_steps = 0.0, mean_wasted = 0.0, mean_consumed = 0.0;
    double mean_seq = 0.0, mean_seeks = 0.0;
    for (const PerSeedStats& s : per_seed) {
        mean_util += s.utilization;
        mean_steps += static_cast<double>(s.total_steps);
        mean_wasted += static_cast<double>(s.wasted);
        mean_consumed += static_cast<double>(s.consumed);
        mean_seq += s.locality.sequential_fraction;
        mean_seeks += s.locality.seek_count;
    }
    mean_util /= n;
    mean_steps /= n;
    mean_wasted /= n;
    mean_consumed /= n;
    mean_seq /= n;
    mean_seeks /= n;

    double var = 0.0;
    for (const PerSeedStats& s : per_seed) {
        double d = s.utilization - mean_util;
        var += d * d;
    }
    var /= n;

    report.total_steps = mean_steps;
    report.utilization = mean_util;
    report.utilization_std = std::sqrt(var);
    report.consumed = mean_consumed;
    report.wasted_samples = mean_wasted;
    report.locality.sequential_fraction = mean_seq;
    report.locality.seek_count = mean_seeks;
    if (available == 0) report.notice = "empty corpus: utilization is vacuously 1.0";
    return report;
}

PerSeedStats run_to_stats(const RunResult& run, std::int64_t available, std::uint64_t seed) {
    PerSeedStats stats;
    stats.seed = seed;
    stats.consumed = run.consumed;
    stats.wasted = run.wasted;
    stats.utilization = available == 0
                            ? 1.0
                            : static_cast<double>(run.consumed) / static_cast<double>(available);
    for (std::int64_t s : run.steps_done) stats.total_steps += s;
    stats.locality.sequential_fraction =
        run.fetches == 0 ? 1.0
                         : static_cast<double>(run.sequential) / static_cast<double>(run.fetches);
    stats.locality.seek_count = static_cast<double>(run.fetches - run.sequential);
    return stats;
}

}  // namespace

SimReport simulate_baseline(const Corpus& corpus, const SimConfig& cfg,
                            const BucketRules& rules) {
    if (cfg.rank_count < 1)
        throw std::invalid_argument("simulate_baseline: rank_count must be >= 1");
    if (cfg.seeds.empty())
        throw std::invalid_argument("simulate_baseline: at least one seed is required");

    // Global clip index over all shards, in archive order.
    BucketIndex index = BucketIndex::build(corpus, rules);
    std::unordered_map<std::string_view, const ClipRecord*> by_id;
    by_id.reserve(corpus.records.size());
    for (const ClipRecord& r : corpus.records) by_id.emplace(r.clip_id, &r);

    std::vector<StreamEntry> global;
    global.reserve(corpus.records.size());
    for (std::size_t s = 0; s < corpus.shards.size(); ++s) {
        const ShardManifest& shard = corpus.shards[s];
        for (std::size_t o = 0; o < shard.clip_ids.size(); ++o) {
            const ClipRecord* r = by_id.at(shard.clip_ids[o]);
            global.push_back({index.col(bucket_of(*r, rules)), static_cast<int>(s),
                              static_cast<std::int64_t>(o),
                              o + 1 == shard.clip_ids.size()});
        }
    }

    std::vector<std::int64_t> batch_per_col(index.buckets.size());
    for (std::size_t c = 0; c < index.buckets.size(); ++c)
        batch_per_col[c] = cfg.batch_for(index.buckets[c]);

    const auto ranks = static_cast<std::size_t>(cfg.rank_count);
    std::vector<PerSeedStats> per_seed;
    std::map<BucketKey, std::int64_t> first_steps;

    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        std::vector<StreamEntry> shuffled = global;
        Rng rng = make_rng(cfg.seeds[si]);
        shuffle_in_place(shuffled, rng);

        // Round-robin: shuffled index k lands on rank k mod W.
        std::vector<std::vector<StreamEntry>> streams(ranks);
        for (std::size_t k = 0; k < shuffled.size(); ++k) {
            streams[k % ranks].push_back(shuffled[k]);
        }

        std::vector<std::vector<std::int64_t>> rank_col_counts(
            ranks, std::vector<std::int64_t>(index.buckets.size(), 0));
        for (std::size_t r = 0; r < ranks; ++r) {
            for (const StreamEntry& e : streams[r])
                ++rank_col_counts[r][static_cast<std::size_t>(e.col)];
        }

        StreamSetup setup;
        setup.streams = std::move(streams);
        setup.col_keys = index.buckets;
        setup.batch_per_col = batch_per_col;
        setup.available = static_cast<std::int64_t>(global.size());

        std::vector<int> schedule = build_schedule(setup, rank_col_counts);
        RunResult run = order_sensitive_run(setup.streams, schedule, batch_per_col,
                                            cfg.buffer_capacity);
        per_seed.push_back(run_to_stats(run, setup.available, cfg.seeds[si]));
        if (si == 0) {
            for (std::size_t c = 0; c < index.buckets.size(); ++c)
                first_steps[index.buckets[c]] = run.steps_done[c];
        }
    }

    return report_from_runs(per_seed, first_steps,
                            static_cast<std::int64_t>(global.size()), "baseline_shuffle");
}

SimReport simulate_planned(const std::vector<PlanFile>& plans, const SimConfig& cfg) {
    if (plans.empty()) throw std::invalid_argument("simulate_planned: no plan files");

    std::vector<const PlanFile*> by_rank(plans.size(), nullptr);
    for (const PlanFile& p : plans) {
        if (p.rank < 0 || p.rank >= static_cast<int>(plans.size()))
            throw std::invalid_argument("simulate_planned: plan ranks must be contiguous from 0; got rank " +
                                        std::to_string(p.rank) + " among " +
                                        std::to_string(plans.size()) + " plans");
        if (by_rank[static_cast<std::size_t>(p.rank)])
            throw std::invalid_argument("simulate_planned: duplicate plan for rank " +
                                        std::to_string(p.rank));
        by_rank[static_cast<std::size_t>(p.rank)] = &p;
    }

    // Column numbering over the union of plan buckets.
    std::map<BucketKey, int> col_of;
    std::vector<BucketKey> col_keys;
    for (const PlanFile& p : plans) {
        for (const PlanEntry& e : p.entries) {
            if (col_of.emplace(e.bucket, 0).second) col_keys.push_back(e.bucket);
        }
    }
    std::sort(col_keys.begin(), col_keys.end());
    for (std::size_t c = 0; c < col_keys.size(); ++c) col_of[col_keys[c]] = static_cast<int>(c);

    // Dense shard ids; shard names may repeat across ranks only if a shard
    // was split, which build_plan never does.
    std::map<std::string, int> shard_ids;
    std::vector<std::vector<StreamEntry>> streams(plans.size());
    std::vector<std::vector<std::int64_t>> rank_col_counts(
        plans.size(), std::vector<std::int64_t>(col_keys.size(), 0));
    std::int64_t available = 0;

    for (std::size_t r = 0; r < by_rank.size(); ++r) {
        const PlanFile& p = *by_rank[r];
        std::unordered_map<std::string, std::int64_t> offset_in_shard;
        for (const PlanEntry& e : p.entries) {
            auto [it, inserted] = shard_ids.emplace(e.shard_id, static_cast<int>(shard_ids.size()));
            int col = col_of.at(e.bucket);
            std::int64_t offset = offset_in_shard[e.shard_id]++;
            streams[r].push_back({col, it->second, offset, false});
            ++rank_col_counts[r][static_cast<std::size_t>(col)];
            ++available;
        }
        // a contiguous shard run in a plan is one archive read end to end
        for (std::size_t i = 0; i < streams[r].size(); ++i) {
            if (i + 1 == streams[r].size() ||
                streams[r][i + 1].shard != streams[r][i].shard)
                streams[r][i].last_in_shard = true;
        }
    }

    std::vector<std::int64_t> batch_per_col(col_keys.size());
    for (std::size_t c = 0; c < col_keys.size(); ++c)
        batch_per_col[c] = cfg.batch_for(col_keys[c]);

    StreamSetup setup;
    setup.streams = std::move(streams);
    setup.col_keys = col_keys;
    setup.batch_per_col = batch_per_col;
    setup.available = available;

    std::vector<int> schedule = build_schedule(setup, rank_col_counts);
    RunResult run =
        order_sensitive_run(setup.streams, schedule, batch_per_col, cfg.buffer_capacity);

    std::map<BucketKey, std::int64_t> steps;
    for (std::size_t c = 0; c < col_keys.size(); ++c) steps[col_keys[c]] = run.steps_done[c];

    std::vector<PerSeedStats> single{run_to_stats(run, available, 0)};
    SimReport report = report_from_runs(single, steps, available, "planned");
    report.utilization_std = 0.0;
    report.per_seed.clear();
    return report;
}

SimReport simulate_planned(const Assignment& assignment, const Corpus& corpus,
                           std::uint64_t epoch_seed, const SimConfig& cfg,
                           const BucketRules& rules) {
    std::vector<PlanFile> plans = build_plan(assignment, corpus, epoch_seed, rules);
    if (static_cast<int>(plans.size()) != cfg.rank_count)
        throw std::invalid_argument("simulate_planned: assignment rank count " +
                                    std::to_string(plans.size()) +
                                    " does not match simulator rank count " +
                                    std::to_string(cfg.rank_count));
    return simulate_planned(plans, cfg);
}

}  // namespace shardplan
