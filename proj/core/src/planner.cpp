#include "shardplan/planner.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "shardplan/io_util.hpp"

namespace shardplan {

void Assignment::validate() const {
    if (rank_count < 1) throw std::invalid_argument("assignment: rank_count must be >= 1");
    for (const auto& [shard, rank] : shard_to_rank) {
        if (rank < 0 || rank >= rank_count)
            throw std::invalid_argument("assignment: shard '" + shard + "' mapped to rank " +
                                        std::to_string(rank) + " outside [0, " +
                                        std::to_string(rank_count) + ")");
    }
}

BucketIndex BucketIndex::build(const Corpus& corpus, const BucketRules& rules) {
    BucketIndex index;
    for (const auto& [key, count] : bucket_histogram(corpus, rules)) {
        index.column.emplace(key, static_cast<int>(index.buckets.size()));
        index.buckets.push_back(key);
    }
    return index;
}

int BucketIndex::col(const BucketKey& key) const {
    auto it = column.find(key);
    return it == column.end() ? -1 : it->second;
}

std::vector<std::int64_t> CountMatrix::bucket_totals() const {
    std::vector<std::int64_t> totals(static_cast<std::size_t>(bucket_count()), 0);
    for (const auto& row : n) {
        for (std::size_t b = 0; b < totals.size(); ++b) totals[b] += row[b];
    }
    return totals;
}

std::int64_t CountMatrix::total() const {
    std::int64_t t = 0;
    for (const auto& row : n) {
        for (std::int64_t v : row) t += v;
    }
    return t;
}

CountMatrix count_matrix(const Assignment& assignment, const Corpus& corpus,
                         const BucketRules& rules) {
    assignment.validate();
    for (const ShardManifest& s : corpus.shards) {
        if (!assignment.shard_to_rank.contains(s.shard_id))
            throw std::invalid_argument("count_matrix: shard '" + s.shard_id +
                                        "' is not mapped to any rank");
    }

    CountMatrix counts;
    counts.index = BucketIndex::build(corpus, rules);
    counts.n.assign(static_cast<std::size_t>(assignment.rank_count),
                    std::vector<std::int64_t>(counts.index.buckets.size(), 0));
    for (const ClipRecord& r : corpus.records) {
        int rank = assignment.shard_to_rank.at(r.shard_id);
        int col = counts.index.col(bucket_of(r, rules));
        ++counts.n[static_cast<std::size_t>(rank)][static_cast<std::size_t>(col)];
    }
    return counts;
}

double cv(std::span<const std::int64_t> counts) {
    if (counts.empty()) return 0.0;
    std::int64_t sum = 0;
    for (std::int64_t v : counts) sum += v;
    if (sum == 0) return 0.0;  // mean-zero convention
    double mean = static_cast<double>(sum) / static_cast<double>(counts.size());
    double var = 0.0;
    for (std::int64_t v : counts) {
        double d = static_cast<double>(v) - mean;
        var += d * d;
    }
    var /= static_cast<double>(counts.size());
    return std::sqrt(var) / mean;
}

namespace {

/// Column-major counts plus cached per-column CV; the working state shared by
/// the greedy initializer and the SA loop.
struct ColumnState {
    std::vector<std::vector<std::int64_t>> by_bucket;  // [bucket][rank]
    std::vector<double> weight;                        // bucket share of all clips
    std::vector<double> col_cv;

    double column_cv(std::size_t b) const {
        return cv(std::span<const std::int64_t>(by_bucket[b]));
    }

    void refresh_all() {
        col_cv.resize(by_bucket.size());
        for (std::size_t b = 0; b < by_bucket.size(); ++b) col_cv[b] = column_cv(b);
    }

    double objective_value() const {
        double total = 0.0;
        for (std::size_t b = 0; b < by_bucket.size(); ++b) total += weight[b] * col_cv[b];
        return total;
    }
};

struct ShardStat {
    std::string shard_id;
    std::int64_t clip_count = 0;
    std::vector<std::pair<int, std::int64_t>> bucket_counts;  // (column, count)
};

std::vector<ShardStat> shard_stats(const Corpus& corpus, const BucketIndex& index,
                                   const BucketRules& rules) {
    std::unordered_map<std::string_view, std::size_t> pos;
    std::vector<ShardStat> stats;
    stats.reserve(corpus.shards.size());
    for (const ShardManifest& s : corpus.shards) {
        pos.emplace(s.shard_id, stats.size());
        stats.push_back({s.shard_id, 0, {}});
    }
    std::vector<std::vector<std::int64_t>> per_shard_cols(
        stats.size(), std::vector<std::int64_t>(index.buckets.size(), 0));
    for (const ClipRecord& r : corpus.records) {
        auto it = pos.find(r.shard_id);
        if (it == pos.end()) continue;
        int col = index.col(bucket_of(r, rules));
        ++per_shard_cols[it->second][static_cast<std::size_t>(col)];
        ++stats[it->second].clip_count;
    }
    for (std::size_t i = 0; i < stats.size(); ++i) {
        for (std::size_t b = 0; b < per_shard_cols[i].size(); ++b) {
            if (per_shard_cols[i][b] > 0)
                stats[i].bucket_counts.emplace_back(static_cast<int>(b), per_shard_cols[i][b]);
        }
    }
    return stats;
}

std::vector<double> bucket_weights(const BucketIndex& index,
                                   const std::vector<ShardStat>& stats) {
    std::vector<double> totals(index.buckets.size(), 0.0);
    double all = 0.0;
    for (const ShardStat& s : stats) {
        for (auto [col, cnt] : s.bucket_counts) {
            totals[static_cast<std::size_t>(col)] += static_cast<double>(cnt);
            all += static_cast<double>(cnt);
        }
    }
    if (all > 0) {
        for (double& w : totals) w /= all;
    }
    return totals;
}

}  // namespace

std::vector<double> per_bucket_cv(const CountMatrix& counts) {
    std::vector<double> cvs(static_cast<std::size_t>(counts.bucket_count()));
    std::vector<std::int64_t> column(static_cast<std::size_t>(counts.ranks()));
    for (std::size_t b = 0; b < cvs.size(); ++b) {
        for (std::size_t r = 0; r < column.size(); ++r) column[r] = counts.n[r][b];
        cvs[b] = cv(column);
    }
    return cvs;
}

double objective(const CountMatrix& counts) {
    std::vector<std::int64_t> totals = counts.bucket_totals();
    std::int64_t all = 0;
    for (std::int64_t t : totals) all += t;
    if (all == 0) return 0.0;

    std::vector<double> cvs = per_bucket_cv(counts);
    double obj = 0.0;
    for (std::size_t b = 0; b < cvs.size(); ++b) {
        double w = static_cast<double>(totals[b]) / static_cast<double>(all);
        obj += w * cvs[b];
    }
    return obj;
}

double objective(const Assignment& assignment, const Corpus& corpus,
                 const BucketRules& rules) {
    return objective(count_matrix(assignment, corpus, rules));
}

Assignment greedy_assign(const Corpus& corpus, int rank_count, const BucketRules& rules) {
    if (rank_count < 1) throw std::invalid_argument("greedy_assign: rank_count must be >= 1");

    BucketIndex index = BucketIndex::build(corpus, rules);
    std::vector<ShardStat> stats = shard_stats(corpus, index, rules);

    // Largest shards first; ties resolve by shard_id so runs are reproducible.
    std::sort(stats.begin(), stats.end(), [](const ShardStat& a, const ShardStat& b) {
        if (a.clip_count != b.clip_count) return a.clip_count > b.clip_count;
        return a.shard_id < b.shard_id;
    });

    ColumnState state;
    state.by_bucket.assign(index.buckets.size(),
                           std::vector<std::int64_t>(static_cast<std::size_t>(rank_count), 0));
    state.weight = bucket_weights(index, stats);
    state.refresh_all();

    Assignment assignment;
    assignment.rank_count = rank_count;

    for (const ShardStat& shard : stats) {
        int best_rank = 0;
        double best_delta = 0.0;
        bool first = true;
        for (int r = 0; r < rank_count; ++r) {
            double delta = 0.0;
            for (auto [col, cnt] : shard.bucket_counts) {
                auto b = static_cast<std::size_t>(col);
                state.by_bucket[b][static_cast<std::size_t>(r)] += cnt;
                delta += state.weight[b] * (state.column_cv(b) - state.col_cv[b]);
                state.by_bucket[b][static_cast<std::size_t>(r)] -= cnt;
            }
            if (first || delta < best_delta) {  // strict: ties keep the lowest rank
                best_delta = delta;
                best_rank = r;
                first = false;
            }
        }
        for (auto [col, cnt] : shard.bucket_counts) {
            auto b = static_cast<std::size_t>(col);
            state.by_bucket[b][static_cast<std::size_t>(best_rank)] += cnt;
            state.col_cv[b] = state.column_cv(b);
        }
        assignment.shard_to_rank.emplace(shard.shard_id, best_rank);
    }
    return assignment;
}

namespace {

struct SaState {
    ColumnState cols;
    std::vector<ShardStat> shards;      // fixed order: sorted by shard_id
    std::vector<int> rank_of;           // parallel to shards
    int rank_count = 0;

    void apply_move(std::size_t shard, int to_rank) {
        int from = rank_of[shard];
        for (auto [col, cnt] : shards[shard].bucket_counts) {
            auto b = static_cast<std::size_t>(col);
            cols.by_bucket[b][static_cast<std::size_t>(from)] -= cnt;
            cols.by_bucket[b][static_cast<std::size_t>(to_rank)] += cnt;
        }
        rank_of[shard] = to_rank;
    }

    /// Objective change if the moves were applied; leaves the state unchanged.
    double peek_delta(std::span<const std::pair<std::size_t, int>> moves,
                      std::vector<int>& touched) {
        touched.clear();
        std::array<int, 2> saved_ranks{};
        for (std::size_t m = 0; m < moves.size(); ++m) {
            saved_ranks[m] = rank_of[moves[m].first];
            for (auto [col, cnt] : shards[moves[m].first].bucket_counts) touched.push_back(col);
        }
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

        for (auto [shard, to] : moves) apply_move(shard, to);
        double delta = 0.0;
        for (int col : touched) {
            auto b = static_cast<std::size_t>(col);
            delta += cols.weight[b] * (cols.column_cv(b) - cols.col_cv[b]);
        }
        for (std::size_t m = moves.size(); m-- > 0;) {
            apply_move(moves[m].first, saved_ranks[m]);
        }
        return delta;
    }

    void commit(std::span<const std::pair<std::size_t, int>> moves,
                std::span<const int> touched) {
        for (auto [shard, to] : moves) apply_move(shard, to);
        for (int col : touched) {
            auto b = static_cast<std::size_t>(col);
            cols.col_cv[b] = cols.column_cv(b);
        }
    }
};

}  // namespace

SaOutcome sa_refine(const Assignment& initial, const Corpus& corpus, const SaConfig& cfg,
                    const BucketRules& rules) {
    initial.validate();
    if (cfg.t0_probe_swaps < 1)
        throw std::invalid_argument("sa_refine: t0_probe_swaps must be >= 1");
    if (cfg.iterations < 0)
        throw std::invalid_argument("sa_refine: iterations must be >= 0");

    SaOutcome out;
    out.assignment = initial;
    out.initial_objective = objective(initial, corpus, rules);
    out.best_objective = out.initial_objective;

    const bool relocation = cfg.relocation_probability > 0.0;
    if (initial.rank_count < 2) {
        out.notice = "rank_count < 2: no proposal can change the assignment";
        return out;
    }
    if (initial.shard_to_rank.size() < 2 && !relocation) {
        out.notice = "fewer than two shards: no swap proposal exists";
        return out;
    }

    BucketIndex index = BucketIndex::build(corpus, rules);

    SaState state;
    state.rank_count = initial.rank_count;
    state.shards = shard_stats(corpus, index, rules);
    std::sort(state.shards.begin(), state.shards.end(),
              [](const ShardStat& a, const ShardStat& b) { return a.shard_id < b.shard_id; });
    state.cols.by_bucket.assign(
        index.buckets.size(),
        std::vector<std::int64_t>(static_cast<std::size_t>(initial.rank_count), 0));
    state.cols.weight = bucket_weights(index, state.shards);
    state.rank_of.resize(state.shards.size());
    for (std::size_t i = 0; i < state.shards.size(); ++i) {
        auto it = initial.shard_to_rank.find(state.shards[i].shard_id);
        if (it == initial.shard_to_rank.end())
            throw std::invalid_argument("sa_refine: shard '" + state.shards[i].shard_id +
                                        "' missing from the initial assignment");
        state.rank_of[i] = it->second;
        for (auto [col, cnt] : state.shards[i].bucket_counts) {
            state.cols.by_bucket[static_cast<std::size_t>(col)]
                                [static_cast<std::size_t>(it->second)] += cnt;
        }
    }
    state.cols.refresh_all();

    // Swaps preserve per-rank shard counts; only relocations can change
    // which ranks are occupied, so the occupancy tally is updated on
    // committed relocations below.
    std::vector<std::int64_t> shards_on(static_cast<std::size_t>(initial.rank_count), 0);
    for (int r : state.rank_of) ++shards_on[static_cast<std::size_t>(r)];
    int occupied = 0;
    for (std::int64_t c : shards_on) occupied += (c > 0) ? 1 : 0;
    if (occupied < 2 && !relocation) {
        out.notice = "all shards sit on one rank: swap proposals cannot change anything";
        return out;
    }

    Rng rng = make_rng(cfg.seed);
    const std::size_t n_shards = state.shards.size();

    auto propose_swap = [&](std::pair<std::size_t, int>* moves) {
        for (;;) {
            std::size_t i = static_cast<std::size_t>(uniform_below(rng, n_shards));
            std::size_t j = static_cast<std::size_t>(uniform_below(rng, n_shards));
            if (i == j || state.rank_of[i] == state.rank_of[j]) continue;
            moves[0] = {i, state.rank_of[j]};
            moves[1] = {j, state.rank_of[i]};
            return;
        }
    };
    auto propose_relocation = [&](std::pair<std::size_t, int>* moves) {
        std::size_t i = static_cast<std::size_t>(uniform_below(rng, n_shards));
        auto r = static_cast<int>(
            uniform_below(rng, static_cast<std::uint64_t>(state.rank_count - 1)));
        if (r >= state.rank_of[i]) ++r;
        moves[0] = {i, r};
        moves[1] = {i, r};  // second slot unused; keep the span two-wide
    };

    std::vector<int> touched;
    std::pair<std::size_t, int> moves[2];

    auto draw_proposal = [&]() -> std::span<const std::pair<std::size_t, int>> {
        bool can_swap = occupied >= 2 && n_shards >= 2;
        bool use_relocation = relocation && (!can_swap || uniform01(rng) < cfg.relocation_probability);
        if (use_relocation) {
            propose_relocation(moves);
            return {moves, 1};
        }
        propose_swap(moves);
        return {moves, 2};
    };

    // Probe phase: T0 = median |delta| over probe swaps, floored at 1e-12.
    std::vector<double> probe_deltas;
    probe_deltas.reserve(static_cast<std::size_t>(cfg.t0_probe_swaps));
    for (int p = 0; p < cfg.t0_probe_swaps; ++p) {
        auto proposal = draw_proposal();
        probe_deltas.push_back(std::abs(state.peek_delta(proposal, touched)));
    }
    std::nth_element(probe_deltas.begin(), probe_deltas.begin() + probe_deltas.size() / 2,
                     probe_deltas.end());
    double t0 = std::max(probe_deltas[probe_deltas.size() / 2], 1e-12);

    double temperature = t0;
    const double alpha =
        cfg.iterations > 0 ? std::pow(cfg.t_final_ratio, 1.0 / static_cast<double>(cfg.iterations))
                           : 1.0;

    double current = out.initial_objective;
    double best = current;
    std::vector<int> best_ranks = state.rank_of;

    for (std::int64_t it = 0; it < cfg.iterations; ++it) {
        auto proposal = draw_proposal();
        double delta = state.peek_delta(proposal, touched);
        bool accept = delta <= 0.0;
        if (!accept) {
            accept = uniform01(rng) < std::exp(-delta / temperature);
        }
        if (accept) {
            if (proposal.size() == 1) {  // relocation changes occupancy
                auto from = static_cast<std::size_t>(state.rank_of[proposal[0].first]);
                auto to = static_cast<std::size_t>(proposal[0].second);
                if (--shards_on[from] == 0) --occupied;
                if (++shards_on[to] == 1) ++occupied;
            }
            state.commit(proposal, touched);
            current += delta;
            ++out.accepted;
            if (current < best) {
                best = current;
                best_ranks = state.rank_of;
            }
        }
        temperature *= alpha;
    }

    state.cols.refresh_all();
    out.incremental_drift = std::abs(current - state.cols.objective_value());

    Assignment refined;
    refined.rank_count = initial.rank_count;
    for (std::size_t i = 0; i < state.shards.size(); ++i) {
        refined.shard_to_rank.emplace(state.shards[i].shard_id, best_ranks[i]);
    }
    out.assignment = std::move(refined);
    out.best_objective = objective(out.assignment, corpus, rules);
    // Never return something worse than the starting point.
    if (out.best_objective > out.initial_objective) {
        out.assignment = initial;
        out.best_objective = out.initial_objective;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plan files
// ---------------------------------------------------------------------------

std::vector<PlanFile> build_plan(const Assignment& assignment, const Corpus& corpus,
                                 std::uint64_t epoch_seed, const BucketRules& rules) {
    assignment.validate();

    std::unordered_map<std::string_view, const ShardManifest*> shard_by_id;
    for (const ShardManifest& s : corpus.shards) shard_by_id.emplace(s.shard_id, &s);
    std::unordered_map<std::string_view, const ClipRecord*> record_by_id;
    record_by_id.reserve(corpus.records.size());
    for (const ClipRecord& r : corpus.records) record_by_id.emplace(r.clip_id, &r);

    std::vector<std::vector<std::string>> rank_shards(
        static_cast<std::size_t>(assignment.rank_count));
    for (const ShardManifest& s : corpus.shards) {
        auto it = assignment.shard_to_rank.find(s.shard_id);
        if (it == assignment.shard_to_rank.end())
            throw std::invalid_argument("build_plan: shard '" + s.shard_id +
                                        "' is not mapped to any rank");
        rank_shards[static_cast<std::size_t>(it->second)].push_back(s.shard_id);
    }

    std::vector<PlanFile> plans;
    plans.reserve(rank_shards.size());
    for (int rank = 0; rank < assignment.rank_count; ++rank) {
        PlanFile plan;
        plan.rank = rank;
        plan.epoch_seed = epoch_seed;

        auto& shards = rank_shards[static_cast<std::size_t>(rank)];
        std::sort(shards.begin(), shards.end());
        Rng rng = make_rng(derive_seed(epoch_seed, "plan.shard_order",
                                       static_cast<std::uint64_t>(rank)));
        shuffle_in_place(shards, rng);

        for (const std::string& shard_id : shards) {
            const ShardManifest* shard = shard_by_id.at(shard_id);
            for (const std::string& clip_id : shard->clip_ids) {
                const ClipRecord* r = record_by_id.at(clip_id);
                plan.entries.push_back({shard_id, clip_id, bucket_of(*r, rules)});
            }
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

void write_plan_file(const PlanFile& plan, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "MVPLAN v" << plan.format_version << " rank=" << plan.rank
        << " seed=" << plan.epoch_seed << " entries=" << plan.entries.size() << "\n";
    for (const PlanEntry& e : plan.entries) {
        out << e.shard_id << '\t' << e.clip_id << '\t' << e.bucket.frame_bucket << '\t'
            << e.bucket.resolution_bucket << '\n';
    }
    try {
        write_file(path, out.str());
    } catch (const std::exception& ex) {
        throw std::runtime_error(std::string("plan write failed: ") + ex.what());
    }
}

PlanFile read_plan_file(const std::filesystem::path& path) {
    std::string text = read_file(path);
    PlanFile plan;

    std::size_t pos = text.find('\n');
    if (pos == std::string::npos)
        throw std::runtime_error(path.string() + ": missing plan header");
    std::string header = text.substr(0, pos);

    std::istringstream hs(header);
    std::string magic, version, rank_kv, seed_kv, entries_kv;
    hs >> magic >> version >> rank_kv >> seed_kv >> entries_kv;
    if (magic != "MVPLAN" || version.size() < 2 || version[0] != 'v' ||
        rank_kv.rfind("rank=", 0) != 0 || seed_kv.rfind("seed=", 0) != 0 ||
        entries_kv.rfind("entries=", 0) != 0)
        throw std::runtime_error(path.string() + ": malformed plan header '" + header + "'");
    auto v = parse_int(std::string_view(version).substr(1));
    if (!v) throw std::runtime_error(path.string() + ": malformed plan version");
    plan.format_version = static_cast<int>(*v);
    auto rank = parse_int(std::string_view(rank_kv).substr(5));
    if (!rank || *rank < 0) throw std::runtime_error(path.string() + ": bad rank field");
    plan.rank = static_cast<int>(*rank);
    {
        std::string_view s = std::string_view(seed_kv).substr(5);
        std::uint64_t seed = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw std::runtime_error(path.string() + ": bad seed field");
        plan.epoch_seed = seed;
    }
    auto expected = parse_int(std::string_view(entries_kv).substr(8));
    if (!expected || *expected < 0)
        throw std::runtime_error(path.string() + ": bad entries field");

    std::unordered_map<std::string, bool> shard_closed;
    std::string last_shard;

    std::size_t start = pos + 1;
    std::size_t line_no = 1;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;

        PlanEntry entry;
        std::size_t t1 = line.find('\t');
        std::size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
        std::size_t t3 = t2 == std::string_view::npos ? t2 : line.find('\t', t2 + 1);
        if (t3 == std::string_view::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected 4 tab-separated fields");
        entry.shard_id = std::string(line.substr(0, t1));
        entry.clip_id = std::string(line.substr(t1 + 1, t2 - t1 - 1));
        auto fb = parse_int(line.substr(t2 + 1, t3 - t2 - 1));
        if (!fb) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                          ": bad frame bucket");
        entry.bucket.frame_bucket = static_cast<int>(*fb);
        entry.bucket.resolution_bucket = std::string(line.substr(t3 + 1));

        if (entry.shard_id != last_shard) {
            auto [it, inserted] = shard_closed.emplace(entry.shard_id, false);
            if (!inserted)
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": shard '" + entry.shard_id +
                                         "' reappears non-contiguously");
            last_shard = entry.shard_id;
        }
        plan.entries.push_back(std::move(entry));
    }

    if (static_cast<std::int64_t>(plan.entries.size()) != *expected)
        throw std::runtime_error(path.string() + ": header promises " +
                                 std::to_string(*expected) + " entries but file carries " +
                                 std::to_string(plan.entries.size()));
    return plan;
}

// ---------------------------------------------------------------------------
// Seeded sampler streams
// ---------------------------------------------------------------------------

std::vector<std::size_t> rolling_shuffle_order(std::size_t n, std::uint64_t seed,
                                               std::size_t window) {
    if (window < 1) throw std::invalid_argument("rolling_shuffle: window must be >= 1");
    std::vector<std::size_t> out;
    out.reserve(n);
    std::vector<std::size_t> buffer;
    buffer.reserve(std::min(n, window));

    Rng rng = make_rng(seed);
    std::size_t next = 0;
    while (next < n && buffer.size() < window) buffer.push_back(next++);
    while (next < n) {
        std::size_t slot = static_cast<std::size_t>(uniform_below(rng, buffer.size()));
        out.push_back(buffer[slot]);
        buffer[slot] = next++;
    }
    while (!buffer.empty()) {
        std::size_t slot = static_cast<std::size_t>(uniform_below(rng, buffer.size()));
        out.push_back(buffer[slot]);
        buffer[slot] = buffer.back();
        buffer.pop_back();
    }
    return out;
}

std::vector<std::string> interleave_schedule(
    const std::map<std::string, std::int64_t>& step_counts) {
    std::int64_t total = 0;
    for (const auto& [name, count] : step_counts) {
        if (count < 0)
            throw std::invalid_argument("interleave_schedule: negative count for '" + name + "'");
        total += count;
    }
    if (total == 0) throw std::invalid_argument("interleave_schedule: all step counts are zero");

    struct Class {
        const std::string* name;
        std::int64_t total;
        std::int64_t emitted = 0;
    };
    std::vector<Class> classes;
    for (const auto& [name, count] : step_counts) {
        if (count > 0) classes.push_back({&name, count, 0});
    }

    // Midpoint scheduling: class c fires at times (k + 0.5)/total_c. Compare
    // (2e+1)/(2t) fractions in exact integer arithmetic.
    std::vector<std::string> schedule;
    schedule.reserve(static_cast<std::size_t>(total));
    for (std::int64_t step = 0; step < total; ++step) {
        Class* best = nullptr;
        for (Class& c : classes) {
            if (c.emitted == c.total) continue;
            if (!best) {
                best = &c;
                continue;
            }
            std::int64_t lhs = (2 * c.emitted + 1) * best->total;
            std::int64_t rhs = (2 * best->emitted + 1) * c.total;
            if (lhs < rhs || (lhs == rhs && *c.name < *best->name)) best = &c;
        }
        schedule.push_back(*best->name);
        ++best->emitted;
    }
    return schedule;
}

std::string_view to_string(CaptionVariant v) {
    switch (v) {
        case CaptionVariant::Long: return "long";
        case CaptionVariant::Short: return "short";
        case CaptionVariant::Truncated: return "truncated";
    }
    return "?";
}

void CaptionProbs::validate() const {
    if (p_long < 0 || p_short < 0 || p_truncated < 0)
        throw std::invalid_argument("caption probabilities must be nonnegative");
    double sum = p_long + p_short + p_truncated;
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("caption probabilities must sum to 1");
}

std::vector<CaptionVariant> caption_variant_stream(std::uint64_t seed, std::size_t n,
                                                   const CaptionProbs& probs) {
    probs.validate();
    std::vector<CaptionVariant> stream;
    stream.reserve(n);
    Rng rng = make_rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        double u = uniform01(rng);
        if (u < probs.p_long) {
            stream.push_back(CaptionVariant::Long);
        } else if (u < probs.p_long + probs.p_short) {
            stream.push_back(CaptionVariant::Short);
        } else {
            stream.push_back(CaptionVariant::Truncated);
        }
    }
    return stream;
}

std::string_view to_string(BatchType t) { return t == BatchType::T2V ? "T2V" : "I2V"; }

std::vector<BatchType> batch_type_stream(std::uint64_t seed, double p_i2v, std::size_t n) {
    if (p_i2v < 0.0 || p_i2v > 1.0)
        throw std::invalid_argument("batch_type_stream: p_i2v must lie in [0, 1]");
    std::vector<BatchType> stream;
    stream.reserve(n);
    Rng rng = make_rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        stream.push_back(uniform01(rng) < p_i2v ? BatchType::I2V : BatchType::T2V);
    }
    return stream;
}

}  // namespace shardplan
