#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "shardplan/corpus.hpp"
#include "shardplan/rng.hpp"

namespace shardplan {

/// The shard-to-rank map produced by the planner.
struct Assignment {
    int rank_count = 1;
    std::map<std::string, int> shard_to_rank;

    void validate() const;  // throws std::invalid_argument
};

/// Stable bucket -> column numbering for one corpus.
struct BucketIndex {
    std::vector<BucketKey> buckets;  // sorted
    std::map<BucketKey, int> column;

    static BucketIndex build(const Corpus& corpus, const BucketRules& rules);
    int col(const BucketKey& key) const;  // -1 when unknown
};

/// n[r][b]: clips of bucket b assigned to rank r.
struct CountMatrix {
    BucketIndex index;
    std::vector<std::vector<std::int64_t>> n;  // [rank][bucket]

    int ranks() const { return static_cast<int>(n.size()); }
    int bucket_count() const { return static_cast<int>(index.buckets.size()); }
    std::vector<std::int64_t> bucket_totals() const;
    std::int64_t total() const;
};

CountMatrix count_matrix(const Assignment& assignment, const Corpus& corpus,
                         const BucketRules& rules);

/// Population coefficient of variation; 0.0 for an all-zero (or empty) row.
double cv(std::span<const std::int64_t> counts);

/// Per-bucket CVs of the cross-rank count columns.
std::vector<double> per_bucket_cv(const CountMatrix& counts);

/// Clip-count-weighted sum of per-bucket CVs: sum_b w_b * cv(n[.][b]) with
/// w_b = bucket share of total clips. 0.0 for an empty corpus.
double objective(const CountMatrix& counts);
double objective(const Assignment& assignment, const Corpus& corpus,
                 const BucketRules& rules);

/// LPT-style initializer: shards in descending clip-count order (ties by
/// shard_id), each placed on the rank that minimizes the running objective
/// (ties to the lowest rank).
Assignment greedy_assign(const Corpus& corpus, int rank_count,
                         const BucketRules& rules);

struct SaConfig {
    std::int64_t iterations = 30000;
    std::uint64_t seed = 0;
    int t0_probe_swaps = 100;
    /// T_final = t_final_ratio * T0 under geometric cooling.
    double t_final_ratio = 1e-3;
    /// Probability of proposing a single-shard relocation instead of a swap.
    /// 0 keeps the swap-only proposal scheme.
    double relocation_probability = 0.0;
};

struct SaOutcome {
    Assignment assignment;
    double initial_objective = 0.0;
    double best_objective = 0.0;
    std::int64_t accepted = 0;
    /// |incrementally tracked objective - full recomputation| at loop exit;
    /// sanity metric for the delta bookkeeping.
    double incremental_drift = 0.0;
    std::string notice;  // set when no refinement was possible
};

/// Simulated-annealing refinement of an assignment under the CV objective.
/// Proposals swap the ranks of two shards currently on distinct ranks; the
/// initial temperature is the median |delta| over probe swaps (floored at
/// 1e-12). Returns the best assignment seen; bit-deterministic per seed.
SaOutcome sa_refine(const Assignment& initial, const Corpus& corpus,
                    const SaConfig& cfg, const BucketRules& rules);

// ---------------------------------------------------------------------------
// Plan files
// ---------------------------------------------------------------------------

struct PlanEntry {
    std::string shard_id;
    std::string clip_id;
    BucketKey bucket;
};

/// Per-rank ordered sample schedule. Entries stay contiguous per shard so a
/// reader can stream each archive start to finish.
struct PlanFile {
    int rank = 0;
    std::uint64_t epoch_seed = 0;
    int format_version = 1;
    std::vector<PlanEntry> entries;
};

/// One plan per rank: that rank's shards in a seeded permutation, clips in
/// archive order within each shard.
std::vector<PlanFile> build_plan(const Assignment& assignment, const Corpus& corpus,
                                 std::uint64_t epoch_seed, const BucketRules& rules);

/// Text format, bit-exact for fixed inputs:
///   MVPLAN v1 rank=<r> seed=<epoch_seed> entries=<n>
///   shard_id<TAB>clip_id<TAB>frame_bucket<TAB>resolution_bucket
void write_plan_file(const PlanFile& plan, const std::filesystem::path& path);
PlanFile read_plan_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Seeded sampler streams
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDefaultShuffleWindow = 4096;

/// Bounded-window shuffle: a window-sized buffer is filled from the input;
/// each step emits a uniformly random slot and refills it, then the buffer
/// drains in random order. No element moves forward more than window slots.
std::vector<std::size_t> rolling_shuffle_order(std::size_t n, std::uint64_t seed,
                                               std::size_t window = kDefaultShuffleWindow);

template <typename T>
std::vector<T> rolling_shuffle(const std::vector<T>& input, std::uint64_t seed,
                               std::size_t window = kDefaultShuffleWindow) {
    std::vector<std::size_t> order = rolling_shuffle_order(input.size(), seed, window);
    std::vector<T> out;
    out.reserve(input.size());
    for (std::size_t i : order) out.push_back(input[i]);
    return out;
}

/// Deterministic maximally even merge of per-class step counts (midpoint
/// scheduling: next class = argmin (emitted + 0.5)/total, ties by name).
/// Emitted counts equal the inputs exactly.
std::vector<std::string> interleave_schedule(
    const std::map<std::string, std::int64_t>& step_counts);

enum class CaptionVariant { Long, Short, Truncated };
std::string_view to_string(CaptionVariant v);

struct CaptionProbs {
    double p_long = 0.5;
    double p_short = 0.3;
    double p_truncated = 0.2;

    void validate() const;
};

std::vector<CaptionVariant> caption_variant_stream(std::uint64_t seed, std::size_t n,
                                                   const CaptionProbs& probs = {});

enum class BatchType { T2V, I2V };
std::string_view to_string(BatchType t);

inline constexpr double kDefaultI2vProbability = 0.3;

/// Seeded Bernoulli stream deciding each step's batch type. Equal
/// (seed, p, n) always produce identical sequences; that determinism is the
/// cross-rank synchronization contract.
std::vector<BatchType> batch_type_stream(std::uint64_t seed, double p_i2v,
                                         std::size_t n);
inline std::vector<BatchType> batch_type_stream(std::uint64_t seed, std::size_t n) {
    return batch_type_stream(seed, kDefaultI2vProbability, n);
}

}  // namespace shardplan
