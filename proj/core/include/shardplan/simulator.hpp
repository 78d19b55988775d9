#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shardplan/corpus.hpp"
#include "shardplan/planner.hpp"

namespace shardplan {

struct SimConfig {
    int rank_count = 1;
    int default_batch = 1;
    std::map<BucketKey, int> batch_size;  // per-bucket override of default_batch
    int buffer_capacity = 256;            // order-sensitive reorder window
    std::vector<std::uint64_t> seeds;     // Monte Carlo seeds (baseline mode)

    int batch_for(const BucketKey& key) const;
};

struct Locality {
    double sequential_fraction = 0.0;
    double seek_count = 0.0;
};

struct PerSeedStats {
    std::uint64_t seed = 0;
    double utilization = 0.0;
    std::int64_t total_steps = 0;
    std::int64_t consumed = 0;
    std::int64_t wasted = 0;
    Locality locality;
};

struct SimReport {
    std::string mode;
    std::map<BucketKey, std::int64_t> steps_per_bucket;  // first seed in MC mode
    double total_steps = 0.0;       // mean over seeds in MC mode
    double utilization = 0.0;       // consumed / available (mean over seeds)
    double utilization_std = 0.0;   // population std over seeds (0 if single run)
    double consumed = 0.0;
    std::int64_t available = 0;
    double wasted_samples = 0.0;
    Locality locality;
    std::vector<PerSeedStats> per_seed;
    std::string notice;
};

/// Eq.-style count bound: steps_b = min over ranks of floor(n[r][b] / B_b).
std::map<BucketKey, std::int64_t> steps_count_bound(const CountMatrix& counts,
                                                    const SimConfig& cfg);

/// (sum_b W * B_b * steps_b) / total clips; defined as 1.0 on an empty corpus.
double utilization_count_bound(const CountMatrix& counts, const SimConfig& cfg);

/// Global shuffle + round-robin rank assignment, then the order-sensitive
/// stream run, per seed. Locality is near zero by construction.
SimReport simulate_baseline(const Corpus& corpus, const SimConfig& cfg,
                            const BucketRules& rules);

/// Order-sensitive run over per-rank plan streams: a global interleaved step
/// schedule built from the count bound; each step every rank supplies B_b
/// samples of the scheduled bucket, buffering mismatches up to
/// buffer_capacity and discarding overflow. Plan-order reads are fully
/// sequential, so sequential_fraction is 1.0.
SimReport simulate_planned(const std::vector<PlanFile>& plans, const SimConfig& cfg);

/// Convenience: build the plan in memory from an assignment, then simulate.
SimReport simulate_planned(const Assignment& assignment, const Corpus& corpus,
                           std::uint64_t epoch_seed, const SimConfig& cfg,
                           const BucketRules& rules);

}  // namespace shardplan
