#include <benchmark/benchmark.h>

#include "shardplan/dedup.hpp"
#include "shardplan/planner.hpp"
#include "shardplan/rng.hpp"
#include "shardplan/synthetic.hpp"

using namespace shardplan;

namespace {

GeneratedCorpus bench_corpus(int shards, int embedding_dim = 0) {
    GeneratorSpec spec = GeneratorSpec::small_default();
    spec.shard_count = shards;
    spec.embedding_dim = embedding_dim;
    spec.duplicate_rate = embedding_dim > 0 ? 0.05 : 0.0;
    spec.tag_rates = {};
    spec.short_clip_rate = 0.0;
    spec.missing_score_rate = 0.0;
    return generate_synthetic_corpus(spec, 12345);
}

void BM_PairScan(benchmark::State& state) {
    GeneratedCorpus generated = bench_corpus(static_cast<int>(state.range(0)), 64);
    for (auto _ : state) {
        PairScan scan = find_duplicate_pairs(generated.corpus, 0.9);
        benchmark::DoNotOptimize(scan.pairs.data());
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(generated.corpus.records.size()));
}
BENCHMARK(BM_PairScan)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_GreedyAssign(benchmark::State& state) {
    GeneratedCorpus generated = bench_corpus(static_cast<int>(state.range(0)));
    BucketRules rules;
    for (auto _ : state) {
        Assignment a = greedy_assign(generated.corpus, 64, rules);
        benchmark::DoNotOptimize(a.shard_to_rank.size());
    }
}
BENCHMARK(BM_GreedyAssign)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SaRefine(benchmark::State& state) {
    GeneratedCorpus generated = bench_corpus(256);
    BucketRules rules;
    Assignment greedy = greedy_assign(generated.corpus, 64, rules);
    SaConfig cfg;
    cfg.iterations = state.range(0);
    cfg.seed = 5;
    for (auto _ : state) {
        SaOutcome out = sa_refine(greedy, generated.corpus, cfg, rules);
        benchmark::DoNotOptimize(out.best_objective);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SaRefine)->Arg(10000)->Arg(30000)->Unit(benchmark::kMillisecond);

void BM_RollingShuffle(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto order = rolling_shuffle_order(n, 99);
        benchmark::DoNotOptimize(order.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RollingShuffle)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
