#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "shardplan/corpus.hpp"

namespace shardplan {

/// Parameters for the deterministic synthetic-corpus generator. The emitted
/// manifest stands in for a production clip collection at desk scale; the
/// accompanying tally file doubles as a test oracle.
struct GeneratorSpec {
    int shard_count = 40;
    int clips_per_shard_min = 20;
    int clips_per_shard_max = 40;

    /// Joint bucket mixture. Keys are frame buckets / tier names of `rules`.
    std::map<int, double> frame_bucket_mix{{1, 0.25}, {33, 0.25}, {65, 0.25}, {121, 0.25}};
    std::map<std::string, double> resolution_mix{
        {"144p", 0.25}, {"360p", 0.25}, {"480p", 0.25}, {"720p", 0.25}};

    /// Probability that a clip repeats its shard's dominant bucket instead of
    /// drawing fresh from the mixture; high values skew shard composition.
    double shard_purity = 0.0;

    double synthetic_fraction = 0.2;  // image_synthetic / video_synthetic share
    std::vector<double> fps_choices{24.0, 30.0};
    double short_clip_rate = 0.0;     // deliberate sub-2s clips (33f bucket)
    double missing_score_rate = 0.0;

    std::map<std::string, double> tag_rates{
        {"watermark", 0.0}, {"nsfw", 0.0}, {"padded", 0.0},
        {"multi_scene", 0.0}, {"timelapse", 0.0}};
    std::map<std::string, double> quality_mix{{"low", 0.15}, {"mid", 0.5}, {"high", 0.35}};
    double action_dynamic_rate = 0.6;

    int embedding_dim = 0;        // 0 disables embeddings
    double duplicate_rate = 0.0;  // fraction of clips emitted as near-copies

    std::vector<std::string> styles{"cinematic", "documentary", "animation", "vlog"};
    std::vector<std::string> subjects{"people", "animals", "transportation",
                                      "sports", "nature", "food"};

    BucketRules rules;

    void validate() const;

    /// Small all-purpose corpus: 500 clips, light tags, embeddings on.
    static GeneratorSpec small_default();
    /// Skewed 64-rank planning corpus: 4 frame buckets x 3 tiers, bucket-pure
    /// shards, no tags or embeddings.
    static GeneratorSpec heterogeneous_64rank();
};

/// Per-branch / per-bucket / per-tag counts of the emitted manifest.
struct GeneratorTally {
    std::map<std::string, std::int64_t> branch_counts;
    std::map<std::string, std::int64_t> bucket_counts;  // BucketKey::str()
    std::map<std::string, std::int64_t> tag_counts;
    std::int64_t short_clips = 0;
    std::int64_t duplicates_planted = 0;
    std::int64_t total = 0;
};

struct GeneratedCorpus {
    Corpus corpus;
    GeneratorTally tally;
};

/// Deterministic per (spec, seed).
GeneratedCorpus generate_synthetic_corpus(const GeneratorSpec& spec, std::uint64_t seed);

GeneratorSpec parse_generator_spec(const std::string& json_text);
std::string generator_spec_to_json(const GeneratorSpec& spec);
std::string tally_to_json(const GeneratorTally& tally);

}  // namespace shardplan
