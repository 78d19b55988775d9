#include "shardplan/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "shardplan/io_util.hpp"
#include "shardplan/rng.hpp"

namespace shardplan {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

template <typename K>
K draw_from_mix(Rng& rng, const std::map<K, double>& mix) {
    double u = uniform01(rng);
    double acc = 0.0;
    const K* last = nullptr;
    for (const auto& [key, p] : mix) {
        acc += p;
        last = &key;
        if (u < acc) return key;
    }
    return *last;  // guard against rounding at the top of the CDF
}

template <typename K>
void check_mix(const std::map<K, double>& mix, const char* what) {
    if (mix.empty()) throw std::invalid_argument(std::string("generator: empty ") + what);
    double sum = 0.0;
    for (const auto& [key, p] : mix) {
        if (p < 0) throw std::invalid_argument(std::string("generator: negative weight in ") + what);
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument(std::string("generator: ") + what + " must sum to 1");
}

}  // namespace

void GeneratorSpec::validate() const {
    if (shard_count < 1) throw std::invalid_argument("generator: shard_count must be >= 1");
    if (clips_per_shard_min < 1 || clips_per_shard_max < clips_per_shard_min)
        throw std::invalid_argument("generator: bad clips_per_shard range");
    check_mix(frame_bucket_mix, "frame_bucket_mix");
    check_mix(resolution_mix, "resolution_mix");
    check_mix(quality_mix, "quality_mix");
    rules.validate();
    for (const auto& [f, p] : frame_bucket_mix) {
        if (std::find(rules.frame_buckets.begin(), rules.frame_buckets.end(), f) ==
            rules.frame_buckets.end())
            throw std::invalid_argument("generator: frame bucket " + std::to_string(f) +
                                        " not in bucket rules");
    }
    for (const auto& [tier, p] : resolution_mix) {
        if (rules.tier_index(tier) < 0)
            throw std::invalid_argument("generator: tier '" + tier + "' not in bucket rules");
    }
    if (fps_choices.empty()) throw std::invalid_argument("generator: fps_choices empty");
    if (embedding_dim < 0) throw std::invalid_argument("generator: embedding_dim < 0");
    if (shard_purity < 0 || shard_purity > 1 || duplicate_rate < 0 || duplicate_rate > 1 ||
        short_clip_rate < 0 || short_clip_rate > 1 || missing_score_rate < 0 ||
        missing_score_rate > 1 || synthetic_fraction < 0 || synthetic_fraction > 1 ||
        action_dynamic_rate < 0 || action_dynamic_rate > 1)
        throw std::invalid_argument("generator: rates must lie in [0, 1]");
}

GeneratorSpec GeneratorSpec::small_default() {
    GeneratorSpec spec;
    spec.shard_count = 20;
    spec.clips_per_shard_min = 20;
    spec.clips_per_shard_max = 30;
    spec.tag_rates = {{"watermark", 0.04}, {"nsfw", 0.02}, {"padded", 0.03},
                      {"multi_scene", 0.03}, {"timelapse", 0.02}};
    spec.short_clip_rate = 0.03;
    spec.missing_score_rate = 0.02;
    spec.embedding_dim = 16;
    spec.duplicate_rate = 0.04;
    spec.shard_purity = 0.5;
    return spec;
}

GeneratorSpec GeneratorSpec::heterogeneous_64rank() {
    // Sized for 64-rank planning runs: ~29k clips in small bucket-pure
    // shards. Every joint bucket owns several dominant shards per rank, so
    // near-balanced assignments exist at shard granularity, while per-rank
    // bucket counts stay small enough that a random clip split starves the
    // slowest rank noticeably.
    GeneratorSpec spec;
    spec.shard_count = 3200;
    spec.clips_per_shard_min = 6;
    spec.clips_per_shard_max = 12;
    spec.frame_bucket_mix = {{1, 0.30}, {33, 0.27}, {65, 0.23}, {121, 0.20}};
    spec.resolution_mix = {{"144p", 0.37}, {"360p", 0.33}, {"480p", 0.30}};
    spec.shard_purity = 0.9;
    spec.rules.tiers = {{"144p", 144}, {"360p", 360}, {"480p", 480}};
    return spec;
}

GeneratedCorpus generate_synthetic_corpus(const GeneratorSpec& spec, std::uint64_t seed) {
    spec.validate();

    Rng rng = make_rng(derive_seed(seed, "generator"));
    GeneratedCorpus out;
    GeneratorTally& tally = out.tally;

    std::vector<std::vector<double>> embeddings;  // base vectors for duplicates

    int clip_serial = 0;
    for (int s = 0; s < spec.shard_count; ++s) {
        std::string shard_id = "shard-" + std::to_string(s);
        std::int64_t clips =
            spec.clips_per_shard_min +
            static_cast<std::int64_t>(uniform_below(
                rng, static_cast<std::uint64_t>(spec.clips_per_shard_max -
                                                spec.clips_per_shard_min + 1)));

        // Dominant bucket pair: shards lean toward one joint bucket when
        // shard_purity is high, mimicking per-source archive packing.
        int dominant_frames = draw_from_mix(rng, spec.frame_bucket_mix);
        std::string dominant_tier = draw_from_mix(rng, spec.resolution_mix);

        for (std::int64_t c = 0; c < clips; ++c) {
            ClipRecord r;
            r.clip_id = "clip-" + std::to_string(clip_serial++);
            r.shard_id = shard_id;

            int frame_bucket;
            std::string tier;
            if (uniform01(rng) < spec.shard_purity) {
                frame_bucket = dominant_frames;
                tier = dominant_tier;
            } else {
                frame_bucket = draw_from_mix(rng, spec.frame_bucket_mix);
                tier = draw_from_mix(rng, spec.resolution_mix);
            }

            bool synthetic = uniform01(rng) < spec.synthetic_fraction;
            bool image = frame_bucket == 1;
            r.branch = image ? (synthetic ? Branch::ImageSynthetic : Branch::ImageReal)
                             : (synthetic ? Branch::VideoSynthetic : Branch::VideoReal);

            // Geometry: min dimension inside the tier band, landscape-ish.
            int tier_idx = spec.rules.tier_index(tier);
            int lo = spec.rules.tiers[static_cast<std::size_t>(tier_idx)].min_dim;
            int hi = tier_idx + 1 < static_cast<int>(spec.rules.tiers.size())
                         ? spec.rules.tiers[static_cast<std::size_t>(tier_idx) + 1].min_dim - 1
                         : lo + lo / 2;
            int min_dim = lo + static_cast<int>(uniform_below(
                                   rng, static_cast<std::uint64_t>(hi - lo + 1)));
            double aspect = 1.0 + uniform01(rng) * 0.8;  // [1, 1.8)
            r.height = min_dim;
            r.width = static_cast<int>(std::lround(min_dim * aspect));
            if (uniform01(rng) < 0.2) std::swap(r.width, r.height);  // occasional portrait

            if (image) {
                r.frames = 1;
                r.fps = 0.0;
                r.duration_s = 0.0;
            } else {
                r.fps = spec.fps_choices[uniform_below(rng, spec.fps_choices.size())];
                int next = INT32_MAX;
                for (int f : spec.rules.frame_buckets) {
                    if (f > frame_bucket) {
                        next = f;
                        break;
                    }
                }
                std::int64_t frames_lo = frame_bucket;
                std::int64_t frames_hi =
                    next == INT32_MAX ? frame_bucket + frame_bucket / 2 : next - 1;
                // keep duration over the 2 s sanitation floor unless this
                // clip is deliberately short
                std::int64_t min_frames_2s =
                    static_cast<std::int64_t>(std::ceil(2.0 * r.fps));
                bool short_clip =
                    frame_bucket == spec.rules.smallest_video_bucket() &&
                    min_frames_2s > frames_lo && uniform01(rng) < spec.short_clip_rate;
                if (short_clip) {
                    frames_hi = std::min(frames_hi, min_frames_2s - 1);
                    ++tally.short_clips;
                } else {
                    frames_lo = std::min(std::max(frames_lo, min_frames_2s), frames_hi);
                }
                r.frames = frames_lo + static_cast<std::int64_t>(uniform_below(
                                           rng, static_cast<std::uint64_t>(
                                                    frames_hi - frames_lo + 1)));
                r.duration_s = static_cast<double>(r.frames) / r.fps;
            }

            double px = static_cast<double>(r.width) * static_cast<double>(r.height);
            double frames_factor = image ? 1.0 : static_cast<double>(r.frames) * 0.04;
            r.filesize_bytes = std::max<std::int64_t>(
                1, static_cast<std::int64_t>(px * (0.05 + uniform01(rng) * 0.3) *
                                             std::max(1.0, frames_factor)));

            auto maybe_score = [&](double lo_v, double hi_v) -> std::optional<double> {
                if (uniform01(rng) < spec.missing_score_rate) return std::nullopt;
                return lo_v + uniform01(rng) * (hi_v - lo_v);
            };
            r.scores.aesthetic = maybe_score(2.0, 8.5);
            r.scores.luminance = maybe_score(5.0, 250.0);
            r.scores.motion = image ? std::nullopt : maybe_score(0.0, 1.0);
            r.scores.suitability = maybe_score(0.05, 0.98);
            r.scores.technical = maybe_score(0.05, 0.98);

            auto tag_rate = [&](const char* name) {
                auto it = spec.tag_rates.find(name);
                return it == spec.tag_rates.end() ? 0.0 : it->second;
            };
            r.tags.watermark = uniform01(rng) < tag_rate("watermark");
            r.tags.nsfw = uniform01(rng) < tag_rate("nsfw");
            r.tags.padded = uniform01(rng) < tag_rate("padded");
            r.tags.multi_scene = uniform01(rng) < tag_rate("multi_scene");
            r.tags.timelapse = uniform01(rng) < tag_rate("timelapse");
            std::string quality = draw_from_mix(rng, spec.quality_mix);
            r.tags.quality = *quality_from_string(quality);
            r.tags.action =
                uniform01(rng) < spec.action_dynamic_rate ? Action::Dynamic : Action::Static;
            r.tags.style = spec.styles[uniform_below(rng, spec.styles.size())];
            r.tags.subject = spec.subjects[uniform_below(rng, spec.subjects.size())];

            if (spec.embedding_dim > 0) {
                std::vector<double> e(static_cast<std::size_t>(spec.embedding_dim));
                bool duplicate = !embeddings.empty() && uniform01(rng) < spec.duplicate_rate;
                if (duplicate) {
                    // near-copy of an earlier descriptor: cosine lands well
                    // above the 0.9 pairing threshold
                    const std::vector<double>& base =
                        embeddings[uniform_below(rng, embeddings.size())];
                    for (std::size_t i = 0; i < e.size(); ++i)
                        e[i] = base[i] + (uniform01(rng) - 0.5) * 0.02;
                    ++tally.duplicates_planted;
                } else {
                    for (double& v : e) v = uniform01(rng) * 2.0 - 1.0;
                }
                double norm = 0.0;
                for (double v : e) norm += v * v;
                norm = std::sqrt(norm);
                if (norm == 0.0) {
                    e[0] = 1.0;
                } else {
                    for (double& v : e) v /= norm;
                }
                if (!duplicate) embeddings.push_back(e);
                r.embedding = std::move(e);
            }

            ++tally.branch_counts[std::string(to_string(r.branch))];
            ++tally.bucket_counts[bucket_of(r, spec.rules).str()];
            if (r.tags.watermark) ++tally.tag_counts["watermark"];
            if (r.tags.nsfw) ++tally.tag_counts["nsfw"];
            if (r.tags.padded) ++tally.tag_counts["padded"];
            if (r.tags.multi_scene) ++tally.tag_counts["multi_scene"];
            if (r.tags.timelapse) ++tally.tag_counts["timelapse"];
            ++tally.total;

            out.corpus.records.push_back(std::move(r));
        }
    }

    out.corpus.shards = shards_from_records(out.corpus.records);
    out.corpus.provenance.source_path = "synthetic";
    out.corpus.provenance.record_count = out.corpus.records.size();
    out.corpus.rebuild_index();
    return out;
}

GeneratorSpec parse_generator_spec(const std::string& json_text) {
    json j = json::parse(json_text);
    GeneratorSpec spec;
    spec.shard_count = j.value("shard_count", spec.shard_count);
    spec.clips_per_shard_min = j.value("clips_per_shard_min", spec.clips_per_shard_min);
    spec.clips_per_shard_max = j.value("clips_per_shard_max", spec.clips_per_shard_max);
    if (j.contains("frame_bucket_mix")) {
        spec.frame_bucket_mix.clear();
        for (auto& [key, value] : j.at("frame_bucket_mix").items())
            spec.frame_bucket_mix[std::stoi(key)] = value.get<double>();
    }
    if (j.contains("resolution_mix")) {
        spec.resolution_mix.clear();
        for (auto& [key, value] : j.at("resolution_mix").items())
            spec.resolution_mix[key] = value.get<double>();
    }
    spec.shard_purity = j.value("shard_purity", spec.shard_purity);
    spec.synthetic_fraction = j.value("synthetic_fraction", spec.synthetic_fraction);
    if (j.contains("fps_choices"))
        spec.fps_choices = j.at("fps_choices").get<std::vector<double>>();
    spec.short_clip_rate = j.value("short_clip_rate", spec.short_clip_rate);
    spec.missing_score_rate = j.value("missing_score_rate", spec.missing_score_rate);
    if (j.contains("tag_rates")) {
        spec.tag_rates.clear();
        for (auto& [key, value] : j.at("tag_rates").items())
            spec.tag_rates[key] = value.get<double>();
    }
    if (j.contains("quality_mix")) {
        spec.quality_mix.clear();
        for (auto& [key, value] : j.at("quality_mix").items())
            spec.quality_mix[key] = value.get<double>();
    }
    spec.action_dynamic_rate = j.value("action_dynamic_rate", spec.action_dynamic_rate);
    spec.embedding_dim = j.value("embedding_dim", spec.embedding_dim);
    spec.duplicate_rate = j.value("duplicate_rate", spec.duplicate_rate);
    if (j.contains("styles")) spec.styles = j.at("styles").get<std::vector<std::string>>();
    if (j.contains("subjects")) spec.subjects = j.at("subjects").get<std::vector<std::string>>();
    if (j.contains("buckets")) {
        const json& b = j.at("buckets");
        if (b.contains("frame_buckets"))
            spec.rules.frame_buckets = b.at("frame_buckets").get<std::vector<int>>();
        if (b.contains("tiers")) {
            spec.rules.tiers.clear();
            for (const json& t : b.at("tiers"))
                spec.rules.tiers.push_back(
                    {t.at("name").get<std::string>(), t.at("min_dim").get<int>()});
        }
    }
    spec.validate();
    return spec;
}

std::string generator_spec_to_json(const GeneratorSpec& spec) {
    ojson j;
    j["shard_count"] = spec.shard_count;
    j["clips_per_shard_min"] = spec.clips_per_shard_min;
    j["clips_per_shard_max"] = spec.clips_per_shard_max;
    {
        ojson mix;
        for (const auto& [f, p] : spec.frame_bucket_mix) mix[std::to_string(f)] = p;
        j["frame_bucket_mix"] = mix;
    }
    j["resolution_mix"] = spec.resolution_mix;
    j["shard_purity"] = spec.shard_purity;
    j["synthetic_fraction"] = spec.synthetic_fraction;
    j["fps_choices"] = spec.fps_choices;
    j["short_clip_rate"] = spec.short_clip_rate;
    j["missing_score_rate"] = spec.missing_score_rate;
    j["tag_rates"] = spec.tag_rates;
    j["quality_mix"] = spec.quality_mix;
    j["action_dynamic_rate"] = spec.action_dynamic_rate;
    j["embedding_dim"] = spec.embedding_dim;
    j["duplicate_rate"] = spec.duplicate_rate;
    j["styles"] = spec.styles;
    j["subjects"] = spec.subjects;
    {
        ojson buckets;
        buckets["frame_buckets"] = spec.rules.frame_buckets;
        ojson tiers = ojson::array();
        for (const ResolutionTier& t : spec.rules.tiers) {
            ojson tier;
            tier["name"] = t.name;
            tier["min_dim"] = t.min_dim;
            tiers.push_back(tier);
        }
        buckets["tiers"] = tiers;
        j["buckets"] = buckets;
    }
    return j.dump(2) + "\n";
}

std::string tally_to_json(const GeneratorTally& tally) {
    ojson j;
    j["total"] = tally.total;
    j["branch_counts"] = tally.branch_counts;
    j["bucket_counts"] = tally.bucket_counts;
    j["tag_counts"] = tally.tag_counts;
    j["short_clips"] = tally.short_clips;
    j["duplicates_planted"] = tally.duplicates_planted;
    return j.dump(2) + "\n";
}

}  // namespace shardplan
