#include "shardplan/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace shardplan {

std::string_view to_string(Branch b) {
    switch (b) {
        case Branch::ImageReal: return "image_real";
        case Branch::ImageSynthetic: return "image_synthetic";
        case Branch::VideoReal: return "video_real";
        case Branch::VideoSynthetic: return "video_synthetic";
    }
    return "?";
}

std::string_view to_string(Quality q) {
    switch (q) {
        case Quality::Low: return "low";
        case Quality::Mid: return "mid";
        case Quality::High: return "high";
    }
    return "?";
}

std::string_view to_string(Action a) {
    return a == Action::Static ? "static" : "dynamic";
}

std::optional<Branch> branch_from_string(std::string_view s) {
    if (s == "image_real") return Branch::ImageReal;
    if (s == "image_synthetic") return Branch::ImageSynthetic;
    if (s == "video_real") return Branch::VideoReal;
    if (s == "video_synthetic") return Branch::VideoSynthetic;
    return std::nullopt;
}

std::optional<Quality> quality_from_string(std::string_view s) {
    if (s == "low") return Quality::Low;
    if (s == "mid") return Quality::Mid;
    if (s == "high") return Quality::High;
    return std::nullopt;
}

std::optional<Action> action_from_string(std::string_view s) {
    if (s == "static") return Action::Static;
    if (s == "dynamic") return Action::Dynamic;
    return std::nullopt;
}

void Corpus::rebuild_index() {
    index_.clear();
    index_.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        index_.emplace(records[i].clip_id, i);
    }
}

const ClipRecord* Corpus::find(std::string_view clip_id) const {
    auto it = index_.find(std::string(clip_id));
    if (it == index_.end()) return nullptr;
    return &records[it->second];
}

const ClipRecord& Corpus::at(std::string_view clip_id) const {
    const ClipRecord* r = find(clip_id);
    if (!r) throw std::out_of_range("unknown clip_id: " + std::string(clip_id));
    return *r;
}

std::vector<ShardManifest> shards_from_records(const std::vector<ClipRecord>& records) {
    std::vector<ShardManifest> shards;
    std::unordered_map<std::string, std::size_t> pos;
    for (const ClipRecord& r : records) {
        auto it = pos.find(r.shard_id);
        if (it == pos.end()) {
            pos.emplace(r.shard_id, shards.size());
            shards.push_back({r.shard_id, {r.clip_id}, r.filesize_bytes});
        } else {
            ShardManifest& s = shards[it->second];
            s.clip_ids.push_back(r.clip_id);
            s.total_bytes += r.filesize_bytes;
        }
    }
    return shards;
}

Corpus subset_corpus(const Corpus& corpus, const std::vector<std::string>& kept_ids) {
    std::unordered_set<std::string_view> keep(kept_ids.begin(), kept_ids.end());
    Corpus out;
    out.records.reserve(kept_ids.size());
    for (const ClipRecord& r : corpus.records) {
        if (keep.contains(r.clip_id)) out.records.push_back(r);
    }
    out.shards = shards_from_records(out.records);
    out.provenance = corpus.provenance;
    out.provenance.record_count = out.records.size();
    out.rebuild_index();
    return out;
}

void BucketRules::validate() const {
    if (frame_buckets.empty() || frame_buckets.front() != 1)
        throw std::invalid_argument("bucket rules: frame_buckets must start at 1");
    if (!std::is_sorted(frame_buckets.begin(), frame_buckets.end()) ||
        std::adjacent_find(frame_buckets.begin(), frame_buckets.end()) != frame_buckets.end())
        throw std::invalid_argument("bucket rules: frame_buckets must be strictly ascending");
    if (tiers.empty()) throw std::invalid_argument("bucket rules: no resolution tiers");
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        if (tiers[i].min_dim <= 0)
            throw std::invalid_argument("bucket rules: tier threshold must be positive");
        if (i > 0 && tiers[i].min_dim <= tiers[i - 1].min_dim)
            throw std::invalid_argument("bucket rules: tier thresholds must ascend");
    }
}

int BucketRules::tier_index(std::string_view name) const {
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        if (tiers[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

int BucketRules::smallest_video_bucket() const {
    for (int f : frame_buckets) {
        if (f > 1) return f;
    }
    return 1;
}

std::string BucketKey::str() const {
    return std::to_string(frame_bucket) + "f-" + resolution_bucket;
}

BucketKey bucket_of(const ClipRecord& record, const BucketRules& rules) {
    BucketKey key;
    if (record.is_image()) {
        key.frame_bucket = 1;
    } else {
        int smallest = rules.smallest_video_bucket();
        if (record.frames < smallest)
            throw std::invalid_argument("bucket-ineligible clip '" + record.clip_id +
                                        "': " + std::to_string(record.frames) +
                                        " frames is below the smallest video bucket (" +
                                        std::to_string(smallest) + ")");
        for (int f : rules.frame_buckets) {
            if (f > 1 && record.frames >= f) key.frame_bucket = f;
        }
    }
    int min_dim = record.min_dim();
    int tier = -1;
    for (std::size_t i = 0; i < rules.tiers.size(); ++i) {
        if (rules.tiers[i].min_dim <= min_dim) tier = static_cast<int>(i);
    }
    if (tier < 0)
        throw std::invalid_argument("bucket-ineligible clip '" + record.clip_id +
                                    "': min dimension " + std::to_string(min_dim) +
                                    " is below the lowest tier (" +
                                    std::to_string(rules.tiers.front().min_dim) + ")");
    key.resolution_bucket = rules.tiers[static_cast<std::size_t>(tier)].name;
    return key;
}

std::map<BucketKey, std::int64_t> bucket_histogram(const Corpus& corpus,
                                                   const BucketRules& rules) {
    std::map<BucketKey, std::int64_t> hist;
    for (const ClipRecord& r : corpus.records) {
        ++hist[bucket_of(r, rules)];
    }
    return hist;
}

namespace {

void check_record(const ClipRecord& r, ValidationReport& report) {
    auto add = [&](std::string code, std::string msg) {
        report.violations.push_back({std::move(code), r.clip_id, std::move(msg)});
    };
    if (r.frames < 1) add("frames", "frames must be >= 1");
    if (r.width <= 0 || r.height <= 0) add("dimensions", "width and height must be positive");
    if (r.filesize_bytes <= 0) add("filesize", "filesize_bytes must be positive");
    if (r.is_image()) {
        if (r.frames != 1) add("image_frames", "image branches must have frames = 1");
        if (r.fps != 0.0) add("image_fps", "image branches must have fps = 0");
        if (r.duration_s != 0.0) add("image_duration", "image branches must have duration 0");
    } else {
        if (r.frames == 1) add("video_frames", "video branches must have frames > 1");
        if (r.fps <= 0.0) {
            add("video_fps", "video branches must have fps > 0");
        } else if (std::abs(r.duration_s - static_cast<double>(r.frames) / r.fps) > 1e-6) {
            add("duration", "duration_s does not equal frames/fps");
        }
    }
}

}  // namespace

ValidationReport validate(const Corpus& corpus) {
    ValidationReport report;

    std::unordered_map<std::string_view, const ClipRecord*> seen;
    for (const ClipRecord& r : corpus.records) {
        auto [it, inserted] = seen.emplace(r.clip_id, &r);
        if (!inserted) {
            report.violations.push_back(
                {"duplicate_id", r.clip_id,
                 "clip_id appears in shards '" + it->second->shard_id + "' and '" +
                     r.shard_id + "'"});
        }
        check_record(r, report);
    }

    // record -> shard direction
    std::unordered_map<std::string_view, std::unordered_set<std::string_view>> shard_members;
    for (const ShardManifest& s : corpus.shards) {
        auto& members = shard_members[s.shard_id];
        for (const std::string& id : s.clip_ids) members.insert(id);
    }
    for (const ClipRecord& r : corpus.records) {
        auto it = shard_members.find(r.shard_id);
        if (it == shard_members.end() || !it->second.contains(r.clip_id)) {
            report.violations.push_back(
                {"shard_membership", r.clip_id,
                 "record claims shard '" + r.shard_id + "' but the shard manifest does not list it"});
        }
    }
    // shard -> record direction
    for (const ShardManifest& s : corpus.shards) {
        for (const std::string& id : s.clip_ids) {
            auto it = seen.find(id);
            if (it == seen.end() || it->second->shard_id != s.shard_id) {
                report.violations.push_back(
                    {"shard_membership", id,
                     "shard '" + s.shard_id + "' lists a clip that no record claims"});
            }
        }
    }

    // embedding dimension agreement
    std::size_t dim = 0;
    const ClipRecord* first_with = nullptr;
    for (const ClipRecord& r : corpus.records) {
        if (!r.embedding) continue;
        if (!first_with) {
            first_with = &r;
            dim = r.embedding->size();
        } else if (r.embedding->size() != dim) {
            report.violations.push_back(
                {"embedding_dim", r.clip_id,
                 "embedding dimension " + std::to_string(r.embedding->size()) +
                     " differs from " + std::to_string(dim) + " (first seen on '" +
                     first_with->clip_id + "')"});
        }
    }

    return report;
}

}  // namespace shardplan
