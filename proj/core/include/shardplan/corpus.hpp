#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace shardplan {

enum class Branch { ImageReal, ImageSynthetic, VideoReal, VideoSynthetic };
enum class Quality { Low, Mid, High };
enum class Action { Static, Dynamic };

std::string_view to_string(Branch b);
std::string_view to_string(Quality q);
std::string_view to_string(Action a);
std::optional<Branch> branch_from_string(std::string_view s);
std::optional<Quality> quality_from_string(std::string_view s);
std::optional<Action> action_from_string(std::string_view s);

constexpr bool is_image(Branch b) {
    return b == Branch::ImageReal || b == Branch::ImageSynthetic;
}
constexpr bool is_video(Branch b) { return !is_image(b); }

struct ClipScores {
    std::optional<double> aesthetic;
    std::optional<double> luminance;
    std::optional<double> motion;
    std::optional<double> suitability;
    std::optional<double> technical;

    bool operator==(const ClipScores&) const = default;
};

struct ClipTags {
    bool watermark = false;
    bool nsfw = false;
    bool padded = false;
    bool multi_scene = false;
    bool timelapse = false;
    Quality quality = Quality::Mid;
    Action action = Action::Static;
    std::string style;
    std::string subject;

    bool operator==(const ClipTags&) const = default;
};

/// One media sample's manifest metadata. Media bytes are never touched;
/// everything the pipeline needs is carried here.
struct ClipRecord {
    std::string clip_id;
    std::string shard_id;
    Branch branch = Branch::VideoReal;
    std::int64_t frames = 1;
    int width = 0;
    int height = 0;
    double fps = 0.0;  // 0 for images
    std::int64_t filesize_bytes = 0;
    double duration_s = 0.0;  // frames/fps for video, 0 for images
    ClipScores scores;
    ClipTags tags;
    std::optional<std::vector<double>> embedding;

    bool is_image() const { return shardplan::is_image(branch); }
    bool is_video() const { return shardplan::is_video(branch); }
    int min_dim() const { return width < height ? width : height; }

    bool operator==(const ClipRecord&) const = default;
};

/// An archive shard: id plus the clips it contains, in archive order.
struct ShardManifest {
    std::string shard_id;
    std::vector<std::string> clip_ids;
    std::int64_t total_bytes = 0;

    bool operator==(const ShardManifest&) const = default;
};

struct Provenance {
    std::string source_path;
    std::size_t record_count = 0;
    std::string checksum;  // fnv1a-64 of the source bytes, hex
};

struct Corpus {
    std::vector<ClipRecord> records;
    std::vector<ShardManifest> shards;
    Provenance provenance;

    void rebuild_index();
    const ClipRecord* find(std::string_view clip_id) const;
    const ClipRecord& at(std::string_view clip_id) const;  // throws if absent
    std::size_t size() const { return records.size(); }

  private:
    std::unordered_map<std::string, std::size_t> index_;
};

/// Rebuilds shard manifests from record order: shards appear in order of
/// first reference, clips in record (archive) order, bytes summed.
std::vector<ShardManifest> shards_from_records(const std::vector<ClipRecord>& records);

/// New corpus containing exactly the kept clip ids, record order preserved.
/// Shards are rebuilt; shards left empty disappear.
Corpus subset_corpus(const Corpus& corpus, const std::vector<std::string>& kept_ids);

// ---------------------------------------------------------------------------
// Joint frame x resolution bucketing
// ---------------------------------------------------------------------------

struct ResolutionTier {
    std::string name;
    int min_dim = 0;

    bool operator==(const ResolutionTier&) const = default;
};

struct BucketRules {
    std::vector<int> frame_buckets{1, 33, 65, 121};  // ascending, first must be 1
    std::vector<ResolutionTier> tiers{
        {"144p", 144}, {"360p", 360}, {"480p", 480}, {"720p", 720}};  // ascending

    void validate() const;  // throws std::invalid_argument
    int tier_index(std::string_view name) const;  // -1 when unknown
    int smallest_video_bucket() const;
};

struct BucketKey {
    int frame_bucket = 1;
    std::string resolution_bucket;

    auto operator<=>(const BucketKey&) const = default;
    std::string str() const;  // e.g. "33f-360p"
};

/// frame_bucket = largest configured f with frames >= f (images map to 1);
/// resolution_bucket = highest tier whose threshold <= min(width, height).
/// Throws std::invalid_argument for bucket-ineligible records (video below
/// the smallest video bucket, or min dimension under the lowest tier).
BucketKey bucket_of(const ClipRecord& record, const BucketRules& rules);

std::map<BucketKey, std::int64_t> bucket_histogram(const Corpus& corpus,
                                                   const BucketRules& rules);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string code;
    std::string clip_id;  // empty for corpus-level findings
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks every corpus invariant; violations are data, not errors.
ValidationReport validate(const Corpus& corpus);

}  // namespace shardplan
