#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "shardplan/corpus.hpp"

namespace shardplan {

enum class ManifestFormat { Jsonl, Csv };

/// Picks the format from the file extension (.jsonl/.json -> Jsonl, .csv -> Csv).
ManifestFormat manifest_format_for(const std::filesystem::path& path);

inline constexpr std::array<const char*, 23> kManifestColumns = {
    "clip_id",        "shard_id",       "branch",        "frames",
    "width",          "height",         "fps",           "filesize_bytes",
    "score_aesthetic", "score_luminance", "score_motion", "score_suitability",
    "score_technical", "tag_watermark",  "tag_nsfw",      "tag_padded",
    "tag_multi_scene", "tag_timelapse",  "tag_quality",   "tag_action",
    "style",          "subject",        "embedding"};

struct Rejection {
    std::size_t line = 0;  // 1-based line number in the source file
    std::string message;
};

struct IngestResult {
    Corpus corpus;
    std::vector<Rejection> rejections;
};

class IngestError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Reads a manifest file into a Corpus. Malformed rows land in the rejection
/// report; unreadable files and duplicate clip ids are fatal (IngestError).
IngestResult ingest_manifest(const std::filesystem::path& path, ManifestFormat format);

/// Writes records in corpus order; ingesting the output reproduces the corpus.
void write_manifest(const Corpus& corpus, const std::filesystem::path& path,
                    ManifestFormat format);

}  // namespace shardplan
