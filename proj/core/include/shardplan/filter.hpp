#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shardplan/corpus.hpp"

namespace shardplan {

enum class DropReason {
    Watermark,
    Nsfw,
    Padded,
    MultiScene,
    MinDuration,
    Timelapse,
    Resolution,
    MissingScore,
    Aesthetic,
    Luminance,
    Motion,
    Suitability,
    Technical,
    Quality,
    Action,
};

std::string_view to_string(DropReason r);

struct Drop {
    std::string clip_id;
    DropReason reason;
    std::string offending_value;
};

/// kept and dropped partition the input clip id set; both sorted by clip_id.
struct FilterOutcome {
    std::vector<std::string> kept;
    std::vector<Drop> dropped;
};

struct Band {
    double low = 0.0;
    double high = 0.0;
};

/// Per-stage admission thresholds. The published pipeline gives no numeric
/// cutoffs, so everything here is config-driven; the shipped defaults are
/// sample values only.
struct StageConfig {
    std::string stage_id;
    std::string target_resolution;  // tier name; records below its threshold drop
    std::optional<double> min_aesthetic;
    std::optional<Band> luminance_band;  // two-tail, closed interval
    std::optional<Band> motion_band;     // two-tail, video branches only
    std::optional<double> min_suitability;
    std::optional<double> min_technical;
    double min_duration_s = 2.0;  // video branches only
    std::optional<Quality> quality_gate;  // drop quality strictly below the gate
    bool require_dynamic_action = false;
    bool drop_timelapse = false;

    void validate() const;  // throws std::invalid_argument
};

/// L = 0.2126 R + 0.7152 G + 0.0722 B. Channels must lie in [0, 255].
double luminance(double r, double g, double b);

struct Rgb {
    double r = 0.0, g = 0.0, b = 0.0;
};

/// Mean per-pixel luminance pooled over all pixels of all frames.
double clip_luminance(const std::vector<std::vector<Rgb>>& frames);

/// Hard-removal gates: watermark/nsfw/padded/multi_scene tags, and video
/// clips shorter than two seconds.
FilterOutcome apply_sanitation(const Corpus& corpus);

FilterOutcome apply_stage_filter(const Corpus& corpus, const StageConfig& stage,
                                 const BucketRules& rules);

struct StageFlowRow {
    std::string stage_id;
    Branch branch = Branch::VideoReal;
    std::int64_t entering = 0;
    std::int64_t kept = 0;
    std::map<std::string, std::int64_t> dropped_by_reason;
};

struct StageFlowReport {
    std::vector<StageFlowRow> rows;
    std::vector<std::string> final_kept;  // survivors of the last stage, sorted
};

/// Chains the stages in order and tabulates entering/kept/dropped counts per
/// stage and branch (the Sankey view of the pipeline).
StageFlowReport stage_flow_report(const Corpus& corpus,
                                  const std::vector<StageConfig>& stages,
                                  const BucketRules& rules);

std::vector<StageConfig> load_stage_configs(const std::filesystem::path& path);
std::vector<StageConfig> parse_stage_configs(const std::string& json_text);

/// Sample 4-stage ladder (144p..720p). Thresholds are illustrative defaults,
/// not published values.
std::vector<StageConfig> default_stage_configs();

}  // namespace shardplan
