#include "shardplan/filter.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "shardplan/io_util.hpp"

namespace shardplan {

namespace {

using json = nlohmann::json;

void sort_outcome(FilterOutcome& out) {
    std::sort(out.kept.begin(), out.kept.end());
    std::sort(out.dropped.begin(), out.dropped.end(),
              [](const Drop& a, const Drop& b) { return a.clip_id < b.clip_id; });
}

}  // namespace

std::string_view to_string(DropReason r) {
    switch (r) {
        case DropReason::Watermark: return "watermark";
        case DropReason::Nsfw: return "nsfw";
        case DropReason::Padded: return "padded";
        case DropReason::MultiScene: return "multi_scene";
        case DropReason::MinDuration: return "min_duration";
        case DropReason::Timelapse: return "timelapse";
        case DropReason::Resolution: return "resolution";
        case DropReason::MissingScore: return "missing_score";
        case DropReason::Aesthetic: return "aesthetic";
        case DropReason::Luminance: return "luminance";
        case DropReason::Motion: return "motion";
        case DropReason::Suitability: return "suitability";
        case DropReason::Technical: return "technical";
        case DropReason::Quality: return "quality";
        case DropReason::Action: return "action";
    }
    return "?";
}

void StageConfig::validate() const {
    if (stage_id.empty()) throw std::invalid_argument("stage: stage_id must be nonempty");
    if (luminance_band && luminance_band->low > luminance_band->high)
        throw std::invalid_argument("stage '" + stage_id + "': luminance band low > high");
    if (motion_band && motion_band->low > motion_band->high)
        throw std::invalid_argument("stage '" + stage_id + "': motion band low > high");
    if (min_duration_s < 0)
        throw std::invalid_argument("stage '" + stage_id + "': min_duration_s must be >= 0");
}

double luminance(double r, double g, double b) {
    auto in_range = [](double c) { return c >= 0.0 && c <= 255.0; };
    if (!in_range(r) || !in_range(g) || !in_range(b))
        throw std::invalid_argument("luminance: channel values must lie in [0, 255]");
    return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}

double clip_luminance(const std::vector<std::vector<Rgb>>& frames) {
    if (frames.empty()) throw std::invalid_argument("clip_luminance: no frames");
    double sum = 0.0;
    std::size_t pixels = 0;
    for (const auto& frame : frames) {
        for (const Rgb& p : frame) {
            sum += luminance(p.r, p.g, p.b);
            ++pixels;
        }
    }
    if (pixels == 0) throw std::invalid_argument("clip_luminance: frames carry no pixels");
    return sum / static_cast<double>(pixels);
}

FilterOutcome apply_sanitation(const Corpus& corpus) {
    FilterOutcome out;
    for (const ClipRecord& r : corpus.records) {
        if (r.tags.watermark) {
            out.dropped.push_back({r.clip_id, DropReason::Watermark, "true"});
        } else if (r.tags.nsfw) {
            out.dropped.push_back({r.clip_id, DropReason::Nsfw, "true"});
        } else if (r.tags.padded) {
            out.dropped.push_back({r.clip_id, DropReason::Padded, "true"});
        } else if (r.tags.multi_scene) {
            out.dropped.push_back({r.clip_id, DropReason::MultiScene, "true"});
        } else if (r.is_video() && r.duration_s < 2.0) {
            out.dropped.push_back({r.clip_id, DropReason::MinDuration, format_double(r.duration_s)});
        } else {
            out.kept.push_back(r.clip_id);
        }
    }
    sort_outcome(out);
    return out;
}

namespace {

// First failing rule wins the reason code; the kept set itself is
// order-independent because every rule must pass.
std::optional<Drop> stage_drop(const ClipRecord& r, const StageConfig& stage,
                               const BucketRules& rules) {
    auto drop = [&](DropReason reason, std::string value) {
        return Drop{r.clip_id, reason, std::move(value)};
    };

    if (!stage.target_resolution.empty()) {
        int tier = rules.tier_index(stage.target_resolution);
        if (tier < 0)
            throw std::invalid_argument("stage '" + stage.stage_id +
                                        "': unknown tier '" + stage.target_resolution + "'");
        int threshold = rules.tiers[static_cast<std::size_t>(tier)].min_dim;
        if (r.min_dim() < threshold)
            return drop(DropReason::Resolution, std::to_string(r.min_dim()));
    }
    if (r.is_video() && r.duration_s < stage.min_duration_s)
        return drop(DropReason::MinDuration, format_double(r.duration_s));
    if (stage.min_aesthetic) {
        if (!r.scores.aesthetic) return drop(DropReason::MissingScore, "aesthetic");
        if (*r.scores.aesthetic < *stage.min_aesthetic)
            return drop(DropReason::Aesthetic, format_double(*r.scores.aesthetic));
    }
    if (stage.luminance_band) {
        if (!r.scores.luminance) return drop(DropReason::MissingScore, "luminance");
        double v = *r.scores.luminance;
        if (v < stage.luminance_band->low || v > stage.luminance_band->high)
            return drop(DropReason::Luminance, format_double(v));
    }
    if (stage.motion_band && r.is_video()) {
        if (!r.scores.motion) return drop(DropReason::MissingScore, "motion");
        double v = *r.scores.motion;
        if (v < stage.motion_band->low || v > stage.motion_band->high)
            return drop(DropReason::Motion, format_double(v));
    }
    if (stage.min_suitability) {
        if (!r.scores.suitability) return drop(DropReason::MissingScore, "suitability");
        if (*r.scores.suitability < *stage.min_suitability)
            return drop(DropReason::Suitability, format_double(*r.scores.suitability));
    }
    if (stage.min_technical) {
        if (!r.scores.technical) return drop(DropReason::MissingScore, "technical");
        if (*r.scores.technical < *stage.min_technical)
            return drop(DropReason::Technical, format_double(*r.scores.technical));
    }
    if (stage.quality_gate && static_cast<int>(r.tags.quality) < static_cast<int>(*stage.quality_gate))
        return drop(DropReason::Quality, std::string(to_string(r.tags.quality)));
    if (stage.require_dynamic_action && r.tags.action != Action::Dynamic)
        return drop(DropReason::Action, std::string(to_string(r.tags.action)));
    if (stage.drop_timelapse && r.tags.timelapse)
        return drop(DropReason::Timelapse, "true");
    return std::nullopt;
}

}  // namespace

FilterOutcome apply_stage_filter(const Corpus& corpus, const StageConfig& stage,
                                 const BucketRules& rules) {
    stage.validate();
    FilterOutcome out;
    for (const ClipRecord& r : corpus.records) {
        if (auto d = stage_drop(r, stage, rules)) {
            out.dropped.push_back(std::move(*d));
        } else {
            out.kept.push_back(r.clip_id);
        }
    }
    sort_outcome(out);
    return out;
}

StageFlowReport stage_flow_report(const Corpus& corpus,
                                  const std::vector<StageConfig>& stages,
                                  const BucketRules& rules) {
    StageFlowReport report;
    Corpus current = corpus;
    current.rebuild_index();
    for (const ClipRecord& r : current.records) report.final_kept.push_back(r.clip_id);
    std::sort(report.final_kept.begin(), report.final_kept.end());
    for (const StageConfig& stage : stages) {
        FilterOutcome outcome = apply_stage_filter(current, stage, rules);

        std::map<Branch, StageFlowRow> rows;
        for (const ClipRecord& r : current.records) {
            auto [it, inserted] = rows.try_emplace(r.branch);
            if (inserted) {
                it->second.stage_id = stage.stage_id;
                it->second.branch = r.branch;
            }
            ++it->second.entering;
        }
        for (const std::string& id : outcome.kept) ++rows[current.at(id).branch].kept;
        for (const Drop& d : outcome.dropped) {
            StageFlowRow& row = rows[current.at(d.clip_id).branch];
            ++row.dropped_by_reason[std::string(to_string(d.reason))];
        }
        for (auto& [branch, row] : rows) {
            row.stage_id = stage.stage_id;
            row.branch = branch;
            report.rows.push_back(std::move(row));
        }
        current = subset_corpus(current, outcome.kept);
        report.final_kept = std::move(outcome.kept);
    }
    return report;
}

namespace {

std::optional<Band> band_from_json(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    const json& b = j.at(key);
    if (!b.is_array() || b.size() != 2)
        throw std::invalid_argument(std::string("stage config: ") + key +
                                    " must be a [low, high] pair");
    return Band{b[0].get<double>(), b[1].get<double>()};
}

StageConfig stage_from_json(const json& j) {
    StageConfig s;
    s.stage_id = j.at("stage_id").get<std::string>();
    s.target_resolution = j.value("target_resolution", std::string{});
    if (j.contains("min_aesthetic") && !j.at("min_aesthetic").is_null())
        s.min_aesthetic = j.at("min_aesthetic").get<double>();
    s.luminance_band = band_from_json(j, "luminance_band");
    s.motion_band = band_from_json(j, "motion_band");
    if (j.contains("min_suitability") && !j.at("min_suitability").is_null())
        s.min_suitability = j.at("min_suitability").get<double>();
    if (j.contains("min_technical") && !j.at("min_technical").is_null())
        s.min_technical = j.at("min_technical").get<double>();
    s.min_duration_s = j.value("min_duration_s", 2.0);
    if (j.contains("quality_gate") && !j.at("quality_gate").is_null()) {
        auto q = quality_from_string(j.at("quality_gate").get<std::string>());
        if (!q) throw std::invalid_argument("stage config: unknown quality_gate value");
        s.quality_gate = *q;
    }
    s.require_dynamic_action = j.value("require_dynamic_action", false);
    s.drop_timelapse = j.value("drop_timelapse", false);
    s.validate();
    return s;
}

}  // namespace

std::vector<StageConfig> parse_stage_configs(const std::string& json_text) {
    json j = json::parse(json_text);
    if (!j.is_array()) throw std::invalid_argument("stage config: expected a JSON array");
    std::vector<StageConfig> stages;
    for (const json& item : j) stages.push_back(stage_from_json(item));
    return stages;
}

std::vector<StageConfig> load_stage_configs(const std::filesystem::path& path) {
    return parse_stage_configs(read_file(path));
}

std::vector<StageConfig> default_stage_configs() {
    std::vector<StageConfig> stages(4);

    stages[0].stage_id = "144p";
    stages[0].target_resolution = "144p";
    stages[0].min_aesthetic = 3.5;
    stages[0].luminance_band = Band{20.0, 235.0};

    stages[1].stage_id = "360p";
    stages[1].target_resolution = "360p";
    stages[1].min_aesthetic = 4.0;
    stages[1].luminance_band = Band{25.0, 230.0};
    stages[1].motion_band = Band{0.05, 0.95};

    stages[2].stage_id = "480p";
    stages[2].target_resolution = "480p";
    stages[2].min_aesthetic = 4.5;
    stages[2].luminance_band = Band{30.0, 225.0};
    stages[2].motion_band = Band{0.10, 0.90};
    stages[2].min_suitability = 0.3;
    stages[2].quality_gate = Quality::Mid;

    stages[3].stage_id = "720p";
    stages[3].target_resolution = "720p";
    stages[3].min_aesthetic = 5.0;
    stages[3].luminance_band = Band{35.0, 220.0};
    stages[3].motion_band = Band{0.15, 0.85};
    stages[3].min_suitability = 0.4;
    stages[3].min_technical = 0.4;
    stages[3].quality_gate = Quality::Mid;
    stages[3].require_dynamic_action = true;

    return stages;
}

}  // namespace shardplan
