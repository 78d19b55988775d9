#include "shardplan/report.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "shardplan/io_util.hpp"

namespace shardplan {

namespace {

using ojson = nlohmann::ordered_json;

}  // namespace

std::string to_json(const ValidationReport& report) {
    ojson j;
    j["ok"] = report.ok();
    j["violation_count"] = report.violations.size();
    ojson items = ojson::array();
    for (const Violation& v : report.violations) {
        ojson item;
        item["code"] = v.code;
        item["clip_id"] = v.clip_id;
        item["message"] = v.message;
        items.push_back(item);
    }
    j["violations"] = items;
    return j.dump(2) + "\n";
}

std::string rejections_to_json(const std::vector<Rejection>& rejections) {
    ojson j = ojson::array();
    for (const Rejection& r : rejections) {
        ojson item;
        item["line"] = r.line;
        item["message"] = r.message;
        j.push_back(item);
    }
    return j.dump(2) + "\n";
}

std::string to_json(const FilterOutcome& outcome) {
    ojson j;
    j["kept_count"] = outcome.kept.size();
    j["dropped_count"] = outcome.dropped.size();
    j["kept"] = outcome.kept;
    ojson dropped = ojson::array();
    for (const Drop& d : outcome.dropped) {
        ojson item;
        item["clip_id"] = d.clip_id;
        item["reason"] = to_string(d.reason);
        item["value"] = d.offending_value;
        dropped.push_back(item);
    }
    j["dropped"] = dropped;
    return j.dump(2) + "\n";
}

std::string to_json(const StageFlowReport& report) {
    ojson rows = ojson::array();
    for (const StageFlowRow& row : report.rows) {
        ojson item;
        item["stage_id"] = row.stage_id;
        item["branch"] = to_string(row.branch);
        item["entering"] = row.entering;
        item["kept"] = row.kept;
        item["dropped"] = row.dropped_by_reason;
        rows.push_back(item);
    }
    ojson j;
    j["rows"] = rows;
    j["final_kept_count"] = report.final_kept.size();
    return j.dump(2) + "\n";
}

std::string to_csv(const StageFlowReport& report) {
    std::set<std::string> reasons;
    for (const StageFlowRow& row : report.rows) {
        for (const auto& [reason, count] : row.dropped_by_reason) reasons.insert(reason);
    }

    std::ostringstream out;
    std::vector<std::string> header = {"stage_id", "branch", "entering", "kept"};
    for (const std::string& r : reasons) header.push_back("dropped_" + r);
    out << csv::join_row(header) << '\n';

    for (const StageFlowRow& row : report.rows) {
        std::vector<std::string> cells = {row.stage_id, std::string(to_string(row.branch)),
                                          std::to_string(row.entering),
                                          std::to_string(row.kept)};
        for (const std::string& r : reasons) {
            auto it = row.dropped_by_reason.find(r);
            cells.push_back(std::to_string(it == row.dropped_by_reason.end() ? 0 : it->second));
        }
        out << csv::join_row(cells) << '\n';
    }
    return out.str();
}

std::string to_json(const DedupDecision& decision) {
    ojson j;
    j["threshold_used"] = decision.threshold_used;
    j["kept_count"] = decision.kept.size();
    j["removed_count"] = decision.removed.size();
    ojson groups = ojson::array();
    for (const DuplicateGroup& g : decision.groups) {
        ojson group;
        group["representative_id"] = g.representative_id;
        group["member_ids"] = g.member_ids;
        groups.push_back(group);
    }
    j["groups"] = groups;
    j["removed"] = decision.removed;
    j["kept"] = decision.kept;
    return j.dump(2) + "\n";
}

std::string to_json(const SimReport& report) {
    ojson j;
    j["mode"] = report.mode;
    // The utilization denominator is samples: consumed / available clips.
    j["utilization"] = report.utilization;
    j["utilization_std"] = report.utilization_std;
    j["total_steps"] = report.total_steps;
    j["consumed"] = report.consumed;
    j["available"] = report.available;
    j["wasted_samples"] = report.wasted_samples;
    {
        ojson loc;
        loc["sequential_fraction"] = report.locality.sequential_fraction;
        loc["seek_count"] = report.locality.seek_count;
        j["locality"] = loc;
    }
    {
        ojson steps;
        for (const auto& [key, value] : report.steps_per_bucket) steps[key.str()] = value;
        j["steps_per_bucket"] = steps;
    }
    if (!report.per_seed.empty()) {
        ojson seeds = ojson::array();
        for (const PerSeedStats& s : report.per_seed) {
            ojson item;
            item["seed"] = s.seed;
            item["utilization"] = s.utilization;
            item["total_steps"] = s.total_steps;
            item["consumed"] = s.consumed;
            item["wasted"] = s.wasted;
            item["sequential_fraction"] = s.locality.sequential_fraction;
            item["seek_count"] = s.locality.seek_count;
            seeds.push_back(item);
        }
        j["per_seed"] = seeds;
    }
    if (!report.notice.empty()) j["notice"] = report.notice;
    return j.dump(2) + "\n";
}

std::string to_json(const FlopsBreakdown& breakdown) {
    auto layer = [](const LayerClassFlops& c) {
        ojson j;
        j["projection"] = c.projection;
        j["attention"] = c.attention;
        j["ffn"] = c.ffn;
        j["cross_stream"] = c.cross_stream;
        j["total"] = c.total();
        return j;
    };
    ojson j;
    j["dual"] = layer(breakdown.dual);
    j["single_stream"] = layer(breakdown.single_stream);
    j["decoder"] = layer(breakdown.decoder);
    j["total"] = breakdown.total;
    return j.dump(2) + "\n";
}

std::string to_json(const std::vector<PlanSummary>& summaries) {
    ojson j = ojson::array();
    for (const PlanSummary& s : summaries) {
        ojson item;
        item["method"] = s.method;
        item["objective"] = s.objective;
        ojson cvs;
        for (std::size_t b = 0; b < s.buckets.size(); ++b) {
            cvs[s.buckets[b].str()] = s.bucket_cv[b];
        }
        item["per_bucket_cv"] = cvs;
        j.push_back(item);
    }
    return j.dump(2) + "\n";
}

std::string methods_to_csv(const std::vector<MethodRow>& rows) {
    std::ostringstream out;
    out << "method,steps_per_epoch_relative,utilization,sequential_fraction\n";
    for (const MethodRow& r : rows) {
        out << r.method << ',' << format_double(r.steps_per_epoch_relative) << ','
            << format_double(r.utilization) << ',' << format_double(r.sequential_fraction)
            << '\n';
    }
    return out.str();
}

std::string methods_to_json(const std::vector<MethodRow>& rows) {
    ojson j = ojson::array();
    for (const MethodRow& r : rows) {
        ojson item;
        item["method"] = r.method;
        item["steps_per_epoch_relative"] = r.steps_per_epoch_relative;
        item["utilization"] = r.utilization;
        item["sequential_fraction"] = r.sequential_fraction;
        j.push_back(item);
    }
    return j.dump(2) + "\n";
}

}  // namespace shardplan
