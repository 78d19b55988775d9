#pragma once

#include <string>
#include <vector>

#include "shardplan/corpus.hpp"
#include "shardplan/dedup.hpp"
#include "shardplan/filter.hpp"
#include "shardplan/flops.hpp"
#include "shardplan/manifest.hpp"
#include "shardplan/planner.hpp"
#include "shardplan/simulator.hpp"

namespace shardplan {

// Report emission. Every artifact has a JSON twin for tooling and, where the
// shape is tabular, a CSV twin for spreadsheets. All output is
// deterministic for fixed inputs.

std::string to_json(const ValidationReport& report);
std::string rejections_to_json(const std::vector<Rejection>& rejections);

std::string to_json(const FilterOutcome& outcome);
std::string to_json(const StageFlowReport& report);
std::string to_csv(const StageFlowReport& report);

std::string to_json(const DedupDecision& decision);

std::string to_json(const SimReport& report);
std::string to_json(const FlopsBreakdown& breakdown);

struct PlanSummary {
    std::string method;  // "greedy" | "sa"
    double objective = 0.0;
    std::vector<double> bucket_cv;  // per bucket, so the per-bucket condition
    std::vector<BucketKey> buckets;  // column labels for bucket_cv
};

std::string to_json(const std::vector<PlanSummary>& summaries);

/// Consolidated utilization table, one row per method, normalized against the
/// baseline mean step count.
struct MethodRow {
    std::string method;
    double steps_per_epoch_relative = 0.0;
    double utilization = 0.0;
    double sequential_fraction = 0.0;
};

std::string methods_to_csv(const std::vector<MethodRow>& rows);
std::string methods_to_json(const std::vector<MethodRow>& rows);

}  // namespace shardplan
