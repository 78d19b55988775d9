// shardplan: corpus curation, shard-to-rank planning, and epoch simulation
// for bucket-batched distributed training, driven entirely by clip metadata.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shardplan/dedup.hpp"
#include "shardplan/filter.hpp"
#include "shardplan/flops.hpp"
#include "shardplan/io_util.hpp"
#include "shardplan/manifest.hpp"
#include "shardplan/planner.hpp"
#include "shardplan/report.hpp"
#include "shardplan/rng.hpp"
#include "shardplan/simulator.hpp"
#include "shardplan/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace shardplan;

namespace {

struct RunConfig {
    fs::path manifest_path;
    fs::path out_dir = "out";
    std::uint64_t seed = 0;

    BucketRules buckets;
    std::vector<StageConfig> stages = default_stage_configs();

    double dedup_threshold = 0.9;
    std::string dedup_mode = "embeddings";  // or "pairs"
    fs::path pairs_csv;

    int ranks = 8;
    SaConfig sa;

    SimConfig sim;
    int baseline_seed_count = 20;

    // flops subcommand inputs
    int flops_width = 1280;
    int flops_height = 736;
    std::int64_t flops_frames = 121;
    ModelGeometry geometry;
    TreadConfig tread;
    double overhead_factor = 0.95;

    std::optional<GeneratorSpec> generator;
    std::string generator_preset;
};

BucketRules buckets_from_json(const json& b) {
    BucketRules rules;
    if (b.contains("frame_buckets"))
        rules.frame_buckets = b.at("frame_buckets").get<std::vector<int>>();
    if (b.contains("tiers")) {
        rules.tiers.clear();
        for (const json& t : b.at("tiers"))
            rules.tiers.push_back({t.at("name").get<std::string>(), t.at("min_dim").get<int>()});
    }
    rules.validate();
    return rules;
}

RunConfig load_config(const fs::path& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    json j = json::parse(read_file(path));

    if (j.contains("manifest")) cfg.manifest_path = j.at("manifest").get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    cfg.seed = j.value("seed", cfg.seed);

    if (j.contains("buckets")) cfg.buckets = buckets_from_json(j.at("buckets"));

    if (j.contains("stages")) {
        const json& s = j.at("stages");
        if (s.is_string()) {
            fs::path stages_path = s.get<std::string>();
            if (stages_path.is_relative()) stages_path = path.parent_path() / stages_path;
            cfg.stages = load_stage_configs(stages_path);
        } else {
            cfg.stages = parse_stage_configs(s.dump());
        }
    }

    if (j.contains("dedup")) {
        const json& d = j.at("dedup");
        cfg.dedup_threshold = d.value("threshold", cfg.dedup_threshold);
        cfg.dedup_mode = d.value("mode", cfg.dedup_mode);
        if (d.contains("pairs_csv")) cfg.pairs_csv = d.at("pairs_csv").get<std::string>();
    }

    if (j.contains("planner")) {
        const json& p = j.at("planner");
        cfg.ranks = p.value("ranks", cfg.ranks);
        if (p.contains("sa")) {
            const json& s = p.at("sa");
            cfg.sa.iterations = s.value("iterations", cfg.sa.iterations);
            cfg.sa.t0_probe_swaps = s.value("t0_probe_swaps", cfg.sa.t0_probe_swaps);
            cfg.sa.t_final_ratio = s.value("t_final_ratio", cfg.sa.t_final_ratio);
            cfg.sa.relocation_probability =
                s.value("relocation_probability", cfg.sa.relocation_probability);
        }
    }

    if (j.contains("simulator")) {
        const json& s = j.at("simulator");
        cfg.sim.default_batch = s.value("default_batch", cfg.sim.default_batch);
        cfg.sim.buffer_capacity = s.value("buffer_capacity", cfg.sim.buffer_capacity);
        cfg.baseline_seed_count = s.value("seed_count", cfg.baseline_seed_count);
        if (s.contains("batch_size")) {
            for (auto& [key, value] : s.at("batch_size").items()) {
                // keys use the "<frames>f-<tier>" form, e.g. "33f-360p"
                auto dash = key.find("f-");
                if (dash == std::string::npos)
                    throw std::runtime_error("config: bad bucket key '" + key + "'");
                BucketKey bucket{std::stoi(key.substr(0, dash)), key.substr(dash + 2)};
                cfg.sim.batch_size[bucket] = value.get<int>();
            }
        }
    }

    if (j.contains("flops")) {
        const json& f = j.at("flops");
        cfg.flops_width = f.value("width", cfg.flops_width);
        cfg.flops_height = f.value("height", cfg.flops_height);
        cfg.flops_frames = f.value("frames", cfg.flops_frames);
        cfg.overhead_factor = f.value("overhead_factor", cfg.overhead_factor);
        if (f.contains("tread")) {
            const json& t = f.at("tread");
            cfg.tread.route_start_layer = t.value("route_start_layer", cfg.tread.route_start_layer);
            cfg.tread.route_end_layer = t.value("route_end_layer", cfg.tread.route_end_layer);
            cfg.tread.drop_ratio = t.value("drop_ratio", cfg.tread.drop_ratio);
        }
        if (f.contains("text_tokens"))
            cfg.geometry.text_tokens = f.at("text_tokens").get<std::int64_t>();
    }

    if (j.contains("generator")) {
        const json& g = j.at("generator");
        if (g.is_string()) {
            cfg.generator_preset = g.get<std::string>();
        } else {
            cfg.generator = parse_generator_spec(g.dump());
        }
    }
    return cfg;
}

GeneratorSpec resolve_generator(const RunConfig& cfg) {
    if (cfg.generator) return *cfg.generator;
    if (cfg.generator_preset == "hetero64") return GeneratorSpec::heterogeneous_64rank();
    if (cfg.generator_preset.empty() || cfg.generator_preset == "small")
        return GeneratorSpec::small_default();
    throw std::runtime_error("unknown generator preset '" + cfg.generator_preset + "'");
}

void require_artifact(const fs::path& path, const std::string& producing_step) {
    if (!fs::exists(path))
        throw std::runtime_error("missing prerequisite artifact " + path.string() +
                                 "; run `shardplan " + producing_step + "` first");
}

Corpus load_corpus_file(const fs::path& path) {
    IngestResult result = ingest_manifest(path, manifest_format_for(path));
    if (!result.rejections.empty())
        throw std::runtime_error(path.string() + ": " +
                                 std::to_string(result.rejections.size()) +
                                 " malformed rows (first at line " +
                                 std::to_string(result.rejections.front().line) + ": " +
                                 result.rejections.front().message + ")");
    return std::move(result.corpus);
}

// ---------------------------------------------------------------------------
// Commands. Each writes its artifacts under out_dir and re-validates them;
// any failure surfaces as an exception and a nonzero exit.
// ---------------------------------------------------------------------------

int cmd_ingest(const RunConfig& cfg) {
    if (cfg.manifest_path.empty()) throw std::runtime_error("ingest: no manifest configured");
    IngestResult result = ingest_manifest(cfg.manifest_path,
                                          manifest_format_for(cfg.manifest_path));
    ValidationReport report = validate(result.corpus);

    fs::create_directories(cfg.out_dir);
    write_file(cfg.out_dir / "validation_report.json", to_json(report));
    write_file(cfg.out_dir / "rejections.json", rejections_to_json(result.rejections));

    std::cout << "ingested " << result.corpus.records.size() << " records in "
              << result.corpus.shards.size() << " shards; " << result.rejections.size()
              << " rejected rows; " << report.violations.size() << " violations\n";
    return 0;
}

int cmd_filter(const RunConfig& cfg) {
    if (cfg.manifest_path.empty()) throw std::runtime_error("filter: no manifest configured");
    Corpus corpus = load_corpus_file(cfg.manifest_path);

    FilterOutcome sanitation = apply_sanitation(corpus);
    Corpus sanitized = subset_corpus(corpus, sanitation.kept);
    StageFlowReport flow = stage_flow_report(sanitized, cfg.stages, cfg.buckets);

    // Sanitation rows prepend the stage table so the full contraction is visible.
    StageFlowReport full;
    {
        std::map<Branch, StageFlowRow> rows;
        for (const ClipRecord& r : corpus.records) {
            auto [it, inserted] = rows.try_emplace(r.branch);
            if (inserted) {
                it->second.stage_id = "sanitation";
                it->second.branch = r.branch;
            }
            ++it->second.entering;
        }
        for (const std::string& id : sanitation.kept) ++rows[corpus.at(id).branch].kept;
        for (const Drop& d : sanitation.dropped)
            ++rows[corpus.at(d.clip_id).branch]
                  .dropped_by_reason[std::string(to_string(d.reason))];
        for (auto& [branch, row] : rows) full.rows.push_back(row);
    }
    full.rows.insert(full.rows.end(), flow.rows.begin(), flow.rows.end());
    full.final_kept = flow.final_kept;

    // Overall outcome: a clip is dropped with the reason of the step that
    // removed it.
    FilterOutcome overall;
    overall.kept = flow.final_kept;
    overall.dropped = sanitation.dropped;
    {
        std::set<std::string> alive(sanitation.kept.begin(), sanitation.kept.end());
        Corpus current = sanitized;
        for (const StageConfig& stage : cfg.stages) {
            FilterOutcome outcome = apply_stage_filter(current, stage, cfg.buckets);
            for (const Drop& d : outcome.dropped) overall.dropped.push_back(d);
            current = subset_corpus(current, outcome.kept);
        }
        std::sort(overall.dropped.begin(), overall.dropped.end(),
                  [](const Drop& a, const Drop& b) { return a.clip_id < b.clip_id; });
    }

    Corpus filtered = subset_corpus(corpus, flow.final_kept);

    fs::create_directories(cfg.out_dir);
    write_manifest(filtered, cfg.out_dir / "filtered_manifest.jsonl", ManifestFormat::Jsonl);
    write_file(cfg.out_dir / "stage_flow.csv", to_csv(full));
    write_file(cfg.out_dir / "stage_flow.json", to_json(full));
    write_file(cfg.out_dir / "filter_outcome.json", to_json(overall));

    // Re-validate: the written manifest must round-trip clean.
    Corpus reread = load_corpus_file(cfg.out_dir / "filtered_manifest.jsonl");
    ValidationReport check = validate(reread);
    if (!check.ok() || reread.records.size() != filtered.records.size())
        throw std::runtime_error("filter: re-validation of filtered manifest failed");

    std::cout << "filter kept " << filtered.records.size() << " of " << corpus.records.size()
              << " records across sanitation + " << cfg.stages.size() << " stages\n";
    return 0;
}

int cmd_dedup(const RunConfig& cfg) {
    fs::path input = cfg.out_dir / "filtered_manifest.jsonl";
    require_artifact(input, "filter");
    Corpus corpus = load_corpus_file(input);

    DedupDecision decision;
    if (cfg.dedup_mode == "pairs") {
        if (cfg.pairs_csv.empty())
            throw std::runtime_error("dedup: mode 'pairs' needs dedup.pairs_csv in the config");
        std::vector<SimilarPair> pairs = read_pairs_csv(cfg.pairs_csv);
        decision = select_representatives(group_pairs(pairs), corpus, cfg.dedup_threshold);
    } else if (cfg.dedup_mode == "embeddings") {
        PairScan scan = find_duplicate_pairs(corpus, cfg.dedup_threshold);
        if (scan.no_embeddings)
            std::cerr << "warning: no records carry embeddings; dedup removes nothing\n";
        decision = select_representatives(group_pairs(scan.pairs), corpus, cfg.dedup_threshold);
    } else {
        throw std::runtime_error("dedup: unknown mode '" + cfg.dedup_mode + "'");
    }

    Corpus deduped = subset_corpus(corpus, decision.kept);
    write_file(cfg.out_dir / "dedup_decision.json", to_json(decision));
    write_manifest(deduped, cfg.out_dir / "deduped_manifest.jsonl", ManifestFormat::Jsonl);

    Corpus reread = load_corpus_file(cfg.out_dir / "deduped_manifest.jsonl");
    if (!validate(reread).ok() || reread.records.size() != decision.kept.size())
        throw std::runtime_error("dedup: re-validation of deduped manifest failed");

    std::cout << "dedup removed " << decision.removed.size() << " of " << corpus.records.size()
              << " records in " << decision.groups.size() << " duplicate groups\n";
    return 0;
}

Corpus planning_corpus(const RunConfig& cfg) {
    fs::path deduped = cfg.out_dir / "deduped_manifest.jsonl";
    fs::path filtered = cfg.out_dir / "filtered_manifest.jsonl";
    if (fs::exists(deduped)) return load_corpus_file(deduped);
    if (fs::exists(filtered)) return load_corpus_file(filtered);
    throw std::runtime_error("missing prerequisite artifact " + deduped.string() +
                             " (or filtered_manifest.jsonl); run `shardplan filter` and "
                             "`shardplan dedup` first");
}

void write_plans(const std::vector<PlanFile>& plans, const fs::path& dir) {
    fs::create_directories(dir);
    for (const PlanFile& p : plans) {
        write_plan_file(p, dir / ("rank" + std::to_string(p.rank) + ".plan"));
    }
}

void revalidate_plans(const fs::path& dir, const Corpus& corpus, int ranks) {
    std::set<std::string> planned;
    std::size_t entries = 0;
    for (int r = 0; r < ranks; ++r) {
        PlanFile plan = read_plan_file(dir / ("rank" + std::to_string(r) + ".plan"));
        for (const PlanEntry& e : plan.entries) {
            if (!planned.insert(e.clip_id).second)
                throw std::runtime_error("plan re-validation: clip '" + e.clip_id +
                                         "' appears twice");
            ++entries;
        }
    }
    if (entries != corpus.records.size())
        throw std::runtime_error("plan re-validation: " + std::to_string(entries) +
                                 " planned entries vs " +
                                 std::to_string(corpus.records.size()) + " corpus records");
}

int cmd_plan(const RunConfig& cfg, const std::string& mode) {
    Corpus corpus = planning_corpus(cfg);
    std::uint64_t epoch_seed = derive_seed(cfg.seed, "planner.epoch");

    std::vector<PlanSummary> summaries;
    Assignment greedy = greedy_assign(corpus, cfg.ranks, cfg.buckets);
    {
        CountMatrix counts = count_matrix(greedy, corpus, cfg.buckets);
        summaries.push_back({"greedy", objective(counts), per_bucket_cv(counts),
                             counts.index.buckets});
    }

    if (mode == "greedy" || mode == "all") {
        std::vector<PlanFile> plans = build_plan(greedy, corpus, epoch_seed, cfg.buckets);
        write_plans(plans, cfg.out_dir / "plans" / "greedy");
        revalidate_plans(cfg.out_dir / "plans" / "greedy", corpus, cfg.ranks);
    }
    if (mode == "sa" || mode == "all") {
        SaConfig sa_cfg = cfg.sa;
        sa_cfg.seed = derive_seed(cfg.seed, "planner.sa");
        SaOutcome sa = sa_refine(greedy, corpus, sa_cfg, cfg.buckets);
        if (!sa.notice.empty()) std::cerr << "notice: " << sa.notice << "\n";
        CountMatrix counts = count_matrix(sa.assignment, corpus, cfg.buckets);
        summaries.push_back({"sa", objective(counts), per_bucket_cv(counts),
                             counts.index.buckets});
        std::vector<PlanFile> plans = build_plan(sa.assignment, corpus, epoch_seed, cfg.buckets);
        write_plans(plans, cfg.out_dir / "plans" / "sa");
        revalidate_plans(cfg.out_dir / "plans" / "sa", corpus, cfg.ranks);
    }

    write_file(cfg.out_dir / "objective_log.json", to_json(summaries));
    for (const PlanSummary& s : summaries) {
        std::cout << s.method << " objective " << format_double(s.objective) << "\n";
    }
    return 0;
}

std::vector<PlanFile> read_plans(const fs::path& dir, int ranks, const std::string& step) {
    std::vector<PlanFile> plans;
    for (int r = 0; r < ranks; ++r) {
        fs::path p = dir / ("rank" + std::to_string(r) + ".plan");
        require_artifact(p, step);
        plans.push_back(read_plan_file(p));
    }
    return plans;
}

int cmd_simulate(const RunConfig& cfg, const std::string& mode) {
    SimConfig sim = cfg.sim;
    sim.rank_count = cfg.ranks;

    if (mode == "baseline" || mode == "all") {
        Corpus corpus = planning_corpus(cfg);
        sim.seeds.clear();
        for (int i = 0; i < cfg.baseline_seed_count; ++i)
            sim.seeds.push_back(derive_seed(cfg.seed, "simulator.baseline",
                                            static_cast<std::uint64_t>(i)));
        SimReport report = simulate_baseline(corpus, sim, cfg.buckets);
        write_file(cfg.out_dir / "sim_baseline.json", to_json(report));
        std::cout << "baseline utilization " << format_double(report.utilization) << "\n";
    }
    for (const char* method : {"greedy", "sa"}) {
        if (mode != method && mode != "all") continue;
        std::vector<PlanFile> plans =
            read_plans(cfg.out_dir / "plans" / method, cfg.ranks, "plan");
        SimReport report = simulate_planned(plans, sim);
        write_file(cfg.out_dir / ("sim_" + std::string(method) + ".json"), to_json(report));
        std::cout << method << " utilization " << format_double(report.utilization) << "\n";
    }
    return 0;
}

int cmd_flops(const RunConfig& cfg) {
    TokenCount tokens =
        token_count(cfg.flops_width, cfg.flops_height, cfg.flops_frames, cfg.geometry);

    nlohmann::ordered_json j;
    j["width"] = cfg.flops_width;
    j["height"] = cfg.flops_height;
    j["frames"] = cfg.flops_frames;
    j["video_tokens"] = tokens.video_tokens;
    j["text_tokens"] = tokens.text_tokens;
    j["total_tokens"] = tokens.total;

    for (bool attention : {true, false}) {
        FlopsOptions options{attention};
        FlopsBreakdown full = flops_estimate(cfg.geometry, tokens, std::nullopt, options);
        FlopsBreakdown routed = flops_estimate(cfg.geometry, tokens, cfg.tread, options);
        Speedup speedup = speedup_estimate(full.total, routed.total, cfg.overhead_factor);

        nlohmann::ordered_json model;
        model["full"] = json::parse(to_json(full));
        model["tread"] = json::parse(to_json(routed));
        model["reduction"] = 1.0 - routed.total / full.total;
        model["speedup_theoretical"] = speedup.theoretical;
        model["speedup_adjusted"] = speedup.adjusted;
        j[attention ? "attention_inclusive" : "linear"] = model;
    }

    fs::create_directories(cfg.out_dir);
    write_file(cfg.out_dir / "flops.json", j.dump(2) + "\n");
    std::cout << "tokens " << tokens.total << "; linear-model reduction "
              << format_double(j["linear"]["reduction"].get<double>()) << "\n";
    return 0;
}

int cmd_report(const RunConfig& cfg, const std::string& mode) {
    std::vector<MethodRow> rows;
    double baseline_steps = 0.0;

    auto load_sim = [&](const std::string& name) -> std::optional<json> {
        fs::path p = cfg.out_dir / ("sim_" + name + ".json");
        if (!fs::exists(p)) return std::nullopt;
        return json::parse(read_file(p));
    };

    std::optional<json> baseline = load_sim("baseline");
    if (!baseline)
        throw std::runtime_error("missing prerequisite artifact " +
                                 (cfg.out_dir / "sim_baseline.json").string() +
                                 "; run `shardplan simulate` first");
    baseline_steps = baseline->at("total_steps").get<double>();

    // Fixed row order: baseline, greedy, sa.
    for (const char* method : {"baseline", "greedy", "sa"}) {
        if (mode != "all" && mode != method && std::string(method) != "baseline") continue;
        std::optional<json> sim = load_sim(method);
        if (!sim) {
            if (mode == "all")
                throw std::runtime_error("missing prerequisite artifact " +
                                         (cfg.out_dir / ("sim_" + std::string(method) + ".json"))
                                             .string() +
                                         "; run `shardplan simulate` first");
            continue;
        }
        MethodRow row;
        row.method = method;
        row.utilization = sim->at("utilization").get<double>();
        row.sequential_fraction =
            sim->at("locality").at("sequential_fraction").get<double>();
        double steps = sim->at("total_steps").get<double>();
        row.steps_per_epoch_relative = baseline_steps > 0 ? steps / baseline_steps : 0.0;
        rows.push_back(row);
    }

    write_file(cfg.out_dir / "report.csv", methods_to_csv(rows));
    write_file(cfg.out_dir / "report.json", methods_to_json(rows));
    std::cout << methods_to_csv(rows);
    return 0;
}

int cmd_gen_corpus(const RunConfig& cfg) {
    GeneratorSpec spec = resolve_generator(cfg);
    GeneratedCorpus generated = generate_synthetic_corpus(spec, cfg.seed);

    fs::create_directories(cfg.out_dir);
    write_manifest(generated.corpus, cfg.out_dir / "manifest.jsonl", ManifestFormat::Jsonl);
    write_file(cfg.out_dir / "tally.json", tally_to_json(generated.tally));
    write_file(cfg.out_dir / "gen_spec.json", generator_spec_to_json(spec));

    Corpus reread = load_corpus_file(cfg.out_dir / "manifest.jsonl");
    if (!validate(reread).ok() || reread.records.size() != generated.corpus.records.size())
        throw std::runtime_error("gen-corpus: re-validation of emitted manifest failed");

    std::cout << "generated " << generated.tally.total << " clips in "
              << generated.corpus.shards.size() << " shards\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"corpus curation, shard planning, and epoch simulation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::string out_override;
    std::string mode = "all";
    std::string manifest_override;

    app.add_option("--config", config_path, "run configuration JSON");
    app.add_option("--seed", seed_override, "global seed (overrides config)");
    app.add_option("--out", out_override, "output directory (overrides config)");
    app.add_option("--manifest", manifest_override, "manifest path (overrides config)");
    app.add_option("--mode", mode, "baseline|greedy|sa|all")
        ->check(CLI::IsMember({"baseline", "greedy", "sa", "all"}));

    auto* ingest = app.add_subcommand("ingest", "read and validate a manifest");
    auto* filter = app.add_subcommand("filter", "sanitation + stage-wise filtering");
    auto* dedup = app.add_subcommand("dedup", "near-duplicate grouping and selection");
    auto* plan = app.add_subcommand("plan", "greedy + SA shard-to-rank planning");
    auto* simulate = app.add_subcommand("simulate", "synchronized epoch simulation");
    auto* flops = app.add_subcommand("flops", "token and FLOPs cost model");
    auto* report = app.add_subcommand("report", "consolidated utilization table");
    auto* gen = app.add_subcommand("gen-corpus", "emit a synthetic manifest + tally");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path.empty() ? fs::path{} : fs::path(config_path));
        if (seed_override) cfg.seed = *seed_override;
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (!manifest_override.empty()) cfg.manifest_path = manifest_override;

        if (ingest->parsed()) return cmd_ingest(cfg);
        if (filter->parsed()) return cmd_filter(cfg);
        if (dedup->parsed()) return cmd_dedup(cfg);
        if (plan->parsed()) return cmd_plan(cfg, mode == "baseline" ? "all" : mode);
        if (simulate->parsed()) return cmd_simulate(cfg, mode);
        if (flops->parsed()) return cmd_flops(cfg);
        if (report->parsed()) return cmd_report(cfg, mode);
        if (gen->parsed()) return cmd_gen_corpus(cfg);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
