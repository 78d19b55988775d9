#include <doctest.h>

#include <algorithm>
#include <set>

#include "shardplan/filter.hpp"
#include "shardplan/synthetic.hpp"
#include "test_support.hpp"

using namespace shardplan;
using shardplan::test::corpus_of;

namespace {

bool was_dropped(const FilterOutcome& out, const std::string& id, DropReason reason) {
    for (const Drop& d : out.dropped) {
        if (d.clip_id == id && d.reason == reason) return true;
    }
    return false;
}

bool was_kept(const FilterOutcome& out, const std::string& id) {
    return std::binary_search(out.kept.begin(), out.kept.end(), id);
}

std::set<std::string> as_set(const std::vector<std::string>& v) {
    return {v.begin(), v.end()};
}

}  // namespace

TEST_CASE("luminance: coefficient formula") {
    CHECK(luminance(0, 0, 0) == 0.0);
    CHECK(luminance(255, 255, 255) == doctest::Approx(255.0).epsilon(1e-12));
    CHECK(luminance(255, 0, 0) == doctest::Approx(54.213).epsilon(1e-9));
    CHECK_THROWS_AS(luminance(-1, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(luminance(0, 256, 0), std::invalid_argument);
}

TEST_CASE("luminance: linear under channel scaling") {
    Rng rng = make_rng(123);
    for (int i = 0; i < 100; ++i) {
        double r = uniform01(rng) * 255, g = uniform01(rng) * 255, b = uniform01(rng) * 255;
        double k = uniform01(rng);
        CHECK(luminance(k * r, k * g, k * b) ==
              doctest::Approx(k * luminance(r, g, b)).epsilon(1e-12));
    }
}

TEST_CASE("clip_luminance: pooled mean over all pixels of all frames") {
    std::vector<std::vector<Rgb>> white = {{{255, 255, 255}}};
    CHECK(clip_luminance(white) == doctest::Approx(255.0).epsilon(1e-12));

    std::vector<std::vector<Rgb>> two = {{{0, 0, 0}}, {{255, 255, 255}}};
    CHECK(clip_luminance(two) == doctest::Approx(127.5).epsilon(1e-12));

    std::vector<std::vector<Rgb>> quad = {
        {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {0, 0, 0}}};
    CHECK(clip_luminance(quad) == doctest::Approx(63.75).epsilon(1e-9));

    CHECK_THROWS_AS(clip_luminance({}), std::invalid_argument);
}

TEST_CASE("sanitation: hard-removal tags and the two-second floor") {
    ClipRecord nsfw = test::make_image("nsfw", "s", 200, 200);
    nsfw.tags.nsfw = true;
    ClipRecord short_clip = test::make_video("short", "s", 40, 640, 360, 24.0);
    ClipRecord clean = test::make_image("clean", "s", 200, 200);
    Corpus corpus = corpus_of({nsfw, short_clip, clean});

    FilterOutcome out = apply_sanitation(corpus);
    CHECK(was_dropped(out, "nsfw", DropReason::Nsfw));
    CHECK(was_dropped(out, "short", DropReason::MinDuration));
    CHECK(was_kept(out, "clean"));
    CHECK(out.kept.size() + out.dropped.size() == corpus.records.size());
}

TEST_CASE("stage filter: quality gate excludes low quality at 480p and above") {
    ClipRecord low = test::make_video("low", "s", 60, 854, 480);
    low.tags.quality = Quality::Low;
    ClipRecord mid = test::make_video("mid", "s", 60, 854, 480);
    Corpus corpus = corpus_of({low, mid});

    std::vector<StageConfig> defaults = default_stage_configs();
    const StageConfig& stage480 = defaults[2];
    REQUIRE(stage480.target_resolution == "480p");

    FilterOutcome out = apply_stage_filter(corpus, stage480, BucketRules{});
    CHECK(was_dropped(out, "low", DropReason::Quality));
    CHECK(was_kept(out, "mid"));
}

TEST_CASE("stage filter: a stage with no thresholds keeps everything") {
    Corpus corpus = corpus_of({test::make_video("a", "s", 60, 640, 360),
                               test::make_image("b", "s", 150, 150)});
    StageConfig identity;
    identity.stage_id = "identity";
    identity.min_duration_s = 0.0;
    FilterOutcome out = apply_stage_filter(corpus, identity, BucketRules{});
    CHECK(out.kept.size() == corpus.records.size());
    CHECK(out.dropped.empty());
}

TEST_CASE("stage filter: motion band is two-tailed") {
    ClipRecord lo = test::make_video("lo", "s", 60, 640, 360);
    lo.scores.motion = 0.1;
    ClipRecord mid = test::make_video("mid", "s", 60, 640, 360);
    mid.scores.motion = 0.5;
    ClipRecord hi = test::make_video("hi", "s", 60, 640, 360);
    hi.scores.motion = 0.9;
    Corpus corpus = corpus_of({lo, mid, hi});

    StageConfig stage;
    stage.stage_id = "motion";
    stage.min_duration_s = 0.0;
    stage.motion_band = Band{0.2, 0.8};
    FilterOutcome out = apply_stage_filter(corpus, stage, BucketRules{});
    CHECK(out.kept == std::vector<std::string>{"mid"});
    CHECK(was_dropped(out, "lo", DropReason::Motion));
    CHECK(was_dropped(out, "hi", DropReason::Motion));
}

TEST_CASE("stage filter: a required score that is missing drops the record") {
    ClipRecord r = test::make_video("a", "s", 60, 640, 360);
    r.scores.aesthetic.reset();
    Corpus corpus = corpus_of({r});
    StageConfig stage;
    stage.stage_id = "aes";
    stage.min_duration_s = 0.0;
    stage.min_aesthetic = 4.0;
    FilterOutcome out = apply_stage_filter(corpus, stage, BucketRules{});
    CHECK(was_dropped(out, "a", DropReason::MissingScore));
}

TEST_CASE("stage filter: rules act independently, so order cannot matter") {
    GeneratedCorpus generated = generate_synthetic_corpus(GeneratorSpec::small_default(), 21);
    const Corpus& corpus = generated.corpus;
    BucketRules rules;

    StageConfig combined;
    combined.stage_id = "combined";
    combined.min_duration_s = 0.0;
    combined.min_aesthetic = 4.0;
    combined.motion_band = Band{0.1, 0.9};
    combined.quality_gate = Quality::Mid;

    // intersection of the single-rule kept sets must equal the combined kept set
    auto kept_with = [&](auto setup) {
        StageConfig stage;
        stage.stage_id = "single";
        stage.min_duration_s = 0.0;
        setup(stage);
        return as_set(apply_stage_filter(corpus, stage, rules).kept);
    };
    std::set<std::string> a = kept_with([](StageConfig& s) { s.min_aesthetic = 4.0; });
    std::set<std::string> b = kept_with([](StageConfig& s) { s.motion_band = Band{0.1, 0.9}; });
    std::set<std::string> c = kept_with([](StageConfig& s) { s.quality_gate = Quality::Mid; });

    std::set<std::string> expected;
    for (const std::string& id : a) {
        if (b.contains(id) && c.contains(id)) expected.insert(id);
    }
    CHECK(as_set(apply_stage_filter(corpus, combined, rules).kept) == expected);
}

TEST_CASE("stage flow: single pass-through stage reports entering == kept") {
    Corpus corpus = corpus_of({test::make_video("a", "s", 60, 640, 360),
                               test::make_image("b", "s", 150, 150)});
    StageConfig identity;
    identity.stage_id = "identity";
    identity.min_duration_s = 0.0;
    StageFlowReport report = stage_flow_report(corpus, {identity}, BucketRules{});
    for (const StageFlowRow& row : report.rows) CHECK(row.entering == row.kept);
}

TEST_CASE("stage flow: a stage that drops everything reports zero kept with reasons") {
    Corpus corpus = corpus_of({test::make_video("a", "s", 60, 640, 360),
                               test::make_video("b", "s", 60, 640, 360)});
    StageConfig pass;
    pass.stage_id = "pass";
    pass.min_duration_s = 0.0;
    StageConfig wall;
    wall.stage_id = "wall";
    wall.min_duration_s = 0.0;
    wall.min_aesthetic = 100.0;

    StageFlowReport report = stage_flow_report(corpus, {pass, wall}, BucketRules{});
    REQUIRE(report.rows.size() == 2);
    const StageFlowRow& last = report.rows.back();
    CHECK(last.stage_id == "wall");
    CHECK(last.kept == 0);
    CHECK(last.dropped_by_reason.at("aesthetic") == 2);
    CHECK(report.final_kept.empty());
}

TEST_CASE("stage flow: chained counts match per-stage set algebra") {
    GeneratedCorpus generated = generate_synthetic_corpus(GeneratorSpec::small_default(), 33);
    const Corpus& corpus = generated.corpus;
    BucketRules rules;
    std::vector<StageConfig> stages = default_stage_configs();

    StageFlowReport report = stage_flow_report(corpus, stages, rules);

    // oracle: filter each stage in isolation over the whole corpus, then chain sets
    std::set<std::string> alive;
    for (const ClipRecord& r : corpus.records) alive.insert(r.clip_id);
    std::vector<std::int64_t> expected_kept;
    for (const StageConfig& stage : stages) {
        std::set<std::string> stage_kept = as_set(apply_stage_filter(corpus, stage, rules).kept);
        std::set<std::string> next;
        for (const std::string& id : alive) {
            if (stage_kept.contains(id)) next.insert(id);
        }
        alive = std::move(next);
        expected_kept.push_back(static_cast<std::int64_t>(alive.size()));
    }

    for (std::size_t i = 0; i < stages.size(); ++i) {
        std::int64_t kept = 0;
        for (const StageFlowRow& row : report.rows) {
            if (row.stage_id == stages[i].stage_id) kept += row.kept;
        }
        CHECK(kept == expected_kept[i]);
    }
    CHECK(as_set(report.final_kept) == alive);
}

TEST_CASE("filter algebra: partition and monotonicity on random stages") {
    GeneratedCorpus generated = generate_synthetic_corpus(GeneratorSpec::small_default(), 55);
    const Corpus& corpus = generated.corpus;
    BucketRules rules;
    Rng rng = make_rng(404);

    for (int trial = 0; trial < 50; ++trial) {
        StageConfig stage;
        stage.stage_id = "rand";
        stage.min_duration_s = uniform01(rng) * 3.0;
        if (uniform01(rng) < 0.5) stage.min_aesthetic = 2.0 + uniform01(rng) * 5.0;
        if (uniform01(rng) < 0.5) {
            double lo = uniform01(rng) * 100.0;
            stage.luminance_band = Band{lo, lo + uniform01(rng) * 150.0};
        }
        if (uniform01(rng) < 0.5) {
            double lo = uniform01(rng) * 0.4;
            stage.motion_band = Band{lo, lo + 0.2 + uniform01(rng) * 0.4};
        }
        if (uniform01(rng) < 0.3) stage.quality_gate = Quality::Mid;

        FilterOutcome out = apply_stage_filter(corpus, stage, rules);

        // partition
        std::set<std::string> all;
        for (const std::string& id : out.kept) CHECK(all.insert(id).second);
        for (const Drop& d : out.dropped) CHECK(all.insert(d.clip_id).second);
        CHECK(all.size() == corpus.records.size());

        // tighten one threshold: kept set can only shrink
        StageConfig tighter = stage;
        if (tighter.min_aesthetic) {
            *tighter.min_aesthetic += 0.5;
        } else {
            tighter.min_aesthetic = 5.0;
        }
        std::set<std::string> kept_before = as_set(out.kept);
        for (const std::string& id : apply_stage_filter(corpus, tighter, rules).kept) {
            CHECK(kept_before.contains(id));
        }
    }
}
