#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "shardplan/dedup.hpp"
#include "test_support.hpp"

using namespace shardplan;
using shardplan::test::corpus_of;

namespace {

ClipRecord with_embedding(ClipRecord r, std::vector<double> e) {
    r.embedding = std::move(e);
    return r;
}

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm = 0.0;
    for (double& x : v) {
        x = uniform01(rng) * 2.0 - 1.0;
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

}  // namespace

TEST_CASE("cosine similarity: identities and hand values") {
    std::vector<double> a{1, 2, 2};
    CHECK(cosine_similarity(a, a) == 1.0);

    std::vector<double> e1{1, 0}, e2{0, 1};
    CHECK(cosine_similarity(e1, e2) == 0.0);

    std::vector<double> b{2, 1, 2};
    CHECK(cosine_similarity(a, b) == doctest::Approx(8.0 / 9.0).epsilon(1e-12));

    std::vector<double> zero{0, 0, 0};
    CHECK_THROWS_AS(cosine_similarity(a, zero), std::invalid_argument);
    CHECK_THROWS_AS(cosine_similarity(e1, a), std::invalid_argument);
}

TEST_CASE("pair scan: identical embeddings pair up, threshold is strict") {
    ClipRecord a = with_embedding(test::make_image("a", "s", 200, 200), {1, 0});
    ClipRecord b = with_embedding(test::make_image("b", "s", 200, 200), {1, 0});
    Corpus corpus = corpus_of({a, b});
    PairScan scan = find_duplicate_pairs(corpus, 0.9);
    REQUIRE(scan.pairs.size() == 1);
    CHECK(scan.pairs[0].a == "a");
    CHECK(scan.pairs[0].b == "b");

    // exact-threshold pair: (3,4) vs (4,3) has cosine exactly 24/25
    ClipRecord c = with_embedding(test::make_image("c", "s", 200, 200), {3, 4});
    ClipRecord d = with_embedding(test::make_image("d", "s", 200, 200), {4, 3});
    Corpus corpus2 = corpus_of({c, d});
    CHECK(cosine_similarity(*corpus2.records[0].embedding, *corpus2.records[1].embedding) ==
          0.96);
    CHECK(find_duplicate_pairs(corpus2, 0.96).pairs.empty());       // == excluded
    CHECK(find_duplicate_pairs(corpus2, 0.96 - 1e-9).pairs.size() == 1);
}

TEST_CASE("pair scan: no embeddings sets the warning flag") {
    Corpus corpus = corpus_of({test::make_image("a", "s", 200, 200)});
    PairScan scan = find_duplicate_pairs(corpus, 0.9);
    CHECK(scan.no_embeddings);
    CHECK(scan.pairs.empty());
}

TEST_CASE("pair scan: agrees with an independent quadratic oracle") {
    Rng rng = make_rng(2024);
    std::vector<ClipRecord> records;
    for (int i = 0; i < 50; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "clip%02d", i);
        records.push_back(with_embedding(test::make_image(id, "s", 200, 200),
                                         random_unit(rng, 512)));
    }
    // plant a few tight duplicates so the scan has something to find
    for (int i = 0; i < 5; ++i) {
        std::vector<double> near = *records[static_cast<std::size_t>(i)].embedding;
        near[0] += 0.01;
        records.push_back(with_embedding(
            test::make_image("dup" + std::to_string(i), "s", 200, 200), std::move(near)));
    }
    Corpus corpus = corpus_of(records);
    const double threshold = 0.9;

    PairScan scan = find_duplicate_pairs(corpus, threshold);

    // oracle: plain double loop over clip-id-sorted records
    std::vector<const ClipRecord*> sorted;
    for (const ClipRecord& r : corpus.records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const ClipRecord* x, const ClipRecord* y) { return x->clip_id < y->clip_id; });
    std::vector<std::pair<std::string, std::string>> expected;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        for (std::size_t j = i + 1; j < sorted.size(); ++j) {
            if (cosine_similarity(*sorted[i]->embedding, *sorted[j]->embedding) > threshold)
                expected.emplace_back(sorted[i]->clip_id, sorted[j]->clip_id);
        }
    }
    REQUIRE(scan.pairs.size() == expected.size());
    CHECK(!expected.empty());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(scan.pairs[i].a == expected[i].first);
        CHECK(scan.pairs[i].b == expected[i].second);
    }
}

TEST_CASE("group_pairs: transitive merge, singletons omitted") {
    std::vector<SimilarPair> pairs{{"A", "B", 0.95}, {"B", "C", 0.95}};
    std::vector<DuplicateGroup> groups = group_pairs(pairs);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].member_ids == std::vector<std::string>{"A", "B", "C"});

    CHECK(group_pairs({}).empty());
}

TEST_CASE("group_pairs: pair order cannot matter") {
    Rng rng = make_rng(7);
    std::vector<SimilarPair> pairs;
    for (int i = 0; i < 30; ++i) {
        int a = static_cast<int>(uniform_below(rng, 20));
        int b = static_cast<int>(uniform_below(rng, 20));
        if (a == b) continue;
        std::string sa = "n" + std::to_string(std::min(a, b));
        std::string sb = "n" + std::to_string(std::max(a, b));
        pairs.push_back({sa, sb, 0.95});
    }
    auto forward = group_pairs(pairs);
    std::reverse(pairs.begin(), pairs.end());
    auto backward = group_pairs(pairs);
    REQUIRE(forward.size() == backward.size());
    for (std::size_t i = 0; i < forward.size(); ++i) {
        CHECK(forward[i].member_ids == backward[i].member_ids);
    }
}

TEST_CASE("group_pairs: components equal the BFS oracle on random graphs") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Rng rng = make_rng(seed);
        std::size_t n = 10 + uniform_below(rng, 50);
        std::vector<SimilarPair> pairs;
        std::size_t edges = uniform_below(rng, n * 2);
        for (std::size_t e = 0; e < edges; ++e) {
            std::size_t a = uniform_below(rng, n), b = uniform_below(rng, n);
            if (a == b) continue;
            std::string sa = "v" + std::to_string(std::min(a, b));
            std::string sb = "v" + std::to_string(std::max(a, b));
            pairs.push_back({sa, sb, 0.95});
        }
        std::vector<DuplicateGroup> groups = group_pairs(pairs);
        std::vector<std::vector<std::string>> expected = test::bfs_components(pairs);
        REQUIRE(groups.size() == expected.size());
        for (std::size_t i = 0; i < groups.size(); ++i) {
            CHECK(groups[i].member_ids == expected[i]);
        }
    }
}

TEST_CASE("representative score: min-max endpoints and degenerate ranges") {
    ClipRecord a = test::make_video("a", "s", 60, 1920, 1080, 30.0);
    a.filesize_bytes = 5000;
    ClipRecord b = test::make_video("b", "s", 60, 640, 360, 24.0);
    b.filesize_bytes = 1000;
    std::vector<const ClipRecord*> group{&a, &b};

    CHECK(representative_score(a, group) == 1.0);  // dominates every axis
    CHECK(representative_score(b, group) == 0.0);

    // identical members: every axis is degenerate, everyone scores 1.0
    ClipRecord c = a;
    c.clip_id = "c";
    std::vector<const ClipRecord*> twins{&a, &c};
    CHECK(representative_score(a, twins) == 1.0);
    CHECK(representative_score(c, twins) == 1.0);
}

TEST_CASE("representative score: weight arithmetic") {
    // A wins res and filesize, B wins fps -> s(A) = 0.5 + 0.2, s(B) = 0.3
    ClipRecord a = test::make_video("a", "s", 60, 1920, 1080, 24.0);
    a.filesize_bytes = 5000;
    ClipRecord b = test::make_video("b", "s", 60, 640, 360, 30.0);
    b.filesize_bytes = 1000;
    std::vector<const ClipRecord*> group{&a, &b};
    CHECK(representative_score(a, group) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(representative_score(b, group) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("select_representatives: keeps the argmax, removes the rest") {
    ClipRecord a = test::make_video("a", "s", 60, 1920, 1080, 30.0);
    a.filesize_bytes = 5000;
    ClipRecord b = test::make_video("b", "s", 60, 640, 360, 24.0);
    ClipRecord lone = test::make_video("lone", "s", 60, 640, 360);
    Corpus corpus = corpus_of({a, b, lone});

    DedupDecision decision =
        select_representatives({{{"a", "b"}, {}}}, corpus, 0.9);
    CHECK(decision.kept == std::vector<std::string>{"a", "lone"});
    CHECK(decision.removed == std::vector<std::string>{"b"});
    CHECK(decision.groups[0].representative_id == "a");
}

TEST_CASE("select_representatives: equals exhaustive argmax on random groups") {
    Rng rng = make_rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t size = 2 + uniform_below(rng, 7);
        std::vector<ClipRecord> records;
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < size; ++i) {
            std::string id = "g" + std::to_string(i);
            ClipRecord r = test::make_video(id, "s", 60, 320 + static_cast<int>(uniform_below(rng, 1600)),
                                            240 + static_cast<int>(uniform_below(rng, 900)),
                                            12.0 + static_cast<double>(uniform_below(rng, 48)));
            r.filesize_bytes = 1 + static_cast<std::int64_t>(uniform_below(rng, 100000));
            records.push_back(r);
            ids.push_back(id);
        }
        Corpus corpus = corpus_of(records);

        DedupDecision decision = select_representatives({{ids, {}}}, corpus, 0.9);

        // oracle: score every member independently, take max then smallest id
        std::vector<const ClipRecord*> group;
        for (const ClipRecord& r : corpus.records) group.push_back(&r);
        std::string expected;
        double best = -1.0;
        for (const ClipRecord& r : corpus.records) {
            double s = representative_score(r, group);
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
            if (s > best || (s == best && r.clip_id < expected)) {
                best = s;
                expected = r.clip_id;
            }
        }
        CHECK(decision.groups[0].representative_id == expected);
    }
}

TEST_CASE("dedup: idempotent and monotone in the threshold") {
    Rng rng = make_rng(88);
    std::vector<ClipRecord> records;
    for (int i = 0; i < 30; ++i) {
        records.push_back(with_embedding(
            test::make_image("c" + std::to_string(i), "s", 200 + i, 200), random_unit(rng, 8)));
    }
    for (int i = 0; i < 10; ++i) {
        std::vector<double> near = *records[static_cast<std::size_t>(i)].embedding;
        near[1] += 0.02;
        records.push_back(
            with_embedding(test::make_image("d" + std::to_string(i), "s", 210, 200),
                           std::move(near)));
    }
    Corpus corpus = corpus_of(records);

    DedupDecision first = dedup_corpus(corpus, 0.9);
    Corpus survivors = subset_corpus(corpus, first.kept);
    DedupDecision second = dedup_corpus(survivors, 0.9);
    CHECK(second.removed.empty());

    DedupDecision strict = dedup_corpus(corpus, 0.99);
    CHECK(strict.removed.size() <= first.removed.size());
    DedupDecision loose = dedup_corpus(corpus, 0.5);
    CHECK(loose.removed.size() >= first.removed.size());
}
