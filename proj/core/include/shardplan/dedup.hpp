#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "shardplan/corpus.hpp"

namespace shardplan {

/// a.b / (|a||b|), clamped to [-1, 1] against rounding. Throws
/// std::invalid_argument on dimension mismatch or zero vectors.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct SimilarPair {
    std::string a;  // a < b by clip_id
    std::string b;
    double similarity = 0.0;
};

struct PairScan {
    std::vector<SimilarPair> pairs;  // sorted by (a, b)
    bool no_embeddings = false;      // set when no record carried an embedding
};

/// Exact all-pairs scan over records carrying embeddings. A pair is reported
/// iff similarity strictly exceeds the threshold.
PairScan find_duplicate_pairs(const Corpus& corpus, double threshold = 0.9);

struct DuplicateGroup {
    std::vector<std::string> member_ids;  // sorted, size >= 2
    std::string representative_id;        // empty until selected
};

/// Connected components of the pair graph via union-find. Singletons are
/// omitted; groups are sorted by their smallest member.
std::vector<DuplicateGroup> group_pairs(const std::vector<SimilarPair>& pairs);

/// Group-normalized weighted score 0.5*res^ + 0.3*fps^ + 0.2*filesize^ where
/// each hat term is min-max normalized inside the group (res = width*height).
/// A degenerate axis (max == min) contributes 1.0 for every member.
double representative_score(const ClipRecord& record,
                            std::span<const ClipRecord* const> group);

struct DedupDecision {
    std::vector<std::string> kept;     // sorted
    std::vector<std::string> removed;  // sorted
    std::vector<DuplicateGroup> groups;
    double threshold_used = 0.9;
};

/// Keeps the argmax-scored member of each group (ties to the smallest
/// clip_id); everything else in the group is removed.
DedupDecision select_representatives(std::vector<DuplicateGroup> groups,
                                     const Corpus& corpus, double threshold_used);

/// find_duplicate_pairs + group_pairs + select_representatives.
DedupDecision dedup_corpus(const Corpus& corpus, double threshold = 0.9);

/// Precomputed-pairs path: CSV with header clip_a,clip_b,similarity.
std::vector<SimilarPair> read_pairs_csv(const std::filesystem::path& path);

}  // namespace shardplan
