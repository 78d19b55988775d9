#include "shardplan/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "shardplan/io_util.hpp"

namespace shardplan {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_similarity: dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw std::invalid_argument("cosine_similarity: zero vector");
    double sim = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(sim, -1.0, 1.0);
}

PairScan find_duplicate_pairs(const Corpus& corpus, double threshold) {
    // Participants sorted by clip_id so pair ordering is stable.
    std::vector<const ClipRecord*> with_embedding;
    for (const ClipRecord& r : corpus.records) {
        if (r.embedding) with_embedding.push_back(&r);
    }
    std::sort(with_embedding.begin(), with_embedding.end(),
              [](const ClipRecord* a, const ClipRecord* b) { return a->clip_id < b->clip_id; });

    PairScan scan;
    if (with_embedding.empty()) {
        scan.no_embeddings = true;
        return scan;
    }

    const std::size_t n = with_embedding.size();
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

    std::vector<std::vector<SimilarPair>> partial(workers);
    auto scan_rows = [&](unsigned w) {
        std::vector<SimilarPair>& out = partial[w];
        for (std::size_t i = w; i < n; i += workers) {
            const ClipRecord& a = *with_embedding[i];
            for (std::size_t j = i + 1; j < n; ++j) {
                const ClipRecord& b = *with_embedding[j];
                double sim = cosine_similarity(*a.embedding, *b.embedding);
                if (sim > threshold) out.push_back({a.clip_id, b.clip_id, sim});
            }
        }
    };

    if (workers == 1) {
        scan_rows(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) threads.emplace_back(scan_rows, w);
        for (std::thread& t : threads) t.join();
    }

    for (auto& part : partial) {
        scan.pairs.insert(scan.pairs.end(), part.begin(), part.end());
    }
    std::sort(scan.pairs.begin(), scan.pairs.end(), [](const SimilarPair& x, const SimilarPair& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    return scan;
}

namespace {

class UnionFind {
  public:
    explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t x, std::size_t y) {
        std::size_t rx = find(x), ry = find(y);
        if (rx == ry) return;
        if (rank_[rx] < rank_[ry]) std::swap(rx, ry);
        parent_[ry] = rx;
        if (rank_[rx] == rank_[ry]) ++rank_[rx];
    }

  private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> rank_;
};

}  // namespace

std::vector<DuplicateGroup> group_pairs(const std::vector<SimilarPair>& pairs) {
    // Map ids to dense indices; sorted ids keep the numbering canonical.
    std::vector<std::string> ids;
    for (const SimilarPair& p : pairs) {
        ids.push_back(p.a);
        ids.push_back(p.b);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    std::unordered_map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);

    UnionFind uf(ids.size());
    for (const SimilarPair& p : pairs) uf.unite(index.at(p.a), index.at(p.b));

    std::unordered_map<std::size_t, std::vector<std::string>> components;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        components[uf.find(i)].push_back(ids[i]);
    }

    std::vector<DuplicateGroup> groups;
    for (auto& [root, members] : components) {
        if (members.size() < 2) continue;  // singletons stay implicit
        std::sort(members.begin(), members.end());
        groups.push_back({std::move(members), {}});
    }
    std::sort(groups.begin(), groups.end(), [](const DuplicateGroup& a, const DuplicateGroup& b) {
        return a.member_ids.front() < b.member_ids.front();
    });
    return groups;
}

namespace {

struct Axis {
    double min = 0.0, max = 0.0;

    double hat(double v) const {
        if (max == min) return 1.0;  // constant axis: nobody is penalized
        return (v - min) / (max - min);
    }
};

Axis axis_of(std::span<const ClipRecord* const> group, double (*value)(const ClipRecord&)) {
    Axis a{value(*group.front()), value(*group.front())};
    for (const ClipRecord* r : group) {
        a.min = std::min(a.min, value(*r));
        a.max = std::max(a.max, value(*r));
    }
    return a;
}

double res_of(const ClipRecord& r) {
    return static_cast<double>(r.width) * static_cast<double>(r.height);
}
double fps_of(const ClipRecord& r) { return r.fps; }
double size_of(const ClipRecord& r) { return static_cast<double>(r.filesize_bytes); }

}  // namespace

double representative_score(const ClipRecord& record,
                            std::span<const ClipRecord* const> group) {
    if (group.empty()) throw std::invalid_argument("representative_score: empty group");
    Axis res = axis_of(group, res_of);
    Axis fps = axis_of(group, fps_of);
    Axis size = axis_of(group, size_of);
    return 0.5 * res.hat(res_of(record)) + 0.3 * fps.hat(fps_of(record)) +
           0.2 * size.hat(size_of(record));
}

DedupDecision select_representatives(std::vector<DuplicateGroup> groups,
                                     const Corpus& corpus, double threshold_used) {
    DedupDecision decision;
    decision.threshold_used = threshold_used;

    std::unordered_map<std::string_view, const ClipRecord*> by_id;
    by_id.reserve(corpus.records.size());
    for (const ClipRecord& r : corpus.records) by_id.emplace(r.clip_id, &r);

    std::unordered_set<std::string_view> removed;
    for (DuplicateGroup& group : groups) {
        std::vector<const ClipRecord*> members;
        members.reserve(group.member_ids.size());
        for (const std::string& id : group.member_ids) {
            auto it = by_id.find(id);
            if (it == by_id.end())
                throw std::invalid_argument("select_representatives: group references unknown clip '" +
                                            id + "'");
            members.push_back(it->second);
        }

        const ClipRecord* best = nullptr;
        double best_score = -1.0;
        for (const ClipRecord* r : members) {
            double s = representative_score(*r, members);
            // argmax, ties to the smallest clip_id (members are sorted)
            if (!best || s > best_score) {
                best = r;
                best_score = s;
            }
        }
        group.representative_id = best->clip_id;
        for (const std::string& id : group.member_ids) {
            if (id != best->clip_id) removed.insert(id);
        }
    }

    for (const ClipRecord& r : corpus.records) {
        if (removed.contains(r.clip_id)) {
            decision.removed.push_back(r.clip_id);
        } else {
            decision.kept.push_back(r.clip_id);
        }
    }
    std::sort(decision.kept.begin(), decision.kept.end());
    std::sort(decision.removed.begin(), decision.removed.end());
    decision.groups = std::move(groups);
    return decision;
}

DedupDecision dedup_corpus(const Corpus& corpus, double threshold) {
    PairScan scan = find_duplicate_pairs(corpus, threshold);
    DedupDecision decision =
        select_representatives(group_pairs(scan.pairs), corpus, threshold);
    return decision;
}

std::vector<SimilarPair> read_pairs_csv(const std::filesystem::path& path) {
    std::string text = read_file(path);
    std::vector<SimilarPair> pairs;
    std::size_t start = 0;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        auto cells = csv::split_row(line);
        if (!cells || cells->size() != 3)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected clip_a,clip_b,similarity");
        if (!header_seen) {
            header_seen = true;
            if ((*cells)[0] == "clip_a") continue;  // header row optional
        }
        auto sim = parse_double((*cells)[2]);
        if (!sim)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": similarity is not a number");
        SimilarPair p{(*cells)[0], (*cells)[1], *sim};
        if (p.b < p.a) std::swap(p.a, p.b);
        pairs.push_back(std::move(p));
    }
    std::sort(pairs.begin(), pairs.end(), [](const SimilarPair& x, const SimilarPair& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    return pairs;
}

}  // namespace shardplan
