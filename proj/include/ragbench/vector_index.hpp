#pragma once

// Exact flat vector index over chunk embeddings. Two metrics: Euclidean
// distance and cosine distance. Ties break by insertion order so results
// are reproducible across runs and platforms.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragbench/chunking.hpp"
#include "ragbench/providers.hpp"

namespace ragbench {

enum class DistanceMetric { l2, cosine };

inline std::string to_string(DistanceMetric m) {
    return m == DistanceMetric::l2 ? "l2" : "cosine";
}

inline DistanceMetric metric_from_string(const std::string& s) {
    if (s == "l2") return DistanceMetric::l2;
    if (s == "cosine") return DistanceMetric::cosine;
    throw std::invalid_argument("unknown metric: " + s);
}

inline double metric_distance(DistanceMetric metric, const EmbeddingVector& a,
                              const EmbeddingVector& b) {
    if (metric == DistanceMetric::l2) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            double d = a.values[i] - b.values[i];
            s += d * d;
        }
        return std::sqrt(s);
    }
    return cosine_distance(a, b);
}

struct RetrievalResult {
    Chunk chunk;
    double distance = 0.0;
    int rank = 0;  // 1-based, pre-rerank
    std::optional<double> rerank_score;
    std::optional<int> final_rank;
};

struct IndexEntry {
    Chunk chunk;
    EmbeddingVector vector;
};

class IndexError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Full scan with the same ordering contract as Index::search. Kept separate
// so it can serve as the exactness oracle.
inline std::vector<RetrievalResult> brute_force_search(const std::vector<IndexEntry>& entries,
                                                       const EmbeddingVector& query, std::size_t k,
                                                       DistanceMetric metric) {
    if (k < 1) throw IndexError("search: k must be >= 1");
    if (!entries.empty() && query.dimension() != entries[0].vector.dimension())
        throw IndexError("search: query dimension mismatch");

    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i)
        scored.emplace_back(metric_distance(metric, query, entries[i].vector), i);
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<RetrievalResult> out;
    std::size_t take = std::min(k, scored.size());
    out.reserve(take);
    for (std::size_t r = 0; r < take; ++r) {
        RetrievalResult res;
        res.chunk = entries[scored[r].second].chunk;
        res.distance = scored[r].first;
        res.rank = static_cast<int>(r + 1);
        out.push_back(std::move(res));
    }
    return out;
}

class Index {
public:
    Index(std::vector<Chunk> chunks, std::vector<EmbeddingVector> vectors, DistanceMetric metric)
        : metric_(metric) {
        if (chunks.empty()) throw IndexError("build_index: empty input");
        if (chunks.size() != vectors.size())
            throw IndexError("build_index: chunk/vector count mismatch");
        dim_ = vectors[0].dimension();
        for (const auto& v : vectors)
            if (v.dimension() != dim_) throw IndexError("build_index: mixed vector dimensions");
        entries_.reserve(chunks.size());
        for (std::size_t i = 0; i < chunks.size(); ++i)
            entries_.push_back({std::move(chunks[i]), std::move(vectors[i])});
    }

    DistanceMetric metric() const { return metric_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t dimension() const { return dim_; }
    const std::vector<IndexEntry>& entries() const { return entries_; }

    // k smallest-distance entries, ties by insertion order; exact.
    std::vector<RetrievalResult> search(const EmbeddingVector& query, std::size_t k) const {
        if (k < 1) throw IndexError("search: k must be >= 1");
        if (query.dimension() != dim_) throw IndexError("search: query dimension mismatch");

        std::vector<std::pair<double, std::size_t>> scored;
        scored.reserve(entries_.size());
        for (std::size_t i = 0; i < entries_.size(); ++i)
            scored.emplace_back(metric_distance(metric_, query, entries_[i].vector), i);

        std::size_t take = std::min(k, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                          scored.end(), [](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first < b.first;
                              return a.second < b.second;
                          });

        std::vector<RetrievalResult> out;
        out.reserve(take);
        for (std::size_t r = 0; r < take; ++r) {
            RetrievalResult res;
            res.chunk = entries_[scored[r].second].chunk;
            res.distance = scored[r].first;
            res.rank = static_cast<int>(r + 1);
            out.push_back(std::move(res));
        }
        return out;
    }

private:
    DistanceMetric metric_;
    std::size_t dim_ = 0;
    std::vector<IndexEntry> entries_;
};

inline Index build_index(std::vector<Chunk> chunks, std::vector<EmbeddingVector> vectors,
                         DistanceMetric metric) {
    return Index(std::move(chunks), std::move(vectors), metric);
}

// -- persistence ------------------------------------------------------------
// Portable jsonl dump: one metadata record followed by one record per entry.
// nlohmann serializes doubles shortest-round-trip, so a reload reproduces
// identical search results.

inline void save_index(const Index& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IndexError("cannot write index: " + path.string());
    nlohmann::json meta{{"v", 1},
                        {"metric", to_string(index.metric())},
                        {"dimension", index.dimension()},
                        {"count", index.size()}};
    out << meta.dump() << "\n";
    for (const auto& e : index.entries()) {
        nlohmann::json j{{"chunk",
                          {{"doc_id", e.chunk.doc_id},
                           {"index", e.chunk.index},
                           {"text", e.chunk.text},
                           {"token_start", e.chunk.token_start},
                           {"token_end", e.chunk.token_end},
                           {"char_start", e.chunk.char_start},
                           {"char_end", e.chunk.char_end}}},
                         {"vector", e.vector.values}};
        out << j.dump() << "\n";
    }
}

inline Index load_index(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IndexError("cannot open index: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IndexError("index file empty: " + path.string());
    nlohmann::json meta = nlohmann::json::parse(line);
    DistanceMetric metric = metric_from_string(meta.at("metric").get<std::string>());

    std::vector<Chunk> chunks;
    std::vector<EmbeddingVector> vectors;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        const auto& jc = j.at("chunk");
        Chunk c;
        c.doc_id = jc.at("doc_id").get<std::string>();
        c.index = jc.at("index").get<std::size_t>();
        c.text = jc.at("text").get<std::string>();
        c.token_start = jc.at("token_start").get<std::size_t>();
        c.token_end = jc.at("token_end").get<std::size_t>();
        c.char_start = jc.at("char_start").get<std::size_t>();
        c.char_end = jc.at("char_end").get<std::size_t>();
        chunks.push_back(std::move(c));
        EmbeddingVector v;
        v.values = j.at("vector").get<std::vector<double>>();
        vectors.push_back(std::move(v));
    }
    return Index(std::move(chunks), std::move(vectors), metric);
}

}  // namespace ragbench
