#pragma once

// Document chunking: naive fixed token windows with overlap, and semantic
// segmentation at sentence boundaries where the embedding distance between
// consecutive sentences exceeds a statistical threshold.

#include <stdexcept>
#include <string>
#include <vector>

#include "ragbench/corpus.hpp"
#include "ragbench/providers.hpp"
#include "ragbench/stats.hpp"
#include "ragbench/text.hpp"

namespace ragbench {

struct Chunk {
    std::string doc_id;
    std::size_t index = 0;  // ordinal within document
    std::string text;
    std::size_t token_start = 0;
    std::size_t token_end = 0;  // exclusive
    std::size_t char_start = 0;
    std::size_t char_end = 0;  // exclusive
};

enum class BreakpointMethod { percentile, interquartile, gradient, stddev };

struct BreakpointRule {
    BreakpointMethod method = BreakpointMethod::percentile;
    double parameter = 0.0;  // 0 selects the method default

    double effective_parameter() const {
        if (parameter > 0.0) return parameter;
        switch (method) {
            case BreakpointMethod::percentile: return 95.0;
            case BreakpointMethod::interquartile: return 1.5;
            case BreakpointMethod::gradient: return 95.0;
            case BreakpointMethod::stddev: return 3.0;
        }
        return 95.0;
    }
};

inline std::string to_string(BreakpointMethod m) {
    switch (m) {
        case BreakpointMethod::percentile: return "percentile";
        case BreakpointMethod::interquartile: return "interquartile";
        case BreakpointMethod::gradient: return "gradient";
        case BreakpointMethod::stddev: return "stddev";
    }
    return "?";
}

inline BreakpointMethod breakpoint_method_from_string(const std::string& s) {
    if (s == "percentile") return BreakpointMethod::percentile;
    if (s == "interquartile") return BreakpointMethod::interquartile;
    if (s == "gradient") return BreakpointMethod::gradient;
    if (s == "stddev") return BreakpointMethod::stddev;
    throw std::invalid_argument("unknown breakpoint method: " + s);
}

// Fixed token windows starting at 0, s, 2s, ... with stride s = size - overlap.
// Generation stops after the first chunk whose end reaches the document end.
inline std::vector<Chunk> naive_chunk(const Document& doc, std::size_t size, std::size_t overlap) {
    if (size == 0) throw std::invalid_argument("naive_chunk: size must be positive");
    if (overlap >= size) throw std::invalid_argument("naive_chunk: overlap must be < size");

    auto toks = tokenize(doc.text).tokens;
    std::vector<Chunk> chunks;
    if (toks.empty()) return chunks;

    const std::size_t stride = size - overlap;
    for (std::size_t start = 0;; start += stride) {
        std::size_t end = std::min(start + size, toks.size());
        Chunk c;
        c.doc_id = doc.id;
        c.index = chunks.size();
        c.token_start = start;
        c.token_end = end;
        c.char_start = toks[start].start;
        c.char_end = toks[end - 1].end;
        c.text = doc.text.substr(c.char_start, c.char_end - c.char_start);
        chunks.push_back(std::move(c));
        if (end >= toks.size()) break;
    }
    return chunks;
}

// Cosine distance between embeddings of consecutive sentences.
inline std::vector<double> semantic_distances(const std::vector<std::string>& sentences,
                                              Embedder& embedder) {
    if (sentences.size() < 2) return {};
    auto vectors = embedder.embed(sentences);
    std::vector<double> out;
    out.reserve(sentences.size() - 1);
    for (std::size_t i = 0; i + 1 < vectors.size(); ++i)
        out.push_back(cosine_distance(vectors[i], vectors[i + 1]));
    return out;
}

// Threshold for the exceedance test. For gradient the threshold applies to
// the forward-difference sequence of the distances, not to the distances.
inline double breakpoint_threshold(const std::vector<double>& distances,
                                   const BreakpointRule& rule) {
    if (distances.empty()) throw std::invalid_argument("breakpoint_threshold: empty distances");
    const double p = rule.effective_parameter();
    switch (rule.method) {
        case BreakpointMethod::percentile:
            return percentile(distances, p);
        case BreakpointMethod::interquartile: {
            double q1 = percentile(distances, 25.0);
            double q3 = percentile(distances, 75.0);
            return q3 + p * (q3 - q1);
        }
        case BreakpointMethod::stddev:
            return mean(distances) + p * stddev_pop(distances);
        case BreakpointMethod::gradient: {
            if (distances.size() < 2)
                throw std::invalid_argument("breakpoint_threshold: gradient needs >= 2 distances");
            std::vector<double> diffs;
            diffs.reserve(distances.size() - 1);
            for (std::size_t i = 0; i + 1 < distances.size(); ++i)
                diffs.push_back(distances[i + 1] - distances[i]);
            return percentile(diffs, p);
        }
    }
    throw std::logic_error("unreachable");
}

// Indices i such that a new chunk starts after sentence i (0-based).
inline std::vector<std::size_t> semantic_breakpoints(const std::vector<double>& distances,
                                                     const BreakpointRule& rule) {
    std::vector<std::size_t> breaks;
    if (distances.empty()) return breaks;
    if (rule.method == BreakpointMethod::gradient) {
        if (distances.size() < 2) return breaks;
        double threshold = breakpoint_threshold(distances, rule);
        for (std::size_t i = 0; i + 1 < distances.size(); ++i)
            if (distances[i + 1] - distances[i] > threshold) breaks.push_back(i);
    } else {
        double threshold = breakpoint_threshold(distances, rule);
        for (std::size_t i = 0; i < distances.size(); ++i)
            if (distances[i] > threshold) breaks.push_back(i);
    }
    return breaks;
}

// Sentences grouped into chunks; every sentence belongs to exactly one
// chunk and document order is preserved.
inline std::vector<Chunk> semantic_chunk(const Document& doc, Embedder& embedder,
                                         const BreakpointRule& rule) {
    auto sentences = sentence_split(doc.text);
    std::vector<Chunk> chunks;
    if (sentences.empty()) return chunks;

    std::vector<std::size_t> breaks;
    if (sentences.size() >= 2) {
        std::vector<std::string> texts;
        texts.reserve(sentences.size());
        for (const auto& s : sentences) texts.push_back(s.text);
        breaks = semantic_breakpoints(semantic_distances(texts, embedder), rule);
    }

    // token offsets per sentence, from the document-level tokenization
    auto doc_tokens = tokenize(doc.text).tokens;
    auto token_range = [&](std::size_t char_lo, std::size_t char_hi) {
        std::size_t lo = doc_tokens.size(), hi = 0;
        for (std::size_t t = 0; t < doc_tokens.size(); ++t) {
            if (doc_tokens[t].end > char_lo && doc_tokens[t].start < char_hi) {
                lo = std::min(lo, t);
                hi = std::max(hi, t + 1);
            }
        }
        return std::pair{lo, hi};
    };

    std::size_t group_start = 0;
    std::size_t next_break = 0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        bool cut = (next_break < breaks.size() && breaks[next_break] == i);
        if (cut) ++next_break;
        if (cut || i + 1 == sentences.size()) {
            Chunk c;
            c.doc_id = doc.id;
            c.index = chunks.size();
            c.char_start = sentences[group_start].start;
            c.char_end = sentences[i].end;
            c.text = doc.text.substr(c.char_start, c.char_end - c.char_start);
            auto [lo, hi] = token_range(c.char_start, c.char_end);
            c.token_start = lo;
            c.token_end = hi;
            chunks.push_back(std::move(c));
            group_start = i + 1;
        }
    }
    return chunks;
}

struct ChunkingPolicy {
    enum class Kind { naive, semantic } kind = Kind::naive;
    std::size_t size = 1024;    // naive only
    std::size_t overlap = 128;  // naive only
    BreakpointRule rule;        // semantic only

    std::string key() const {
        if (kind == Kind::naive)
            return "naive-" + std::to_string(size) + "-" + std::to_string(overlap);
        return "semantic-" + to_string(rule.method) + "-" + std::to_string(rule.effective_parameter());
    }
};

inline std::vector<Chunk> chunk_document(const Document& doc, const ChunkingPolicy& policy,
                                         Embedder& embedder) {
    if (policy.kind == ChunkingPolicy::Kind::naive)
        return naive_chunk(doc, policy.size, policy.overlap);
    return semantic_chunk(doc, embedder, policy.rule);
}

}  // namespace ragbench
