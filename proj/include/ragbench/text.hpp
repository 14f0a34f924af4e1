#pragma once

// Tokenization and sentence splitting primitives shared by chunking,
// the deterministic providers, and the metrics.

#include <cctype>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ragbench {

struct Token {
    std::string text;
    std::size_t start = 0;  // char offset, inclusive
    std::size_t end = 0;    // char offset, exclusive
};

struct Tokenization {
    std::vector<Token> tokens;

    std::size_t size() const { return tokens.size(); }
    bool empty() const { return tokens.empty(); }
};

inline bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

// Whitespace-delimited tokens with exact char offsets.
inline Tokenization tokenize(std::string_view text) {
    Tokenization out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_space(text[i])) ++i;
        if (i >= n) break;
        std::size_t start = i;
        while (i < n && !is_space(text[i])) ++i;
        out.tokens.push_back({std::string(text.substr(start, i - start)), start, i});
    }
    return out;
}

struct SentenceSpan {
    std::string text;
    std::size_t start = 0;
    std::size_t end = 0;
};

// Split on terminal punctuation (. ! ?) followed by whitespace.
// Spans are trimmed to their non-whitespace extent.
inline std::vector<SentenceSpan> sentence_split(std::string_view text) {
    std::vector<SentenceSpan> out;
    const std::size_t n = text.size();
    std::size_t seg_start = 0;

    auto emit = [&](std::size_t lo, std::size_t hi) {
        while (lo < hi && is_space(text[lo])) ++lo;
        while (hi > lo && is_space(text[hi - 1])) --hi;
        if (lo < hi) out.push_back({std::string(text.substr(lo, hi - lo)), lo, hi});
    };

    for (std::size_t i = 0; i < n; ++i) {
        char c = text[i];
        if (c == '.' || c == '!' || c == '?') {
            // swallow a run of terminators
            std::size_t j = i;
            while (j + 1 < n && (text[j + 1] == '.' || text[j + 1] == '!' || text[j + 1] == '?')) ++j;
            if (j + 1 >= n || is_space(text[j + 1])) {
                emit(seg_start, j + 1);
                seg_start = j + 1;
            }
            i = j;
        }
    }
    emit(seg_start, n);
    return out;
}

// Lowercases and strips non-alphanumeric characters from both ends.
inline std::string normalize_token(std::string_view tok) {
    std::size_t lo = 0, hi = tok.size();
    while (lo < hi && !std::isalnum(static_cast<unsigned char>(tok[lo]))) ++lo;
    while (hi > lo && !std::isalnum(static_cast<unsigned char>(tok[hi - 1]))) --hi;
    std::string out;
    out.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i)
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(tok[i]))));
    return out;
}

// Normalized token set of a text, empty tokens dropped.
inline std::set<std::string> token_set(std::string_view text) {
    std::set<std::string> out;
    for (const auto& t : tokenize(text).tokens) {
        std::string norm = normalize_token(t.text);
        if (!norm.empty()) out.insert(std::move(norm));
    }
    return out;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& x : a)
        if (b.count(x)) ++inter;
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

// FNV-1a, fixed so hashed embeddings are stable across platforms.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 14695981039346656037ULL) {
    std::uint64_t h = seed;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace ragbench
