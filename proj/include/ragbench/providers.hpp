#pragma once

// Provider interfaces for every model-dependent role, plus the
// deterministic lexical built-ins used for reproducible runs and testing.
// One interface per role so a run can mix, say, a remote generator with
// the local embedder.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ragbench/text.hpp"

namespace ragbench {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }

    double dot(const EmbeddingVector& o) const {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * o.values[i];
        return s;
    }
    double norm() const { return std::sqrt(dot(*this)); }
};

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

inline double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    return 1.0 - cosine_similarity(a, b);
}

struct Claim {
    std::string text;
};

struct GenerationParams {
    double temperature = 0.0;
    int max_tokens = 256;
};

// -- provider error taxonomy ------------------------------------------------

enum class ProviderErrorKind {
    transport,     // temporary network issue
    rate_limited,  // provider throttling
    unavailable,   // service temporarily unavailable
    transient,     // other recoverable error
    fatal,         // never retried
};

class ProviderError : public std::runtime_error {
public:
    ProviderError(ProviderErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ProviderErrorKind kind() const { return kind_; }
    bool retryable() const { return kind_ != ProviderErrorKind::fatal; }

private:
    ProviderErrorKind kind_;
};

// -- role interfaces --------------------------------------------------------

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
    virtual std::string id() const = 0;

    EmbeddingVector embed_one(const std::string& text) { return embed({text})[0]; }
};

class Generator {
public:
    virtual ~Generator() = default;
    virtual std::string generate(const std::string& prompt, const std::vector<std::string>& context,
                                 const GenerationParams& params) = 0;
};

class ClaimExtractor {
public:
    virtual ~ClaimExtractor() = default;
    virtual std::vector<Claim> extract_claims(const std::string& text) = 0;
};

class SupportJudge {
public:
    virtual ~SupportJudge() = default;
    virtual bool judge_support(const Claim& claim, const std::vector<std::string>& contexts) = 0;
};

class ReverseQuestionGenerator {
public:
    virtual ~ReverseQuestionGenerator() = default;
    virtual std::vector<std::string> gen_reverse_questions(const std::string& answer, int n) = 0;
};

class EntityExtractor {
public:
    virtual ~EntityExtractor() = default;
    virtual std::set<std::string> extract_entities(const std::string& text) = 0;
};

class PairScorer {
public:
    virtual ~PairScorer() = default;
    // relevance of passage to query, in [0,1]
    virtual double score_pair(const std::string& query, const std::string& passage) = 0;
};

// Bundle handed to the pipeline and metrics.
struct Providers {
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<Generator> generator;
    std::shared_ptr<ClaimExtractor> claims;
    std::shared_ptr<SupportJudge> judge;
    std::shared_ptr<ReverseQuestionGenerator> reverse_questions;
    std::shared_ptr<EntityExtractor> entities;
    std::shared_ptr<PairScorer> scorer;
};

// -- deterministic built-ins ------------------------------------------------

/// Feature-hashing embedder: each token and token bigram is hashed into one
// of D buckets with a sign bit, counts are L2-normalized. Pure and
// thread-safe; identical output on every platform (FNV-1a, not std::hash).
class HashingEmbedder : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dimension = 256) : dim_(dimension) {}

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        if (texts.empty()) throw std::invalid_argument("embed: empty input list");
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed_text(t));
        return out;
    }

    std::string id() const override { return "hashing-" + std::to_string(dim_); }

    EmbeddingVector embed_text(const std::string& text) const {
        EmbeddingVector v;
        v.values.assign(dim_, 0.0);
        auto toks = tokenize(text).tokens;
        std::vector<std::string> norm;
        for (const auto& t : toks) {
            std::string s = normalize_token(t.text);
            if (!s.empty()) norm.push_back(std::move(s));
        }
        if (norm.empty()) {
            // degenerate case: fixed unit basis vector
            v.values[0] = 1.0;
            return v;
        }
        for (const auto& s : norm) bump(v, s);
        for (std::size_t i = 0; i + 1 < norm.size(); ++i) bump(v, norm[i] + " " + norm[i + 1]);
        double n = v.norm();
        for (double& x : v.values) x /= n;
        return v;
    }

private:
    void bump(EmbeddingVector& v, const std::string& feature) const {
        std::uint64_t h = fnv1a(feature);
        double sign = (h & 1) ? 1.0 : -1.0;
        v.values[(h >> 1) % dim_] += sign;
    }

    std::size_t dim_;
};

// Extractive generator: ranks the context sentences by token overlap with
// the prompt and returns the first max_tokens tokens of the ranked
// concatenation. Temperature is recorded by the pipeline but has no effect
// here; only remote generators act on it.
class ExtractiveGenerator : public Generator {
public:
    std::string generate(const std::string& prompt, const std::vector<std::string>& context,
                         const GenerationParams& params) override {
        auto prompt_tokens = token_set(prompt);

        struct Ranked {
            std::size_t overlap;
            std::size_t order;
            std::string text;
        };
        std::vector<Ranked> sentences;
        std::size_t order = 0;
        for (const auto& ctx : context) {
            for (const auto& sent : sentence_split(ctx)) {
                auto st = token_set(sent.text);
                std::size_t ov = 0;
                for (const auto& t : st)
                    if (prompt_tokens.count(t)) ++ov;
                sentences.push_back({ov, order++, sent.text});
            }
        }
        std::stable_sort(sentences.begin(), sentences.end(), [](const Ranked& a, const Ranked& b) {
            return a.overlap > b.overlap;
        });

        std::string out;
        int budget = params.max_tokens;
        for (const auto& s : sentences) {
            if (budget <= 0) break;
            for (const auto& tok : tokenize(s.text).tokens) {
                if (budget-- <= 0) break;
                if (!out.empty()) out.push_back(' ');
                out += tok.text;
            }
        }
        return out;
    }
};

// One claim per sentence.
class SentenceClaimExtractor : public ClaimExtractor {
public:
    std::vector<Claim> extract_claims(const std::string& text) override {
        std::vector<Claim> out;
        for (const auto& s : sentence_split(text)) out.push_back({s.text});
        return out;
    }
};

// Supported iff normalized-token Jaccard with any context sentence reaches
// the threshold (default 0.5).
class JaccardSupportJudge : public SupportJudge {
public:
    explicit JaccardSupportJudge(double threshold = 0.5) : threshold_(threshold) {}

    bool judge_support(const Claim& claim, const std::vector<std::string>& contexts) override {
        auto claim_tokens = token_set(claim.text);
        if (claim_tokens.empty()) return false;
        for (const auto& ctx : contexts) {
            for (const auto& sent : sentence_split(ctx)) {
                if (jaccard(claim_tokens, token_set(sent.text)) >= threshold_) return true;
            }
        }
        return false;
    }

private:
    double threshold_;
};

// Templated questions over the answer's n highest-information tokens
// (longest first, ties by first occurrence).
class TemplateReverseQuestionGenerator : public ReverseQuestionGenerator {
public:
    std::vector<std::string> gen_reverse_questions(const std::string& answer, int n) override {
        if (n < 1) throw std::invalid_argument("gen_reverse_questions: n must be >= 1");
        std::vector<std::string> seen_order;
        std::set<std::string> seen;
        for (const auto& t : tokenize(answer).tokens) {
            std::string s = normalize_token(t.text);
            if (!s.empty() && seen.insert(s).second) seen_order.push_back(std::move(s));
        }
        std::vector<std::string> questions;
        if (seen_order.empty()) {
            for (int i = 0; i < n; ++i) questions.push_back("What does the answer state?");
            return questions;
        }
        std::stable_sort(seen_order.begin(), seen_order.end(),
                         [](const std::string& a, const std::string& b) {
                             return a.size() > b.size();
                         });
        for (int i = 0; i < n; ++i) {
            const std::string& key = seen_order[static_cast<std::size_t>(i) % seen_order.size()];
            std::string q = "What is stated about " + key + "?";
            if (static_cast<std::size_t>(i) >= seen_order.size())
                q += " (" + std::to_string(i / seen_order.size()) + ")";
            questions.push_back(std::move(q));
        }
        return questions;
    }
};

// Capitalized token runs plus numeric tokens, case-normalized.
class LexicalEntityExtractor : public EntityExtractor {
public:
    std::set<std::string> extract_entities(const std::string& text) override {
        std::set<std::string> out;
        auto toks = tokenize(text).tokens;
        std::string run;
        auto flush = [&] {
            if (!run.empty()) out.insert(run);
            run.clear();
        };
        for (const auto& t : toks) {
            std::string norm = normalize_token(t.text);
            if (norm.empty()) {
                flush();
                continue;
            }
            bool numeric = std::all_of(norm.begin(), norm.end(), [](char c) {
                return std::isdigit(static_cast<unsigned char>(c));
            });
            bool capitalized = std::isupper(static_cast<unsigned char>(t.text[0])) != 0;
            if (numeric) {
                flush();
                out.insert(norm);
            } else if (capitalized) {
                if (!run.empty()) run.push_back(' ');
                run += norm;
            } else {
                flush();
            }
        }
        flush();
        return out;
    }
};

// Overlap coefficient |Q ∩ P| / |Q| over normalized token sets.
class OverlapPairScorer : public PairScorer {
public:
    double score_pair(const std::string& query, const std::string& passage) override {
        auto q = token_set(query);
        if (q.empty()) return 0.0;
        auto p = token_set(passage);
        std::size_t inter = 0;
        for (const auto& t : q)
            if (p.count(t)) ++inter;
        return static_cast<double>(inter) / static_cast<double>(q.size());
    }
};

inline Providers make_deterministic_providers(std::size_t embedding_dim = 256) {
    Providers p;
    p.embedder = std::make_shared<HashingEmbedder>(embedding_dim);
    p.generator = std::make_shared<ExtractiveGenerator>();
    p.claims = std::make_shared<SentenceClaimExtractor>();
    p.judge = std::make_shared<JaccardSupportJudge>();
    p.reverse_questions = std::make_shared<TemplateReverseQuestionGenerator>();
    p.entities = std::make_shared<LexicalEntityExtractor>();
    p.scorer = std::make_shared<OverlapPairScorer>();
    return p;
}

}  // namespace ragbench
