#pragma once

// The seven per-question quality scores. Degenerate denominators yield an
// undefined sentinel with a reason code instead of a silent 0/1, so
// aggregates stay honest.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ragbench/corpus.hpp"
#include "ragbench/providers.hpp"
#include "ragbench/vector_index.hpp"

namespace ragbench {

struct Score {
    std::optional<double> value;
    std::string undefined_reason;

    static Score defined(double v) { return {v, {}}; }
    static Score undefined(std::string reason) { return {std::nullopt, std::move(reason)}; }
    bool is_defined() const { return value.has_value(); }
};

struct MetricScores {
    Score faithfulness;
    Score answer_correctness;
    Score answer_relevancy;
    Score context_precision;
    Score context_recall;
    Score context_entity_recall;
    Score answer_similarity;

    std::map<std::string, Score> as_map() const {
        return {{"faithfulness", faithfulness},
                {"answer_correctness", answer_correctness},
                {"answer_relevancy", answer_relevancy},
                {"context_precision", context_precision},
                {"context_recall", context_recall},
                {"context_entity_recall", context_entity_recall},
                {"answer_similarity", answer_similarity}};
    }
};

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{
        "faithfulness",        "answer_correctness",    "answer_relevancy", "context_precision",
        "context_recall",      "context_entity_recall", "answer_similarity"};
    return names;
}

struct RelevanceVector {
    std::vector<int> v;  // binary indicators over the top-K retrieved chunks
    std::size_t K() const { return v.size(); }
};

// Fraction of answer claims supported by the retrieved context.
inline Score faithfulness(const std::string& answer, const std::vector<std::string>& contexts,
                          ClaimExtractor& claims, SupportJudge& judge) {
    auto cs = claims.extract_claims(answer);
    if (cs.empty()) return Score::undefined("no-claims");
    std::size_t supported = 0;
    for (const auto& c : cs)
        if (judge.judge_support(c, contexts)) ++supported;
    return Score::defined(static_cast<double>(supported) / static_cast<double>(cs.size()));
}

// F1 over facts: TP in both texts, FP answer-only, FN ground-truth-only.
// A fact pairs across texts when the judge supports it in either direction.
inline Score answer_correctness(const std::string& answer, const std::string& ground_truth,
                                ClaimExtractor& claims, SupportJudge& judge) {
    auto answer_facts = claims.extract_claims(answer);
    auto gt_facts = claims.extract_claims(ground_truth);
    if (answer_facts.empty() && gt_facts.empty()) return Score::undefined("no-facts");

    auto pairs = [&](const Claim& a, const Claim& b) {
        return judge.judge_support(a, {b.text}) || judge.judge_support(b, {a.text});
    };

    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& a : answer_facts) {
        bool matched = std::any_of(gt_facts.begin(), gt_facts.end(),
                                   [&](const Claim& g) { return pairs(a, g); });
        matched ? ++tp : ++fp;
    }
    for (const auto& g : gt_facts) {
        bool matched = std::any_of(answer_facts.begin(), answer_facts.end(),
                                   [&](const Claim& a) { return pairs(a, g); });
        if (!matched) ++fn;
    }
    if (tp + fp + fn == 0) return Score::undefined("no-facts");
    double f1 = static_cast<double>(tp) /
                (static_cast<double>(tp) + 0.5 * static_cast<double>(fp + fn));
    return Score::defined(f1);
}

// Mean cosine similarity between the original question and questions
// reverse-engineered from the answer; negative cosines floor to 0.
inline Score answer_relevancy(const std::string& question, const std::string& answer,
                              Embedder& embedder, ReverseQuestionGenerator& reverse_gen,
                              int n = 3) {
    auto generated = reverse_gen.gen_reverse_questions(answer, n);
    std::vector<std::string> texts;
    texts.push_back(question);
    for (auto& g : generated) texts.push_back(std::move(g));
    auto vectors = embedder.embed(texts);
    double sum = 0.0;
    for (std::size_t i = 1; i < vectors.size(); ++i)
        sum += std::max(0.0, cosine_similarity(vectors[i], vectors[0]));
    return Score::defined(sum / static_cast<double>(vectors.size() - 1));
}

// CP@K = sum_k(P@k * v_k) / R_K with P@k the running precision.
inline Score context_precision(const RelevanceVector& relevance) {
    const auto& v = relevance.v;
    std::size_t relevant = 0;
    for (int b : v) relevant += static_cast<std::size_t>(b);
    if (relevant == 0) return Score::undefined("no-relevant-retrieved");
    double acc = 0.0;
    std::size_t prefix = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        prefix += static_cast<std::size_t>(v[k]);
        if (v[k]) acc += static_cast<double>(prefix) / static_cast<double>(k + 1);
    }
    return Score::defined(acc / static_cast<double>(relevant));
}

// Binary relevance per rank. Exact substring containment against the
// reference contexts is checked first (either direction); the judge is the
// fallback for non-verbatim matches.
inline RelevanceVector relevance_indicators(const std::vector<RetrievalResult>& results,
                                            const std::vector<std::string>& reference_contexts,
                                            SupportJudge& judge) {
    RelevanceVector out;
    out.v.reserve(results.size());
    for (const auto& r : results) {
        bool relevant = false;
        for (const auto& ref : reference_contexts) {
            if (ref.find(r.chunk.text) != std::string::npos ||
                r.chunk.text.find(ref) != std::string::npos) {
                relevant = true;
                break;
            }
        }
        if (!relevant && !reference_contexts.empty())
            relevant = judge.judge_support(Claim{r.chunk.text}, reference_contexts);
        out.v.push_back(relevant ? 1 : 0);
    }
    return out;
}

// Fraction of ground-truth claims attributable to the retrieved context.
inline Score context_recall(const std::string& ground_truth,
                            const std::vector<std::string>& contexts, ClaimExtractor& claims,
                            SupportJudge& judge) {
    auto cs = claims.extract_claims(ground_truth);
    if (cs.empty()) return Score::undefined("no-gt-claims");
    std::size_t attributed = 0;
    for (const auto& c : cs)
        if (judge.judge_support(c, contexts)) ++attributed;
    return Score::defined(static_cast<double>(attributed) / static_cast<double>(cs.size()));
}

// |CE ∩ GE| / |GE|
inline Score context_entity_recall(const std::string& ground_truth,
                                   const std::vector<std::string>& contexts,
                                   EntityExtractor& entities) {
    auto ge = entities.extract_entities(ground_truth);
    if (ge.empty()) return Score::undefined("no-gt-entities");
    std::set<std::string> ce;
    for (const auto& ctx : contexts) {
        auto e = entities.extract_entities(ctx);
        ce.insert(e.begin(), e.end());
    }
    std::size_t inter = 0;
    for (const auto& e : ge)
        if (ce.count(e)) ++inter;
    return Score::defined(static_cast<double>(inter) / static_cast<double>(ge.size()));
}

// Embedding cosine mapped to [0,1]; a configured pair scorer may stand in.
inline Score answer_similarity(const std::string& answer, const std::string& ground_truth,
                               Embedder& embedder, PairScorer* scorer = nullptr) {
    if (scorer) return Score::defined(scorer->score_pair(ground_truth, answer));
    auto vectors = embedder.embed({answer, ground_truth});
    return Score::defined(std::max(0.0, cosine_similarity(vectors[0], vectors[1])));
}

struct PipelineOutputs {
    std::string question;
    std::string answer;
    std::string ground_truth;
    std::vector<std::string> contexts;            // retrieved chunk texts, final order
    std::vector<RetrievalResult> results;         // final ranked retrieval
    std::vector<std::string> reference_contexts;  // from the QA item
};

// All seven metrics; a provider failure in one metric is recorded as an
// undefined score and does not abort the others.
inline MetricScores evaluate_all(const PipelineOutputs& out, const Providers& providers,
                                 int reverse_question_count = 3) {
    MetricScores scores;
    auto guarded = [&](Score& slot, auto&& fn) {
        try {
            slot = fn();
        } catch (const std::exception& e) {
            slot = Score::undefined(std::string("provider-error: ") + e.what());
        }
    };
    guarded(scores.faithfulness, [&] {
        return faithfulness(out.answer, out.contexts, *providers.claims, *providers.judge);
    });
    guarded(scores.answer_correctness, [&] {
        return answer_correctness(out.answer, out.ground_truth, *providers.claims,
                                  *providers.judge);
    });
    guarded(scores.answer_relevancy, [&] {
        return answer_relevancy(out.question, out.answer, *providers.embedder,
                                *providers.reverse_questions, reverse_question_count);
    });
    guarded(scores.context_precision, [&] {
        auto v = relevance_indicators(out.results, out.reference_contexts, *providers.judge);
        return context_precision(v);
    });
    guarded(scores.context_recall, [&] {
        return context_recall(out.ground_truth, out.contexts, *providers.claims, *providers.judge);
    });
    guarded(scores.context_entity_recall, [&] {
        return context_entity_recall(out.ground_truth, out.contexts, *providers.entities);
    });
    guarded(scores.answer_similarity, [&] {
        return answer_similarity(out.answer, out.ground_truth, *providers.embedder);
    });
    return scores;
}

}  // namespace ragbench
