#pragma once

// One configured RAG pass per question: retrieve, optionally re-rank,
// generate, score — plus the corrective variant that iteratively pulls
// additional evidence while the draft answer lacks textual support.

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragbench/chunking.hpp"
#include "ragbench/metrics.hpp"
#include "ragbench/providers.hpp"
#include "ragbench/retry.hpp"
#include "ragbench/vector_index.hpp"

namespace ragbench {

struct CragConfig {
    double support_threshold = 0.8;
    int max_iterations = 3;
    int step = 0;  // extra docs per iteration; 0 means k_docs
};

struct PipelineConfig {
    DistanceMetric vector_metric = DistanceMetric::l2;
    bool rerank = false;
    int rerank_pool = 0;  // 0 means 2 * k_docs
    int max_tokens = 256;
    double temperature = 0.0;
    int k_docs = 2;
    ChunkingPolicy chunking;
    std::optional<CragConfig> crag;

    int effective_rerank_pool() const { return rerank_pool > 0 ? rerank_pool : 2 * k_docs; }

    // Stable content-hash id over the parameter values.
    std::string id() const {
        std::string s = to_string(vector_metric) + "|" + (rerank ? "1" : "0") + "|" +
                        std::to_string(effective_rerank_pool()) + "|" + std::to_string(max_tokens) +
                        "|" + std::to_string(temperature) + "|" + std::to_string(k_docs) + "|" +
                        chunking.key();
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a(s)));
        return buf;
    }
};

struct StageTimings {
    // nanoseconds from a monotonic clock; backoff sleeps are excluded from
    // stage times but included in total
    std::int64_t retrieval = 0;
    std::int64_t rerank = 0;
    std::int64_t generation = 0;
    std::int64_t metrics = 0;
    std::int64_t total = 0;
};

struct RunRecord {
    std::string config_id;
    std::string question_id;
    std::vector<RetrievalResult> retrieved;  // final (post-rerank when enabled)
    std::string answer;
    MetricScores scores;
    StageTimings timings;
    int retry_count = 0;
    int crag_iterations = 0;
    bool crag_relevant = false;
    bool failed = false;
    std::string failure;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline std::int64_t ns_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

}  // namespace detail

// Stable sort descending by score (original rank breaks ties), truncate to
// k, assign final ranks. A scorer failure falls back to the original order.
inline std::vector<RetrievalResult> rerank(std::vector<RetrievalResult> candidates,
                                           PairScorer& scorer, const std::string& query,
                                           std::size_t k, bool* degraded = nullptr) {
    if (candidates.size() < k) throw std::invalid_argument("rerank: fewer candidates than k");
    try {
        for (auto& c : candidates) c.rerank_score = scorer.score_pair(query, c.chunk.text);
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const RetrievalResult& a, const RetrievalResult& b) {
                             return *a.rerank_score > *b.rerank_score;
                         });
    } catch (const std::exception&) {
        // graceful degradation: keep the initial retrieval order
        for (auto& c : candidates) c.rerank_score.reset();
        if (degraded) *degraded = true;
    }
    candidates.resize(k);
    for (std::size_t i = 0; i < candidates.size(); ++i)
        candidates[i].final_rank = static_cast<int>(i + 1);
    return candidates;
}

inline RunRecord run_query(const PipelineConfig& config, const QAItem& item, const Index& index,
                           const Providers& providers, const RetryPolicy& retry_policy = {}) {
    RunRecord rec;
    rec.config_id = config.id();
    rec.question_id = item.id;
    auto t_start = detail::Clock::now();

    try {
        // retrieval
        auto t0 = detail::Clock::now();
        AttemptTrace embed_trace;
        EmbeddingVector qv = with_retry(
            retry_policy, [&] { return providers.embedder->embed_one(item.question); },
            &embed_trace);
        rec.retry_count += embed_trace.attempts - 1;
        std::size_t fetch = config.rerank ? static_cast<std::size_t>(config.effective_rerank_pool())
                                          : static_cast<std::size_t>(config.k_docs);
        auto results = index.search(qv, fetch);
        rec.timings.retrieval = detail::ns_since(t0);

        // re-rank
        if (config.rerank) {
            t0 = detail::Clock::now();
            std::size_t k = std::min(static_cast<std::size_t>(config.k_docs), results.size());
            results = rerank(std::move(results), *providers.scorer, item.question, k);
            rec.timings.rerank = detail::ns_since(t0);
        } else if (results.size() > static_cast<std::size_t>(config.k_docs)) {
            results.resize(static_cast<std::size_t>(config.k_docs));
        }
        rec.retrieved = results;

        // generation
        t0 = detail::Clock::now();
        std::vector<std::string> contexts;
        for (const auto& r : results) contexts.push_back(r.chunk.text);
        GenerationParams params{config.temperature, config.max_tokens};
        AttemptTrace gen_trace;
        rec.answer = with_retry(
            retry_policy,
            [&] { return providers.generator->generate(item.question, contexts, params); },
            &gen_trace);
        rec.retry_count += gen_trace.attempts - 1;
        rec.timings.generation = detail::ns_since(t0);

        // metrics
        t0 = detail::Clock::now();
        PipelineOutputs out{item.question, rec.answer,   item.ground_truth,
                            contexts,      rec.retrieved, item.reference_contexts};
        rec.scores = evaluate_all(out, providers);
        rec.timings.metrics = detail::ns_since(t0);
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.failure = e.what();
    }
    rec.timings.total = detail::ns_since(t_start);
    return rec;
}

// Fraction of the draft answer's claims supported by the contexts; 1.0 for
// a claimless answer (nothing to support).
inline double support_fraction(const std::string& answer, const std::vector<std::string>& contexts,
                               ClaimExtractor& claims, SupportJudge& judge) {
    auto s = faithfulness(answer, contexts, claims, judge);
    return s.is_defined() ? *s.value : 1.0;
}

inline RunRecord crag_run_query(const PipelineConfig& config, const QAItem& item,
                                const Index& index, const Providers& providers,
                                const RetryPolicy& retry_policy = {}) {
    if (!config.crag) throw std::invalid_argument("crag_run_query: config.crag not set");
    const CragConfig& crag = *config.crag;
    const int step = crag.step > 0 ? crag.step : config.k_docs;

    auto t_start = detail::Clock::now();
    RunRecord rec = run_query(config, item, index, providers, retry_policy);
    if (rec.failed) return rec;

    double support = support_fraction(rec.answer, [&] {
        std::vector<std::string> c;
        for (const auto& r : rec.retrieved) c.push_back(r.chunk.text);
        return c;
    }(), *providers.claims, *providers.judge);

    GenerationParams params{config.temperature, config.max_tokens};
    while (support < crag.support_threshold && rec.crag_iterations < crag.max_iterations) {
        ++rec.crag_iterations;

        // next-nearest chunks not yet retrieved
        auto t0 = detail::Clock::now();
        std::set<std::pair<std::string, std::size_t>> have;
        for (const auto& r : rec.retrieved) have.insert({r.chunk.doc_id, r.chunk.index});
        EmbeddingVector qv = providers.embedder->embed_one(item.question);
        auto wider = index.search(qv, rec.retrieved.size() + static_cast<std::size_t>(step));
        int added = 0;
        for (auto& r : wider) {
            if (added >= step) break;
            if (have.count({r.chunk.doc_id, r.chunk.index})) continue;
            rec.retrieved.push_back(std::move(r));
            ++added;
        }
        rec.timings.retrieval += detail::ns_since(t0);
        if (added == 0) break;  // index exhausted

        t0 = detail::Clock::now();
        std::vector<std::string> contexts;
        for (const auto& r : rec.retrieved) contexts.push_back(r.chunk.text);
        rec.answer = providers.generator->generate(item.question, contexts, params);
        rec.timings.generation += detail::ns_since(t0);

        support = support_fraction(rec.answer, contexts, *providers.claims, *providers.judge);
    }

    // rescore on the final evidence set
    auto t0 = detail::Clock::now();
    std::vector<std::string> contexts;
    for (const auto& r : rec.retrieved) contexts.push_back(r.chunk.text);
    PipelineOutputs out{item.question, rec.answer,   item.ground_truth,
                        contexts,      rec.retrieved, item.reference_contexts};
    rec.scores = evaluate_all(out, providers);
    rec.timings.metrics = detail::ns_since(t0);

    auto v = relevance_indicators(rec.retrieved, item.reference_contexts, *providers.judge);
    rec.crag_relevant = std::any_of(v.v.begin(), v.v.end(), [](int b) { return b == 1; });
    rec.timings.total = detail::ns_since(t_start);
    return rec;
}

inline double relevance_rate(const std::vector<RunRecord>& records) {
    if (records.empty()) throw std::invalid_argument("relevance_rate: empty input");
    std::size_t relevant = 0;
    for (const auto& r : records)
        if (r.crag_relevant) ++relevant;
    return 100.0 * static_cast<double>(relevant) / static_cast<double>(records.size());
}

// -- run-record serialization (schema v1) -----------------------------------

inline nlohmann::json score_to_json(const Score& s) {
    if (s.is_defined()) return nlohmann::json{{"value", *s.value}};
    return nlohmann::json{{"undefined", s.undefined_reason}};
}

inline Score score_from_json(const nlohmann::json& j) {
    if (j.contains("value")) return Score::defined(j["value"].get<double>());
    return Score::undefined(j.value("undefined", "unknown"));
}

inline nlohmann::json run_record_to_json(const RunRecord& rec) {
    nlohmann::json retrieved = nlohmann::json::array();
    for (const auto& r : rec.retrieved) {
        nlohmann::json jr{{"doc_id", r.chunk.doc_id},
                          {"chunk_index", r.chunk.index},
                          {"distance", r.distance},
                          {"rank", r.rank}};
        if (r.rerank_score) jr["rerank_score"] = *r.rerank_score;
        if (r.final_rank) jr["final_rank"] = *r.final_rank;
        retrieved.push_back(std::move(jr));
    }
    nlohmann::json scores;
    for (const auto& [name, s] : rec.scores.as_map()) scores[name] = score_to_json(s);
    return nlohmann::json{{"v", 1},
                          {"config_id", rec.config_id},
                          {"question_id", rec.question_id},
                          {"retrieved", std::move(retrieved)},
                          {"answer", rec.answer},
                          {"scores", std::move(scores)},
                          {"timings",
                           {{"retrieval_ns", rec.timings.retrieval},
                            {"rerank_ns", rec.timings.rerank},
                            {"generation_ns", rec.timings.generation},
                            {"metrics_ns", rec.timings.metrics},
                            {"total_ns", rec.timings.total}}},
                          {"retry_count", rec.retry_count},
                          {"crag_iterations", rec.crag_iterations},
                          {"crag_relevant", rec.crag_relevant},
                          {"failed", rec.failed},
                          {"failure", rec.failure}};
}

inline RunRecord run_record_from_json(const nlohmann::json& j) {
    RunRecord rec;
    rec.config_id = j.at("config_id").get<std::string>();
    rec.question_id = j.at("question_id").get<std::string>();
    rec.answer = j.at("answer").get<std::string>();
    for (const auto& jr : j.at("retrieved")) {
        RetrievalResult r;
        r.chunk.doc_id = jr.at("doc_id").get<std::string>();
        r.chunk.index = jr.at("chunk_index").get<std::size_t>();
        r.distance = jr.at("distance").get<double>();
        r.rank = jr.at("rank").get<int>();
        if (jr.contains("rerank_score")) r.rerank_score = jr["rerank_score"].get<double>();
        if (jr.contains("final_rank")) r.final_rank = jr["final_rank"].get<int>();
        rec.retrieved.push_back(std::move(r));
    }
    const auto& sc = j.at("scores");
    rec.scores.faithfulness = score_from_json(sc.at("faithfulness"));
    rec.scores.answer_correctness = score_from_json(sc.at("answer_correctness"));
    rec.scores.answer_relevancy = score_from_json(sc.at("answer_relevancy"));
    rec.scores.context_precision = score_from_json(sc.at("context_precision"));
    rec.scores.context_recall = score_from_json(sc.at("context_recall"));
    rec.scores.context_entity_recall = score_from_json(sc.at("context_entity_recall"));
    rec.scores.answer_similarity = score_from_json(sc.at("answer_similarity"));
    const auto& jt = j.at("timings");
    rec.timings.retrieval = jt.at("retrieval_ns").get<std::int64_t>();
    rec.timings.rerank = jt.at("rerank_ns").get<std::int64_t>();
    rec.timings.generation = jt.at("generation_ns").get<std::int64_t>();
    rec.timings.metrics = jt.at("metrics_ns").get<std::int64_t>();
    rec.timings.total = jt.at("total_ns").get<std::int64_t>();
    rec.retry_count = j.at("retry_count").get<int>();
    rec.crag_iterations = j.at("crag_iterations").get<int>();
    rec.crag_relevant = j.at("crag_relevant").get<bool>();
    rec.failed = j.at("failed").get<bool>();
    rec.failure = j.at("failure").get<std::string>();
    return rec;
}

}  // namespace ragbench
