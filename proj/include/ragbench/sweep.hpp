#pragma once

// Grid expansion and sweep execution. Chunk/index artifacts are cached and
// reused across configurations that share chunking and metric; resumable
// runs skip configurations whose results file already exists.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragbench/corpus.hpp"
#include "ragbench/pipeline.hpp"
#include "ragbench/stats.hpp"

namespace ragbench {

struct SweepConfig {
    std::vector<DistanceMetric> vector_metrics{DistanceMetric::l2};
    std::vector<bool> rerank_options{false};
    std::vector<int> max_tokens_options{256};
    std::vector<double> temperatures{0.0};
    std::vector<int> k_docs_options{2};
    std::vector<ChunkingPolicy> chunkings{ChunkingPolicy{}};
    std::optional<CragConfig> crag;
    RetryPolicy retry;
    int workers = 1;
    bool resume = false;
    std::filesystem::path output_dir = "out";

    // Table I defaults: 2 metrics x 2 rerank x 2 max_tokens x 6 temperatures
    // x 2 k_docs x (6 naive + 4 semantic) chunkings.
    static SweepConfig full_grid() {
        SweepConfig s;
        s.vector_metrics = {DistanceMetric::l2, DistanceMetric::cosine};
        s.rerank_options = {false, true};
        s.max_tokens_options = {256, 1024};
        s.temperatures = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
        s.k_docs_options = {2, 4};
        s.chunkings.clear();
        for (std::size_t size : {1024u, 2048u, 4096u})
            for (std::size_t overlap : {128u, 512u}) {
                ChunkingPolicy p;
                p.kind = ChunkingPolicy::Kind::naive;
                p.size = size;
                p.overlap = overlap;
                s.chunkings.push_back(p);
            }
        for (auto m : {BreakpointMethod::percentile, BreakpointMethod::interquartile,
                       BreakpointMethod::gradient, BreakpointMethod::stddev}) {
            ChunkingPolicy p;
            p.kind = ChunkingPolicy::Kind::semantic;
            p.rule.method = m;
            s.chunkings.push_back(p);
        }
        return s;
    }
};

class SweepError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Sweep config file: JSON with one key per grid dimension. Keys mirror the
// pipeline parameter names; absent keys keep single defaults.
//
//   {
//     "vector_metric": ["l2", "cosine"],
//     "rerank": [false, true],
//     "max_tokens": [256, 1024],
//     "temperature": [0, 0.2],
//     "k_docs": [2, 4],
//     "chunking": {"naive": {"sizes": [1024], "overlaps": [128]},
//                  "semantic": {"methods": ["percentile"]}},
//     "crag": {"support_threshold": 0.8, "max_iterations": 3, "step": 2},
//     "retry": {"max_attempts": 3, "base_delay_ms": 100, "multiplier": 2.0,
//               "jitter_fraction": 0.0},
//     "workers": 1
//   }
inline SweepConfig parse_sweep_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SweepError("cannot open sweep config: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SweepError("sweep config parse error: " + std::string(e.what()));
    }

    SweepConfig s;
    if (j.contains("vector_metric")) {
        s.vector_metrics.clear();
        for (const auto& m : j["vector_metric"])
            s.vector_metrics.push_back(metric_from_string(m.get<std::string>()));
    }
    if (j.contains("rerank")) {
        s.rerank_options.clear();
        for (const auto& b : j["rerank"]) s.rerank_options.push_back(b.get<bool>());
    }
    if (j.contains("max_tokens")) {
        s.max_tokens_options.clear();
        for (const auto& t : j["max_tokens"]) s.max_tokens_options.push_back(t.get<int>());
    }
    if (j.contains("temperature")) {
        s.temperatures.clear();
        for (const auto& t : j["temperature"]) s.temperatures.push_back(t.get<double>());
    }
    if (j.contains("k_docs")) {
        s.k_docs_options.clear();
        for (const auto& k : j["k_docs"]) s.k_docs_options.push_back(k.get<int>());
    }
    if (j.contains("chunking")) {
        s.chunkings.clear();
        const auto& jc = j["chunking"];
        if (jc.contains("naive")) {
            for (const auto& size : jc["naive"].at("sizes"))
                for (const auto& overlap : jc["naive"].at("overlaps")) {
                    ChunkingPolicy p;
                    p.kind = ChunkingPolicy::Kind::naive;
                    p.size = size.get<std::size_t>();
                    p.overlap = overlap.get<std::size_t>();
                    s.chunkings.push_back(p);
                }
        }
        if (jc.contains("semantic")) {
            for (const auto& method : jc["semantic"].at("methods")) {
                ChunkingPolicy p;
                p.kind = ChunkingPolicy::Kind::semantic;
                p.rule.method = breakpoint_method_from_string(method.get<std::string>());
                if (jc["semantic"].contains("parameter"))
                    p.rule.parameter = jc["semantic"]["parameter"].get<double>();
                s.chunkings.push_back(p);
            }
        }
    }
    if (j.contains("crag")) {
        CragConfig c;
        c.support_threshold = j["crag"].value("support_threshold", 0.8);
        c.max_iterations = j["crag"].value("max_iterations", 3);
        c.step = j["crag"].value("step", 0);
        s.crag = c;
    }
    if (j.contains("retry")) {
        s.retry.max_attempts = j["retry"].value("max_attempts", 3);
        s.retry.base_delay = std::chrono::milliseconds(j["retry"].value("base_delay_ms", 100));
        s.retry.multiplier = j["retry"].value("multiplier", 2.0);
        s.retry.jitter_fraction = j["retry"].value("jitter_fraction", 0.0);
    }
    s.workers = j.value("workers", 1);
    return s;
}

// Cartesian product in fixed field order, so the output order and the
// content-hash config ids are stable across runs and platforms.
inline std::vector<PipelineConfig> expand_grid(const SweepConfig& sweep) {
    auto check = [](bool nonempty, const char* dim) {
        if (!nonempty) throw SweepError(std::string("empty grid dimension: ") + dim);
    };
    check(!sweep.vector_metrics.empty(), "vector_metric");
    check(!sweep.rerank_options.empty(), "rerank");
    check(!sweep.max_tokens_options.empty(), "max_tokens");
    check(!sweep.temperatures.empty(), "temperature");
    check(!sweep.k_docs_options.empty(), "k_docs");
    check(!sweep.chunkings.empty(), "chunking");

    std::vector<PipelineConfig> out;
    for (auto metric : sweep.vector_metrics)
        for (bool rerank : sweep.rerank_options)
            for (int max_tokens : sweep.max_tokens_options)
                for (double temperature : sweep.temperatures)
                    for (int k_docs : sweep.k_docs_options)
                        for (const auto& chunking : sweep.chunkings) {
                            PipelineConfig c;
                            c.vector_metric = metric;
                            c.rerank = rerank;
                            c.max_tokens = max_tokens;
                            c.temperature = temperature;
                            c.k_docs = k_docs;
                            c.chunking = chunking;
                            c.crag = sweep.crag;
                            out.push_back(std::move(c));
                        }
    return out;
}

struct ConfigSummary {
    std::string config_id;
    PipelineConfig config;
    std::map<std::string, double> metric_means;       // over defined scores only
    std::map<std::string, std::size_t> defined_counts;
    double mean_total_ns = 0.0;
    double median_total_ns = 0.0;
    double p95_total_ns = 0.0;
    std::map<std::string, double> mean_stage_ns;
    std::size_t failure_count = 0;
    std::size_t record_count = 0;
};

inline ConfigSummary aggregate(const PipelineConfig& config,
                               const std::vector<RunRecord>& records) {
    if (records.empty()) throw SweepError("aggregate: no records");
    ConfigSummary s;
    s.config = config;
    s.config_id = config.id();
    s.record_count = records.size();

    std::map<std::string, std::vector<double>> per_metric;
    std::vector<double> totals;
    std::map<std::string, std::vector<double>> stages;
    for (const auto& rec : records) {
        if (rec.failed) ++s.failure_count;
        for (const auto& [name, score] : rec.scores.as_map())
            if (score.is_defined()) per_metric[name].push_back(*score.value);
        totals.push_back(static_cast<double>(rec.timings.total));
        stages["retrieval"].push_back(static_cast<double>(rec.timings.retrieval));
        stages["rerank"].push_back(static_cast<double>(rec.timings.rerank));
        stages["generation"].push_back(static_cast<double>(rec.timings.generation));
        stages["metrics"].push_back(static_cast<double>(rec.timings.metrics));
    }
    for (const auto& name : metric_names()) {
        auto it = per_metric.find(name);
        s.defined_counts[name] = it == per_metric.end() ? 0 : it->second.size();
        if (it != per_metric.end() && !it->second.empty()) s.metric_means[name] = mean(it->second);
    }
    s.mean_total_ns = mean(totals);
    s.median_total_ns = percentile(totals, 50.0);
    s.p95_total_ns = percentile(totals, 95.0);
    for (const auto& [name, xs] : stages) s.mean_stage_ns[name] = mean(xs);
    return s;
}

// Descending by the metric's mean (configs lacking the metric sort last),
// ties by config id.
inline std::vector<ConfigSummary> rank_configs(std::vector<ConfigSummary> summaries,
                                               const std::string& metric) {
    if (std::find(metric_names().begin(), metric_names().end(), metric) == metric_names().end())
        throw SweepError("rank_configs: unknown metric: " + metric);
    std::sort(summaries.begin(), summaries.end(),
              [&](const ConfigSummary& a, const ConfigSummary& b) {
                  auto ma = a.metric_means.find(metric);
                  auto mb = b.metric_means.find(metric);
                  bool ha = ma != a.metric_means.end(), hb = mb != b.metric_means.end();
                  if (ha != hb) return ha;
                  if (ha && hb && ma->second != mb->second) return ma->second > mb->second;
                  return a.config_id < b.config_id;
              });
    return summaries;
}

// -- serialization ----------------------------------------------------------

inline nlohmann::json config_to_json(const PipelineConfig& c) {
    nlohmann::json j{{"vector_metric", to_string(c.vector_metric)},
                     {"rerank", c.rerank},
                     {"rerank_pool", c.effective_rerank_pool()},
                     {"max_tokens", c.max_tokens},
                     {"temperature", c.temperature},
                     {"k_docs", c.k_docs}};
    if (c.chunking.kind == ChunkingPolicy::Kind::naive) {
        j["chunking"] = {{"kind", "naive"},
                         {"size", c.chunking.size},
                         {"overlap", c.chunking.overlap}};
    } else {
        j["chunking"] = {{"kind", "semantic"},
                         {"method", to_string(c.chunking.rule.method)},
                         {"parameter", c.chunking.rule.effective_parameter()}};
    }
    if (c.crag) {
        j["crag"] = {{"support_threshold", c.crag->support_threshold},
                     {"max_iterations", c.crag->max_iterations},
                     {"step", c.crag->step}};
    }
    return j;
}

inline nlohmann::json summary_to_json(const ConfigSummary& s) {
    nlohmann::json means, counts, stage_means;
    for (const auto& [k, v] : s.metric_means) means[k] = v;
    for (const auto& [k, v] : s.defined_counts) counts[k] = v;
    for (const auto& [k, v] : s.mean_stage_ns) stage_means[k] = v;
    return nlohmann::json{{"config_id", s.config_id},
                          {"config", config_to_json(s.config)},
                          {"metric_means", std::move(means)},
                          {"defined_counts", std::move(counts)},
                          {"mean_total_ns", s.mean_total_ns},
                          {"median_total_ns", s.median_total_ns},
                          {"p95_total_ns", s.p95_total_ns},
                          {"mean_stage_ns", std::move(stage_means)},
                          {"failure_count", s.failure_count},
                          {"record_count", s.record_count}};
}

inline ConfigSummary summary_from_json(const nlohmann::json& j) {
    ConfigSummary s;
    s.config_id = j.at("config_id").get<std::string>();
    const auto& jc = j.at("config");
    s.config.vector_metric = metric_from_string(jc.at("vector_metric").get<std::string>());
    s.config.rerank = jc.at("rerank").get<bool>();
    s.config.rerank_pool = jc.at("rerank_pool").get<int>();
    s.config.max_tokens = jc.at("max_tokens").get<int>();
    s.config.temperature = jc.at("temperature").get<double>();
    s.config.k_docs = jc.at("k_docs").get<int>();
    const auto& jk = jc.at("chunking");
    if (jk.at("kind") == "naive") {
        s.config.chunking.kind = ChunkingPolicy::Kind::naive;
        s.config.chunking.size = jk.at("size").get<std::size_t>();
        s.config.chunking.overlap = jk.at("overlap").get<std::size_t>();
    } else {
        s.config.chunking.kind = ChunkingPolicy::Kind::semantic;
        s.config.chunking.rule.method =
            breakpoint_method_from_string(jk.at("method").get<std::string>());
        s.config.chunking.rule.parameter = jk.at("parameter").get<double>();
    }
    for (const auto& [k, v] : j.at("metric_means").items()) s.metric_means[k] = v.get<double>();
    for (const auto& [k, v] : j.at("defined_counts").items())
        s.defined_counts[k] = v.get<std::size_t>();
    s.mean_total_ns = j.at("mean_total_ns").get<double>();
    s.median_total_ns = j.at("median_total_ns").get<double>();
    s.p95_total_ns = j.at("p95_total_ns").get<double>();
    for (const auto& [k, v] : j.at("mean_stage_ns").items()) s.mean_stage_ns[k] = v.get<double>();
    s.failure_count = j.at("failure_count").get<std::size_t>();
    s.record_count = j.at("record_count").get<std::size_t>();
    return s;
}

// -- sweep execution --------------------------------------------------------

struct SweepArtifacts {
    std::vector<ConfigSummary> summaries;
    std::map<std::string, std::vector<RunRecord>> records_by_config;
};

inline std::vector<RunRecord> run_config(const PipelineConfig& config, const Index& index,
                                         const std::vector<QAItem>& dataset,
                                         const Providers& providers,
                                         const RetryPolicy& retry_policy, int workers) {
    std::vector<RunRecord> records(dataset.size());
    auto run_one = [&](std::size_t i) {
        records[i] = config.crag ? crag_run_query(config, dataset[i], index, providers, retry_policy)
                                 : run_query(config, dataset[i], index, providers, retry_policy);
    };
    if (workers <= 1) {
        for (std::size_t i = 0; i < dataset.size(); ++i) run_one(i);
    } else {
        std::vector<std::future<void>> futures;
        std::atomic<std::size_t> next{0};
        for (int w = 0; w < workers; ++w) {
            futures.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next.fetch_add(1); i < dataset.size();
                     i = next.fetch_add(1))
                    run_one(i);
            }));
        }
        for (auto& f : futures) f.get();
    }
    return records;
}

inline SweepArtifacts run_sweep(const SweepConfig& sweep, const std::vector<Document>& corpus,
                                const std::vector<QAItem>& dataset, const Providers& providers) {
    namespace fs = std::filesystem;
    if (corpus.empty()) throw SweepError("run_sweep: empty corpus");
    if (dataset.empty()) throw SweepError("run_sweep: empty dataset");

    fs::create_directories(sweep.output_dir / "results");
    auto configs = expand_grid(sweep);

    // chunk+index cache, keyed by (chunking, embedder, metric)
    std::map<std::string, std::shared_ptr<Index>> index_cache;
    auto index_for = [&](const PipelineConfig& config) -> std::shared_ptr<Index> {
        std::string key =
            config.chunking.key() + "|" + providers.embedder->id() + "|" +
            to_string(config.vector_metric);
        auto it = index_cache.find(key);
        if (it != index_cache.end()) return it->second;

        std::vector<Chunk> chunks;
        for (const auto& doc : corpus) {
            auto cs = chunk_document(doc, config.chunking, *providers.embedder);
            chunks.insert(chunks.end(), cs.begin(), cs.end());
        }
        std::vector<std::string> texts;
        for (const auto& c : chunks) texts.push_back(c.text);
        auto vectors = providers.embedder->embed(texts);
        auto index = std::make_shared<Index>(std::move(chunks), std::move(vectors),
                                             config.vector_metric);
        index_cache[key] = index;
        return index;
    };

    SweepArtifacts artifacts;
    for (const auto& config : configs) {
        const std::string id = config.id();
        fs::path results_path = sweep.output_dir / "results" / (id + ".jsonl");

        std::vector<RunRecord> records;
        if (sweep.resume && fs::exists(results_path)) {
            std::ifstream in(results_path);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                records.push_back(run_record_from_json(nlohmann::json::parse(line)));
            }
        }

        if (records.empty()) {
            auto index = index_for(config);
            records = run_config(config, *index, dataset, providers, sweep.retry, sweep.workers);

            // write atomically so a partial file never passes for a result
            fs::path tmp = results_path;
            tmp += ".tmp";
            {
                std::ofstream out(tmp, std::ios::binary);
                if (!out) throw SweepError("cannot write results: " + results_path.string());
                for (const auto& rec : records) out << run_record_to_json(rec).dump() << "\n";
            }
            fs::rename(tmp, results_path);
        }

        artifacts.summaries.push_back(aggregate(config, records));
        artifacts.records_by_config[id] = std::move(records);
    }

    // summary.json + summary.csv
    nlohmann::json jsum = nlohmann::json::array();
    for (const auto& s : artifacts.summaries) jsum.push_back(summary_to_json(s));
    {
        std::ofstream out(sweep.output_dir / "summary.json", std::ios::binary);
        out << jsum.dump(2) << "\n";
    }
    {
        std::ofstream out(sweep.output_dir / "summary.csv", std::ios::binary);
        out << "config_id,vector_metric,rerank,max_tokens,temperature,k_docs,chunking";
        for (const auto& name : metric_names()) out << "," << name;
        out << ",mean_total_ns,failures\n";
        for (const auto& s : artifacts.summaries) {
            out << s.config_id << "," << to_string(s.config.vector_metric) << ","
                << (s.config.rerank ? "true" : "false") << "," << s.config.max_tokens << ","
                << s.config.temperature << "," << s.config.k_docs << "," << s.config.chunking.key();
            for (const auto& name : metric_names()) {
                out << ",";
                auto it = s.metric_means.find(name);
                if (it != s.metric_means.end()) out << it->second;
            }
            out << "," << s.mean_total_ns << "," << s.failure_count << "\n";
        }
    }
    return artifacts;
}

}  // namespace ragbench
