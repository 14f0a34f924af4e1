// ragbench CLI: chunk, index, eval, sweep, crag, report, validate.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ragbench/chunking.hpp"
#include "ragbench/corpus.hpp"
#include "ragbench/providers.hpp"
#include "ragbench/remote.hpp"
#include "ragbench/report.hpp"
#include "ragbench/sweep.hpp"
#include "ragbench/vector_index.hpp"

namespace fs = std::filesystem;
using namespace ragbench;

namespace {

int log_level() {
    const char* v = std::getenv("RAGBENCH_LOG");
    if (!v) return 1;
    std::string s(v);
    if (s == "debug") return 2;
    if (s == "quiet") return 0;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[ragbench] " << msg << "\n";
}

struct ProviderOpts {
    std::string kind = "deterministic";  // deterministic | remote
    std::string host = "localhost";
    int port = 8080;
    std::string model = "default";
    std::size_t dimension = 256;

    Providers make() const {
        if (kind == "remote") {
            RemoteConfig c;
            c.host = host;
            c.port = port;
            c.model = model;
            return make_remote_providers(c);
        }
        return make_deterministic_providers(dimension);
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--provider", kind, "Provider backend")
            ->check(CLI::IsMember({"deterministic", "remote"}));
        cmd->add_option("--remote-host", host, "Remote provider host");
        cmd->add_option("--remote-port", port, "Remote provider port");
        cmd->add_option("--remote-model", model, "Remote model name");
        cmd->add_option("--embedding-dim", dimension, "Deterministic embedding dimension");
    }
};

struct ChunkOpts {
    std::string kind = "naive";
    std::size_t size = 1024;
    std::size_t overlap = 128;
    std::string method = "percentile";
    double parameter = 0.0;

    ChunkingPolicy policy() const {
        ChunkingPolicy p;
        if (kind == "naive") {
            p.kind = ChunkingPolicy::Kind::naive;
            p.size = size;
            p.overlap = overlap;
        } else {
            p.kind = ChunkingPolicy::Kind::semantic;
            p.rule.method = breakpoint_method_from_string(method);
            p.rule.parameter = parameter;
        }
        return p;
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--chunking", kind, "Chunking kind")
            ->check(CLI::IsMember({"naive", "semantic"}));
        cmd->add_option("--size", size, "Naive chunk size in tokens");
        cmd->add_option("--overlap", overlap, "Naive chunk overlap in tokens");
        cmd->add_option("--method", method, "Semantic breakpoint method")
            ->check(CLI::IsMember({"percentile", "interquartile", "gradient", "stddev"}));
        cmd->add_option("--parameter", parameter, "Breakpoint method parameter (0 = default)");
    }
};

std::vector<Chunk> load_chunk_dump(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open chunk file: " + path.string());
    std::vector<Chunk> chunks;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        Chunk c;
        c.doc_id = j.at("doc_id").get<std::string>();
        c.index = j.at("index").get<std::size_t>();
        c.token_start = j.at("token_start").get<std::size_t>();
        c.token_end = j.at("token_end").get<std::size_t>();
        c.text = j.at("text").get<std::string>();
        chunks.push_back(std::move(c));
    }
    return chunks;
}

std::vector<ConfigSummary> load_summaries(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open summary: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    std::vector<ConfigSummary> out;
    for (const auto& js : j) out.push_back(summary_from_json(js));
    return out;
}

std::map<std::string, std::vector<RunRecord>> load_records_dir(const fs::path& dir) {
    std::map<std::string, std::vector<RunRecord>> out;
    if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".jsonl") continue;
        std::ifstream in(entry.path());
        std::string line;
        std::vector<RunRecord> records;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            records.push_back(run_record_from_json(nlohmann::json::parse(line)));
        }
        out[entry.path().stem().string()] = std::move(records);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RAG benchmark harness"};
    app.require_subcommand(1);

    std::string corpus_path, dataset_path, config_path, out_path = "out";
    std::string summary_path, records_path, chunks_path, metric = "faithfulness";
    std::string group_by = "chunking", format = "table", index_metric = "l2";
    int workers = 1, k = 4;
    bool resume = false;
    ProviderOpts providers_opts;
    ChunkOpts chunk_opts;

    // validate
    auto* cmd_validate = app.add_subcommand("validate", "Validate a corpus and QA dataset");
    cmd_validate->add_option("--corpus", corpus_path, "Corpus directory or jsonl")->required();
    cmd_validate->add_option("--dataset", dataset_path, "QA dataset jsonl")->required();

    // chunk
    auto* cmd_chunk = app.add_subcommand("chunk", "Chunk a corpus and dump the chunks as jsonl");
    cmd_chunk->add_option("--corpus", corpus_path, "Corpus directory or jsonl")->required();
    cmd_chunk->add_option("--out", out_path, "Output jsonl path")->required();
    chunk_opts.attach(cmd_chunk);
    providers_opts.attach(cmd_chunk);

    // index
    auto* cmd_index = app.add_subcommand("index", "Build and persist a vector index");
    cmd_index->add_option("--corpus", corpus_path, "Corpus directory or jsonl");
    cmd_index->add_option("--chunks", chunks_path, "Pre-chunked jsonl (from the chunk command)");
    cmd_index->add_option("--out", out_path, "Output index path")->required();
    cmd_index->add_option("--metric", index_metric, "Distance metric")
        ->check(CLI::IsMember({"l2", "cosine"}));
    chunk_opts.attach(cmd_index);
    providers_opts.attach(cmd_index);

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "Run a single configuration over a dataset");
    cmd_eval->add_option("--config", config_path, "Sweep config json (must expand to 1 config)")
        ->required();
    cmd_eval->add_option("--corpus", corpus_path, "Corpus directory or jsonl")->required();
    cmd_eval->add_option("--dataset", dataset_path, "QA dataset jsonl")->required();
    cmd_eval->add_option("--out", out_path, "Output directory");
    providers_opts.attach(cmd_eval);

    // sweep
    auto* cmd_sweep = app.add_subcommand("sweep", "Run the full configuration grid");
    cmd_sweep->add_option("--config", config_path, "Sweep config json")->required();
    cmd_sweep->add_option("--corpus", corpus_path, "Corpus directory or jsonl")->required();
    cmd_sweep->add_option("--dataset", dataset_path, "QA dataset jsonl")->required();
    cmd_sweep->add_option("--out", out_path, "Output directory");
    cmd_sweep->add_option("--workers", workers, "Concurrent questions per config");
    cmd_sweep->add_flag("--resume", resume, "Skip configurations with existing results");
    providers_opts.attach(cmd_sweep);

    // crag
    auto* cmd_crag = app.add_subcommand(
        "crag", "Re-evaluate the best configuration per metric with corrective retrieval");
    cmd_crag->add_option("--summary", summary_path, "summary.json from a finished sweep")
        ->required();
    cmd_crag->add_option("--corpus", corpus_path, "Corpus directory or jsonl")->required();
    cmd_crag->add_option("--dataset", dataset_path, "QA dataset jsonl")->required();
    cmd_crag->add_option("--out", out_path, "Output directory");
    double crag_threshold = 0.8;
    int crag_iters = 3, crag_step = 0;
    cmd_crag->add_option("--support-threshold", crag_threshold, "Draft support threshold");
    cmd_crag->add_option("--max-iterations", crag_iters, "Corrective iteration cap");
    cmd_crag->add_option("--step", crag_step, "Extra docs per iteration (0 = k_docs)");
    providers_opts.attach(cmd_crag);

    // report
    auto* cmd_report = app.add_subcommand("report", "Emit tables and plots from sweep outputs");
    cmd_report->add_option("--summary", summary_path, "summary.json from a finished sweep")
        ->required();
    cmd_report->add_option("--records", records_path, "results/ directory (needed for svg)");
    cmd_report->add_option("--group-by", group_by, "Grouping dimension")
        ->check(CLI::IsMember(
            {"vector_metric", "rerank", "max_tokens", "temperature", "k_docs", "chunking",
             "config"}));
    cmd_report->add_option("--metric", metric, "Metric for svg plots / selection");
    cmd_report->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"table", "csv", "json", "svg"}));
    cmd_report->add_option("--out", out_path, "Output file (default stdout)");
    bool best_table = false;
    cmd_report->add_flag("--best-of-metric", best_table,
                         "Emit the best-configuration-per-metric table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cmd_validate) {
            std::vector<std::string> warnings;
            auto corpus = load_corpus(corpus_path, &warnings);
            auto items = load_qa_dataset(dataset_path);
            auto report = validate_dataset(items, corpus);
            std::cout << "items: " << report.item_count << "\n";
            for (const auto& w : warnings) std::cout << "warning: " << w << "\n";
            for (const auto& w : report.warnings)
                std::cout << "warning: [" << w.item_id << "] " << w.problem << "\n";
            for (const auto& e : report.errors)
                std::cout << "error: [" << e.item_id << "] " << e.problem << "\n";
            std::cout << (report.runnable() ? "dataset OK" : "dataset has errors") << "\n";
            return report.runnable() ? 0 : 1;
        }

        if (*cmd_chunk) {
            auto corpus = load_corpus(corpus_path);
            auto providers = providers_opts.make();
            std::ofstream out(out_path, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write: " + out_path);
            std::size_t n = 0;
            for (const auto& doc : corpus) {
                for (const auto& c : chunk_document(doc, chunk_opts.policy(), *providers.embedder)) {
                    nlohmann::json j{{"doc_id", c.doc_id},
                                     {"index", c.index},
                                     {"token_start", c.token_start},
                                     {"token_end", c.token_end},
                                     {"text", c.text}};
                    out << j.dump() << "\n";
                    ++n;
                }
            }
            info("wrote " + std::to_string(n) + " chunks to " + out_path);
            return 0;
        }

        if (*cmd_index) {
            auto providers = providers_opts.make();
            std::vector<Chunk> chunks;
            if (!chunks_path.empty()) {
                chunks = load_chunk_dump(chunks_path);
            } else if (!corpus_path.empty()) {
                for (const auto& doc : load_corpus(corpus_path)) {
                    auto cs = chunk_document(doc, chunk_opts.policy(), *providers.embedder);
                    chunks.insert(chunks.end(), cs.begin(), cs.end());
                }
            } else {
                throw std::runtime_error("index: need --corpus or --chunks");
            }
            std::vector<std::string> texts;
            for (const auto& c : chunks) texts.push_back(c.text);
            auto vectors = providers.embedder->embed(texts);
            Index index(std::move(chunks), std::move(vectors), metric_from_string(index_metric));
            save_index(index, out_path);
            info("indexed " + std::to_string(index.size()) + " chunks to " + out_path);
            return 0;
        }

        if (*cmd_eval || *cmd_sweep) {
            auto sweep = parse_sweep_config(config_path);
            if (*cmd_eval && expand_grid(sweep).size() != 1)
                throw std::runtime_error("eval: config must expand to exactly one configuration");
            sweep.output_dir = out_path;
            sweep.workers = workers;
            sweep.resume = resume;
            auto corpus = load_corpus(corpus_path);
            auto dataset = load_qa_dataset(dataset_path);
            auto report = validate_dataset(dataset, corpus);
            if (!report.runnable()) {
                for (const auto& e : report.errors)
                    std::cerr << "error: [" << e.item_id << "] " << e.problem << "\n";
                return 1;
            }
            auto providers = providers_opts.make();
            auto artifacts = run_sweep(sweep, corpus, dataset, providers);
            info("completed " + std::to_string(artifacts.summaries.size()) +
                 " configuration(s); outputs in " + out_path);
            return 0;
        }

        if (*cmd_crag) {
            auto summaries = load_summaries(summary_path);
            auto corpus = load_corpus(corpus_path);
            auto dataset = load_qa_dataset(dataset_path);
            auto providers = providers_opts.make();

            fs::create_directories(fs::path(out_path) / "results");
            std::cout << "Metric,Reranking,Vector Metric,Max Tokens,Temperature,Max Docs,"
                         "Chunking,Relevance Rate\n";
            for (const auto& m : metric_names()) {
                auto ranked = rank_configs(summaries, m);
                if (ranked.empty() || !ranked.front().metric_means.count(m)) continue;
                PipelineConfig config = ranked.front().config;
                config.crag = CragConfig{crag_threshold, crag_iters, crag_step};

                SweepConfig single;
                single.vector_metrics = {config.vector_metric};
                single.rerank_options = {config.rerank};
                single.max_tokens_options = {config.max_tokens};
                single.temperatures = {config.temperature};
                single.k_docs_options = {config.k_docs};
                single.chunkings = {config.chunking};
                single.crag = config.crag;
                single.output_dir = fs::path(out_path) / ("crag-" + m);
                auto artifacts = run_sweep(single, corpus, dataset, providers);
                const auto& records = artifacts.records_by_config.begin()->second;
                double rate = relevance_rate(records);
                std::cout << pretty_metric(m) << "," << (config.rerank ? "true" : "false") << ","
                          << to_string(config.vector_metric) << "," << config.max_tokens << ","
                          << config.temperature << "," << config.k_docs << ","
                          << config.chunking.key() << "," << rate << "%\n";
            }
            return 0;
        }

        if (*cmd_report) {
            auto summaries = load_summaries(summary_path);
            std::string output;
            if (best_table) {
                ReportFormat f = format == "csv"    ? ReportFormat::csv
                                 : format == "json" ? ReportFormat::json
                                                    : ReportFormat::text_table;
                output = best_of_metric_table(summaries, f);
            } else if (format == "svg") {
                if (records_path.empty())
                    throw std::runtime_error("svg plots need --records");
                auto records = load_records_dir(records_path);
                auto groups = metric_distribution(records, summaries, group_by, metric);
                output = distribution_plot(groups, pretty_metric(metric) + " by " + group_by);
            } else {
                ReportSpec spec;
                spec.group_by = group_by;
                spec.format = format == "csv"    ? ReportFormat::csv
                              : format == "json" ? ReportFormat::json
                                                 : ReportFormat::text_table;
                output = table_report(summaries, spec);
            }
            if (out_path != "out") {
                std::ofstream out(out_path, std::ios::binary);
                if (!out) throw std::runtime_error("cannot write: " + out_path);
                out << output;
            } else {
                std::cout << output;
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
