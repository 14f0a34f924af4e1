#pragma once

// Corpus and QA dataset loading. A corpus is either a directory of UTF-8
// .txt files or a .jsonl file with {"id","text"} records; the evaluation
// dataset is a .jsonl file with {"id","question","ground_truth",
// "reference_contexts"} records.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ragbench {

struct Document {
    std::string id;
    std::string text;
    std::string source;
};

struct QAItem {
    std::string id;
    std::string question;
    std::string ground_truth;
    std::vector<std::string> reference_contexts;

    bool operator==(const QAItem&) const = default;
};

struct ValidationIssue {
    std::string item_id;
    std::string problem;
};

struct ValidationReport {
    std::size_t item_count = 0;
    std::vector<ValidationIssue> errors;
    std::vector<ValidationIssue> warnings;

    bool runnable() const { return errors.empty(); }
};

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DatasetError("cannot open file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

// One Document per .txt file (id = filename stem) or per jsonl record.
// Order is stable: lexicographic by id.
inline std::vector<Document> load_corpus(const std::filesystem::path& path,
                                         std::vector<std::string>* warnings = nullptr) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) throw DatasetError("corpus path does not exist: " + path.string());

    std::vector<Document> docs;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
            Document d;
            d.id = entry.path().stem().string();
            d.text = detail::read_file(entry.path());
            d.source = entry.path().string();
            if (d.text.empty()) throw DatasetError("empty corpus file: " + entry.path().string());
            docs.push_back(std::move(d));
        }
    } else {
        std::ifstream in(path);
        if (!in) throw DatasetError("cannot open corpus file: " + path.string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw DatasetError("corpus record parse error at line " + std::to_string(lineno) +
                                   ": " + e.what());
            }
            Document d;
            if (!j.contains("id") || !j["id"].is_string())
                throw DatasetError("corpus record missing id at line " + std::to_string(lineno));
            if (!j.contains("text") || !j["text"].is_string())
                throw DatasetError("corpus record missing text at line " + std::to_string(lineno));
            d.id = j["id"].get<std::string>();
            d.text = j["text"].get<std::string>();
            d.source = path.string() + ":" + std::to_string(lineno);
            if (d.id.empty()) throw DatasetError("empty corpus id at line " + std::to_string(lineno));
            if (d.text.empty()) throw DatasetError("empty corpus text for id \"" + d.id + "\"");
            docs.push_back(std::move(d));
        }
    }

    std::sort(docs.begin(), docs.end(),
              [](const Document& a, const Document& b) { return a.id < b.id; });
    std::set<std::string> seen;
    for (const auto& d : docs) {
        if (!seen.insert(d.id).second)
            throw DatasetError("duplicate document id: \"" + d.id + "\"");
    }
    if (docs.empty() && warnings) warnings->push_back("corpus is empty: " + path.string());
    return docs;
}

inline std::vector<QAItem> load_qa_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open dataset: " + path.string());
    std::vector<QAItem> items;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DatasetError("dataset parse error at line " + std::to_string(lineno) + ": " +
                               e.what());
        }
        QAItem item;
        for (const char* field : {"question", "ground_truth"}) {
            if (!j.contains(field) || !j[field].is_string())
                throw DatasetError(std::string("dataset record missing \"") + field +
                                   "\" at line " + std::to_string(lineno));
        }
        item.id = j.value("id", "q" + std::to_string(lineno));
        item.question = j["question"].get<std::string>();
        item.ground_truth = j["ground_truth"].get<std::string>();
        if (j.contains("reference_contexts")) {
            if (!j["reference_contexts"].is_array())
                throw DatasetError("reference_contexts is not a list at line " +
                                   std::to_string(lineno));
            for (const auto& c : j["reference_contexts"])
                item.reference_contexts.push_back(c.get<std::string>());
        }
        items.push_back(std::move(item));
    }
    return items;
}

inline void save_qa_dataset(const std::vector<QAItem>& items, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DatasetError("cannot write dataset: " + path.string());
    for (const auto& item : items) {
        nlohmann::json j{{"id", item.id},
                         {"question", item.question},
                         {"ground_truth", item.ground_truth},
                         {"reference_contexts", item.reference_contexts}};
        out << j.dump() << "\n";
    }
}

// Always returns a report; a dataset is runnable iff errors is empty.
// Reference contexts absent from the corpus are warnings only.
inline ValidationReport validate_dataset(const std::vector<QAItem>& items,
                                         const std::vector<Document>& corpus) {
    ValidationReport report;
    report.item_count = items.size();
    for (const auto& item : items) {
        if (item.question.empty()) report.errors.push_back({item.id, "empty question"});
        if (item.ground_truth.empty()) report.errors.push_back({item.id, "empty ground_truth"});
        for (const auto& ctx : item.reference_contexts) {
            bool found = false;
            for (const auto& doc : corpus) {
                if (doc.text.find(ctx) != std::string::npos) {
                    found = true;
                    break;
                }
            }
            if (!found)
                report.warnings.push_back({item.id, "reference context not found in corpus"});
        }
    }
    return report;
}

}  // namespace ragbench
