#pragma once

// Remote HTTP providers. Each role maps to one JSON POST endpoint under a
// configured base URL; the API key is read from RAGBENCH_API_KEY and sent
// as a bearer token. Transport failures and throttling map onto the
// retryable provider error kinds; in-flight requests are bounded.
//
// Endpoint contract (request -> response):
//   /embed              {"model","input":[str]}            -> {"vectors":[[num]]}
//   /generate           {"model","prompt","context":[str],
//                        "temperature","max_tokens"}       -> {"text":str}
//   /claims             {"model","text"}                   -> {"claims":[str]}
//   /judge              {"model","claim","contexts":[str]} -> {"supported":bool}
//   /reverse_questions  {"model","answer","n"}             -> {"questions":[str]}
//   /entities           {"model","text"}                   -> {"entities":[str]}
//   /score_pair         {"model","query","passage"}        -> {"score":num}

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ragbench/providers.hpp"
#include "ragbench/retry.hpp"

namespace ragbench {

struct RemoteConfig {
    std::string host;  // e.g. "localhost"
    int port = 80;
    std::string model;
    std::string api_key_env = "RAGBENCH_API_KEY";
    RetryPolicy retry;
    int max_in_flight = 4;
};

namespace detail {

class InFlightLimiter {
public:
    explicit InFlightLimiter(int limit) : available_(limit) {}

    struct Slot {
        InFlightLimiter* limiter;
        ~Slot() { limiter->release(); }
    };

    Slot acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
        return Slot{this};
    }

private:
    void release() {
        std::lock_guard lock(mu_);
        ++available_;
        cv_.notify_one();
    }

    std::mutex mu_;
    std::condition_variable cv_;
    int available_;
};

}  // namespace detail

class RemoteClient {
public:
    explicit RemoteClient(RemoteConfig config)
        : config_(std::move(config)), limiter_(config_.max_in_flight) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    }

    nlohmann::json post(const std::string& path, nlohmann::json body) {
        body["model"] = config_.model;
        return with_retry(config_.retry, [&] { return post_once(path, body); });
    }

    const RemoteConfig& config() const { return config_; }

private:
    nlohmann::json post_once(const std::string& path, const nlohmann::json& body) {
        auto slot = limiter_.acquire();
        httplib::Client client(config_.host, config_.port);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res)
            throw ProviderError(ProviderErrorKind::transport,
                                "transport failure: " + httplib::to_string(res.error()));
        if (res->status == 429)
            throw ProviderError(ProviderErrorKind::rate_limited, "rate limited");
        if (res->status == 503)
            throw ProviderError(ProviderErrorKind::unavailable, "service unavailable");
        if (res->status >= 500)
            throw ProviderError(ProviderErrorKind::transient,
                                "server error " + std::to_string(res->status));
        if (res->status != 200)
            throw ProviderError(ProviderErrorKind::fatal,
                                "request failed with status " + std::to_string(res->status));
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(ProviderErrorKind::fatal,
                                std::string("malformed response: ") + e.what());
        }
    }

    RemoteConfig config_;
    std::string api_key_;
    detail::InFlightLimiter limiter_;
};

class RemoteEmbedder : public Embedder {
public:
    explicit RemoteEmbedder(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        if (texts.empty()) throw std::invalid_argument("embed: empty input list");
        auto res = client_->post("/embed", {{"input", texts}});
        std::vector<EmbeddingVector> out;
        for (const auto& v : res.at("vectors"))
            out.push_back({v.get<std::vector<double>>()});
        if (out.size() != texts.size())
            throw ProviderError(ProviderErrorKind::fatal, "embed: vector count mismatch");
        return out;
    }

    std::string id() const override { return "remote-" + client_->config().model; }

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteGenerator : public Generator {
public:
    explicit RemoteGenerator(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}

    std::string generate(const std::string& prompt, const std::vector<std::string>& context,
                         const GenerationParams& params) override {
        auto res = client_->post("/generate", {{"prompt", prompt},
                                               {"context", context},
                                               {"temperature", params.temperature},
                                               {"max_tokens", params.max_tokens}});
        return res.at("text").get<std::string>();
    }

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteClaimExtractor : public ClaimExtractor {
public:
    explicit RemoteClaimExtractor(std::shared_ptr<RemoteClient> client)
        : client_(std::move(client)) {}

    std::vector<Claim> extract_claims(const std::string& text) override {
        auto res = client_->post("/claims", {{"text", text}});
        std::vector<Claim> out;
        for (const auto& c : res.at("claims")) out.push_back({c.get<std::string>()});
        return out;
    }

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteSupportJudge : public SupportJudge {
public:
    explicit RemoteSupportJudge(std::shared_ptr<RemoteClient> client)
        : client_(std::move(client)) {}

    bool judge_support(const Claim& claim, const std::vector<std::string>& contexts) override {
        auto res = client_->post("/judge", {{"claim", claim.text}, {"contexts", contexts}});
        return res.at("supported").get<bool>();
    }

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteReverseQuestionGenerator : public ReverseQuestionGenerator {
public:
    explicit RemoteReverseQuestionGenerator(std::shared_ptr<RemoteClient> client)
        : client_(std::move(client)) {}

    std::vector<std::string> gen_reverse_questions(const std::string& answer, int n) override {
        auto res = client_->post("/reverse_questions", {{"answer", answer}, {"n", n}});
        return res.at("questions").get<std::vector<std::string>>();
    }

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteEntityExtractor : public EntityExtractor {
public:
    explicit RemoteEntityExtractor(std::shared_ptr<RemoteClient> client)
        : client_(std::move(client)) {}

    std::set<std::string> extract_entities(const std::string& text) override {
        auto res = client_->post("/entities", {{"text", text}});
        std::set<std::string> out;
        for (const auto& e : res.at("entities")) out.insert(e.get<std::string>());
        return out;
    }

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemotePairScorer : public PairScorer {
public:
    explicit RemotePairScorer(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}

    double score_pair(const std::string& query, const std::string& passage) override {
        auto res = client_->post("/score_pair", {{"query", query}, {"passage", passage}});
        double s = res.at("score").get<double>();
        return std::clamp(s, 0.0, 1.0);
    }

private:
    std::shared_ptr<RemoteClient> client_;
};

inline Providers make_remote_providers(const RemoteConfig& config) {
    auto client = std::make_shared<RemoteClient>(config);
    Providers p;
    p.embedder = std::make_shared<RemoteEmbedder>(client);
    p.generator = std::make_shared<RemoteGenerator>(client);
    p.claims = std::make_shared<RemoteClaimExtractor>(client);
    p.judge = std::make_shared<RemoteSupportJudge>(client);
    p.reverse_questions = std::make_shared<RemoteReverseQuestionGenerator>(client);
    p.entities = std::make_shared<RemoteEntityExtractor>(client);
    p.scorer = std::make_shared<RemotePairScorer>(client);
    return p;
}

}  // namespace ragbench
