#pragma once

// Exponential backoff with jitter. Retries only the recoverable provider
// error kinds; anything else propagates immediately.

#include <chrono>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ragbench/providers.hpp"

namespace ragbench {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{100};
    double multiplier = 2.0;
    double jitter_fraction = 0.0;  // in [0,1]
    std::uint64_t jitter_seed = 0;

    // Delay before attempt n+1 (n = completed attempts), before jitter.
    std::chrono::milliseconds nominal_delay(int n) const {
        double d = static_cast<double>(base_delay.count());
        for (int i = 0; i < n; ++i) d *= multiplier;
        return std::chrono::milliseconds(static_cast<long long>(d));
    }
};

struct AttemptTrace {
    int attempts = 0;
    std::vector<std::chrono::milliseconds> delays;  // delay slept before each retry
    std::string last_error;
};

class RetriesExhausted : public std::runtime_error {
public:
    RetriesExhausted(const std::string& msg, AttemptTrace trace)
        : std::runtime_error(msg), trace(std::move(trace)) {}
    AttemptTrace trace;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

inline void default_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

template <typename Call>
auto with_retry(const RetryPolicy& policy, Call&& call, AttemptTrace* trace_out = nullptr,
                const SleepFn& sleep = default_sleep) -> decltype(call()) {
    if (policy.max_attempts < 1) throw std::invalid_argument("retry: max_attempts must be >= 1");
    AttemptTrace trace;
    std::mt19937_64 rng(policy.jitter_seed);
    for (int attempt = 0;; ++attempt) {
        ++trace.attempts;
        try {
            auto result = call();
            if (trace_out) *trace_out = trace;
            return result;
        } catch (const ProviderError& e) {
            trace.last_error = e.what();
            if (!e.retryable()) {
                if (trace_out) *trace_out = trace;
                throw;
            }
            if (attempt + 1 >= policy.max_attempts) {
                if (trace_out) *trace_out = trace;
                throw RetriesExhausted(std::string("retries exhausted: ") + e.what(), trace);
            }
            auto delay = policy.nominal_delay(attempt);
            if (policy.jitter_fraction > 0.0) {
                std::uniform_real_distribution<double> dist(1.0 - policy.jitter_fraction,
                                                            1.0 + policy.jitter_fraction);
                delay = std::chrono::milliseconds(
                    static_cast<long long>(static_cast<double>(delay.count()) * dist(rng)));
            }
            trace.delays.push_back(delay);
            sleep(delay);
        }
    }
}

}  // namespace ragbench
