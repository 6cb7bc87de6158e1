#pragma once

#include "flipbench/record.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace flipbench {

struct EndpointConfig {
    std::string base_url;
    std::string model;
    std::string api_key; // from FLIPBENCH_API_KEY only; never serialized
    double timeout_s = 60.0;
    int max_retries = 3;
    double backoff_base_s = 1.0;
    int max_parallel = 4;
    int rpm_cap = 60; // <= 0 disables rate limiting

    void validate() const;
};

inline constexpr const char* kApiKeyEnv = "FLIPBENCH_API_KEY";

/// Copies FLIPBENCH_API_KEY into the endpoint, if set.
void load_api_key_from_env(EndpointConfig& endpoint);

/// Endpoint fields other than the key. Omits api_key by construction.
nlohmann::ordered_json to_json(const EndpointConfig& endpoint);

struct PromptSpec {
    std::string id;
    std::string text;
    int expected_flips = 1;
    std::optional<PromptOrder> order;
};

inline constexpr double kMaxDefaultTemperature = 1.5;

struct SweepPlan {
    std::vector<PromptSpec> prompts;
    std::vector<double> temperatures;
    int replicates = 30;
    std::uint64_t seed = 0;
    bool allow_high_temperature = false;

    /// Throws InvalidArgument on empty prompt text, expected_flips < 1,
    /// replicates < 1, negative temperatures, or temperatures above 1.5
    /// without allow_high_temperature.
    void validate() const;
    std::size_t request_count() const { return prompts.size() * temperatures.size() * static_cast<std::size_t>(replicates); }
};

/// The standard prompt set: single flips, 20-flip sequences, and the two
/// instruction-order variants, over temperatures 0.0..1.0 step 0.1 and 1.5.
SweepPlan default_plan();

nlohmann::ordered_json to_json(const SweepPlan& plan);
SweepPlan plan_from_json(const nlohmann::json& j);

struct ChatRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.0;
    // Not sent on the wire; lets mock transports answer per cell.
    std::string prompt_id;
    int replicate = 0;
};

struct TransportResponse {
    enum class Status { Ok, TransientError, AuthError };
    Status status = Status::Ok;
    std::string text;
    int http_status = 0;
    std::string error;

    static TransportResponse ok(std::string text) { return {Status::Ok, std::move(text), 200, {}}; }
    static TransportResponse transient(std::string error, int http_status = 0)
    {
        return {Status::TransientError, {}, http_status, std::move(error)};
    }
    static TransportResponse auth(std::string error, int http_status = 401)
    {
        return {Status::AuthError, {}, http_status, std::move(error)};
    }
};

using Transport = std::function<TransportResponse(const ChatRequest&)>;

/// OpenAI-style chat completions over HTTP(S): POSTs
/// {"model", "messages": [{"role": "user", "content": prompt}], "temperature"}
/// to <base_url>/chat/completions and reads choices[0].message.content.
/// 401/403 map to AuthError; network failures, 429 and 5xx to TransientError.
Transport make_http_transport(const EndpointConfig& endpoint);

/// Request body sent by the HTTP transport.
nlohmann::ordered_json chat_request_body(const ChatRequest& request);

/// Pulls the completion text out of a response body, if present.
std::optional<std::string> chat_response_text(const std::string& body);

// Token bucket allowing `per_minute` acquisitions per minute with a burst of
// the same size. Thread-safe.
class RateLimiter {
public:
    using Clock = std::chrono::steady_clock;
    using Sleep = std::function<void(std::chrono::duration<double>)>;

    RateLimiter(int per_minute, Sleep sleep);
    void acquire();

private:
    std::mutex mutex_;
    double capacity_;
    double tokens_;
    double per_second_;
    Clock::time_point last_;
    Sleep sleep_;
};

struct SweepHooks {
    // Backoff and rate-limit waits. Defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::duration<double>)> sleep;
    // Record timestamps. Defaults to UTC wall clock, ISO-8601.
    std::function<std::string()> clock;
};

/// One request per (prompt, temperature, replicate), up to max_parallel in
/// flight. Transport failures are retried up to max_retries times after
/// waiting uniform(0, backoff_base * 2^attempt) seconds; parse failures are
/// not retried. Every request yields exactly one record, in plan order.
/// Throws AuthenticationError if the endpoint rejects the credentials.
std::vector<CollectionRecord> run_sweep(const SweepPlan& plan, const EndpointConfig& endpoint,
                                        const Transport& transport, const SweepHooks& hooks = {});

std::string utc_timestamp();

} // namespace flipbench
