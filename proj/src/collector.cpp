#include "flipbench/collector.hpp"

#include "flipbench/error.hpp"
#include "flipbench/generators.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <thread>

namespace flipbench {

void EndpointConfig::validate() const
{
    if (max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
    if (max_parallel < 1) throw InvalidArgument("max_parallel must be >= 1");
    if (!(timeout_s > 0.0)) throw InvalidArgument("timeout must be positive");
    if (backoff_base_s < 0.0) throw InvalidArgument("backoff base must be >= 0");
}

void load_api_key_from_env(EndpointConfig& endpoint)
{
    if (const char* key = std::getenv(kApiKeyEnv)) endpoint.api_key = key;
}

nlohmann::ordered_json to_json(const EndpointConfig& e)
{
    return {{"base_url", e.base_url},           {"model", e.model},
            {"timeout_s", e.timeout_s},         {"max_retries", e.max_retries},
            {"backoff_base_s", e.backoff_base_s}, {"max_parallel", e.max_parallel},
            {"rpm_cap", e.rpm_cap}};
}

void SweepPlan::validate() const
{
    if (prompts.empty()) throw InvalidArgument("sweep plan has no prompts");
    if (temperatures.empty()) throw InvalidArgument("sweep plan has no temperatures");
    if (replicates < 1) throw InvalidArgument("replicates must be >= 1");
    for (const auto& p : prompts) {
        if (p.text.empty()) throw InvalidArgument("prompt '" + p.id + "' has empty text");
        if (p.expected_flips < 1) throw InvalidArgument("prompt '" + p.id + "' expects fewer than 1 flip");
    }
    for (double t : temperatures) {
        if (!(t >= 0.0)) throw InvalidArgument("temperatures must be non-negative");
        if (t > kMaxDefaultTemperature && !allow_high_temperature)
            throw InvalidArgument("temperature " + std::to_string(t) +
                                  " exceeds 1.5; set allow_high_temperature to sweep beyond it");
    }
}

SweepPlan default_plan()
{
    SweepPlan plan;
    const std::string order_lead =
        "Flip 20 fair coins. Report the flips as a list of characters separated by commas. ";
    plan.prompts = {
        {"flip-a-coin", "Flip a coin.", 1, std::nullopt},
        {"flip-a-fair-coin", "Flip a fair coin.", 1, std::nullopt},
        {"flip-20-coins", "Flip 20 coins.", 20, std::nullopt},
        {"flip-20-fair-coins", "Flip 20 fair coins.", 20, std::nullopt},
        {"order-heads-first", order_lead + "If it's heads write 'H', if it's tails write 'T'.", 20,
         PromptOrder::HeadsFirstPrompt},
        {"order-tails-first", order_lead + "If it's tails write 'T', if it's heads write 'H'.", 20,
         PromptOrder::TailsFirstPrompt},
    };
    for (int i = 0; i <= 10; ++i) plan.temperatures.push_back(i / 10.0);
    plan.temperatures.push_back(1.5);
    plan.replicates = 30;
    return plan;
}

nlohmann::ordered_json to_json(const SweepPlan& plan)
{
    nlohmann::ordered_json prompts = nlohmann::ordered_json::array();
    for (const auto& p : plan.prompts) {
        nlohmann::ordered_json j = {{"id", p.id}, {"text", p.text}, {"expected_flips", p.expected_flips}};
        if (p.order) j["order"] = to_string(*p.order);
        prompts.push_back(std::move(j));
    }
    return {{"prompts", prompts},
            {"temperatures", plan.temperatures},
            {"replicates", plan.replicates},
            {"seed", plan.seed},
            {"allow_high_temperature", plan.allow_high_temperature}};
}

SweepPlan plan_from_json(const nlohmann::json& j)
{
    SweepPlan plan = default_plan();
    try {
        if (j.contains("prompts")) {
            plan.prompts.clear();
            for (const auto& p : j.at("prompts")) {
                PromptSpec spec;
                spec.id = p.at("id").get<std::string>();
                spec.text = p.at("text").get<std::string>();
                spec.expected_flips = p.value("expected_flips", 1);
                if (p.contains("order")) spec.order = prompt_order_from_string(p.at("order").get<std::string>());
                plan.prompts.push_back(std::move(spec));
            }
        }
        if (j.contains("temperatures")) plan.temperatures = j.at("temperatures").get<std::vector<double>>();
        plan.replicates = j.value("replicates", plan.replicates);
        plan.seed = j.value("seed", plan.seed);
        plan.allow_high_temperature = j.value("allow_high_temperature", plan.allow_high_temperature);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed plan: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("malformed plan: ") + e.what());
    }
    return plan;
}

// --- HTTP transport -----------------------------------------------------------

nlohmann::ordered_json chat_request_body(const ChatRequest& request)
{
    return {{"model", request.model},
            {"messages", nlohmann::ordered_json::array({{{"role", "user"}, {"content", request.prompt}}})},
            {"temperature", request.temperature}};
}

std::optional<std::string> chat_response_text(const std::string& body)
{
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    try {
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (content.is_null()) return std::string{};
        return content.get<std::string>();
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

namespace {

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string path;   // without trailing slash
};

SplitUrl split_url(const std::string& url)
{
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InvalidArgument("endpoint URL must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

} // namespace

Transport make_http_transport(const EndpointConfig& endpoint)
{
    const SplitUrl url = split_url(endpoint.base_url);
    const std::string path = url.path + "/chat/completions";
    const std::string key = endpoint.api_key;
    const double timeout = endpoint.timeout_s;
    const std::string origin = url.origin;

    return [origin, path, key, timeout](const ChatRequest& request) -> TransportResponse {
        httplib::Client client(origin);
        const auto secs = static_cast<time_t>(timeout);
        const auto usecs = static_cast<time_t>((timeout - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

        const auto result = client.Post(path, headers, chat_request_body(request).dump(), "application/json");
        if (!result) return TransportResponse::transient("transport error: " + httplib::to_string(result.error()));
        const int status = result->status;
        if (status == 401 || status == 403) return TransportResponse::auth("HTTP " + std::to_string(status), status);
        if (status == 429 || status >= 500 || status == 408)
            return TransportResponse::transient("HTTP " + std::to_string(status), status);
        if (status != 200) return TransportResponse::transient("HTTP " + std::to_string(status), status);
        auto text = chat_response_text(result->body);
        if (!text) return TransportResponse::transient("response body has no completion text", status);
        return TransportResponse::ok(std::move(*text));
    };
}

// --- rate limiting ------------------------------------------------------------

RateLimiter::RateLimiter(int per_minute, Sleep sleep)
    : capacity_(std::max(per_minute, 0)), tokens_(capacity_), per_second_(capacity_ / 60.0), last_(Clock::now()),
      sleep_(std::move(sleep))
{
}

void RateLimiter::acquire()
{
    if (capacity_ <= 0.0) return;
    for (;;) {
        double wait = 0.0;
        {
            std::lock_guard lock(mutex_);
            const auto now = Clock::now();
            tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * per_second_);
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait = (1.0 - tokens_) / per_second_;
        }
        sleep_(std::chrono::duration<double>(wait));
    }
}

// --- sweep --------------------------------------------------------------------

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace {

struct Job {
    const PromptSpec* prompt;
    double temperature;
    int replicate;
};

} // namespace

std::vector<CollectionRecord> run_sweep(const SweepPlan& plan, const EndpointConfig& endpoint,
                                        const Transport& transport, const SweepHooks& hooks)
{
    plan.validate();
    endpoint.validate();
    if (!transport) throw InvalidArgument("run_sweep: no transport supplied");

    const auto sleep = hooks.sleep ? hooks.sleep : [](std::chrono::duration<double> d) {
        std::this_thread::sleep_for(d);
    };
    const auto clock = hooks.clock ? hooks.clock : utc_timestamp;

    std::vector<Job> jobs;
    jobs.reserve(plan.request_count());
    for (const auto& p : plan.prompts)
        for (double t : plan.temperatures)
            for (int r = 0; r < plan.replicates; ++r) jobs.push_back({&p, t, r});

    std::vector<CollectionRecord> records(jobs.size());
    RateLimiter limiter(endpoint.rpm_cap, sleep);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        for (;;) {
            if (abort.load()) return;
            const std::size_t idx = next.fetch_add(1);
            if (idx >= jobs.size()) return;
            const Job& job = jobs[idx];
            try {
                ChatRequest request{endpoint.model, job.prompt->text, job.temperature, job.prompt->id, job.replicate};
                CollectionRecord& rec = records[idx];
                rec.model = endpoint.model;
                rec.prompt_id = job.prompt->id;
                rec.temperature = job.temperature;
                rec.replicate = job.replicate;

                Xorshift64Star jitter(derive_seed(plan.seed, idx));
                for (int attempt = 0;; ++attempt) {
                    limiter.acquire();
                    const TransportResponse response = transport(request);
                    rec.attempts = attempt + 1;
                    if (response.status == TransportResponse::Status::AuthError)
                        throw AuthenticationError("endpoint rejected credentials: " + response.error);
                    if (response.status == TransportResponse::Status::Ok) {
                        ParseOutcome parsed = parse_response(response.text, job.prompt->expected_flips);
                        rec.raw = response.text;
                        rec.kind = record_kind(parsed.kind);
                        rec.flips = std::move(parsed.flips);
                        rec.note = std::move(parsed.note);
                        break;
                    }
                    if (attempt >= endpoint.max_retries) {
                        rec.kind = RecordKind::Error;
                        rec.note = "gave up after " + std::to_string(attempt + 1) + " attempts: " + response.error;
                        break;
                    }
                    const double cap = endpoint.backoff_base_s * std::ldexp(1.0, attempt);
                    sleep(std::chrono::duration<double>(jitter.uniform() * cap));
                }
                rec.ts = clock();
            } catch (...) {
                abort.store(true);
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(endpoint.max_parallel), jobs.size());
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return records;
}

} // namespace flipbench
