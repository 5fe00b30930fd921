#pragma once

#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "morallens/util.hpp"

namespace morallens {

struct ProviderProfile {
    std::string name;       // display name; defaults to model_id when empty
    std::string endpoint;   // base URL, e.g. "https://api.example.com/v1", or "mock:*"
    std::string model_id;
    std::string auth_env;   // env var holding the key; empty = unauthenticated endpoint
    double temperature = 1.0;
    bool reasoning_mode = false;
    double rate_limit = 2.0;        // requests per second
    double burst = 1.0;
    double request_timeout = 30.0;  // seconds
    int transport_retries = 2;
    int parallelism = 4;

    std::string display_name() const { return name.empty() ? model_id : name; }

    void validate() const {
        if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
        if (rate_limit <= 0.0) throw std::invalid_argument("rate_limit must be > 0");
        if (request_timeout <= 0.0) throw std::invalid_argument("request_timeout must be > 0");
        if (transport_retries < 0) throw std::invalid_argument("transport_retries must be >= 0");
    }
};

struct ChatExchange {
    std::string system_text;
    std::string user_text;
    std::string response_text;
    double latency_ms = 0.0;
    int transport_attempts = 1;
};

struct TransportError {
    enum class Kind { timeout, http_status, malformed_payload, rate_limit_exhausted, auth_missing };
    Kind kind = Kind::http_status;
    std::string detail;
};

inline std::string to_string(TransportError::Kind k) {
    switch (k) {
        case TransportError::Kind::timeout: return "timeout";
        case TransportError::Kind::http_status: return "http_status";
        case TransportError::Kind::malformed_payload: return "malformed_payload";
        case TransportError::Kind::rate_limit_exhausted: return "rate_limit_exhausted";
        case TransportError::Kind::auth_missing: return "auth_missing";
    }
    return "unknown";
}

class TransportException : public std::runtime_error {
public:
    explicit TransportException(TransportError err)
        : std::runtime_error(to_string(err.kind) + ": " + err.detail), error_(std::move(err)) {}
    const TransportError& error() const { return error_; }

private:
    TransportError error_;
};

// Injectable time sources so rate limiting and backoff are testable without
// wall-clock sleeps.
using ClockFn = std::function<double()>;          // monotonic seconds
using SleepFn = std::function<void(double)>;      // sleep for seconds

inline ClockFn steady_clock_fn() {
    return [] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
            .count();
    };
}

inline SleepFn thread_sleep_fn() {
    return [](double seconds) {
        if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    };
}

/// Token bucket. For any window of w seconds, grants <= ceil(rate * w) + burst.
class RateLimiter {
public:
    RateLimiter(double rate_per_sec, double burst = 1.0, ClockFn clock = steady_clock_fn(),
                SleepFn sleep = thread_sleep_fn())
        : rate_(rate_per_sec),
          capacity_(burst),
          tokens_(burst),
          clock_(std::move(clock)),
          sleep_(std::move(sleep)),
          last_(clock_()) {
        if (rate_per_sec <= 0.0) throw std::invalid_argument("rate must be > 0");
        if (burst < 1.0) throw std::invalid_argument("burst must be >= 1");
    }

    /// Blocks until a token is available. The epsilon keeps sub-ULP token
    /// deficits from turning into waits too small to advance any clock.
    void acquire() {
        constexpr double eps = 1e-9;
        while (true) {
            double wait = 0.0;
            {
                std::lock_guard<std::mutex> lock(mutex_);
                refill();
                if (tokens_ >= 1.0 - eps) {
                    tokens_ = std::max(0.0, tokens_ - 1.0);
                    return;
                }
                wait = (1.0 - tokens_) / rate_;
            }
            sleep_(wait);
        }
    }

private:
    void refill() {
        const double now = clock_();
        tokens_ = std::min(capacity_, tokens_ + (now - last_) * rate_);
        last_ = now;
    }

    double rate_;
    double capacity_;
    double tokens_;
    ClockFn clock_;
    SleepFn sleep_;
    double last_;
    std::mutex mutex_;
};

/// Exponential backoff with jitter: base 1 s doubling, capped at 30 s.
inline double backoff_delay(int attempt, double jitter01, double base = 1.0, double cap = 30.0) {
    double d = base;
    for (int i = 1; i < attempt; ++i) {
        d *= 2.0;
        if (d >= cap) break;
    }
    d = std::min(d, cap);
    return d * (0.5 + 0.5 * jitter01);
}

inline std::string request_fingerprint(const std::string& system_text, const std::string& user_text) {
    return hex64(fnv1a64(user_text, fnv1a64(system_text, fnv1a64("\x1f"))));
}

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    /// Returns the first successful exchange; throws TransportException when
    /// the transport budget is exhausted.
    virtual ChatExchange send(const std::string& system_text, const std::string& user_text) = 0;
    virtual const ProviderProfile& profile() const = 0;
};

// ---------------------------------------------------------------------------
// Scripted provider: fully offline test double
// ---------------------------------------------------------------------------

struct ScriptEntry {
    std::string response;
    int fail_times = 0;  // simulated transport failures before this entry succeeds
};

/// Sequence scripts pop entries in order; keyed scripts select by request
/// fingerprint. Satisfies the send contract including transport retry
/// accounting (no real sleeping by default).
class ScriptedProvider : public ChatProvider {
public:
    static std::shared_ptr<ScriptedProvider> sequence(std::vector<ScriptEntry> entries,
                                                      ProviderProfile profile = {}) {
        if (entries.empty()) throw std::invalid_argument("script must be nonempty");
        auto p = std::make_shared<ScriptedProvider>();
        p->entries_ = std::move(entries);
        p->profile_ = finalize_profile(std::move(profile), "scripted-sequence");
        return p;
    }

    static std::shared_ptr<ScriptedProvider> keyed(std::map<std::string, ScriptEntry> entries,
                                                   ProviderProfile profile = {}) {
        if (entries.empty()) throw std::invalid_argument("script must be nonempty");
        auto p = std::make_shared<ScriptedProvider>();
        p->keyed_ = std::move(entries);
        p->profile_ = finalize_profile(std::move(profile), "scripted-keyed");
        return p;
    }

    ChatExchange send(const std::string& system_text, const std::string& user_text) override {
        ScriptEntry entry;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (!keyed_.empty()) {
                auto it = keyed_.find(request_fingerprint(system_text, user_text));
                if (it == keyed_.end())
                    throw TransportException({TransportError::Kind::malformed_payload,
                                              "no script entry for request fingerprint"});
                entry = it->second;
            } else {
                if (cursor_ >= entries_.size())
                    throw TransportException(
                        {TransportError::Kind::malformed_payload, "script exhausted"});
                entry = entries_[cursor_++];
            }
            total_sends_ += 1;
        }
        if (entry.fail_times > profile_.transport_retries)
            throw TransportException({TransportError::Kind::http_status,
                                      "scripted failure outlasted transport retry budget"});
        ChatExchange ex;
        ex.system_text = system_text;
        ex.user_text = user_text;
        ex.response_text = entry.response;
        ex.transport_attempts = entry.fail_times + 1;
        return ex;
    }

    const ProviderProfile& profile() const override { return profile_; }

    int total_sends() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return total_sends_;
    }

private:
    static ProviderProfile finalize_profile(ProviderProfile p, const std::string& fallback_id) {
        if (p.model_id.empty()) p.model_id = fallback_id;
        if (p.endpoint.empty()) p.endpoint = "scripted:";
        return p;
    }

    std::vector<ScriptEntry> entries_;
    std::map<std::string, ScriptEntry> keyed_;
    size_t cursor_ = 0;
    int total_sends_ = 0;
    ProviderProfile profile_;
    mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// HTTP provider: OpenAI-compatible chat completions
// ---------------------------------------------------------------------------

class HttpProvider : public ChatProvider {
public:
    explicit HttpProvider(ProviderProfile profile, ClockFn clock = steady_clock_fn(),
                          SleepFn sleep = thread_sleep_fn())
        : profile_(std::move(profile)),
          limiter_(profile_.rate_limit, profile_.burst, clock, sleep),
          sleep_(std::move(sleep)),
          jitter_rng_(fnv1a64(profile_.model_id)) {
        profile_.validate();
        split_endpoint(profile_.endpoint, base_url_, path_prefix_);
    }

    ChatExchange send(const std::string& system_text, const std::string& user_text) override {
        std::string api_key;
        if (!profile_.auth_env.empty()) {
            const char* key = std::getenv(profile_.auth_env.c_str());
            if (key == nullptr || *key == '\0')
                throw TransportException({TransportError::Kind::auth_missing,
                                          "environment variable not set: " + profile_.auth_env});
            api_key = key;
        }

        nlohmann::json body;
        body["model"] = profile_.model_id;
        body["messages"] = {{{"role", "system"}, {"content", system_text}},
                            {{"role", "user"}, {"content", user_text}}};
        body["temperature"] = profile_.temperature;
        const std::string payload = body.dump();

        TransportError last{TransportError::Kind::http_status, "never attempted"};
        const auto start = std::chrono::steady_clock::now();
        const int max_attempts = profile_.transport_retries + 1;
        for (int attempt = 1; attempt <= max_attempts; ++attempt) {
            if (attempt > 1) sleep_(backoff_delay(attempt - 1, next_jitter()));
            limiter_.acquire();

            httplib::Client client(base_url_);
            client.set_connection_timeout(std::chrono::duration<double>(profile_.request_timeout));
            client.set_read_timeout(std::chrono::duration<double>(profile_.request_timeout));
            httplib::Headers headers;
            if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

            auto res = client.Post(path_prefix_ + "/chat/completions", headers, payload,
                                   "application/json");
            if (!res) {
                last = {TransportError::Kind::timeout, httplib::to_string(res.error())};
                continue;
            }
            if (res->status != 200) {
                const auto kind = res->status == 429 ? TransportError::Kind::rate_limit_exhausted
                                                     : TransportError::Kind::http_status;
                last = {kind, "HTTP " + std::to_string(res->status)};
                continue;
            }
            std::string content;
            try {
                const auto parsed = nlohmann::json::parse(res->body);
                content = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const std::exception& e) {
                last = {TransportError::Kind::malformed_payload, e.what()};
                continue;
            }
            ChatExchange ex;
            ex.system_text = system_text;
            ex.user_text = user_text;
            ex.response_text = std::move(content);
            ex.transport_attempts = attempt;
            ex.latency_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
            return ex;
        }
        throw TransportException(std::move(last));
    }

    const ProviderProfile& profile() const override { return profile_; }

private:
    static void split_endpoint(const std::string& endpoint, std::string& base, std::string& path) {
        const auto scheme_end = endpoint.find("://");
        if (scheme_end == std::string::npos)
            throw std::invalid_argument("endpoint must include a scheme: " + endpoint);
        const auto path_start = endpoint.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            base = endpoint;
            path.clear();
        } else {
            base = endpoint.substr(0, path_start);
            path = endpoint.substr(path_start);
            while (!path.empty() && path.back() == '/') path.pop_back();
        }
    }

    double next_jitter() {
        std::lock_guard<std::mutex> lock(mutex_);
        return jitter_rng_.uniform01();
    }

    ProviderProfile profile_;
    std::string base_url_;
    std::string path_prefix_;
    RateLimiter limiter_;
    SleepFn sleep_;
    SplitMix64 jitter_rng_;
    std::mutex mutex_;
};

}  // namespace morallens
