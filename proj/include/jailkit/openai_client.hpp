#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "jailkit/backends.hpp"

namespace jailkit {

class TraceSink;

// Token bucket refilled continuously at `requests_per_minute`, holding at
// most `burst` tokens. A rate of 0 disables limiting.
class RateLimiter {
public:
    using Clock = std::chrono::steady_clock;

    explicit RateLimiter(double requests_per_minute, double burst = 1.0);

    // Blocks until a token is available.
    void acquire();
    // Non-blocking variant; returns the time to wait when no token is available.
    std::chrono::nanoseconds try_acquire(Clock::time_point now);

    double requests_per_minute() const noexcept { return rate_per_minute_; }

private:
    double rate_per_minute_;
    double burst_;
    double tokens_;
    Clock::time_point last_;
    std::mutex mu_;
};

struct OpenAIClientConfig {
    std::string base_url;  // e.g. "https://api.openai.com/v1"
    std::string model;
    std::string api_key;
    std::chrono::milliseconds timeout{60'000};
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1'000};
    double requests_per_minute = 0.0;
    std::shared_ptr<TraceSink> trace;  // logs requests and responses when set
};

// Client for the OpenAI-compatible chat-completions endpoint
// (POST {base_url}/chat/completions). Transport failures and HTTP 429/5xx are
// retried with exponential backoff up to max_attempts; other statuses fail
// immediately.
class OpenAICompatibleClient final : public ModelBackend {
public:
    explicit OpenAICompatibleClient(OpenAIClientConfig config);

    std::string name() const override { return "openai:" + config_.model; }
    bool supports_logprobs() const override { return true; }

    const OpenAIClientConfig& config() const noexcept { return config_; }

    static nlohmann::json build_request_body(const std::string& model, std::span<const Message> messages,
                                             const ChatOptions& opts);
    static ChatOutput parse_response_body(const nlohmann::json& body, bool want_logprobs);

    struct Endpoint {
        std::string scheme_host_port;  // "http://host:port"
        std::string path;              // "/v1/chat/completions"
    };
    static Endpoint resolve_endpoint(const std::string& base_url);

protected:
    ChatOutput do_chat(std::span<const Message> messages, const ChatOptions& opts) override;

private:
    OpenAIClientConfig config_;
    Endpoint endpoint_;
    std::unique_ptr<RateLimiter> limiter_;
};

}  // namespace jailkit
