#include "jailkit/openai_client.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "jailkit/error.hpp"
#include "jailkit/trace.hpp"

namespace jailkit {

using json = nlohmann::json;

RateLimiter::RateLimiter(double requests_per_minute, double burst)
    : rate_per_minute_(requests_per_minute), burst_(std::max(1.0, burst)), tokens_(burst_), last_(Clock::now()) {
    if (requests_per_minute < 0.0) throw ConfigError("requests per minute must be >= 0");
}

std::chrono::nanoseconds RateLimiter::try_acquire(Clock::time_point now) {
    if (rate_per_minute_ == 0.0) return std::chrono::nanoseconds::zero();
    std::lock_guard lock(mu_);
    const double per_second = rate_per_minute_ / 60.0;
    if (now > last_) {
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        tokens_ = std::min(burst_, tokens_ + elapsed * per_second);
        last_ = now;
    }
    if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return std::chrono::nanoseconds::zero();
    }
    const double wait_s = (1.0 - tokens_) / per_second;
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::duration<double>(wait_s)) +
           std::chrono::nanoseconds(1);
}

void RateLimiter::acquire() {
    for (;;) {
        auto wait = try_acquire(Clock::now());
        if (wait == std::chrono::nanoseconds::zero()) return;
        std::this_thread::sleep_for(wait);
    }
}

OpenAICompatibleClient::OpenAICompatibleClient(OpenAIClientConfig config)
    : config_(std::move(config)), endpoint_(resolve_endpoint(config_.base_url)) {
    if (config_.model.empty()) throw ConfigError("remote backend: model name is required");
    if (config_.max_attempts < 1) throw ConfigError("remote backend: max_attempts must be >= 1");
    limiter_ = std::make_unique<RateLimiter>(config_.requests_per_minute);
}

OpenAICompatibleClient::Endpoint OpenAICompatibleClient::resolve_endpoint(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base URL must include a scheme: '" + base_url + "'");
    auto path_start = base_url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.scheme_host_port = base_url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "" : base_url.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    ep.path = path + "/chat/completions";
    return ep;
}

json OpenAICompatibleClient::build_request_body(const std::string& model, std::span<const Message> messages,
                                                const ChatOptions& opts) {
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    return json{{"model", model},
                {"messages", std::move(msgs)},
                {"temperature", opts.temperature},
                {"max_tokens", opts.max_new_tokens},
                {"n", opts.n_samples},
                {"logprobs", opts.want_logprobs}};
}

ChatOutput OpenAICompatibleClient::parse_response_body(const json& body, bool want_logprobs) {
    if (!body.contains("choices") || !body["choices"].is_array())
        throw BackendError("chat completion response has no choices array");
    std::vector<json> choices(body["choices"].begin(), body["choices"].end());
    std::stable_sort(choices.begin(), choices.end(), [](const json& a, const json& b) {
        return a.value("index", 0) < b.value("index", 0);
    });

    ChatOutput out;
    std::vector<std::vector<TokenLogprob>> logprobs;
    bool have_logprobs = want_logprobs;
    for (const auto& choice : choices) {
        const auto& content = choice.at("message").at("content");
        out.texts.push_back(content.is_null() ? std::string() : content.get<std::string>());
        if (!want_logprobs) continue;
        if (!choice.contains("logprobs") || choice["logprobs"].is_null() || !choice["logprobs"].contains("content")) {
            have_logprobs = false;
            continue;
        }
        std::vector<TokenLogprob> seq;
        for (const auto& tok : choice["logprobs"]["content"])
            seq.push_back({tok.at("token").get<std::string>(), tok.at("logprob").get<double>()});
        logprobs.push_back(std::move(seq));
    }
    if (have_logprobs) out.token_logprobs = std::move(logprobs);
    return out;
}

ChatOutput OpenAICompatibleClient::do_chat(std::span<const Message> messages, const ChatOptions& opts) {
    const auto body = build_request_body(config_.model, messages, opts).dump();
    const std::string url = endpoint_.scheme_host_port + endpoint_.path;

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    std::string last_error;
    std::optional<std::pair<int, std::string>> last_status;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            auto backoff = config_.initial_backoff * (1 << (attempt - 2));
            spdlog::warn("{}: retrying in {} ms (attempt {}/{})", name(), backoff.count(), attempt,
                         config_.max_attempts);
            std::this_thread::sleep_for(backoff);
        }
        limiter_->acquire();
        if (config_.trace)
            config_.trace->write({{"type", "http_request"}, {"backend", name()}, {"url", url},
                                  {"attempt", attempt}, {"body", json::parse(body)}});

        httplib::Client client(endpoint_.scheme_host_port);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());

        auto res = client.Post(endpoint_.path, headers, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            last_status.reset();
            if (config_.trace)
                config_.trace->write({{"type", "http_error"}, {"backend", name()}, {"attempt", attempt},
                                      {"error", last_error}});
            continue;
        }
        if (config_.trace)
            config_.trace->write({{"type", "http_response"}, {"backend", name()}, {"attempt", attempt},
                                  {"status", res->status}, {"body", res->body}});

        if (res->status >= 200 && res->status < 300) {
            json parsed;
            try {
                parsed = json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw BackendError(name() + ": malformed JSON in response: " + e.what());
            }
            return parse_response_body(parsed, opts.want_logprobs);
        }
        std::string excerpt = res->body.substr(0, 200);
        if (res->status == 429 || res->status >= 500) {
            last_status = {res->status, excerpt};
            continue;
        }
        throw HttpStatusError(res->status, excerpt, attempt);
    }
    if (last_status) throw HttpStatusError(last_status->first, last_status->second, config_.max_attempts);
    throw TransportError(name() + ": " + last_error, config_.max_attempts);
}

}  // namespace jailkit
