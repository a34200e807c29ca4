#include <doctest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "jailkit/error.hpp"
#include "jailkit/openai_client.hpp"
#include "jailkit/trace.hpp"

using namespace jailkit;
using json = nlohmann::json;

namespace {

// Local chat-completions endpoint. The first `failures` requests answer with
// `fail_status`; later ones echo the last user message.
class FakeServer {
public:
    FakeServer(int failures = 0, int fail_status = 500) : failures_(failures), fail_status_(fail_status) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mu_);
            ++hits_;
            last_body_ = json::parse(req.body);
            last_auth_ = req.get_header_value("Authorization");
            if (hits_ <= failures_) {
                res.status = fail_status_;
                res.set_content(R"({"error":"try later"})", "application/json");
                return;
            }
            const auto text = last_body_["messages"].back()["content"].get<std::string>();
            json choices = json::array();
            for (int i = last_body_["n"].get<int>() - 1; i >= 0; --i) {
                json c{{"index", i}, {"message", {{"role", "assistant"}, {"content", text + " #" + std::to_string(i)}}}};
                if (last_body_["logprobs"].get<bool>())
                    c["logprobs"] = {{"content", json::array({{{"token", "a"}, {"logprob", -0.5}},
                                                              {{"token", "b"}, {"logprob", -1.5}}})}};
                choices.push_back(c);
            }
            res.set_content(json{{"choices", choices}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/"; }
    int hits() {
        std::lock_guard lock(mu_);
        return hits_;
    }
    json last_body() {
        std::lock_guard lock(mu_);
        return last_body_;
    }
    std::string last_auth() {
        std::lock_guard lock(mu_);
        return last_auth_;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    int failures_;
    int fail_status_;
    std::mutex mu_;
    int hits_ = 0;
    json last_body_;
    std::string last_auth_;
};

OpenAIClientConfig client_config(const std::string& url) {
    OpenAIClientConfig cfg;
    cfg.base_url = url;
    cfg.model = "test-model";
    cfg.api_key = "sk-test";
    cfg.timeout = std::chrono::milliseconds(2000);
    cfg.initial_backoff = std::chrono::milliseconds(5);
    return cfg;
}

int unused_port() {
    httplib::Server probe;
    return probe.bind_to_any_port("127.0.0.1");
}

}  // namespace

TEST_SUITE("openai_client") {
    TEST_CASE("request body and auth header") {
        FakeServer server;
        OpenAICompatibleClient client(client_config(server.base_url()));
        ChatOptions opts;
        opts.temperature = 0.7;
        opts.max_new_tokens = 64;
        opts.n_samples = 2;
        const std::vector<Message> conv{Message::system("be brief"), Message::user("hello")};
        const auto out = client.chat(conv, opts);
        const auto body = server.last_body();
        CHECK(body["model"] == "test-model");
        CHECK(body["messages"].size() == 2);
        CHECK(body["messages"][0]["role"] == "system");
        CHECK(body["messages"][1]["content"] == "hello");
        CHECK(body["temperature"] == 0.7);
        CHECK(body["max_tokens"] == 64);
        CHECK(body["n"] == 2);
        CHECK(body["logprobs"] == false);
        CHECK(server.last_auth() == "Bearer sk-test");
        // Choices come back in index order even when the server shuffles them.
        CHECK(out.texts == std::vector<std::string>{"hello #0", "hello #1"});
        CHECK_FALSE(out.token_logprobs.has_value());
        CHECK(client.name() == "openai:test-model");
    }

    TEST_CASE("token log-probabilities are parsed when requested") {
        FakeServer server;
        OpenAICompatibleClient client(client_config(server.base_url()));
        ChatOptions opts;
        opts.want_logprobs = true;
        const auto out = client.chat(std::vector<Message>{Message::user("x")}, opts);
        REQUIRE(out.token_logprobs.has_value());
        REQUIRE(out.token_logprobs->size() == 1);
        CHECK(out.token_logprobs->front()[1].token == "b");
        CHECK(out.token_logprobs->front()[1].logprob == -1.5);
    }

    TEST_CASE("429 and 5xx are retried") {
        FakeServer server(2, 429);
        OpenAICompatibleClient client(client_config(server.base_url()));
        CHECK(ask(client, "again") == "again #0");
        CHECK(server.hits() == 3);

        FakeServer always(100, 503);
        OpenAICompatibleClient gives_up(client_config(always.base_url()));
        try {
            ask(gives_up, "x");
            FAIL("expected HttpStatusError");
        } catch (const HttpStatusError& e) {
            CHECK(e.status() == 503);
            CHECK(e.attempts() == 3);
        }
        CHECK(always.hits() == 3);
    }

    TEST_CASE("client errors are not retried") {
        FakeServer server(100, 400);
        OpenAICompatibleClient client(client_config(server.base_url()));
        CHECK_THROWS_AS(ask(client, "x"), HttpStatusError);
        CHECK(server.hits() == 1);
    }

    TEST_CASE("transport failures are retryable and report attempts") {
        auto cfg = client_config("http://127.0.0.1:" + std::to_string(unused_port()) + "/v1");
        cfg.timeout = std::chrono::milliseconds(300);
        OpenAICompatibleClient client(cfg);
        try {
            ask(client, "x");
            FAIL("expected TransportError");
        } catch (const TransportError& e) {
            CHECK(e.retryable());
            CHECK(e.attempts() == 3);
        }
    }

    TEST_CASE("requests and responses go to the trace") {
        FakeServer server;
        auto cfg = client_config(server.base_url());
        cfg.trace = std::make_shared<TraceSink>();
        OpenAICompatibleClient client(cfg);
        ask(client, "traced");
        const auto lines = cfg.trace->lines();
        REQUIRE(lines.size() == 2);
        CHECK(json::parse(lines[0])["type"] == "http_request");
        CHECK(json::parse(lines[1])["status"] == 200);
    }

    TEST_CASE("endpoint resolution") {
        auto ep = OpenAICompatibleClient::resolve_endpoint("https://api.example.com/v1/");
        CHECK(ep.scheme_host_port == "https://api.example.com");
        CHECK(ep.path == "/v1/chat/completions");
        ep = OpenAICompatibleClient::resolve_endpoint("http://localhost:8000");
        CHECK(ep.scheme_host_port == "http://localhost:8000");
        CHECK(ep.path == "/chat/completions");
        CHECK_THROWS_AS(OpenAICompatibleClient::resolve_endpoint("localhost:8000"), ConfigError);
        auto cfg = client_config("http://localhost:1");
        cfg.model.clear();
        CHECK_THROWS_AS(OpenAICompatibleClient{cfg}, ConfigError);
    }

    TEST_CASE("response parsing") {
        const json body{{"choices", json::array({{{"index", 0}, {"message", {{"content", nullptr}}}}})}};
        CHECK(OpenAICompatibleClient::parse_response_body(body, false).texts == std::vector<std::string>{""});
        CHECK_FALSE(OpenAICompatibleClient::parse_response_body(body, true).token_logprobs.has_value());
        CHECK_THROWS_AS(OpenAICompatibleClient::parse_response_body(json::object(), false), BackendError);
    }

    TEST_CASE("rate limiter token bucket") {
        RateLimiter limiter(60.0);  // one per second
        const auto t0 = RateLimiter::Clock::now();
        CHECK(limiter.try_acquire(t0) == std::chrono::nanoseconds::zero());
        const auto wait = limiter.try_acquire(t0);
        CHECK(wait > std::chrono::milliseconds(990));
        CHECK(wait <= std::chrono::milliseconds(1001));
        CHECK(limiter.try_acquire(t0 + std::chrono::milliseconds(1001)) == std::chrono::nanoseconds::zero());
        RateLimiter off(0.0);
        for (int i = 0; i < 100; ++i) CHECK(off.try_acquire(t0) == std::chrono::nanoseconds::zero());
        CHECK_THROWS_AS(RateLimiter(-1.0), ConfigError);
    }
}
