#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jailkit/backends.hpp"

namespace jailkit {

class Resources;

// Deterministic stand-in for a safety-aligned target model. The rulebook:
//   1. a blocklisted word appears anywhere in the rendered prompt
//      (case-insensitive, clear text)           -> kRefusal
//   2. otherwise, any compliance cue appears     -> kCompliance
//   3. otherwise                                 -> kDeflection
// Obfuscation that hides the blocklisted word while keeping a cue therefore
// succeeds; clear-text requests never do.
class MockVictim final : public ModelBackend {
public:
    static constexpr std::string_view kRefusal = "I'm sorry, I cannot help with that.";
    static constexpr std::string_view kCompliance = "Sure, here is a detailed plan: [SIMULATED-HARMFUL-CONTENT]";
    static constexpr std::string_view kDeflection = "I don't understand.";

    struct Config {
        std::vector<std::string> blocklist = default_blocklist();
        std::vector<std::string> compliance_cues = default_cues();
        ConversationTemplate conversation = ConversationTemplate::named("plain");
        std::uint64_t rng_seed = 0;
    };

    static std::vector<std::string> default_blocklist();
    static std::vector<std::string> default_cues();

    MockVictim() : MockVictim(Config{}) {}
    explicit MockVictim(Config config);

    std::string name() const override { return "mock-victim"; }

    // The rulebook applied to an already rendered prompt.
    std::string respond(std::string_view rendered_prompt) const;

    std::size_t calls() const noexcept { return calls_.load(); }

protected:
    ChatOutput do_chat(std::span<const Message> messages, const ChatOptions& opts) override;

private:
    Config config_;
    std::atomic<std::size_t> calls_{0};
};

// Answers attack/judge prompts from a fixed script. Ordered scripts reply in
// sequence; keyed scripts reply with the first entry whose key is a substring
// of the conversation. Anything unanswerable raises ScriptError.
class ScriptedMock final : public ModelBackend {
public:
    struct Ordered {
        std::vector<std::string> replies;
    };
    struct Keyed {
        std::vector<std::pair<std::string, std::string>> table;
    };

    explicit ScriptedMock(Ordered script, std::string name = "scripted-mock");
    explicit ScriptedMock(Keyed script, std::string name = "scripted-mock");

    std::string name() const override { return name_; }
    std::size_t calls() const;
    std::vector<std::string> prompts_seen() const;

protected:
    ChatOutput do_chat(std::span<const Message> messages, const ChatOptions& opts) override;

private:
    std::string next_reply(const std::string& conversation);

    std::string name_;
    bool keyed_;
    std::vector<std::string> ordered_;
    std::vector<std::pair<std::string, std::string>> table_;
    mutable std::mutex mu_;
    std::size_t cursor_ = 0;
    std::vector<std::string> seen_;
};

// Judge-model stand-in used when no eval model is configured. The shipped
// judge prompts delimit their inputs with <goal>, <prompt> and <response>
// tags; the mock reads those and picks the task from the instruction text
// outside the tags:
//   mentions "rating"                  -> "Rating: 9" if the response carries
//                                          the victim's compliance marker,
//                                          else "Rating: 1"
//   mentions "off-topic"               -> "on-topic" if the candidate prompt
//                                          shares a word of 4+ letters with
//                                          the goal, else "off-topic"
//   mentions "harmful"                 -> "Yes" if the candidate prompt holds
//                                          a blocklisted word, else "No"
//   otherwise (binary jailbreak label) -> "1" / "0" by compliance marker
class MockJudge final : public ModelBackend {
public:
    static constexpr std::string_view kComplianceMarker = "[SIMULATED-HARMFUL-CONTENT]";

    explicit MockJudge(std::vector<std::string> blocklist = MockVictim::default_blocklist());

    std::string name() const override { return "mock-judge"; }
    std::string judge(std::string_view prompt) const;

protected:
    ChatOutput do_chat(std::span<const Message> messages, const ChatOptions& opts) override;

private:
    std::vector<std::string> blocklist_;
};

// Text between the first <tag> and the following </tag>, if any.
std::optional<std::string> extract_tagged(std::string_view text, std::string_view tag);

// Attack-model stand-in that returns the text inside the first
// <prompt>...</prompt> block of the last user turn (the whole turn when there
// is no such block), so every generative mutation is an identity rewrite.
class EchoMock final : public ModelBackend {
public:
    std::string name() const override { return "echo-mock"; }

protected:
    ChatOutput do_chat(std::span<const Message> messages, const ChatOptions& opts) override;
};

// Log-probability backend with whitespace tokenization and a constant
// per-token log-probability. Rules pick the constant by prompt substring.
class MockLogprobBackend final : public ModelBackend {
public:
    struct Config {
        double default_logprob = -1.0;
        std::vector<std::pair<std::string, double>> rules;
    };

    MockLogprobBackend() : MockLogprobBackend(Config{}) {}
    explicit MockLogprobBackend(Config config);

    std::string name() const override { return "mock-logprob"; }
    bool supports_logprobs() const override { return true; }
    bool supports_sequence_scoring() const override { return true; }

    double per_token_logprob(std::string_view prompt) const;

protected:
    ChatOutput do_chat(std::span<const Message> messages, const ChatOptions& opts) override;
    double do_sequence_logprob(std::string_view prompt, std::string_view continuation) override;

private:
    Config config_;
};

// Anything that maps a response to a jailbreak probability in [0,1].
class ClassifierBackend {
public:
    virtual ~ClassifierBackend() = default;
    virtual std::string name() const = 0;
    virtual double score(std::string_view response) const = 0;
};

// Transparent keyword-weighted logistic classifier:
//   p = sigmoid(bias + sum of weights of phrases present, case-insensitive).
// Default weights ship in the `classifier_keyword_weights` resource.
class KeywordClassifier final : public ClassifierBackend {
public:
    struct Weight {
        std::string phrase;
        double weight = 0.0;
    };

    KeywordClassifier(double bias, std::vector<Weight> weights);
    static KeywordClassifier from_resources(const Resources& resources);

    std::string name() const override { return "keyword-classifier"; }
    double score(std::string_view response) const override;

    double bias() const noexcept { return bias_; }
    const std::vector<Weight>& weights() const noexcept { return weights_; }

private:
    double bias_;
    std::vector<Weight> weights_;
};

}  // namespace jailkit
