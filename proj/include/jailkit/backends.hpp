#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jailkit {

enum class Role { system, user, assistant };

std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

struct Message {
    Role role = Role::user;
    std::string content;

    static Message system(std::string c) { return {Role::system, std::move(c)}; }
    static Message user(std::string c) { return {Role::user, std::move(c)}; }
    static Message assistant(std::string c) { return {Role::assistant, std::move(c)}; }
};

struct ChatOptions {
    double temperature = 0.0;
    std::size_t max_new_tokens = 512;
    std::size_t n_samples = 1;
    bool want_logprobs = false;

    bool deterministic() const noexcept { return temperature == 0.0; }
    void validate() const;
};

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;
};

struct ChatOutput {
    std::vector<std::string> texts;
    // One sequence per sample when requested and supported.
    std::optional<std::vector<std::vector<TokenLogprob>>> token_logprobs;
};

// Role-agnostic chat model: the same interface serves as attack, target and
// judge model. Implementations must be safe to call from several threads.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;

    virtual std::string name() const = 0;
    // Per-token log-probabilities of generated text.
    virtual bool supports_logprobs() const { return false; }
    // Scoring a given continuation (needed by the reference-loss selector).
    virtual bool supports_sequence_scoring() const { return false; }

    // Requires a non-empty conversation ending in a user turn.
    ChatOutput chat(std::span<const Message> messages, const ChatOptions& opts = {});

    // Sum of per-token log-probabilities of `continuation` given `prompt`.
    // Throws CapabilityError when unsupported.
    double sequence_logprob(std::string_view prompt, std::string_view continuation);

protected:
    virtual ChatOutput do_chat(std::span<const Message> messages, const ChatOptions& opts) = 0;
    virtual double do_sequence_logprob(std::string_view prompt, std::string_view continuation);
};

inline ChatOutput chat(ModelBackend& backend, std::span<const Message> messages, const ChatOptions& opts = {}) {
    return backend.chat(messages, opts);
}

inline double sequence_logprob(ModelBackend& backend, std::string_view prompt, std::string_view continuation) {
    return backend.sequence_logprob(prompt, continuation);
}

// Single user turn, first completion.
std::string ask(ModelBackend& backend, std::string prompt, const ChatOptions& opts = {});

void validate_conversation(std::span<const Message> messages);

struct RoleMarkers {
    std::string prefix;
    std::string suffix;
};

// How a conversation is flattened into one prompt string for completion-style
// models. The template name is configuration, not a constant.
struct ConversationTemplate {
    std::string name;
    std::string system_prefix;  // used when the conversation has no system message
    RoleMarkers system;
    RoleMarkers user;
    RoleMarkers assistant;
    std::string separator;          // between consecutive turns
    std::string generation_prompt;  // appended when the last turn is a user turn

    // "plain", "vicuna_v1.1", "chatml"
    static ConversationTemplate named(std::string_view name);
    static std::vector<std::string> known_names();

    const RoleMarkers& markers(Role r) const;
};

std::string render(const ConversationTemplate& tmpl, std::span<const Message> messages);

// Inverse of render for templates whose role prefixes are non-empty and
// mutually distinct, provided no message content contains a role marker.
std::vector<Message> parse_rendered(const ConversationTemplate& tmpl, std::string_view rendered);

}  // namespace jailkit
