#include "jailkit/backends.hpp"

#include "jailkit/error.hpp"

namespace jailkit {

std::string_view to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw Error("unknown role '" + std::string(s) + "'");
}

void ChatOptions::validate() const {
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
}

void validate_conversation(std::span<const Message> messages) {
    if (messages.empty()) throw Error("chat: empty conversation");
    if (messages.back().role != Role::user) throw Error("chat: last message must be a user turn");
    for (const auto& m : messages)
        if (m.content.empty() && m.role != Role::system)
            throw Error("chat: empty content in a " + std::string(to_string(m.role)) + " turn");
}

ChatOutput ModelBackend::chat(std::span<const Message> messages, const ChatOptions& opts) {
    validate_conversation(messages);
    opts.validate();
    auto out = do_chat(messages, opts);
    if (out.texts.size() != opts.n_samples)
        throw BackendError(name() + ": expected " + std::to_string(opts.n_samples) + " completions, got " +
                           std::to_string(out.texts.size()));
    if (opts.want_logprobs && supports_logprobs() && !out.token_logprobs)
        throw BackendError(name() + ": log-probabilities requested but missing from the response");
    return out;
}

double ModelBackend::sequence_logprob(std::string_view prompt, std::string_view continuation) {
    if (!supports_sequence_scoring())
        throw CapabilityError(name() + " cannot score sequences (no log-probability support)");
    if (continuation.empty()) return 0.0;
    return do_sequence_logprob(prompt, continuation);
}

double ModelBackend::do_sequence_logprob(std::string_view, std::string_view) {
    throw CapabilityError(name() + " cannot score sequences (no log-probability support)");
}

std::string ask(ModelBackend& backend, std::string prompt, const ChatOptions& opts) {
    const Message msg = Message::user(std::move(prompt));
    return backend.chat(std::span(&msg, 1), opts).texts.front();
}

}  // namespace jailkit
