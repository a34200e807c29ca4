#include <array>

#include "jailkit/backends.hpp"
#include "jailkit/error.hpp"

namespace jailkit {

ConversationTemplate ConversationTemplate::named(std::string_view name) {
    ConversationTemplate t;
    t.name = std::string(name);
    if (name == "plain") {
        t.separator = "\n";
        return t;
    }
    if (name == "vicuna_v1.1") {
        t.system_prefix =
            "A chat between a curious user and an artificial intelligence assistant. "
            "The assistant gives helpful, detailed, and polite answers to the user's questions.";
        t.system = {"", " "};
        t.user = {"USER: ", " "};
        t.assistant = {"ASSISTANT: ", "</s>"};
        t.generation_prompt = "ASSISTANT:";
        return t;
    }
    if (name == "chatml") {
        t.system = {"<|im_start|>system\n", "<|im_end|>\n"};
        t.user = {"<|im_start|>user\n", "<|im_end|>\n"};
        t.assistant = {"<|im_start|>assistant\n", "<|im_end|>\n"};
        t.generation_prompt = "<|im_start|>assistant\n";
        return t;
    }
    throw ConfigError("unknown conversation template '" + std::string(name) + "'");
}

std::vector<std::string> ConversationTemplate::known_names() { return {"plain", "vicuna_v1.1", "chatml"}; }

const RoleMarkers& ConversationTemplate::markers(Role r) const {
    switch (r) {
        case Role::system: return system;
        case Role::user: return user;
        case Role::assistant: return assistant;
    }
    return user;
}

std::string render(const ConversationTemplate& tmpl, std::span<const Message> messages) {
    std::vector<Message> turns;
    if (!tmpl.system_prefix.empty() && (messages.empty() || messages.front().role != Role::system))
        turns.push_back(Message::system(tmpl.system_prefix));
    turns.insert(turns.end(), messages.begin(), messages.end());

    std::string out;
    for (std::size_t i = 0; i < turns.size(); ++i) {
        if (i) out += tmpl.separator;
        const auto& m = tmpl.markers(turns[i].role);
        out += m.prefix;
        out += turns[i].content;
        out += m.suffix;
    }
    if (!turns.empty() && turns.back().role == Role::user) out += tmpl.generation_prompt;
    return out;
}

std::vector<Message> parse_rendered(const ConversationTemplate& tmpl, std::string_view text) {
    if (tmpl.user.prefix.empty() || tmpl.assistant.prefix.empty() || tmpl.user.prefix == tmpl.assistant.prefix)
        throw ConfigError("conversation template '" + tmpl.name + "' has ambiguous role boundaries");

    const std::array<Role, 3> roles{Role::user, Role::assistant, Role::system};
    auto prefix_at = [&](std::size_t pos) -> std::optional<Role> {
        for (Role r : roles) {
            const auto& p = tmpl.markers(r).prefix;
            if (!p.empty() && text.substr(pos, p.size()) == p) return r;
        }
        return std::nullopt;
    };

    const auto& gen = tmpl.generation_prompt;
    if (!gen.empty() && text.size() >= gen.size() && text.substr(text.size() - gen.size()) == gen)
        text = text.substr(0, text.size() - gen.size());

    std::vector<Message> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto role = prefix_at(pos);
        if (!role) {
            if (!out.empty() || !tmpl.system.prefix.empty())
                throw Error("parse_rendered: no role marker at offset " + std::to_string(pos));
            role = Role::system;
        }
        const auto& m = tmpl.markers(*role);
        pos += m.prefix.size();

        // The turn ends at the first suffix that is followed by the separator
        // and another role prefix, or by the end of the text.
        std::optional<std::size_t> end;
        for (std::size_t q = pos; q + m.suffix.size() <= text.size(); ++q) {
            if (text.substr(q, m.suffix.size()) != m.suffix) continue;
            std::size_t after = q + m.suffix.size();
            if (after == text.size()) {
                end = q;
                break;
            }
            if (text.substr(after, tmpl.separator.size()) == tmpl.separator &&
                prefix_at(after + tmpl.separator.size())) {
                end = q;
                break;
            }
        }
        if (!end) throw Error("parse_rendered: unterminated " + std::string(to_string(*role)) + " turn");
        out.push_back({*role, std::string(text.substr(pos, *end - pos))});
        pos = *end + m.suffix.size();
        if (pos < text.size()) pos += tmpl.separator.size();
    }
    return out;
}

}  // namespace jailkit
