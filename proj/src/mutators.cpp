#include "jailkit/mutators.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "jailkit/detail/text.hpp"
#include "jailkit/error.hpp"
#include "jailkit/resources.hpp"

namespace jailkit {

namespace {

std::string fence(std::string_view body) {
    return std::string(kPayloadBegin) + "\n" + std::string(body) + "\n" + std::string(kPayloadEnd);
}

std::string frame(const Resources& resources, JailbrokenVariant v, std::string_view payload) {
    const auto tmpl = resources.get("jailbroken_" + std::string(to_string(v)));
    return std::string(detail::trim_right(detail::fill_slots(tmpl, {{"PAYLOAD", payload}})));
}

std::string rewrite_or_split(GenerativeKind kind, std::string_view text, ModelBackend* attack, const ChatOptions& opts) {
    if (!attack) return encode(RuleCodec::named("payload_split"), text);
    MutationContext ctx;
    ctx.attack_backend = attack;
    ctx.chat_options = opts;
    const GenerativeMutator mutator(kind);
    return mutator.transform(text, Query{"", std::string(text), std::nullopt}, ctx).front();
}

const char* expert_resource(const RuleCodec& codec) {
    switch (codec.kind) {
        case CodecKind::ascii_decimal: return "cipher_expert_ascii";
        case CodecKind::caesar: return "cipher_expert_caesar";
        case CodecKind::morse: return "cipher_expert_morse";
        case CodecKind::self_define_cipher: return "cipher_expert_selfdefine";
        default: return nullptr;
    }
}

}  // namespace

const Resources& MutationContext::res() const { return resources ? *resources : Resources::builtin(); }

std::vector<Instance> Mutator::apply(const Instance& parent, MutationContext& ctx) const {
    std::vector<Instance> out;
    for (auto& text : transform(parent.jailbreak_prompt, parent.query, ctx)) {
        Instance child = parent;
        child.jailbreak_prompt = std::move(text);
        child.responses.clear();
        child.eval.reset();
        child.record_mutation(name());
        out.push_back(std::move(child));
    }
    return out;
}

std::vector<Instance> Mutator::try_apply(const Instance& parent, MutationContext& ctx) const {
    try {
        return apply(parent, ctx);
    } catch (const MutationError& e) {
        spdlog::warn("dropping candidate for query {}: {}", parent.query.id, e.what());
        return {};
    }
}

// --- jailbroken -------------------------------------------------------------

std::vector<JailbrokenVariant> all_jailbroken_variants() {
    return {JailbrokenVariant::artificial,    JailbrokenVariant::auto_obfuscation, JailbrokenVariant::auto_payload_splitting,
            JailbrokenVariant::base64_input_only, JailbrokenVariant::base64_raw, JailbrokenVariant::base64,
            JailbrokenVariant::combination_1, JailbrokenVariant::combination_2,    JailbrokenVariant::combination_3,
            JailbrokenVariant::disemvowel,    JailbrokenVariant::leetspeak,        JailbrokenVariant::rot13};
}

std::string_view to_string(JailbrokenVariant v) {
    switch (v) {
        case JailbrokenVariant::artificial: return "artificial";
        case JailbrokenVariant::auto_obfuscation: return "auto_obfuscation";
        case JailbrokenVariant::auto_payload_splitting: return "auto_payload_splitting";
        case JailbrokenVariant::base64_input_only: return "base64_input_only";
        case JailbrokenVariant::base64_raw: return "base64_raw";
        case JailbrokenVariant::base64: return "base64";
        case JailbrokenVariant::combination_1: return "combination_1";
        case JailbrokenVariant::combination_2: return "combination_2";
        case JailbrokenVariant::combination_3: return "combination_3";
        case JailbrokenVariant::disemvowel: return "disemvowel";
        case JailbrokenVariant::leetspeak: return "leetspeak";
        case JailbrokenVariant::rot13: return "rot13";
    }
    return "artificial";
}

JailbrokenVariant jailbroken_variant_from_string(std::string_view s) {
    for (auto v : all_jailbroken_variants())
        if (to_string(v) == s) return v;
    throw ConfigError("unknown jailbroken variant '" + std::string(s) + "'");
}

std::string combination_payload(int which, std::string_view text) {
    switch (which) {
        case 1:
        case 2:
            return fence(base64_encode(text));
        case 3: {
            const std::size_t cut = (text.size() + 1) / 2;
            return fence("a = " + base64_encode(text.substr(0, cut)) + "\nb = " + base64_encode(text.substr(cut)));
        }
        default:
            throw ConfigError("combination index must be 1, 2 or 3");
    }
}

std::string combination_decode(int which, std::string_view prompt) {
    const auto begin = prompt.find(kPayloadBegin);
    const auto end = prompt.find(kPayloadEnd, begin == std::string_view::npos ? 0 : begin);
    if (begin == std::string_view::npos || end == std::string_view::npos)
        throw CodecError("combination: payload markers not found", begin == std::string_view::npos ? 0 : end);
    const auto body_start = begin + kPayloadBegin.size();
    const auto body = detail::trim(prompt.substr(body_start, end - body_start));
    switch (which) {
        case 1:
        case 2:
            return base64_decode(body);
        case 3: {
            const auto lines = detail::split(body, '\n');
            // An empty half leaves "a =" once trailing blanks are trimmed.
            if (lines.size() != 2 || !lines[0].starts_with("a =") || !lines[1].starts_with("b ="))
                throw CodecError("combination_3: expected 'a = ...' and 'b = ...' lines", body_start);
            return base64_decode(detail::trim(std::string_view(lines[0]).substr(3))) +
                   base64_decode(detail::trim(std::string_view(lines[1]).substr(3)));
        }
        default:
            throw ConfigError("combination index must be 1, 2 or 3");
    }
}

std::string jailbroken_prompt(JailbrokenVariant variant, std::string_view text, const Resources& resources,
                              ModelBackend* attack_backend, const ChatOptions& opts) {
    switch (variant) {
        case JailbrokenVariant::artificial:
            return frame(resources, variant, text);
        case JailbrokenVariant::auto_obfuscation:
            return frame(resources, variant, rewrite_or_split(GenerativeKind::auto_obfuscation, text, attack_backend, opts));
        case JailbrokenVariant::auto_payload_splitting:
            return frame(resources, variant,
                         rewrite_or_split(GenerativeKind::auto_payload_splitting, text, attack_backend, opts));
        case JailbrokenVariant::base64_input_only:
        case JailbrokenVariant::base64_raw:
        case JailbrokenVariant::base64:
            return frame(resources, variant, base64_encode(text));
        case JailbrokenVariant::combination_1:
            return frame(resources, variant, combination_payload(1, text));
        case JailbrokenVariant::combination_2:
            return frame(resources, variant, combination_payload(2, text));
        case JailbrokenVariant::combination_3:
            return frame(resources, variant, combination_payload(3, text));
        case JailbrokenVariant::disemvowel:
            return frame(resources, variant, encode(RuleCodec::named("disemvowel"), text));
        case JailbrokenVariant::leetspeak:
            return frame(resources, variant, encode(RuleCodec::named("leetspeak"), text));
        case JailbrokenVariant::rot13:
            return frame(resources, variant, encode(RuleCodec::named("rot13"), text));
    }
    return std::string(text);
}

std::vector<std::string> JailbrokenMutator::transform(std::string_view text, const Query&, MutationContext& ctx) const {
    return {jailbroken_prompt(variant_, text, ctx.res(), ctx.attack_backend, ctx.chat_options)};
}

// --- cipher experts -----------------------------------------------------------

std::string wrap_with_expert_prompt(const RuleCodec& codec, std::string_view text, const Resources& resources) {
    const char* preamble_name = expert_resource(codec);
    if (!preamble_name) throw ConfigError("no expert prompt for codec " + codec.name());
    std::string prompt(detail::trim(resources.get(preamble_name)));
    prompt += "\n\nHere are some examples:\n";
    for (const auto& line : resources.lines("cipher_demonstrations")) {
        const auto sep = line.find("||");
        if (sep == std::string::npos) throw ConfigError("cipher_demonstrations: expected '<user> || <assistant>'");
        const auto user = detail::trim(std::string_view(line).substr(0, sep));
        const auto assistant = detail::trim(std::string_view(line).substr(sep + 2));
        prompt += "User: " + encode(codec, user) + "\n";
        prompt += "Assistant: " + encode(codec, assistant) + "\n";
    }
    prompt += "\nUser: " + encode(codec, text);
    return prompt;
}

std::string CipherExpertMutator::name() const {
    switch (codec_.kind) {
        case CodecKind::ascii_decimal: return "ascii_expert";
        case CodecKind::caesar: return "caesar_expert";
        case CodecKind::morse: return "morse_expert";
        case CodecKind::self_define_cipher: return "self_define_cipher";
        default: return codec_.name() + "_expert";
    }
}

std::vector<std::string> CipherExpertMutator::transform(std::string_view text, const Query&, MutationContext& ctx) const {
    return {wrap_with_expert_prompt(codec_, text, ctx.res())};
}

std::vector<std::string> CodeChameleonMutator::transform(std::string_view text, const Query&, MutationContext& ctx) const {
    return {codechameleon_prompt(kind_, text, ctx.res())};
}

// --- static templates -----------------------------------------------------------

std::vector<std::string> static_template_names() {
    return {"deep_inception", "ica_demos", "jailbroken_artificial", "combination_1", "combination_2", "combination_3"};
}

std::string static_template(std::string_view name, std::string_view text, const Resources& resources, std::size_t ica_k) {
    if (name == "deep_inception")
        return std::string(detail::trim_right(detail::fill_slots(resources.get("deep_inception"), {{"QUERY", text}})));
    if (name == "ica_demos") {
        if (ica_k == 0) return std::string(text);
        const auto demos = resources.blocks("ica_demos");
        if (ica_k > demos.size())
            throw ConfigError("ica_demos: asked for " + std::to_string(ica_k) + " demonstrations, " +
                              std::to_string(demos.size()) + " available");
        std::string prompt;
        for (std::size_t i = 0; i < ica_k; ++i) prompt += demos[i] + "\n\n";
        return prompt + "User: " + std::string(text);
    }
    if (name == "jailbroken_artificial") return jailbroken_prompt(JailbrokenVariant::artificial, text, resources);
    if (name == "combination_1") return jailbroken_prompt(JailbrokenVariant::combination_1, text, resources);
    if (name == "combination_2") return jailbroken_prompt(JailbrokenVariant::combination_2, text, resources);
    if (name == "combination_3") return jailbroken_prompt(JailbrokenVariant::combination_3, text, resources);
    throw ConfigError("unknown static template '" + std::string(name) + "'");
}

StaticTemplateMutator::StaticTemplateMutator(std::string template_name, std::size_t ica_k)
    : name_(std::move(template_name)), ica_k_(ica_k) {
    const auto names = static_template_names();
    if (std::find(names.begin(), names.end(), name_) == names.end())
        throw ConfigError("unknown static template '" + name_ + "'");
}

std::vector<std::string> StaticTemplateMutator::transform(std::string_view text, const Query&, MutationContext& ctx) const {
    return {static_template(name_, text, ctx.res(), ica_k_)};
}

std::vector<std::string> ScenarioNestMutator::transform(std::string_view text, const Query&, MutationContext& ctx) const {
    const auto scenarios = ctx.res().blocks("renellm_scenarios");
    if (scenarios.empty()) throw ConfigError("renellm_scenarios is empty");
    if (!ctx.rng) throw Error("scenario_nest needs a random stream");
    const auto& chosen = scenarios[detail::uniform_index(*ctx.rng, scenarios.size())];
    return {detail::fill_slots(chosen, {{"QUERY", text}})};
}

}  // namespace jailkit
