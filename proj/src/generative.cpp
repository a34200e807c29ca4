#include <algorithm>
#include <map>

#include <spdlog/spdlog.h>

#include "jailkit/detail/text.hpp"
#include "jailkit/error.hpp"
#include "jailkit/mock_models.hpp"
#include "jailkit/mutators.hpp"
#include "jailkit/resources.hpp"

namespace jailkit {

namespace {

constexpr GenerativeKind kAllKinds[] = {
    GenerativeKind::rephrase,
    GenerativeKind::expand,
    GenerativeKind::shorten,
    GenerativeKind::crossover,
    GenerativeKind::change_style,
    GenerativeKind::translate,
    GenerativeKind::generate_similar,
    GenerativeKind::insert_meaningless_chars,
    GenerativeKind::misspell_sensitive_words,
    GenerativeKind::alter_sentence_structure,
    GenerativeKind::replace_synonyms,
    GenerativeKind::historical_insight,
    GenerativeKind::introspect_generation,
    GenerativeKind::auto_obfuscation,
    GenerativeKind::auto_payload_splitting,
};

}  // namespace

std::string_view to_string(GenerativeKind k) {
    switch (k) {
        case GenerativeKind::rephrase: return "rephrase";
        case GenerativeKind::expand: return "expand";
        case GenerativeKind::shorten: return "shorten";
        case GenerativeKind::crossover: return "crossover";
        case GenerativeKind::change_style: return "change_style";
        case GenerativeKind::translate: return "translate";
        case GenerativeKind::generate_similar: return "generate_similar";
        case GenerativeKind::insert_meaningless_chars: return "insert_meaningless_chars";
        case GenerativeKind::misspell_sensitive_words: return "misspell_sensitive_words";
        case GenerativeKind::alter_sentence_structure: return "alter_sentence_structure";
        case GenerativeKind::replace_synonyms: return "replace_synonyms";
        case GenerativeKind::historical_insight: return "historical_insight";
        case GenerativeKind::introspect_generation: return "introspect_generation";
        case GenerativeKind::auto_obfuscation: return "auto_obfuscation";
        case GenerativeKind::auto_payload_splitting: return "auto_payload_splitting";
    }
    return "rephrase";
}

GenerativeKind generative_kind_from_string(std::string_view s) {
    for (auto k : kAllKinds)
        if (to_string(k) == s) return k;
    throw ConfigError("unknown generative mutator '" + std::string(s) + "'");
}

std::vector<GenerativeKind> all_generative_kinds() { return {std::begin(kAllKinds), std::end(kAllKinds)}; }

std::string language_name(std::string_view code) {
    static const std::map<std::string, std::string, std::less<>> names = {
        {"zu", "Zulu"},   {"gd", "Scots Gaelic"}, {"hmn", "Hmong"},   {"gn", "Guarani"},
        {"bn", "Bengali"}, {"sw", "Swahili"},     {"jv", "Javanese"}, {"th", "Thai"},
        {"it", "Italian"}, {"vi", "Vietnamese"},  {"ar", "Arabic"},   {"ko", "Korean"},
        {"zh", "Chinese"}, {"fr", "French"},      {"de", "German"},   {"es", "Spanish"},
    };
    auto it = names.find(code);
    return it == names.end() ? std::string(code) : it->second;
}

std::string build_mutation_prompt(GenerativeKind kind, std::string_view seed, const Query& query,
                                  const MutationContext& ctx, const GenerativeOptions& options) {
    const auto tmpl = ctx.res().get("mutation_" + std::string(to_string(kind)));
    const auto language = language_name(options.language);
    std::string feedback, score, history;
    if (ctx.feedback) {
        feedback = ctx.feedback->response;
        score = ctx.feedback->score ? std::to_string(*ctx.feedback->score) : "none";
        for (std::size_t i = 0; i < ctx.feedback->history.size(); ++i)
            history += std::to_string(i + 1) + ". " + ctx.feedback->history[i] + "\n";
    }
    if (history.empty()) history = "none";
    if (feedback.empty()) feedback = "none";
    if (score.empty()) score = "none";
    return detail::fill_slots(tmpl, {{"SEED", seed},
                                     {"SEED2", ctx.partner_text},
                                     {"GOAL", query.text},
                                     {"LANGUAGE", language},
                                     {"FEEDBACK", feedback},
                                     {"SCORE", score},
                                     {"HISTORY", history}});
}

std::optional<std::string> extract_mutation(std::string_view output) {
    const auto tagged = extract_tagged(output, "prompt");
    const std::string_view body = tagged ? std::string_view(*tagged) : output;
    const auto trimmed = detail::trim(body);
    if (trimmed.empty()) return std::nullopt;
    return std::string(trimmed);
}

GenerativeMutator::GenerativeMutator(GenerativeKind kind, GenerativeOptions options)
    : kind_(kind), options_(std::move(options)) {
    if (options_.n_outputs == 0) throw ConfigError("generative mutator needs n_outputs >= 1");
}

std::string GenerativeMutator::name() const {
    if (kind_ == GenerativeKind::translate) return "translate(" + options_.language + ")";
    return std::string(to_string(kind_));
}

std::vector<std::string> GenerativeMutator::transform(std::string_view text, const Query& query, MutationContext& ctx) const {
    if (!ctx.attack_backend) throw CapabilityError(name() + " needs an attack model");
    if (kind_ == GenerativeKind::crossover && ctx.partner_text.empty())
        throw Error("crossover needs a second parent");

    const auto meta = build_mutation_prompt(kind_, text, query, ctx, options_);
    auto opts = ctx.chat_options;
    opts.n_samples = options_.n_outputs;
    const std::vector<Message> conversation{Message::user(meta)};
    const auto out = ctx.attack_backend->chat(conversation, opts).texts;

    std::vector<std::string> candidates;
    for (const auto& reply : out) {
        if (auto m = extract_mutation(reply))
            candidates.push_back(std::move(*m));
        else
            spdlog::warn("{}: attack model returned no usable text", name());
    }
    if (candidates.empty()) throw MutationError(name(), "attack model output had no extractable prompt");
    return candidates;
}

}  // namespace jailkit
