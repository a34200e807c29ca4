#include "jailkit/constraints.hpp"

#include <spdlog/spdlog.h>

#include "jailkit/backends.hpp"
#include "jailkit/detail/parallel.hpp"
#include "jailkit/detail/text.hpp"
#include "jailkit/resources.hpp"

namespace jailkit {

namespace {

enum class Decision { keep, drop, keep_flagged };

FilterResult gather(std::span<const Instance> instances, const std::vector<Decision>& decisions) {
    FilterResult out;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (decisions[i] == Decision::drop) continue;
        out.kept.push_back(instances[i]);
        out.kept_indices.push_back(i);
        if (decisions[i] == Decision::keep_flagged) out.flagged.push_back(i);
    }
    return out;
}

// One judge call per instance; `keep` maps the parsed answer to a decision.
template <typename BuildPrompt, typename Parse>
FilterResult judge_filter(const char* who, std::span<const Instance> instances, ModelBackend& backend, Execution exec,
                          BuildPrompt build, Parse parse) {
    std::vector<Decision> decisions(instances.size(), Decision::keep);
    detail::for_each_index(instances.size(), exec, [&](std::size_t i) {
        const auto reply = ask(backend, build(instances[i]));
        const std::optional<bool> keep = parse(reply);
        if (!keep) {
            spdlog::warn("{}: unparseable judge output for query {}, keeping the candidate: '{}'", who,
                         instances[i].query.id, reply);
            decisions[i] = Decision::keep_flagged;
        } else {
            decisions[i] = *keep ? Decision::keep : Decision::drop;
        }
    });
    return gather(instances, decisions);
}

}  // namespace

std::optional<bool> parse_yes_no(std::string_view judge_output) {
    for (const auto& tok : detail::word_tokens(judge_output)) {
        if (tok == "yes") return true;
        if (tok == "no") return false;
    }
    return std::nullopt;
}

std::optional<bool> parse_on_topic(std::string_view judge_output) {
    const auto lower = detail::to_lower(judge_output);
    std::size_t best = std::string::npos;
    std::optional<bool> label;
    for (auto [needle, value] : {std::pair<std::string_view, bool>{"off-topic", false}, {"off topic", false},
                                 {"on-topic", true}, {"on topic", true}}) {
        const auto pos = lower.find(needle);
        if (pos != std::string::npos && (best == std::string::npos || pos < best)) {
            best = pos;
            label = value;
        }
    }
    return label;
}

FilterResult filter_harmless(std::span<const Instance> instances, ModelBackend& eval_backend, const Resources& resources,
                             Execution exec) {
    const auto tmpl = resources.get("constraint_harmless");
    return judge_filter(
        "delete_harmless", instances, eval_backend, exec,
        [&](const Instance& inst) { return detail::fill_slots(tmpl, {{"PROMPT", inst.jailbreak_prompt}}); },
        parse_yes_no);
}

FilterResult filter_off_topic(std::span<const Instance> instances, const Query& original_query,
                              ModelBackend& eval_backend, const Resources& resources, Execution exec) {
    const auto tmpl = resources.get("constraint_off_topic");
    return judge_filter(
        "delete_off_topic", instances, eval_backend, exec,
        [&](const Instance& inst) {
            return detail::fill_slots(tmpl, {{"QUERY", original_query.text}, {"PROMPT", inst.jailbreak_prompt}});
        },
        parse_on_topic);
}

FilterResult filter_perplexity(std::span<const Instance> instances, const PerplexityScorer& scorer, Execution exec) {
    std::vector<std::string> prompts;
    prompts.reserve(instances.size());
    for (const auto& inst : instances) prompts.push_back(inst.jailbreak_prompt);
    const auto scores = scorer.score_batch(prompts, exec);
    std::vector<Decision> decisions(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i)
        decisions[i] = scores[i] <= scorer.threshold() ? Decision::keep : Decision::drop;
    return gather(instances, decisions);
}

}  // namespace jailkit
