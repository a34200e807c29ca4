#include "jailkit/core.hpp"

#include "jailkit/detail/text.hpp"
#include "jailkit/error.hpp"

namespace jailkit {

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::success: return "success";
        case Verdict::failure: return "failure";
        case Verdict::undetermined: return "undetermined";
    }
    return "undetermined";
}

Verdict verdict_from_string(std::string_view s) {
    if (s == "success") return Verdict::success;
    if (s == "failure") return Verdict::failure;
    if (s == "undetermined") return Verdict::undetermined;
    throw Error("unknown verdict '" + std::string(s) + "'");
}

EvalResult make_eval_result(Verdict verdict, std::string evaluator_name, std::optional<int> score,
                            std::optional<std::string> raw) {
    if (score && (*score < 0 || *score > 9))
        throw Error("score " + std::to_string(*score) + " outside 0..9");
    EvalResult r;
    r.verdict = verdict;
    r.score = score;
    r.evaluator_name = std::move(evaluator_name);
    r.raw_judge_output = std::move(raw);
    return r;
}

SeedPool::SeedPool(const std::vector<std::string>& templates) {
    for (const auto& t : templates) add_root(t);
}

SeedId SeedPool::add_root(std::string template_text) {
    SeedNode node;
    node.id = nodes_.size();
    node.template_text = std::move(template_text);
    nodes_.push_back(std::move(node));
    roots_.push_back(nodes_.back().id);
    return nodes_.back().id;
}

SeedId SeedPool::add_child(SeedId parent, std::string template_text) {
    const std::size_t parent_depth = at(parent).depth;
    SeedNode node;
    node.id = nodes_.size();
    node.template_text = std::move(template_text);
    node.parent = parent;
    node.depth = parent_depth + 1;
    nodes_.push_back(std::move(node));
    nodes_[parent].children.push_back(nodes_.back().id);
    return nodes_.back().id;
}

const SeedNode& SeedPool::at(SeedId id) const {
    if (id >= nodes_.size()) throw Error("seed id " + std::to_string(id) + " out of range");
    return nodes_[id];
}

SeedNode& SeedPool::at(SeedId id) {
    if (id >= nodes_.size()) throw Error("seed id " + std::to_string(id) + " out of range");
    return nodes_[id];
}

std::uint64_t SeedPool::total_visits() const noexcept {
    std::uint64_t n = 0;
    for (const auto& node : nodes_) n += node.stats.visits;
    return n;
}

void Instance::set_eval(EvalResult result) {
    if (responses.empty()) throw Error("cannot attach an evaluation to an instance without responses");
    eval = std::move(result);
}

std::string instantiate_text(std::string_view template_text, std::string_view query_text) {
    if (template_text.find(kQueryPlaceholder) == std::string_view::npos)
        return std::string(template_text) + "\n" + std::string(query_text);
    return detail::replace_all(template_text, kQueryPlaceholder, query_text);
}

Instance instantiate(const SeedNode& seed, const Query& query) {
    Instance inst;
    inst.query = query;
    inst.jailbreak_prompt = instantiate_text(seed.template_text, query.text);
    inst.seed_id = seed.id;
    return inst;
}

void Budget::validate() const {
    if (max_target_queries < 1) throw ConfigError("budget: max_target_queries must be >= 1");
    if (max_rounds < 1) throw ConfigError("budget: max_rounds must be >= 1");
}

}  // namespace jailkit
