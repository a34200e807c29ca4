// Template fuzzing: a seed pool of jailbreak templates, a bandit or tree
// selector, one of six generative mutators per mutant, and successful mutants
// fed back into the pool as children of the seed they came from.

#include <algorithm>

#include "jailkit/error.hpp"
#include "jailkit/resources.hpp"
#include "strategies.hpp"

namespace jailkit::recipes {

namespace {

class GptFuzzerStrategy final : public AttackStrategy {
public:
    explicit GptFuzzerStrategy(const RunEnvironment& env)
        : env_(env),
          pool_(env.config.seeds.empty() ? env.resources.blocks("seed_templates") : env.config.seeds),
          selector_(env.config.selector.value_or(SelectorKind::mcts_explore), env.config.selector_config) {
        for (const auto& name : env.config.mutators) mutators_.push_back(make_mutator(name, env.config.knobs));
        if (mutators_.empty()) throw ConfigError("gptfuzzer needs at least one mutator");
        scores_.assign(pool_.size(), 0.0);
    }

    std::vector<Instance> propose(QueryState& state) override {
        SelectionContext sctx;
        sctx.query = &state.query;
        sctx.scoring_backend = env_.backends.scoring.get();
        sctx.scores = scores_;
        sctx.round = state.round;
        selection_ = selector_.select(pool_, state.rng, sctx);
        const auto& seed = pool_.at(selection_->seed);

        // Mutants are templates; the candidate prompt is the mutant with the
        // query filled in.
        auto ctx = mutation_context(env_, state);
        std::vector<Instance> candidates;
        std::vector<std::string> templates;
        for (std::size_t e = 0; e < env_.config.knobs.fuzz_energy; ++e) {
            const auto& m = mutators_[detail::uniform_index(state.rng, mutators_.size())];
            Instance parent;
            parent.query = state.query;
            parent.jailbreak_prompt = seed.template_text;
            parent.seed_id = seed.id;
            std::string partner;
            if (auto* g = dynamic_cast<const GenerativeMutator*>(m.get()); g && g->kind() == GenerativeKind::crossover) {
                partner = pool_.at(detail::uniform_index(state.rng, pool_.size())).template_text;
                ctx.partner_text = partner;
            }
            for (auto& mutant : m->try_apply(parent, ctx)) {
                templates.push_back(mutant.jailbreak_prompt);
                mutant.jailbreak_prompt = instantiate_text(mutant.jailbreak_prompt, state.query.text);
                candidates.push_back(std::move(mutant));
            }
            ctx.partner_text = {};
        }

        auto kept = apply_constraints(env_, env_.constraints, candidates, state.query);
        // Constraints keep an order-preserving subset; walk both lists to
        // carry each survivor's template along.
        pending_templates_.clear();
        std::size_t j = 0;
        for (const auto& k : kept) {
            while (j < candidates.size() && candidates[j].jailbreak_prompt != k.jailbreak_prompt) ++j;
            pending_templates_.push_back(j < candidates.size() ? templates[j] : k.jailbreak_prompt);
            ++j;
        }
        return kept;
    }

    void observe(QueryState&, std::span<const Instance> evaluated) override {
        if (!selection_) return;
        double reward = 0.0;
        for (std::size_t i = 0; i < evaluated.size(); ++i) {
            const auto& inst = evaluated[i];
            if (inst.eval->score)
                scores_[selection_->seed] = std::max(scores_[selection_->seed], double(*inst.eval->score));
            if (!inst.eval->succeeded()) continue;
            reward = 1.0;
            pool_.add_child(selection_->seed, pending_templates_[i]);
            scores_.push_back(inst.eval->score.value_or(0));
        }
        selector_.update(pool_, *selection_, reward);
    }

    std::optional<nlohmann::ordered_json> selector_stats() const override {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& node : pool_.nodes())
            arr.push_back({{"seed", node.id},
                           {"parent", node.parent ? nlohmann::ordered_json(*node.parent) : nlohmann::ordered_json(nullptr)},
                           {"visits", node.stats.visits},
                           {"cumulative_reward", node.stats.cumulative_reward}});
        return arr;
    }

private:
    const RunEnvironment& env_;
    SeedPool pool_;
    SeedSelector selector_;
    std::vector<MutatorPtr> mutators_;
    std::vector<double> scores_;
    std::optional<Selection> selection_;
    std::vector<std::string> pending_templates_;
};

}  // namespace

std::unique_ptr<AttackStrategy> make_gptfuzzer_strategy(const RunEnvironment& env) {
    return std::make_unique<GptFuzzerStrategy>(env);
}

}  // namespace jailkit::recipes
