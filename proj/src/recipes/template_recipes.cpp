// The generic seed/select/mutate loop and the one-shot template recipes
// (jailbroken, deep_inception, ica, cipher, multilingual, codechameleon).

#include <algorithm>

#include "jailkit/error.hpp"
#include "strategies.hpp"

namespace jailkit::recipes {

namespace {

nlohmann::ordered_json pool_stats(const SeedPool& pool) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& node : pool.nodes()) {
        arr.push_back({{"seed", node.id},
                       {"parent", node.parent ? nlohmann::ordered_json(*node.parent) : nlohmann::ordered_json(nullptr)},
                       {"visits", node.stats.visits},
                       {"cumulative_reward", node.stats.cumulative_reward},
                       {"exp3_weight", node.stats.exp3_weight}});
    }
    return arr;
}

class GenericStrategy final : public AttackStrategy {
public:
    explicit GenericStrategy(const RunEnvironment& env)
        : env_(env),
          pool_(env.config.seeds.empty() ? std::vector<std::string>{std::string(kQueryPlaceholder)} : env.config.seeds),
          selector_(env.config.selector.value_or(SelectorKind::round_robin), env.config.selector_config) {
        for (const auto& name : env.config.mutators) mutators_.push_back(make_mutator(name, env.config.knobs));
        scores_.assign(pool_.size(), 0.0);
    }

    std::vector<Instance> propose(QueryState& state) override {
        SelectionContext sctx;
        sctx.query = &state.query;
        sctx.scoring_backend = env_.backends.scoring.get();
        sctx.scores = scores_;
        sctx.round = state.round;
        selection_ = selector_.select(pool_, state.rng, sctx);

        std::vector<Instance> candidates{instantiate(pool_.at(selection_->seed), state.query)};
        auto ctx = mutation_context(env_, state);
        for (const auto& m : mutators_) {
            std::vector<Instance> next;
            for (const auto& c : candidates) {
                std::string partner;
                if (auto* g = dynamic_cast<const GenerativeMutator*>(m.get()); g && g->kind() == GenerativeKind::crossover) {
                    partner = instantiate_text(pool_.at(detail::uniform_index(state.rng, pool_.size())).template_text,
                                               state.query.text);
                    ctx.partner_text = partner;
                }
                auto out = m->try_apply(c, ctx);
                ctx.partner_text = {};
                next.insert(next.end(), std::make_move_iterator(out.begin()), std::make_move_iterator(out.end()));
            }
            candidates = std::move(next);
        }
        return apply_constraints(env_, env_.constraints, std::move(candidates), state.query);
    }

    void observe(QueryState&, std::span<const Instance> evaluated) override {
        if (!selection_) return;
        double reward = 0.0;
        for (const auto& inst : evaluated) {
            if (inst.eval->succeeded()) reward = 1.0;
            if (inst.eval->score) scores_[selection_->seed] = std::max(scores_[selection_->seed], double(*inst.eval->score));
        }
        selector_.update(pool_, *selection_, reward);
    }

    std::optional<nlohmann::ordered_json> selector_stats() const override { return pool_stats(pool_); }

private:
    const RunEnvironment& env_;
    SeedPool pool_;
    SeedSelector selector_;
    std::vector<MutatorPtr> mutators_;
    std::vector<double> scores_;
    std::optional<Selection> selection_;
};

// Every configured mutator applied once to the query; a single round.
class OneShotStrategy final : public AttackStrategy {
public:
    explicit OneShotStrategy(const RunEnvironment& env) : env_(env) {
        for (const auto& name : env.config.mutators) {
            if (name == "translate") {
                for (const auto& lang : env.config.knobs.languages)
                    mutators_.push_back(make_mutator("translate:" + lang, env.config.knobs));
            } else {
                mutators_.push_back(make_mutator(name, env.config.knobs));
            }
        }
        if (mutators_.empty()) throw ConfigError("recipe " + env.config.recipe + " has no mutators configured");
    }

    std::vector<Instance> propose(QueryState& state) override {
        const auto base = base_instance(state.query, state.round);
        auto ctx = mutation_context(env_, state);
        std::vector<Instance> candidates;
        for (const auto& m : mutators_) {
            auto out = m->try_apply(base, ctx);
            candidates.insert(candidates.end(), std::make_move_iterator(out.begin()), std::make_move_iterator(out.end()));
        }
        done_ = true;
        return apply_constraints(env_, env_.constraints, std::move(candidates), state.query);
    }

    bool finished(const QueryState&) const override { return done_; }

private:
    const RunEnvironment& env_;
    std::vector<MutatorPtr> mutators_;
    bool done_ = false;
};

}  // namespace

std::unique_ptr<AttackStrategy> make_generic_strategy(const RunEnvironment& env) {
    return std::make_unique<GenericStrategy>(env);
}

std::unique_ptr<AttackStrategy> make_one_shot_strategy(const RunEnvironment& env) {
    return std::make_unique<OneShotStrategy>(env);
}

}  // namespace jailkit::recipes
