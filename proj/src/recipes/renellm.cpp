// Rewrite-then-nest: each round rewrites the query through a random subset of
// six rewriting operators, keeps the rewrite only while it still reads as
// harmful, and nests it in a randomly drawn scenario.

#include <algorithm>

#include "jailkit/error.hpp"
#include "strategies.hpp"

namespace jailkit::recipes {

namespace {

class RenellmStrategy final : public AttackStrategy {
public:
    explicit RenellmStrategy(const RunEnvironment& env) : env_(env) {
        for (const auto& name : env.config.mutators) rewriters_.push_back(make_mutator(name, env.config.knobs));
        if (rewriters_.empty()) throw ConfigError("renellm needs at least one rewriting mutator");
    }

    std::vector<Instance> propose(QueryState& state) override {
        auto ctx = mutation_context(env_, state);
        const auto limit = std::min(env_.config.knobs.renellm_max_mutators, rewriters_.size());
        const auto k = 1 + detail::uniform_index(state.rng, limit);
        std::vector<std::size_t> idx(rewriters_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        idx = detail::shuffled(std::move(idx), state.rng);
        idx.resize(k);

        std::vector<Instance> current{base_instance(state.query, state.round)};
        for (std::size_t i : idx) {
            auto out = rewriters_[i]->try_apply(current.front(), ctx);
            if (!out.empty()) current = {std::move(out.front())};
        }

        // The harmfulness gate: a rewrite that lost its intent is discarded.
        current = apply_constraints(env_, env_.constraints, std::move(current), state.query);
        if (current.empty()) return {};
        return nest_.try_apply(current.front(), ctx);
    }

private:
    const RunEnvironment& env_;
    std::vector<MutatorPtr> rewriters_;
    ScenarioNestMutator nest_;
};

}  // namespace

std::unique_ptr<AttackStrategy> make_renellm_strategy(const RunEnvironment& env) {
    return std::make_unique<RenellmStrategy>(env);
}

}  // namespace jailkit::recipes
