// Gradient-guided suffix search. The token-level mutator needs white-box
// access, so the library only supplies the loop around a caller's plugin:
// pick a seed (by reference loss when a scoring backend exists), let the
// plugin mutate it, and judge by the target prefix.

#include "jailkit/error.hpp"
#include "strategies.hpp"

namespace jailkit::recipes {

namespace {

class GcgStrategy final : public AttackStrategy {
public:
    explicit GcgStrategy(const RunEnvironment& env)
        : env_(env),
          pool_(env.config.seeds.empty() ? std::vector<std::string>{std::string(kQueryPlaceholder)} : env.config.seeds),
          selector_(env.backends.scoring ? SelectorKind::reference_loss : SelectorKind::round_robin,
                    env.config.selector_config) {
        if (!env.options.gradient_plugin)
            throw CapabilityError("recipe gcg needs a gradient mutator plugin (EngineOptions::gradient_plugin)");
    }

    std::vector<Instance> propose(QueryState& state) override {
        SelectionContext sctx;
        sctx.query = &state.query;
        sctx.scoring_backend = env_.backends.scoring.get();
        sctx.round = state.round;
        const auto sel = selector_.select(pool_, state.rng, sctx);
        auto ctx = mutation_context(env_, state);
        auto candidates = env_.options.gradient_plugin->try_apply(instantiate(pool_.at(sel.seed), state.query), ctx);
        return apply_constraints(env_, env_.constraints, std::move(candidates), state.query);
    }

private:
    const RunEnvironment& env_;
    SeedPool pool_;
    SeedSelector selector_;
};

}  // namespace

std::unique_ptr<AttackStrategy> make_gcg_strategy(const RunEnvironment& env) { return std::make_unique<GcgStrategy>(env); }

}  // namespace jailkit::recipes
