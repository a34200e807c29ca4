// Genetic search over jailbreak templates. Each generation is one round:
// every member is instantiated and sent to the target, fitness combines the
// refusal-pattern verdict with the judge's 0-9 score, and the next
// generation keeps the elite and breeds the rest.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jailkit/detail/text.hpp"
#include "jailkit/error.hpp"
#include "jailkit/resources.hpp"
#include "strategies.hpp"

namespace jailkit {

namespace {

// A single text through one generative operator. The input comes back
// unchanged (and nothing is recorded) when the attack model yields nothing usable.
std::string mutate_text(const GenerativeMutator& m, const std::string& text, MutationContext& ctx, const Query& query,
                        std::vector<std::string>* applied = nullptr) {
    Instance parent;
    parent.query = query;
    parent.jailbreak_prompt = text;
    auto out = m.try_apply(parent, ctx);
    if (out.empty()) return text;
    if (applied) applied->push_back(m.name());
    return out.front().jailbreak_prompt;
}

}  // namespace

AutodanGeneration autodan_next_generation(std::span<const std::string> population, std::span<const double> fitness,
                                          const RecipeKnobs& knobs, MutationContext& ctx, const Query& query) {
    if (population.empty()) throw Error("autodan: empty population");
    if (fitness.size() != population.size()) throw Error("autodan: one fitness value per member required");
    if (!ctx.rng) throw Error("autodan: mutation context needs an rng");
    const std::size_t n = population.size();
    const auto n_elite = std::min(
        n, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(knobs.autodan_elite_fraction * double(n) - 1e-9))));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });

    AutodanGeneration next;
    next.elite.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_elite));
    for (std::size_t i : next.elite) {
        next.population.push_back(population[i]);
        next.lineage.push_back(i);
        next.applied.emplace_back();
    }

    // Fitness-proportional parents; the offset keeps zero-fitness members
    // eligible.
    std::vector<double> weights(fitness.begin(), fitness.end());
    for (auto& w : weights) w = std::max(0.0, w) + 1e-3;

    const GenerativeMutator crossover(GenerativeKind::crossover);
    const GenerativeMutator synonyms(GenerativeKind::replace_synonyms);
    const GenerativeMutator rephrase(GenerativeKind::rephrase);
    while (next.population.size() < n) {
        const auto ia = detail::weighted_index(*ctx.rng, weights);
        const auto ib = detail::weighted_index(*ctx.rng, weights);
        std::vector<std::string> ops;
        ctx.partner_text = population[ib];
        auto child = mutate_text(crossover, population[ia], ctx, query, &ops);
        ctx.partner_text = {};
        if (detail::bernoulli(*ctx.rng, knobs.autodan_mutation_p)) child = mutate_text(synonyms, child, ctx, query, &ops);
        if (detail::bernoulli(*ctx.rng, knobs.autodan_mutation_p)) child = mutate_text(rephrase, child, ctx, query, &ops);
        next.population.push_back(std::move(child));
        next.lineage.push_back(ia);
        next.applied.push_back(std::move(ops));
    }
    return next;
}

namespace recipes {

namespace {

class AutodanStrategy final : public AttackStrategy {
public:
    explicit AutodanStrategy(const RunEnvironment& env)
        : env_(env), patterns_(default_refusal_patterns(env.resources)) {}

    std::vector<Instance> propose(QueryState& state) override {
        if (population_.empty()) initialise(state);
        std::vector<Instance> candidates;
        for (std::size_t i = 0; i < population_.size(); ++i) {
            auto inst = base_instance(state.query, state.round);
            inst.jailbreak_prompt = instantiate_text(population_[i], state.query.text);
            inst.mutation_trace = traces_[i];
            candidates.push_back(std::move(inst));
        }
        // Constraints would break the one-candidate-per-member alignment the
        // fitness step relies on, so members they reject just score zero.
        auto kept = apply_constraints(env_, env_.constraints, candidates, state.query);
        member_of_.clear();
        std::size_t j = 0;
        for (const auto& k : kept) {
            while (j < candidates.size() && candidates[j].jailbreak_prompt != k.jailbreak_prompt) ++j;
            member_of_.push_back(j);
            ++j;
        }
        return kept;
    }

    void observe(QueryState& state, std::span<const Instance> evaluated) override {
        std::vector<double> fitness(population_.size(), 0.0);
        for (std::size_t i = 0; i < evaluated.size(); ++i) {
            const auto& inst = evaluated[i];
            const auto& response = inst.responses.front();
            double f = judge_pattern(response, patterns_) == Verdict::success ? 1.0 : 0.0;
            const auto scored = score_generative(response, state.query, inst.jailbreak_prompt, *env_.backends.eval,
                                                 env_.resources, env_.config.knobs.score_threshold);
            f += scored.score.value_or(0) / 10.0;
            fitness[member_of_[i]] = f;
        }
        auto ctx = mutation_context(env_, state);
        auto next = autodan_next_generation(population_, fitness, env_.config.knobs, ctx, state.query);

        std::vector<std::vector<std::string>> traces;
        for (std::size_t i = 0; i < next.population.size(); ++i) {
            auto t = traces_[next.lineage[i]];
            t.insert(t.end(), next.applied[i].begin(), next.applied[i].end());
            traces.push_back(std::move(t));
        }
        population_ = std::move(next.population);
        traces_ = std::move(traces);
    }

private:
    void initialise(QueryState& state) {
        const auto prototype = std::string(detail::trim(env_.resources.get("autodan_prototype")));
        auto ctx = mutation_context(env_, state);
        const GenerativeMutator rephrase(GenerativeKind::rephrase);
        population_.push_back(prototype);
        traces_.push_back({});
        while (population_.size() < env_.config.knobs.autodan_population) {
            std::vector<std::string> ops;
            population_.push_back(mutate_text(rephrase, prototype, ctx, state.query, &ops));
            traces_.push_back(std::move(ops));
        }
    }

    const RunEnvironment& env_;
    std::vector<std::string> patterns_;
    std::vector<std::string> population_;
    std::vector<std::vector<std::string>> traces_;
    std::vector<std::size_t> member_of_;
};

}  // namespace

std::unique_ptr<AttackStrategy> make_autodan_strategy(const RunEnvironment& env) {
    return std::make_unique<AutodanStrategy>(env);
}

}  // namespace recipes
}  // namespace jailkit
