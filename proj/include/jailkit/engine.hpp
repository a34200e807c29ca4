#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "jailkit/backends.hpp"
#include "jailkit/constraints.hpp"
#include "jailkit/core.hpp"
#include "jailkit/dataset.hpp"
#include "jailkit/detail/random.hpp"
#include "jailkit/evaluators.hpp"
#include "jailkit/mutators.hpp"
#include "jailkit/report.hpp"
#include "jailkit/selectors.hpp"

namespace jailkit {

class ClassifierBackend;
class Resources;
class TraceSink;

struct RecipeKnobs {
    std::size_t tap_branching_factor = 4;
    std::size_t tap_depth = 5;
    std::size_t tap_width = 10;  // frontier kept after each level
    std::size_t autodan_population = 20;
    double autodan_elite_fraction = 0.1;
    double autodan_mutation_p = 0.1;
    std::size_t pair_n_streams = 3;
    std::size_t fuzz_energy = 1;  // mutants per fuzzing round
    std::size_t ica_k = 3;
    std::size_t renellm_max_mutators = 3;
    std::vector<std::string> languages = {"zu", "gd", "hmn", "gn"};
    int score_threshold = 9;  // score-based evaluators: success at >= threshold
};

// Declarative assembly of one attack: which selector, mutators, constraints
// and evaluator to use, under which budget.
struct RecipeConfig {
    std::string recipe = "direct";
    std::optional<SelectorKind> selector;
    SelectorPolicyConfig selector_config;
    std::vector<std::string> mutators;
    std::vector<std::string> constraints;
    std::string evaluator = "generative_judge";
    std::vector<std::string> seeds;  // generic loop; empty = {"[QUERY]"}
    std::optional<double> perplexity_threshold;  // nullopt = calibrate at run start
    Budget budget;
    RecipeKnobs knobs;

    // The preset of a registered recipe. Throws ConfigError for unknown names.
    static RecipeConfig preset(std::string_view recipe);

    // Sets one knob from text, using the same key names as the CLI flags and
    // config files (e.g. "budget-rounds", "tap-depth", "selector").
    void set(std::string_view key, std::string_view value);
    static std::vector<std::string> settable_keys();

    void validate() const;
    nlohmann::ordered_json to_json() const;
};

struct Backends {
    std::shared_ptr<ModelBackend> target;
    std::shared_ptr<ModelBackend> attack;
    std::shared_ptr<ModelBackend> eval;
    std::shared_ptr<ModelBackend> scoring;  // sequence log-probabilities, optional
    std::shared_ptr<const ClassifierBackend> classifier;

    // Mock victim target, echo attack model, mock judge and the keyword
    // classifier: everything runs offline.
    static Backends offline(const Resources& resources);
};

struct EngineOptions {
    Execution execution = Execution::parallel;
    const Resources* resources = nullptr;  // nullptr = built-in
    std::shared_ptr<TraceSink> trace;
    std::shared_ptr<const GradientMutator> gradient_plugin;
};

// Everything a strategy may read while attacking one query.
struct RunEnvironment {
    const RecipeConfig& config;
    Backends& backends;
    const Resources& resources;
    const EngineOptions& options;
    const Evaluator& evaluator;
    const std::vector<ConstraintPtr>& constraints;  // built once per run, in config order
};

struct QueryState {
    const Query& query;
    std::size_t index = 0;
    Rng rng;
    std::size_t round = 0;
    std::size_t target_calls = 0;
    std::vector<Instance> history;  // evaluated instances, in order
};

// Per-query attack logic behind the generic loop. propose() returns this
// round's candidates (already mutated and filtered); the loop queries the
// target, evaluates, and hands the evaluated batch to observe().
class AttackStrategy {
public:
    virtual ~AttackStrategy() = default;
    virtual std::vector<Instance> propose(QueryState& state) = 0;
    virtual void observe(QueryState& state, std::span<const Instance> evaluated) {
        (void)state;
        (void)evaluated;
    }
    virtual bool finished(const QueryState& state) const {
        (void)state;
        return false;
    }
    // Seed-pool statistics for the report, when the strategy keeps a pool.
    virtual std::optional<nlohmann::ordered_json> selector_stats() const { return std::nullopt; }
};

using StrategyFactory = std::function<std::unique_ptr<AttackStrategy>(const RunEnvironment&)>;

// --- component factories ---------------------------------------------------------

MutatorPtr make_mutator(std::string_view name, const RecipeKnobs& knobs);
ConstraintPtr make_constraint(std::string_view name, const RecipeConfig& config, Backends& backends,
                              const Resources& resources);
EvaluatorPtr make_evaluator(std::string_view name, const RecipeConfig& config, Backends& backends,
                            const Resources& resources);

// --- running ---------------------------------------------------------------------

std::vector<std::string> recipe_names();

// Per query: repeat {propose -> query target -> evaluate -> observe} until a
// success (when stop_on_first_success), the strategy finishes, max_rounds
// pass, or max_target_queries target calls are spent on that query.
AttackReport run_attack(const RecipeConfig& config, const JailbreakDataset& dataset, Backends& backends,
                        const StrategyFactory& factory, const EngineOptions& options = {});

// The preset strategy registered for config.recipe.
AttackReport run_recipe(const RecipeConfig& config, const JailbreakDataset& dataset, Backends& backends,
                        const EngineOptions& options = {});

// Seed pool + selector + mutator chain + constraints from the config alone.
AttackReport run_generic_loop(const RecipeConfig& config, const JailbreakDataset& dataset, Backends& backends,
                              const EngineOptions& options = {});

// --- recipe internals exposed for testing -------------------------------------------

struct AutodanGeneration {
    std::vector<std::string> population;
    std::vector<std::size_t> elite;  // indices into the previous population, best first
    // Per new member: the previous member it descends from (itself for an
    // elite) and the operators applied to it this generation.
    std::vector<std::size_t> lineage;
    std::vector<std::vector<std::string>> applied;
};

// Elites (ceil(elite_fraction * N), at least 1) survive unchanged; the rest
// are crossover children of fitness-proportional parents, then synonym
// replacement and rephrasing each with probability mutation_p.
AutodanGeneration autodan_next_generation(std::span<const std::string> population, std::span<const double> fitness,
                                          const RecipeKnobs& knobs, MutationContext& ctx, const Query& query);

}  // namespace jailkit
