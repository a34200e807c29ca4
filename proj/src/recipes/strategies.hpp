#pragma once

// Strategy factories behind the registered recipes. Private to the library.

#include <memory>
#include <vector>

#include "jailkit/engine.hpp"

namespace jailkit::recipes {

// Attack-model context for one query; the rng is the query's own stream.
MutationContext mutation_context(const RunEnvironment& env, QueryState& state);

// Runs the constraints in order; each one sees the survivors of the previous.
std::vector<Instance> apply_constraints(const RunEnvironment& env, const std::vector<ConstraintPtr>& constraints,
                                        std::vector<Instance> candidates, const Query& query);

// A fresh instance whose prompt is the query text itself.
Instance base_instance(const Query& query, std::size_t round);

std::unique_ptr<AttackStrategy> make_generic_strategy(const RunEnvironment& env);
std::unique_ptr<AttackStrategy> make_one_shot_strategy(const RunEnvironment& env);
std::unique_ptr<AttackStrategy> make_gptfuzzer_strategy(const RunEnvironment& env);
std::unique_ptr<AttackStrategy> make_pair_strategy(const RunEnvironment& env);
std::unique_ptr<AttackStrategy> make_tap_strategy(const RunEnvironment& env);
std::unique_ptr<AttackStrategy> make_autodan_strategy(const RunEnvironment& env);
std::unique_ptr<AttackStrategy> make_renellm_strategy(const RunEnvironment& env);
std::unique_ptr<AttackStrategy> make_gcg_strategy(const RunEnvironment& env);

// Throws CapabilityError when the recipe needs a component the caller did
// not supply (attack model, gradient plugin, scoring backend).
void check_requirements(const RecipeConfig& config, const Backends& backends, const EngineOptions& options);

}  // namespace jailkit::recipes
