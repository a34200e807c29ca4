#include <algorithm>

#include "jailkit/error.hpp"
#include "jailkit/mock_models.hpp"
#include "jailkit/resources.hpp"
#include "strategies.hpp"

namespace jailkit {

namespace {

// Leaves the prompt unchanged; useful as a no-op stage in the generic loop.
class IdentityMutator final : public Mutator {
public:
    std::string name() const override { return "identity"; }
    std::vector<std::string> transform(std::string_view text, const Query&, MutationContext&) const override {
        return {std::string(text)};
    }
};

bool is_one_of(std::string_view name, const std::vector<std::string>& names) {
    return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<std::string> jailbroken_names() {
    std::vector<std::string> out;
    for (auto v : all_jailbroken_variants()) out.emplace_back(to_string(v));
    return out;
}

}  // namespace

MutatorPtr make_mutator(std::string_view name, const RecipeKnobs& knobs) {
    if (name == "identity") return std::make_shared<IdentityMutator>();
    if (is_one_of(name, jailbroken_names()))
        return std::make_shared<JailbrokenMutator>(jailbroken_variant_from_string(name));
    if (name == "ascii_expert") return std::make_shared<CipherExpertMutator>(RuleCodec::named("ascii_decimal"));
    if (name == "caesar_expert") return std::make_shared<CipherExpertMutator>(RuleCodec::caesar(3));
    if (name == "morse_expert") return std::make_shared<CipherExpertMutator>(RuleCodec::named("morse"));
    if (name == "self_define_cipher") return std::make_shared<CipherExpertMutator>(RuleCodec::named("self_define_cipher"));
    if (name.starts_with("codechameleon_"))
        return std::make_shared<CodeChameleonMutator>(encryption_kind_from_string(name.substr(14)));
    if (is_one_of(name, static_template_names())) return std::make_shared<StaticTemplateMutator>(std::string(name), knobs.ica_k);
    if (name == "scenario_nest") return std::make_shared<ScenarioNestMutator>();
    if (name == "token_gradient")
        throw CapabilityError("token_gradient needs a gradient mutator plugin; none ships with the library");
    if (name == "translate" || name.starts_with("translate:")) {
        GenerativeOptions opts;
        opts.language = name == "translate" ? knobs.languages.front() : std::string(name.substr(10));
        if (opts.language.empty()) throw ConfigError("translate: empty language code");
        return std::make_shared<GenerativeMutator>(GenerativeKind::translate, opts);
    }
    try {
        return std::make_shared<GenerativeMutator>(generative_kind_from_string(name));
    } catch (const ConfigError&) {
        throw ConfigError("unknown mutator '" + std::string(name) + "'");
    }
}

ConstraintPtr make_constraint(std::string_view name, const RecipeConfig& config, Backends& backends,
                              const Resources& resources) {
    if (name == "delete_harmless" || name == "delete_off_topic") {
        if (!backends.eval) throw CapabilityError(std::string(name) + " needs an eval model");
        if (name == "delete_harmless") return std::make_shared<DeleteHarmless>(*backends.eval, resources);
        return std::make_shared<DeleteOffTopic>(*backends.eval, resources);
    }
    if (name == "perplexity") {
        auto scorer = backends.scoring
                          ? PerplexityScorer(*backends.scoring)
                          : PerplexityScorer(CharTrigramModel::trained_on(resources.get("perplexity_corpus")));
        if (config.perplexity_threshold) {
            scorer.set_threshold(*config.perplexity_threshold);
        } else {
            const auto corpus = resources.blocks("seed_templates");
            scorer.set_threshold(calibrate_threshold(scorer, corpus, 0.95));
        }
        return std::make_shared<PerplexityConstraint>(std::move(scorer));
    }
    throw ConfigError("unknown constraint '" + std::string(name) + "'");
}

EvaluatorPtr make_evaluator(std::string_view name, const RecipeConfig& config, Backends& backends,
                            const Resources& resources) {
    auto need_eval = [&]() -> ModelBackend& {
        if (!backends.eval) throw CapabilityError(std::string(name) + " needs an eval model");
        return *backends.eval;
    };
    auto need_classifier = [&] {
        if (!backends.classifier) throw CapabilityError(std::string(name) + " needs a classifier");
        return backends.classifier;
    };
    if (name == "generative_judge") return std::make_shared<GenerativeJudge>(need_eval(), resources);
    if (name == "generative_get_score")
        return std::make_shared<GenerativeGetScore>(need_eval(), resources, config.knobs.score_threshold);
    if (name == "pattern_judge") return std::make_shared<PatternJudge>(PatternJudge::from_resources(resources));
    if (name == "prefix_exact_match") return std::make_shared<PrefixExactMatch>();
    if (name == "match") return std::make_shared<MatchEvaluator>();
    if (name == "classification_judge") return std::make_shared<ClassificationJudge>(need_classifier());
    if (name == "classification_get_score") return std::make_shared<ClassificationGetScore>(need_classifier());
    throw ConfigError("unknown evaluator '" + std::string(name) + "'");
}

std::vector<std::string> recipe_names() {
    return {"direct", "jailbroken", "deep_inception", "ica",  "cipher",  "multilingual", "codechameleon",
            "gptfuzzer", "pair", "tap", "autodan", "renellm", "gcg"};
}

namespace recipes {

void check_requirements(const RecipeConfig& config, const Backends& backends, const EngineOptions& options) {
    if (config.recipe == "gcg") {
        if (!options.gradient_plugin)
            throw CapabilityError("recipe gcg needs a gradient mutator plugin (EngineOptions::gradient_plugin)");
        return;
    }
    for (const auto& name : config.mutators) {
        const auto m = make_mutator(name, config.knobs);
        if (m->needs_attack_model() && !backends.attack)
            throw CapabilityError("mutator " + m->name() + " needs an attack model");
    }
    const bool generative_recipe = config.recipe == "pair" || config.recipe == "tap" || config.recipe == "autodan" ||
                                   config.recipe == "renellm" || config.recipe == "gptfuzzer";
    if (generative_recipe && !backends.attack)
        throw CapabilityError("recipe " + config.recipe + " needs an attack model");
    if ((config.recipe == "autodan") && !backends.eval)
        throw CapabilityError("recipe autodan scores candidates and needs an eval model");
}

}  // namespace recipes

AttackReport run_recipe(const RecipeConfig& config, const JailbreakDataset& dataset, Backends& backends,
                        const EngineOptions& options) {
    StrategyFactory factory;
    const auto& r = config.recipe;
    if (r == "direct")
        factory = recipes::make_generic_strategy;
    else if (r == "jailbroken" || r == "deep_inception" || r == "ica" || r == "cipher" || r == "multilingual" ||
             r == "codechameleon")
        factory = recipes::make_one_shot_strategy;
    else if (r == "gptfuzzer")
        factory = recipes::make_gptfuzzer_strategy;
    else if (r == "pair")
        factory = recipes::make_pair_strategy;
    else if (r == "tap")
        factory = recipes::make_tap_strategy;
    else if (r == "autodan")
        factory = recipes::make_autodan_strategy;
    else if (r == "renellm")
        factory = recipes::make_renellm_strategy;
    else if (r == "gcg")
        factory = recipes::make_gcg_strategy;
    else
        throw ConfigError("unknown recipe '" + r + "'");
    return run_attack(config, dataset, backends, factory, options);
}

}  // namespace jailkit
