#include <algorithm>
#include <charconv>
#include <cmath>

#include "jailkit/detail/text.hpp"
#include "jailkit/engine.hpp"
#include "jailkit/error.hpp"

namespace jailkit {

namespace {

std::size_t parse_count(std::string_view key, std::string_view value) {
    std::size_t out = 0;
    const auto t = detail::trim(value);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(value) + "'");
    return out;
}

double parse_real(std::string_view key, std::string_view value) {
    double out = 0.0;
    const auto t = detail::trim(value);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(out))
        throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(value) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    const auto v = detail::to_lower(detail::trim(value));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(value) + "'");
}

std::vector<std::string> parse_list(std::string_view value) {
    std::vector<std::string> out;
    for (const auto& item : detail::split(value, ','))
        if (auto t = detail::trim(item); !t.empty()) out.emplace_back(t);
    return out;
}

}  // namespace

RecipeConfig RecipeConfig::preset(std::string_view recipe) {
    const auto names = recipe_names();
    if (std::find(names.begin(), names.end(), recipe) == names.end())
        throw ConfigError("unknown recipe '" + std::string(recipe) + "'");

    RecipeConfig c;
    c.recipe = std::string(recipe);
    if (recipe == "direct") {
        c.selector = SelectorKind::round_robin;
        c.evaluator = "generative_judge";
    } else if (recipe == "jailbroken") {
        for (auto v : all_jailbroken_variants()) c.mutators.emplace_back(to_string(v));
        c.evaluator = "generative_judge";
    } else if (recipe == "deep_inception") {
        c.mutators = {"deep_inception"};
        c.evaluator = "generative_judge";
    } else if (recipe == "ica") {
        c.mutators = {"ica_demos"};
        c.evaluator = "pattern_judge";
    } else if (recipe == "cipher") {
        c.mutators = {"ascii_expert", "caesar_expert", "morse_expert", "self_define_cipher"};
        c.evaluator = "generative_judge";
    } else if (recipe == "multilingual") {
        c.mutators = {"translate"};
        c.evaluator = "generative_judge";
    } else if (recipe == "codechameleon") {
        c.mutators = {"codechameleon_binary_tree", "codechameleon_length", "codechameleon_reverse",
                      "codechameleon_odd_even"};
        c.evaluator = "generative_get_score";
        c.knobs.score_threshold = 7;
    } else if (recipe == "gptfuzzer") {
        c.selector = SelectorKind::mcts_explore;
        c.mutators = {"change_style", "expand", "rephrase", "crossover", "translate", "shorten"};
        c.evaluator = "classification_judge";
    } else if (recipe == "pair") {
        c.mutators = {"historical_insight"};
        c.evaluator = "generative_get_score";
    } else if (recipe == "tap") {
        c.selector = SelectorKind::score;
        c.mutators = {"introspect_generation"};
        c.constraints = {"delete_off_topic"};
        c.evaluator = "generative_get_score";
    } else if (recipe == "autodan") {
        c.mutators = {"rephrase", "crossover", "replace_synonyms"};
        c.evaluator = "pattern_judge";
    } else if (recipe == "renellm") {
        c.selector = SelectorKind::random;
        c.mutators = {"change_style", "insert_meaningless_chars", "misspell_sensitive_words",
                      "rephrase", "generate_similar", "alter_sentence_structure"};
        c.constraints = {"delete_harmless"};
        c.evaluator = "generative_judge";
    } else if (recipe == "gcg") {
        c.selector = SelectorKind::reference_loss;
        c.mutators = {"token_gradient"};
        c.evaluator = "prefix_exact_match";
    }
    return c;
}

std::vector<std::string> RecipeConfig::settable_keys() {
    return {"selector",          "ucb-c",           "exp3-gamma",          "mcts-c",
            "mcts-early-stop-p", "mcts-reward-decay", "mutators",          "constraints",
            "evaluator",         "seeds",           "perplexity-threshold", "budget-queries",
            "budget-rounds",     "stop-on-first-success", "rng-seed",     "tap-branching-factor",
            "tap-depth",         "tap-width",       "autodan-population",  "autodan-elite-fraction",
            "autodan-mutation-p", "pair-n-streams", "fuzz-energy",         "ica-k",
            "renellm-max-mutators", "languages",    "score-threshold"};
}

void RecipeConfig::set(std::string_view key, std::string_view value) {
    if (key == "selector") {
        const auto v = detail::trim(value);
        if (v == "none" || v.empty())
            selector.reset();
        else
            selector = selector_kind_from_string(v);
    } else if (key == "ucb-c") selector_config.ucb_c = parse_real(key, value);
    else if (key == "exp3-gamma") selector_config.exp3_gamma = parse_real(key, value);
    else if (key == "mcts-c") selector_config.mcts_c = parse_real(key, value);
    else if (key == "mcts-early-stop-p") selector_config.mcts_early_stop_p = parse_real(key, value);
    else if (key == "mcts-reward-decay") selector_config.mcts_reward_decay = parse_real(key, value);
    else if (key == "mutators") mutators = parse_list(value);
    else if (key == "constraints") constraints = parse_list(value);
    else if (key == "evaluator") evaluator = std::string(detail::trim(value));
    else if (key == "seeds") seeds = detail::split(value, '|');
    else if (key == "perplexity-threshold") perplexity_threshold = parse_real(key, value);
    else if (key == "budget-queries") budget.max_target_queries = parse_count(key, value);
    else if (key == "budget-rounds") budget.max_rounds = parse_count(key, value);
    else if (key == "stop-on-first-success") budget.stop_on_first_success = parse_bool(key, value);
    else if (key == "rng-seed") {
        budget.rng_seed = parse_count(key, value);
        selector_config.rng_seed = budget.rng_seed;
    } else if (key == "tap-branching-factor") knobs.tap_branching_factor = parse_count(key, value);
    else if (key == "tap-depth") knobs.tap_depth = parse_count(key, value);
    else if (key == "tap-width") knobs.tap_width = parse_count(key, value);
    else if (key == "autodan-population") knobs.autodan_population = parse_count(key, value);
    else if (key == "autodan-elite-fraction") knobs.autodan_elite_fraction = parse_real(key, value);
    else if (key == "autodan-mutation-p") knobs.autodan_mutation_p = parse_real(key, value);
    else if (key == "pair-n-streams") knobs.pair_n_streams = parse_count(key, value);
    else if (key == "fuzz-energy") knobs.fuzz_energy = parse_count(key, value);
    else if (key == "ica-k") knobs.ica_k = parse_count(key, value);
    else if (key == "renellm-max-mutators") knobs.renellm_max_mutators = parse_count(key, value);
    else if (key == "languages") knobs.languages = parse_list(value);
    else if (key == "score-threshold") knobs.score_threshold = static_cast<int>(parse_count(key, value));
    else throw ConfigError("unknown setting '" + std::string(key) + "'");
}

void RecipeConfig::validate() const {
    const auto names = recipe_names();
    if (std::find(names.begin(), names.end(), recipe) == names.end())
        throw ConfigError("unknown recipe '" + recipe + "'");
    budget.validate();
    selector_config.validate();
    if (evaluator.empty()) throw ConfigError("no evaluator configured");
    if (knobs.tap_branching_factor == 0) throw ConfigError("tap-branching-factor must be >= 1");
    if (knobs.tap_depth == 0) throw ConfigError("tap-depth must be >= 1");
    if (knobs.tap_width == 0) throw ConfigError("tap-width must be >= 1");
    if (knobs.autodan_population < 2) throw ConfigError("autodan-population must be >= 2");
    if (!(knobs.autodan_elite_fraction > 0.0 && knobs.autodan_elite_fraction <= 1.0))
        throw ConfigError("autodan-elite-fraction must be in (0,1]");
    if (!(knobs.autodan_mutation_p >= 0.0 && knobs.autodan_mutation_p <= 1.0))
        throw ConfigError("autodan-mutation-p must be a probability");
    if (knobs.pair_n_streams == 0) throw ConfigError("pair-n-streams must be >= 1");
    if (knobs.fuzz_energy == 0) throw ConfigError("fuzz-energy must be >= 1");
    if (knobs.renellm_max_mutators == 0 || knobs.renellm_max_mutators > 6)
        throw ConfigError("renellm-max-mutators must be in 1..6");
    if (knobs.languages.empty()) throw ConfigError("languages must not be empty");
    if (knobs.score_threshold < 0 || knobs.score_threshold > 9) throw ConfigError("score-threshold must be in 0..9");
    if (perplexity_threshold && !(*perplexity_threshold > 0.0)) throw ConfigError("perplexity-threshold must be > 0");
}

nlohmann::ordered_json RecipeConfig::to_json() const {
    nlohmann::ordered_json j;
    j["recipe"] = recipe;
    j["selector"] = selector ? nlohmann::ordered_json(std::string(to_string(*selector))) : nlohmann::ordered_json(nullptr);
    j["selector_config"] = {{"ucb_c", selector_config.ucb_c},
                            {"exp3_gamma", selector_config.exp3_gamma},
                            {"mcts_c", selector_config.mcts_c},
                            {"mcts_early_stop_p", selector_config.mcts_early_stop_p},
                            {"mcts_reward_decay", selector_config.mcts_reward_decay}};
    j["mutators"] = mutators;
    j["constraints"] = constraints;
    j["evaluator"] = evaluator;
    j["seeds"] = seeds;
    j["perplexity_threshold"] =
        perplexity_threshold ? nlohmann::ordered_json(*perplexity_threshold) : nlohmann::ordered_json(nullptr);
    j["budget"] = {{"max_target_queries", budget.max_target_queries},
                   {"max_rounds", budget.max_rounds},
                   {"stop_on_first_success", budget.stop_on_first_success},
                   {"rng_seed", budget.rng_seed}};
    j["knobs"] = {{"tap_branching_factor", knobs.tap_branching_factor},
                  {"tap_depth", knobs.tap_depth},
                  {"tap_width", knobs.tap_width},
                  {"autodan_population", knobs.autodan_population},
                  {"autodan_elite_fraction", knobs.autodan_elite_fraction},
                  {"autodan_mutation_p", knobs.autodan_mutation_p},
                  {"pair_n_streams", knobs.pair_n_streams},
                  {"fuzz_energy", knobs.fuzz_energy},
                  {"ica_k", knobs.ica_k},
                  {"renellm_max_mutators", knobs.renellm_max_mutators},
                  {"languages", knobs.languages},
                  {"score_threshold", knobs.score_threshold}};
    return j;
}

}  // namespace jailkit
