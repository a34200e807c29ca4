#include "jailkit/engine.hpp"

#include <algorithm>
#include <chrono>

#include <spdlog/spdlog.h>

#include "jailkit/detail/parallel.hpp"
#include "jailkit/error.hpp"
#include "jailkit/mock_models.hpp"
#include "jailkit/resources.hpp"
#include "jailkit/trace.hpp"
#include "recipes/strategies.hpp"

namespace jailkit {

using ojson = nlohmann::ordered_json;

Backends Backends::offline(const Resources& resources) {
    Backends b;
    b.target = std::make_shared<MockVictim>();
    b.attack = std::make_shared<EchoMock>();
    b.eval = std::make_shared<MockJudge>();
    b.classifier = std::make_shared<KeywordClassifier>(KeywordClassifier::from_resources(resources));
    return b;
}

namespace recipes {

MutationContext mutation_context(const RunEnvironment& env, QueryState& state) {
    MutationContext ctx;
    ctx.attack_backend = env.backends.attack.get();
    ctx.resources = &env.resources;
    ctx.rng = &state.rng;
    return ctx;
}

std::vector<Instance> apply_constraints(const RunEnvironment& env, const std::vector<ConstraintPtr>& constraints,
                                        std::vector<Instance> candidates, const Query& query) {
    // Queries already run in parallel; the inner batch stays serial.
    for (const auto& c : constraints) {
        if (candidates.empty()) break;
        auto result = c->apply(candidates, query, Execution::serial);
        for (std::size_t f : result.flagged) {
            const auto pos = std::find(result.kept_indices.begin(), result.kept_indices.end(), f);
            result.kept[static_cast<std::size_t>(pos - result.kept_indices.begin())].flags.push_back(
                "constraint-undetermined:" + c->name());
        }
        candidates = std::move(result.kept);
    }
    (void)env;
    return candidates;
}

Instance base_instance(const Query& query, std::size_t round) {
    Instance inst;
    inst.query = query;
    inst.jailbreak_prompt = query.text;
    inst.round = round;
    return inst;
}

}  // namespace recipes

namespace {

struct QueryOutcome {
    QueryRecord record;
    std::optional<ojson> selector_stats;
};

const Instance& pick_best(const std::vector<Instance>& instances) {
    for (const auto& inst : instances)
        if (inst.eval && inst.eval->succeeded()) return inst;
    const Instance* best = nullptr;
    for (const auto& inst : instances)
        if (inst.eval && inst.eval->score && (!best || *inst.eval->score > *best->eval->score)) best = &inst;
    return best ? *best : instances.back();
}

QueryOutcome attack_one(const RunEnvironment& env, const StrategyFactory& factory, const Query& query,
                        std::size_t index) {
    const auto& budget = env.config.budget;
    QueryOutcome out;
    auto& rec = out.record;
    rec.query_id = query.id;
    rec.query_text = query.text;

    QueryState state{query, index, detail::derive_rng(budget.rng_seed, index)};
    auto strategy = factory(env);
    ChatOptions target_opts;  // temperature 0: the target is queried deterministically

    try {
        for (std::size_t round = 0; round < budget.max_rounds; ++round) {
            if (state.target_calls >= budget.max_target_queries) break;
            state.round = round;
            auto candidates = strategy->propose(state);
            const std::size_t remaining = budget.max_target_queries - state.target_calls;
            if (candidates.size() > remaining) {
                spdlog::debug("query {}: round {} truncated from {} to {} candidates by the budget", query.id, round,
                              candidates.size(), remaining);
                candidates.resize(remaining);
            }

            bool success = false;
            for (auto& cand : candidates) {
                cand.round = round;
                cand.responses = {ask(*env.backends.target, cand.jailbreak_prompt, target_opts)};
                ++state.target_calls;
                cand.set_eval(env.evaluator.evaluate(cand));
                success = success || cand.eval->succeeded();
            }
            rec.instances.insert(rec.instances.end(), candidates.begin(), candidates.end());
            state.history.insert(state.history.end(), candidates.begin(), candidates.end());
            strategy->observe(state, candidates);

            if (success && !rec.first_success_round) rec.first_success_round = round;
            if (success && budget.stop_on_first_success) break;
            if (strategy->finished(state)) break;
        }
    } catch (const BackendError& e) {
        spdlog::error("query {}: backend failure: {}", query.id, e.what());
        rec.errored = true;
        rec.error = e.what();
    }
    rec.attempts = state.target_calls;
    if (!rec.instances.empty()) rec.best_instance = pick_best(rec.instances);
    out.selector_stats = strategy->selector_stats();
    return out;
}

std::optional<double> mean_response_perplexity(const std::vector<QueryRecord>& records, const Resources& res) {
    const auto model = CharTrigramModel::trained_on(res.get("perplexity_corpus"));
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& r : records)
        for (const auto& inst : r.instances)
            for (const auto& resp : inst.responses) {
                total += model.perplexity(resp);
                ++n;
            }
    if (n == 0) return std::nullopt;
    return total / static_cast<double>(n);
}

}  // namespace

AttackReport run_attack(const RecipeConfig& config, const JailbreakDataset& dataset, Backends& backends,
                        const StrategyFactory& factory, const EngineOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    dataset.validate();
    if (!backends.target) throw ConfigError("no target model configured");
    const Resources& res = options.resources ? *options.resources : Resources::builtin();
    recipes::check_requirements(config, backends, options);

    const auto evaluator = make_evaluator(config.evaluator, config, backends, res);
    std::vector<ConstraintPtr> constraints;
    for (const auto& name : config.constraints) constraints.push_back(make_constraint(name, config, backends, res));
    const RunEnvironment env{config, backends, res, options, *evaluator, constraints};

    const std::size_t n = dataset.size();
    const std::size_t abort_threshold = (n + 1) / 2;
    std::vector<std::optional<QueryOutcome>> outcomes(n);

    if (options.execution == Execution::serial) {
        std::size_t errored = 0;
        for (std::size_t i = 0; i < n && errored < abort_threshold; ++i) {
            outcomes[i] = attack_one(env, factory, dataset.queries[i], i);
            errored += outcomes[i]->record.errored ? 1 : 0;
        }
    } else {
        detail::for_each_index(n, Execution::parallel,
                               [&](std::size_t i) { outcomes[i] = attack_one(env, factory, dataset.queries[i], i); });
    }

    AttackReport report;
    report.recipe = config.recipe;
    report.dataset_name = dataset.name;
    report.rng_seed = config.budget.rng_seed;

    // The abort point is decided in dataset order, so a parallel run reports
    // exactly what the serial run would have.
    std::size_t errored = 0;
    ojson stats = ojson::object();
    for (std::size_t i = 0; i < n; ++i) {
        if (errored >= abort_threshold) {
            report.aborted = true;
            QueryRecord skipped;
            skipped.query_id = dataset.queries[i].id;
            skipped.query_text = dataset.queries[i].text;
            skipped.error = "not attempted: run aborted after " + std::to_string(errored) + " errored queries";
            report.per_query.push_back(std::move(skipped));
            continue;
        }
        auto& o = *outcomes[i];
        errored += o.record.errored ? 1 : 0;
        if (o.selector_stats) stats[o.record.query_id] = *o.selector_stats;
        report.per_query.push_back(std::move(o.record));
    }
    if (errored >= abort_threshold) report.aborted = true;
    if (report.aborted) spdlog::error("run aborted: {} of {} queries errored", errored, n);

    report.asr = compute_asr(report.per_query);
    report.mean_response_perplexity = mean_response_perplexity(report.per_query, res);

    auto snapshot = config.to_json();
    auto name_of = [](const auto& p) { return p ? ojson(p->name()) : ojson(nullptr); };
    snapshot["backends"] = {{"target", name_of(backends.target)},
                            {"attack", name_of(backends.attack)},
                            {"eval", name_of(backends.eval)},
                            {"scoring", name_of(backends.scoring)},
                            {"classifier", name_of(backends.classifier)}};
    if (!stats.empty()) snapshot["selector_stats"] = std::move(stats);
    report.config_snapshot = std::move(snapshot);

    if (options.trace) {
        for (const auto& r : report.per_query)
            for (const auto& inst : r.instances) {
                ojson line;
                line["type"] = "instance";
                line["query_id"] = r.query_id;
                line["instance"] = to_json(inst);
                options.trace->write(line);
            }
    }

    report.timing_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

AttackReport run_generic_loop(const RecipeConfig& config, const JailbreakDataset& dataset, Backends& backends,
                              const EngineOptions& options) {
    return run_attack(config, dataset, backends, recipes::make_generic_strategy, options);
}

}  // namespace jailkit
