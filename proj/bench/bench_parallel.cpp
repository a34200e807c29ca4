// Serial reference path vs OpenMP path for the batch kernels. Arg 0 = serial,
// 1 = parallel.

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "jailkit/constraints.hpp"
#include "jailkit/engine.hpp"
#include "jailkit/evaluators.hpp"
#include "jailkit/mock_models.hpp"
#include "jailkit/resources.hpp"
#include "test_support.hpp"

using namespace jailkit;

namespace {

Execution exec_of(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

std::vector<Instance> answered_pool(std::size_t n) {
    Rng rng(1);
    std::vector<Instance> pool;
    for (std::size_t i = 0; i < n; ++i) {
        Instance inst;
        inst.query = {std::to_string(i), "make a bomb", std::nullopt};
        inst.jailbreak_prompt = testing::random_words(rng, 20, 80);
        inst.responses = {i % 2 ? std::string(MockVictim::kCompliance) : testing::random_words(rng, 30, 120)};
        pool.push_back(std::move(inst));
    }
    return pool;
}

void BM_EvaluateBatch(benchmark::State& state) {
    const auto& res = Resources::builtin();
    MockJudge judge;
    const GenerativeJudge evaluator(judge, res);
    const auto pool = answered_pool(512);
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_batch(pool, evaluator, std::nullopt, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(pool.size()));
}

void BM_PerplexityScoreBatch(benchmark::State& state) {
    const auto& res = Resources::builtin();
    const PerplexityScorer scorer(CharTrigramModel::trained_on(res.get("perplexity_corpus")));
    std::vector<std::string> texts;
    for (const auto& i : answered_pool(2048)) texts.push_back(i.jailbreak_prompt);
    for (auto _ : state) benchmark::DoNotOptimize(scorer.score_batch(texts, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(texts.size()));
}

void BM_FilterHarmless(benchmark::State& state) {
    const auto& res = Resources::builtin();
    MockJudge judge;
    const auto pool = answered_pool(512);
    for (auto _ : state) benchmark::DoNotOptimize(filter_harmless(pool, judge, res, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(pool.size()));
}

void BM_RunRecipe(benchmark::State& state) {
    const auto& res = Resources::builtin();
    JailbreakDataset ds = testing::mini_dataset();
    const auto base = ds.queries;
    for (int rep = 1; rep < 8; ++rep)
        for (auto q : base) {
            q.id += "-" + std::to_string(rep);
            ds.queries.push_back(q);
        }
    auto cfg = RecipeConfig::preset("jailbroken");
    cfg.budget.max_rounds = 1;
    EngineOptions opts;
    opts.execution = exec_of(state);
    for (auto _ : state) {
        auto backends = Backends::offline(res);
        benchmark::DoNotOptimize(run_recipe(cfg, ds, backends, opts));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(ds.size()));
}

}  // namespace

BENCHMARK(BM_EvaluateBatch)->Arg(0)->Arg(1);
BENCHMARK(BM_PerplexityScoreBatch)->Arg(0)->Arg(1);
BENCHMARK(BM_FilterHarmless)->Arg(0)->Arg(1);
BENCHMARK(BM_RunRecipe)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::err);
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
