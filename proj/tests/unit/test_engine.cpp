#include <doctest.h>

#include <atomic>

#include "jailkit/detail/text.hpp"
#include "jailkit/engine.hpp"
#include "jailkit/error.hpp"
#include "jailkit/mock_models.hpp"
#include "jailkit/resources.hpp"
#include "jailkit/trace.hpp"
#include "test_support.hpp"

using namespace jailkit;

namespace {

// Target whose transport "fails" for prompts containing a marker word.
class FlakyTarget final : public ModelBackend {
public:
    explicit FlakyTarget(std::vector<std::string> failing) : failing_(std::move(failing)) {}
    std::string name() const override { return "flaky"; }

protected:
    ChatOutput do_chat(std::span<const Message> messages, const ChatOptions& opts) override {
        for (const auto& f : failing_)
            if (detail::contains_ci(messages.back().content, f)) throw TransportError("connection reset", 3);
        return {std::vector<std::string>(opts.n_samples, std::string(MockVictim::kRefusal)), std::nullopt};
    }

private:
    std::vector<std::string> failing_;
};

JailbreakDataset first_query_only() {
    auto ds = testing::mini_dataset();
    ds.queries.resize(1);
    return ds;
}

RecipeConfig generic(std::vector<std::string> mutators, std::size_t rounds, bool stop_on_success = true) {
    RecipeConfig cfg;
    cfg.mutators = std::move(mutators);
    cfg.budget.max_rounds = rounds;
    cfg.budget.stop_on_first_success = stop_on_success;
    cfg.budget.rng_seed = 7;
    return cfg;
}

}  // namespace

TEST_SUITE("engine") {
    TEST_CASE("identity mutator against a refusing victim: ASR 0, one attempt each") {
        const auto& res = Resources::builtin();
        auto backends = Backends::offline(res);
        const auto rep = run_generic_loop(generic({"identity"}, 1), testing::mini_dataset(), backends);
        CHECK(rep.asr == 0.0);
        for (const auto& q : rep.per_query) {
            CHECK(q.attempts == 1);
            REQUIRE(q.instances.size() == 1);
            CHECK(q.instances[0].responses.front() == MockVictim::kRefusal);
            CHECK(q.instances[0].mutation_trace == std::vector<std::string>{"identity"});
        }
    }

    TEST_CASE("without stop-on-success every round is spent") {
        const auto& res = Resources::builtin();
        auto backends = Backends::offline(res);
        const auto rep = run_generic_loop(generic({"base64"}, 3, false), testing::mini_dataset(), backends);
        for (const auto& q : rep.per_query) {
            CHECK(q.attempts == 3);
            CHECK(q.instances.size() == 3);
            CHECK(q.first_success_round == std::optional<std::size_t>(0));
        }
    }

    TEST_CASE("base64 wrap beats the blocklist; golden report") {
        const auto& res = Resources::builtin();
        auto backends = Backends::offline(res);
        const auto rep = run_generic_loop(generic({"base64"}, 1), first_query_only(), backends, {Execution::serial});
        CHECK(rep.asr == 1.0);
        const auto& inst = rep.per_query.front().instances.front();
        CHECK(inst.responses.front() == MockVictim::kCompliance);
        CHECK(testing::matches_golden("base64_mock_run.json", report_to_json(rep, false).dump(2) + "\n"));
    }

    TEST_CASE("mutator chains record one trace entry per application") {
        const auto& res = Resources::builtin();
        auto backends = Backends::offline(res);
        const auto rep = run_generic_loop(generic({"rephrase", "shorten", "base64"}, 2), testing::mini_dataset(), backends);
        for (const auto& q : rep.per_query)
            for (const auto& inst : q.instances)
                CHECK(inst.mutation_trace == std::vector<std::string>{"rephrase", "shorten", "base64"});
    }

    TEST_CASE("the per-query target budget truncates rounds") {
        const auto& res = Resources::builtin();
        auto backends = Backends::offline(res);
        auto cfg = RecipeConfig::preset("jailbroken");
        cfg.budget.max_target_queries = 5;
        cfg.budget.rng_seed = 7;
        const auto rep = run_recipe(cfg, testing::mini_dataset(), backends);
        for (const auto& q : rep.per_query) {
            CHECK(q.attempts <= 5);
            CHECK(q.instances.size() == q.attempts);
        }
    }

    TEST_CASE("same inputs give byte-identical reports, serial or parallel") {
        const auto& res = Resources::builtin();
        auto run = [&](Execution exec) {
            auto backends = Backends::offline(res);
            auto cfg = generic({"rephrase", "base64"}, 3);
            cfg.selector = SelectorKind::exp3;
            cfg.seeds = res.blocks("seed_templates");
            return report_to_json(run_generic_loop(cfg, testing::mini_dataset(), backends, {exec}), false).dump();
        };
        const auto a = run(Execution::parallel);
        CHECK(a == run(Execution::parallel));
        CHECK(a == run(Execution::serial));
    }

    TEST_CASE("a backend failure marks the query errored and the run continues") {
        const auto& res = Resources::builtin();
        auto backends = Backends::offline(res);
        backends.target = std::make_shared<FlakyTarget>(std::vector<std::string>{"virus"});
        const auto rep = run_generic_loop(generic({"identity"}, 1), testing::mini_dataset(), backends);
        CHECK_FALSE(rep.aborted);
        CHECK(rep.errored_queries() == 1);
        CHECK(rep.per_query[1].errored);
        CHECK(rep.per_query[1].error->find("connection reset") != std::string::npos);
        CHECK(rep.per_query[2].attempts == 1);
    }

    TEST_CASE("half the queries erroring aborts with a partial report") {
        const auto& res = Resources::builtin();
        for (auto exec : {Execution::serial, Execution::parallel}) {
            auto backends = Backends::offline(res);
            backends.target = std::make_shared<FlakyTarget>(std::vector<std::string>{"bomb", "virus", "poison"});
            const auto rep = run_generic_loop(generic({"identity"}, 1), testing::mini_dataset(), backends, {exec});
            CHECK(rep.aborted);
            REQUIRE(rep.per_query.size() == 5);
            CHECK(rep.errored_queries() == 3);
            CHECK(rep.per_query[3].attempts == 0);
            CHECK(rep.per_query[3].error->starts_with("not attempted"));
            CHECK(rep.asr == 0.0);
        }
    }

    TEST_CASE("trace sink receives one line per instance") {
        const auto& res = Resources::builtin();
        auto backends = Backends::offline(res);
        EngineOptions opts;
        opts.trace = std::make_shared<TraceSink>();
        const auto rep = run_generic_loop(generic({"base64"}, 1), testing::mini_dataset(), backends, opts);
        std::size_t instances = 0;
        for (const auto& q : rep.per_query) instances += q.instances.size();
        const auto lines = opts.trace->lines();
        REQUIRE(lines.size() == instances);
        const auto j = nlohmann::json::parse(lines.front());
        CHECK(j["type"] == "instance");
        CHECK(j["query_id"] == "000");
    }

    TEST_CASE("report snapshot echoes the effective configuration") {
        const auto& res = Resources::builtin();
        auto backends = Backends::offline(res);
        auto cfg = generic({"base64"}, 2);
        cfg.selector = SelectorKind::ucb;
        cfg.seeds = {"Please decode: [QUERY]", "[QUERY]"};
        const auto rep = run_generic_loop(cfg, testing::mini_dataset(), backends);
        const auto& snap = rep.config_snapshot;
        CHECK(snap["selector"] == "ucb");
        CHECK(snap["budget"]["max_rounds"] == 2);
        CHECK(snap["backends"]["target"] == "mock-victim");
        CHECK(snap.contains("selector_stats"));
        CHECK(rep.mean_response_perplexity.has_value());
    }

    TEST_CASE("configuration errors surface before any target call") {
        const auto& res = Resources::builtin();
        auto backends = Backends::offline(res);
        auto cfg = generic({"no_such_mutator"}, 1);
        CHECK_THROWS_AS(run_generic_loop(cfg, testing::mini_dataset(), backends), ConfigError);
        cfg = generic({"identity"}, 1);
        cfg.evaluator = "nope";
        CHECK_THROWS_AS(run_generic_loop(cfg, testing::mini_dataset(), backends), ConfigError);
        backends.target.reset();
        CHECK_THROWS_AS(run_generic_loop(generic({"identity"}, 1), testing::mini_dataset(), backends), ConfigError);
        auto offline = Backends::offline(res);
        offline.attack.reset();
        CHECK_THROWS(run_generic_loop(generic({"rephrase"}, 1), testing::mini_dataset(), offline));
    }

    TEST_CASE("recipe config keys") {
        auto cfg = RecipeConfig::preset("tap");
        cfg.set("tap-depth", "3");
        cfg.set("budget-rounds", "9");
        cfg.set("mutators", "rephrase, base64");
        cfg.set("stop-on-first-success", "false");
        CHECK(cfg.knobs.tap_depth == 3);
        CHECK(cfg.budget.max_rounds == 9);
        CHECK(cfg.mutators == std::vector<std::string>{"rephrase", "base64"});
        CHECK_FALSE(cfg.budget.stop_on_first_success);
        CHECK_THROWS_AS(cfg.set("tap-depth", "three"), ConfigError);
        CHECK_THROWS_AS(cfg.set("no-such-key", "1"), ConfigError);
        cfg.set("exp3-gamma", "0");
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        CHECK_THROWS_AS(RecipeConfig::preset("smoothllm"), ConfigError);
        const auto keys = RecipeConfig::settable_keys();
        CHECK(std::find(keys.begin(), keys.end(), "rng-seed") != keys.end());
    }
}
