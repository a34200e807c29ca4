#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "jailkit/error.hpp"
#include "jailkit/evaluators.hpp"
#include "jailkit/mock_models.hpp"
#include "jailkit/resources.hpp"
#include "jailkit/selectors.hpp"

using namespace jailkit;

namespace {

SelectorStats arm(std::uint64_t visits, double cum) {
    SelectorStats s;
    s.visits = visits;
    s.cumulative_reward = cum;
    return s;
}

// Seeded two-arm Bernoulli bandit; returns the arm chosen each round.
std::vector<std::size_t> run_ucb_bandit(double p0, double p1, double reward_scale, double c, std::uint64_t seed,
                                        int rounds) {
    std::vector<SelectorStats> arms(2);
    Rng env(seed);
    std::vector<std::size_t> picks;
    std::uint64_t n = 0;
    for (int t = 0; t < rounds; ++t) {
        const auto i = ucb_select(arms, n, c);
        const bool win = detail::bernoulli(env, i == 0 ? p0 : p1);
        arms[i].visits += 1;
        arms[i].cumulative_reward += win ? reward_scale : 0.0;
        ++n;
        picks.push_back(i);
    }
    return picks;
}

}  // namespace

TEST_SUITE("selectors") {
    TEST_CASE("random selection") {
        Rng one(3);
        CHECK(random_select(1, one) == 0);
        CHECK_THROWS(random_select(0, one));

        Rng a(42), b(42);
        for (int i = 0; i < 50; ++i) CHECK(random_select(7, a) == random_select(7, b));

        Rng rng(1234);
        std::array<int, 4> counts{};
        for (int i = 0; i < 10000; ++i) counts[random_select(4, rng)]++;
        for (int c : counts) CHECK(std::abs(c / 10000.0 - 0.25) <= 0.03);
    }

    TEST_CASE("round robin") {
        CHECK(round_robin_select(3, 2) == 0);
        CHECK(round_robin_select(1, 0) == 0);
        CHECK(round_robin_select(3, std::nullopt) == 0);
        std::array<int, 3> visits{};
        std::optional<std::size_t> last;
        for (int i = 0; i < 6; ++i) {
            last = round_robin_select(3, last);
            visits[*last]++;
        }
        CHECK(visits == std::array<int, 3>{2, 2, 2});
        CHECK_THROWS(round_robin_select(0, std::nullopt));
    }

    TEST_CASE("UCB hand example matches the oracle") {
        const std::vector<SelectorStats> arms{arm(2, 1.0), arm(1, 0.0)};
        const auto s = ucb_scores(arms, 3, 1.0);
        CHECK(s[0] == doctest::Approx(1.548147).epsilon(1e-6));
        CHECK(s[1] == doctest::Approx(1.482304).epsilon(1e-6));
        CHECK(ucb_select(arms, 3, 1.0) == 0);
    }

    TEST_CASE("UCB forced and tie rules") {
        const std::vector<SelectorStats> unvisited{arm(5, 5.0), arm(0, 0.0), arm(0, 0.0)};
        CHECK(ucb_select(unvisited, 5, 1.0) == 1);
        const std::vector<SelectorStats> equal{arm(2, 1.0), arm(2, 1.0), arm(2, 1.0)};
        CHECK(ucb_select(equal, 6, 1.0) == 0);
        CHECK_THROWS(ucb_select(std::vector<SelectorStats>{}, 0, 1.0));
    }

    TEST_CASE("UCB finds the better arm of a 0.8 vs 0.2 bandit") {
        const auto picks = run_ucb_bandit(0.8, 0.2, 1.0, 1.0, 7, 1000);
        const auto late_best = std::count(picks.begin() + 500, picks.end(), std::size_t{0});
        CHECK(late_best >= 450);
        // The better arm placed second must be found just as well.
        const auto swapped = run_ucb_bandit(0.2, 0.8, 1.0, 1.0, 7, 1000);
        CHECK(std::count(swapped.begin() + 500, swapped.end(), std::size_t{1}) >= 450);
    }

    TEST_CASE("UCB argmax is invariant to scaling rewards and c together") {
        for (double k : {0.5, 2.0, 4.0, 3.0}) {
            CAPTURE(k);
            CHECK(run_ucb_bandit(0.6, 0.4, 1.0, 1.0, 99, 400) == run_ucb_bandit(0.6, 0.4, k, k, 99, 400));
        }
    }

    TEST_CASE("EXP3 hand example matches the oracle") {
        std::vector<SelectorStats> arms(2);
        const auto p = exp3_probabilities(arms, 0.5);
        CHECK(p[0] == doctest::Approx(0.5));
        exp3_update(arms, Exp3Draw{0, p[0]}, 1.0, 0.5);
        CHECK(arms[0].exp3_weight == doctest::Approx(1.648721270700).epsilon(1e-12));
        CHECK(arms[1].exp3_weight == 1.0);
        CHECK(std::abs(exp3_probabilities(arms, 0.5)[0] - 0.561229665601) < 1e-4);
    }

    TEST_CASE("EXP3 symmetry and zero reward") {
        std::vector<SelectorStats> arms(4);
        for (double g : {0.01, 0.3, 1.0})
            for (double p : exp3_probabilities(arms, g)) CHECK(p == doctest::Approx(0.25));
        exp3_update(arms, Exp3Draw{2, 0.25}, 0.0, 0.3);
        for (const auto& a : arms) CHECK(a.exp3_weight == 1.0);
    }

    TEST_CASE("EXP3 probabilities sum to one with floor gamma/K") {
        Rng rng(77);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t k = 2 + detail::uniform_index(rng, 7);
            const double gamma = 0.05 + 0.9 * detail::uniform01(rng);
            std::vector<SelectorStats> arms(k);
            for (int t = 0; t < 200; ++t) {
                const auto draw = exp3_select(arms, gamma, rng);
                exp3_update(arms, draw, detail::uniform01(rng), gamma);
                const auto p = exp3_probabilities(arms, gamma);
                const double sum = std::accumulate(p.begin(), p.end(), 0.0);
                REQUIRE(std::abs(sum - 1.0) <= 1e-9);
                for (double x : p) REQUIRE(x >= gamma / static_cast<double>(k) - 1e-15);
            }
        }
    }

    TEST_CASE("EXP3 weight overflow rescales without changing ratios") {
        std::vector<SelectorStats> arms(2);
        exp3_update(arms, Exp3Draw{0, 0.001}, 1.0, 0.5);  // exponent 250
        CHECK(arms[0].exp3_weight == doctest::Approx(1.0));
        CHECK(std::log(arms[1].exp3_weight) == doctest::Approx(-250.0));
        for (const auto& a : arms) CHECK(std::isfinite(a.exp3_weight));
    }

    TEST_CASE("MCTS: single root and unvisited-first descent") {
        SelectorPolicyConfig cfg;
        Rng rng(1);
        SeedPool single({"root"});
        CHECK(mcts_explore_select(single, cfg, rng) == std::vector<SeedId>{0});

        cfg.mcts_early_stop_p = 0.0;
        SeedPool chain({"root"});
        const auto a = chain.add_child(0, "a");
        const auto b = chain.add_child(a, "b");
        chain.at(0).stats = arm(3, 1.0);
        chain.at(a).stats = arm(2, 1.0);
        CHECK(mcts_explore_select(chain, cfg, rng) == std::vector<SeedId>{0, a, b});

        SeedPool empty;
        CHECK_THROWS(mcts_explore_select(empty, cfg, rng));
    }

    TEST_CASE("MCTS early stop applies below the root only") {
        SelectorPolicyConfig cfg;
        cfg.mcts_early_stop_p = 1.0;
        SeedPool chain({"root"});
        chain.add_child(0, "a");
        Rng rng(5);
        CHECK(mcts_explore_select(chain, cfg, rng) == std::vector<SeedId>{0});
    }

    TEST_CASE("MCTS backpropagation adds reward * decay^depth") {
        SeedPool chain({"root"});
        const auto a = chain.add_child(0, "a");
        const auto b = chain.add_child(a, "b");
        const std::vector<SeedId> path{0, a, b};
        mcts_backpropagate(chain, path, 1.0, 0.5);
        CHECK(chain.at(0).stats.cumulative_reward == 1.0);
        CHECK(chain.at(a).stats.cumulative_reward == 0.5);
        CHECK(chain.at(b).stats.cumulative_reward == 0.25);
        for (SeedId id : path) CHECK(chain.at(id).stats.visits == 1);

        // Conservation on random trees and rewards.
        Rng rng(8);
        SeedPool pool({"r0", "r1"});
        for (int i = 0; i < 30; ++i) pool.add_child(detail::uniform_index(rng, pool.size()), "n");
        SelectorPolicyConfig cfg;
        for (int t = 0; t < 200; ++t) {
            const auto p = mcts_explore_select(pool, cfg, rng);
            std::vector<double> before;
            for (SeedId id : p) before.push_back(pool.at(id).stats.cumulative_reward);
            const double r = detail::uniform01(rng);
            const double decay = 0.1 + 0.9 * detail::uniform01(rng);
            mcts_backpropagate(pool, p, r, decay);
            for (std::size_t i = 0; i < p.size(); ++i)
                REQUIRE(pool.at(p[i]).stats.cumulative_reward - before[i] ==
                        doctest::Approx(r * std::pow(decay, static_cast<double>(pool.at(p[i]).depth))));
        }
    }

    TEST_CASE("score selection") {
        CHECK(score_select(std::vector<double>{3, 9, 9}, 3) == 1);
        CHECK(score_select(std::vector<double>{5}, 1) == 0);
        CHECK_THROWS(score_select(std::vector<double>{1, 2}, 3));
    }

    TEST_CASE("score selection over scripted judge scores") {
        ScriptedMock judge(ScriptedMock::Keyed{{{"answer-a", "Rating: 2"}, {"answer-b", "Rating: 7"}, {"answer-c", "Rating: 4"}}});
        GenerativeGetScore scorer(judge, Resources::builtin());
        std::vector<double> scores;
        for (const char* r : {"answer-a", "answer-b", "answer-c"}) {
            Instance inst;
            inst.query = {"0", "goal", std::nullopt};
            inst.jailbreak_prompt = "prompt";
            inst.responses = {r};
            scores.push_back(*scorer.evaluate(inst).score);
        }
        CHECK(scores == std::vector<double>{2, 7, 4});
        CHECK(score_select(scores, 3) == 1);
    }

    TEST_CASE("reference-loss selection") {
        const Query q{"0", "do it", std::string("Sure, here is how")};
        MockLogprobBackend::Config cfg;
        cfg.default_logprob = -1.0;
        cfg.rules = {{"bold", -2.0}};
        MockLogprobBackend backend(cfg);
        const std::vector<std::string> templates{"Be bold: [QUERY]", "Be careful: [QUERY]"};
        CHECK(reference_loss_select(templates, q, backend) == 1);
        const std::vector<std::string> same{"x [QUERY]", "x [QUERY]"};
        CHECK(reference_loss_select(same, q, backend) == 0);
        const std::vector<std::string> one{"solo"};
        CHECK(reference_loss_select(one, q, backend) == 0);

        const Query no_ref{"1", "do it", std::nullopt};
        CHECK_THROWS(reference_loss_select(templates, no_ref, backend));
        MockVictim plain;
        CHECK_THROWS_AS(reference_loss_select(templates, q, plain), CapabilityError);
    }

    TEST_CASE("policy config validation") {
        SelectorPolicyConfig c;
        CHECK_NOTHROW(c.validate());
        c.exp3_gamma = 0.0;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = {};
        c.mcts_reward_decay = 1.5;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        CHECK_THROWS_AS(selector_kind_from_string("thompson"), ConfigError);
    }

    TEST_CASE("stateful selectors are deterministic given pool state and seed") {
        for (auto kind : {SelectorKind::random, SelectorKind::round_robin, SelectorKind::ucb, SelectorKind::exp3,
                          SelectorKind::mcts_explore}) {
            CAPTURE(to_string(kind));
            auto run = [&] {
                SeedPool pool({"a [QUERY]", "b [QUERY]", "c [QUERY]"});
                SeedSelector sel(kind, {});
                Rng rng(31), env(32);
                std::vector<SeedId> seq;
                for (int t = 0; t < 60; ++t) {
                    const auto s = sel.select(pool, rng, {nullptr, nullptr, {}, static_cast<std::uint64_t>(t)});
                    seq.push_back(s.seed);
                    const double r = detail::bernoulli(env, 0.3 + 0.2 * static_cast<double>(s.seed % 3)) ? 1.0 : 0.0;
                    if (kind == SelectorKind::mcts_explore && r > 0 && pool.size() < 10) pool.add_child(s.seed, "child");
                    sel.update(pool, s, r);
                }
                return seq;
            };
            CHECK(run() == run());
        }
    }
}
