#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jailkit/core.hpp"
#include "jailkit/detail/random.hpp"

namespace jailkit {

class ModelBackend;

struct SelectorPolicyConfig {
    double ucb_c = 1.0;
    double exp3_gamma = 0.1;
    double mcts_c = 1.4;
    double mcts_early_stop_p = 0.1;
    double mcts_reward_decay = 0.5;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

enum class SelectorKind { random, round_robin, ucb, exp3, mcts_explore, score, reference_loss };

SelectorKind selector_kind_from_string(std::string_view s);
std::string_view to_string(SelectorKind k);

// --- policy kernels -------------------------------------------------------
// Every kernel breaks ties toward the lowest pool index.

std::size_t random_select(std::size_t pool_size, Rng& rng);

// (last_index + 1) mod pool_size; index 0 when nothing was selected yet.
std::size_t round_robin_select(std::size_t pool_size, std::optional<std::size_t> last_index);

// Unvisited arms first; otherwise argmax of
//   mean_reward + c * sqrt(2 ln N / visits).
std::size_t ucb_select(std::span<const SelectorStats> arms, std::uint64_t total_visits, double c);
std::vector<double> ucb_scores(std::span<const SelectorStats> arms, std::uint64_t total_visits, double c);

// p_i = (1 - gamma) w_i / sum(w) + gamma / K
std::vector<double> exp3_probabilities(std::span<const SelectorStats> arms, double gamma);

struct Exp3Draw {
    std::size_t index = 0;
    double probability = 0.0;
};

Exp3Draw exp3_select(std::span<const SelectorStats> arms, double gamma, Rng& rng);

// Importance-weighted update of the drawn arm:
//   w_i <- w_i * exp(gamma * (r / p_i) / K).
// Weights are rescaled by their maximum when they would exceed 1e100, which
// leaves the probabilities unchanged.
void exp3_update(std::span<SelectorStats> arms, const Exp3Draw& draw, double reward, double gamma);

// Descends from the best root by UCT (unvisited children first), stopping
// early at each level below the root with probability mcts_early_stop_p.
std::vector<SeedId> mcts_explore_select(const SeedPool& pool, const SelectorPolicyConfig& config, Rng& rng);

// Adds reward * decay^depth to every node on the path and counts a visit.
void mcts_backpropagate(SeedPool& pool, std::span<const SeedId> path, double reward, double decay);

// Throws when the scores do not cover the pool.
std::size_t score_select(std::span<const double> scores, std::size_t pool_size);

// loss = -log p(reference | instantiated seed); argmin. Requires the query's
// reference response and a backend that can score sequences.
std::size_t reference_loss_select(std::span<const std::string> templates, const Query& query, ModelBackend& backend);

// --- stateful selector used by the attack loop ------------------------------

struct Selection {
    SeedId seed = 0;
    std::vector<SeedId> path;  // root..seed for MCTS, {seed} otherwise
    double probability = 1.0;  // EXP3 draw probability
};

struct SelectionContext {
    const Query* query = nullptr;
    ModelBackend* scoring_backend = nullptr;  // reference-loss selector
    std::span<const double> scores;           // score selector, one per pool node
    std::uint64_t round = 0;
};

// Wraps one policy over a SeedPool. Not thread-safe: the engine serializes
// selection and updates per attack loop.
class SeedSelector {
public:
    SeedSelector(SelectorKind kind, SelectorPolicyConfig config);

    Selection select(SeedPool& pool, Rng& rng, const SelectionContext& ctx = {});
    void update(SeedPool& pool, const Selection& selection, double reward);

    SelectorKind kind() const noexcept { return kind_; }
    const SelectorPolicyConfig& config() const noexcept { return config_; }

private:
    SelectorKind kind_;
    SelectorPolicyConfig config_;
    std::optional<std::size_t> last_index_;
};

}  // namespace jailkit
