#include "jailkit/selectors.hpp"

#include <cmath>
#include <limits>

#include "jailkit/backends.hpp"
#include "jailkit/error.hpp"

namespace jailkit {

namespace {

constexpr double kWeightCeiling = 1e100;

void require_pool(std::size_t n, const char* who) {
    if (n == 0) throw Error(std::string(who) + ": empty seed pool");
}

std::vector<SelectorStats> gather_stats(const SeedPool& pool) {
    std::vector<SelectorStats> stats;
    stats.reserve(pool.size());
    for (const auto& node : pool.nodes()) stats.push_back(node.stats);
    return stats;
}

// UCT pick among `candidates` (pool ids): first unvisited, else best score.
SeedId uct_pick(const SeedPool& pool, const std::vector<SeedId>& candidates, std::uint64_t parent_visits, double c) {
    for (SeedId id : candidates)
        if (pool.at(id).stats.visits == 0) return id;
    const double log_parent = std::log(static_cast<double>(std::max<std::uint64_t>(parent_visits, 1)));
    SeedId best = candidates.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (SeedId id : candidates) {
        const auto& s = pool.at(id).stats;
        const double v = static_cast<double>(s.visits);
        const double score = s.cumulative_reward / v + c * std::sqrt(2.0 * log_parent / v);
        if (score > best_score) {
            best_score = score;
            best = id;
        }
    }
    return best;
}

}  // namespace

void SelectorPolicyConfig::validate() const {
    if (!(ucb_c > 0.0)) throw ConfigError("ucb_c must be > 0");
    if (!(exp3_gamma > 0.0 && exp3_gamma <= 1.0)) throw ConfigError("exp3_gamma must be in (0,1]");
    if (!(mcts_c > 0.0)) throw ConfigError("mcts_c must be > 0");
    if (!(mcts_early_stop_p >= 0.0 && mcts_early_stop_p <= 1.0))
        throw ConfigError("mcts_early_stop_p must be a probability");
    if (!(mcts_reward_decay > 0.0 && mcts_reward_decay <= 1.0))
        throw ConfigError("mcts_reward_decay must be in (0,1]");
}

SelectorKind selector_kind_from_string(std::string_view s) {
    if (s == "random") return SelectorKind::random;
    if (s == "round_robin") return SelectorKind::round_robin;
    if (s == "ucb") return SelectorKind::ucb;
    if (s == "exp3") return SelectorKind::exp3;
    if (s == "mcts_explore" || s == "mcts") return SelectorKind::mcts_explore;
    if (s == "score") return SelectorKind::score;
    if (s == "reference_loss") return SelectorKind::reference_loss;
    throw ConfigError("unknown selector '" + std::string(s) + "'");
}

std::string_view to_string(SelectorKind k) {
    switch (k) {
        case SelectorKind::random: return "random";
        case SelectorKind::round_robin: return "round_robin";
        case SelectorKind::ucb: return "ucb";
        case SelectorKind::exp3: return "exp3";
        case SelectorKind::mcts_explore: return "mcts_explore";
        case SelectorKind::score: return "score";
        case SelectorKind::reference_loss: return "reference_loss";
    }
    return "random";
}

std::size_t random_select(std::size_t pool_size, Rng& rng) {
    require_pool(pool_size, "random_select");
    return detail::uniform_index(rng, pool_size);
}

std::size_t round_robin_select(std::size_t pool_size, std::optional<std::size_t> last_index) {
    require_pool(pool_size, "round_robin_select");
    return last_index ? (*last_index + 1) % pool_size : 0;
}

std::vector<double> ucb_scores(std::span<const SelectorStats> arms, std::uint64_t total_visits, double c) {
    std::vector<double> scores(arms.size(), std::numeric_limits<double>::infinity());
    const double log_n = std::log(static_cast<double>(std::max<std::uint64_t>(total_visits, 1)));
    for (std::size_t i = 0; i < arms.size(); ++i) {
        if (arms[i].visits == 0) continue;
        const double v = static_cast<double>(arms[i].visits);
        scores[i] = arms[i].cumulative_reward / v + c * std::sqrt(2.0 * log_n / v);
    }
    return scores;
}

std::size_t ucb_select(std::span<const SelectorStats> arms, std::uint64_t total_visits, double c) {
    require_pool(arms.size(), "ucb_select");
    for (std::size_t i = 0; i < arms.size(); ++i)
        if (arms[i].visits == 0) return i;
    const auto scores = ucb_scores(arms, total_visits, c);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

std::vector<double> exp3_probabilities(std::span<const SelectorStats> arms, double gamma) {
    require_pool(arms.size(), "exp3");
    double total = 0.0;
    for (const auto& a : arms) {
        if (!(a.exp3_weight > 0.0) || !std::isfinite(a.exp3_weight))
            throw Error("exp3: weights must be finite and positive");
        total += a.exp3_weight;
    }
    const double k = static_cast<double>(arms.size());
    std::vector<double> p(arms.size());
    for (std::size_t i = 0; i < arms.size(); ++i) p[i] = (1.0 - gamma) * arms[i].exp3_weight / total + gamma / k;
    return p;
}

Exp3Draw exp3_select(std::span<const SelectorStats> arms, double gamma, Rng& rng) {
    const auto p = exp3_probabilities(arms, gamma);
    const auto index = detail::weighted_index(rng, p);
    return {index, p[index]};
}

void exp3_update(std::span<SelectorStats> arms, const Exp3Draw& draw, double reward, double gamma) {
    require_pool(arms.size(), "exp3_update");
    if (draw.index >= arms.size()) throw Error("exp3_update: arm index out of range");
    if (!(draw.probability > 0.0)) throw Error("exp3_update: draw probability must be > 0");
    const double k = static_cast<double>(arms.size());
    const double estimate = reward / draw.probability;
    const double exponent = gamma * estimate / k;

    auto& chosen = arms[draw.index].exp3_weight;
    const double updated = chosen * std::exp(exponent);
    if (std::isfinite(updated) && updated <= kWeightCeiling) {
        chosen = updated;
        return;
    }
    // Rescale in log space so an overflowing exponent still yields exact ratios.
    const double log_chosen = std::log(chosen) + exponent;
    double max_log = log_chosen;
    for (std::size_t i = 0; i < arms.size(); ++i)
        if (i != draw.index) max_log = std::max(max_log, std::log(arms[i].exp3_weight));
    for (std::size_t i = 0; i < arms.size(); ++i) {
        const double log_w = i == draw.index ? log_chosen : std::log(arms[i].exp3_weight);
        arms[i].exp3_weight = std::max(std::exp(log_w - max_log), std::numeric_limits<double>::min());
    }
}

std::vector<SeedId> mcts_explore_select(const SeedPool& pool, const SelectorPolicyConfig& config, Rng& rng) {
    if (pool.roots().empty()) throw Error("mcts_explore_select: empty tree");
    std::uint64_t root_visits = 0;
    for (SeedId r : pool.roots()) root_visits += pool.at(r).stats.visits;

    SeedId current = uct_pick(pool, pool.roots(), root_visits, config.mcts_c);
    std::vector<SeedId> path{current};
    while (!pool.at(current).children.empty()) {
        if (detail::bernoulli(rng, config.mcts_early_stop_p)) break;
        current = uct_pick(pool, pool.at(current).children, pool.at(current).stats.visits, config.mcts_c);
        path.push_back(current);
    }
    return path;
}

void mcts_backpropagate(SeedPool& pool, std::span<const SeedId> path, double reward, double decay) {
    for (SeedId id : path) {
        auto& node = pool.at(id);
        node.stats.cumulative_reward += reward * std::pow(decay, static_cast<double>(node.depth));
        node.stats.visits += 1;
    }
}

std::size_t score_select(std::span<const double> scores, std::size_t pool_size) {
    require_pool(pool_size, "score_select");
    if (scores.size() != pool_size)
        throw Error("score_select: missing score (" + std::to_string(scores.size()) + " scores for " +
                    std::to_string(pool_size) + " seeds)");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

std::size_t reference_loss_select(std::span<const std::string> templates, const Query& query, ModelBackend& backend) {
    require_pool(templates.size(), "reference_loss_select");
    if (!query.reference_response) throw Error("reference_loss_select: query '" + query.id + "' has no reference");
    if (!backend.supports_sequence_scoring())
        throw CapabilityError("reference_loss_select: backend " + backend.name() + " cannot score sequences");
    std::size_t best = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < templates.size(); ++i) {
        const double loss = -backend.sequence_logprob(instantiate_text(templates[i], query.text), *query.reference_response);
        if (loss < best_loss) {
            best_loss = loss;
            best = i;
        }
    }
    return best;
}

SeedSelector::SeedSelector(SelectorKind kind, SelectorPolicyConfig config) : kind_(kind), config_(config) {
    config_.validate();
}

Selection SeedSelector::select(SeedPool& pool, Rng& rng, const SelectionContext& ctx) {
    require_pool(pool.size(), "select");
    Selection sel;
    switch (kind_) {
        case SelectorKind::random:
            sel.seed = random_select(pool.size(), rng);
            break;
        case SelectorKind::round_robin:
            sel.seed = round_robin_select(pool.size(), last_index_);
            break;
        case SelectorKind::ucb: {
            const auto stats = gather_stats(pool);
            sel.seed = ucb_select(stats, pool.total_visits(), config_.ucb_c);
            break;
        }
        case SelectorKind::exp3: {
            const auto stats = gather_stats(pool);
            const auto draw = exp3_select(stats, config_.exp3_gamma, rng);
            sel.seed = draw.index;
            sel.probability = draw.probability;
            break;
        }
        case SelectorKind::mcts_explore:
            sel.path = mcts_explore_select(pool, config_, rng);
            sel.seed = sel.path.back();
            break;
        case SelectorKind::score:
            sel.seed = score_select(ctx.scores, pool.size());
            break;
        case SelectorKind::reference_loss: {
            if (!ctx.query || !ctx.scoring_backend)
                throw CapabilityError("reference-loss selector needs a query and a scoring backend");
            std::vector<std::string> templates;
            for (const auto& node : pool.nodes()) templates.push_back(node.template_text);
            sel.seed = reference_loss_select(templates, *ctx.query, *ctx.scoring_backend);
            break;
        }
    }
    if (sel.path.empty()) sel.path = {sel.seed};
    last_index_ = sel.seed;
    pool.at(sel.seed).stats.last_selected_round = ctx.round;
    return sel;
}

void SeedSelector::update(SeedPool& pool, const Selection& selection, double reward) {
    if (kind_ == SelectorKind::mcts_explore) {
        mcts_backpropagate(pool, selection.path, reward, config_.mcts_reward_decay);
        return;
    }
    auto& stats = pool.at(selection.seed).stats;
    stats.visits += 1;
    stats.cumulative_reward += reward;
    if (kind_ == SelectorKind::exp3) {
        std::vector<SelectorStats> all = gather_stats(pool);
        exp3_update(all, Exp3Draw{selection.seed, selection.probability}, reward, config_.exp3_gamma);
        for (std::size_t i = 0; i < all.size(); ++i) pool.at(i).stats.exp3_weight = all[i].exp3_weight;
    }
}

}  // namespace jailkit
