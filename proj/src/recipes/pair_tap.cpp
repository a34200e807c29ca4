// Score-driven refinement. PAIR keeps n independent streams, each rewriting
// its last prompt from the target's reply and the judge score. TAP grows a
// tree: every leaf branches, off-topic children are pruned before querying,
// and only the best-scored children survive to the next level.

#include <algorithm>
#include <numeric>

#include "strategies.hpp"

namespace jailkit::recipes {

namespace {

struct Branch {
    std::string prompt;
    std::optional<MutationFeedback> feedback;
};

MutationFeedback feedback_from(const Instance& evaluated, const std::optional<MutationFeedback>& previous) {
    MutationFeedback fb;
    fb.response = evaluated.responses.empty() ? std::string() : evaluated.responses.front();
    fb.score = evaluated.eval ? evaluated.eval->score : std::nullopt;
    if (previous) fb.history = previous->history;
    fb.history.push_back(evaluated.jailbreak_prompt);
    return fb;
}

class PairStrategy final : public AttackStrategy {
public:
    explicit PairStrategy(const RunEnvironment& env) : env_(env), mutator_(GenerativeKind::historical_insight) {
        if (!env.config.mutators.empty() && env.config.mutators.front() != "historical_insight")
            mutator_ = GenerativeMutator(generative_kind_from_string(env.config.mutators.front()));
    }

    std::vector<Instance> propose(QueryState& state) override {
        if (streams_.empty()) streams_.assign(env_.config.knobs.pair_n_streams, Branch{state.query.text, std::nullopt});
        stream_of_.clear();
        std::vector<Instance> candidates;
        auto ctx = mutation_context(env_, state);
        for (std::size_t s = 0; s < streams_.size(); ++s) {
            auto parent = base_instance(state.query, state.round);
            parent.jailbreak_prompt = streams_[s].prompt;
            ctx.feedback = streams_[s].feedback;
            for (auto& child : mutator_.try_apply(parent, ctx)) {
                candidates.push_back(std::move(child));
                stream_of_.push_back(s);
            }
        }
        auto kept = apply_constraints(env_, env_.constraints, candidates, state.query);
        remap(candidates, kept);
        return kept;
    }

    void observe(QueryState&, std::span<const Instance> evaluated) override {
        for (std::size_t i = 0; i < evaluated.size(); ++i) {
            auto& stream = streams_[stream_of_[i]];
            stream.feedback = feedback_from(evaluated[i], stream.feedback);
            stream.prompt = evaluated[i].jailbreak_prompt;
        }
    }

private:
    // Keeps stream_of_ aligned with the constraint survivors.
    void remap(const std::vector<Instance>& before, const std::vector<Instance>& kept) {
        std::vector<std::size_t> remapped;
        std::size_t j = 0;
        for (const auto& k : kept) {
            while (j < before.size() && before[j].jailbreak_prompt != k.jailbreak_prompt) ++j;
            remapped.push_back(stream_of_[std::min(j, before.size() - 1)]);
            ++j;
        }
        stream_of_ = std::move(remapped);
    }

    const RunEnvironment& env_;
    GenerativeMutator mutator_;
    std::vector<Branch> streams_;
    std::vector<std::size_t> stream_of_;
};

class TapStrategy final : public AttackStrategy {
public:
    explicit TapStrategy(const RunEnvironment& env) : env_(env), mutator_(GenerativeKind::introspect_generation) {}

    std::vector<Instance> propose(QueryState& state) override {
        if (frontier_.empty() && state.round == 0) frontier_.push_back(Branch{state.query.text, std::nullopt});
        auto ctx = mutation_context(env_, state);
        std::vector<Instance> children;
        // Feedback travels with each child so its history stays on its branch.
        parent_feedback_.clear();
        for (const auto& leaf : frontier_) {
            auto parent = base_instance(state.query, state.round);
            parent.jailbreak_prompt = leaf.prompt;
            ctx.feedback = leaf.feedback;
            for (std::size_t b = 0; b < env_.config.knobs.tap_branching_factor; ++b) {
                for (auto& child : mutator_.try_apply(parent, ctx)) {
                    children.push_back(std::move(child));
                    parent_feedback_.push_back(leaf.feedback);
                }
            }
        }
        auto kept = apply_constraints(env_, env_.constraints, children, state.query);
        std::vector<std::optional<MutationFeedback>> kept_feedback;
        std::size_t j = 0;
        for (const auto& k : kept) {
            while (j < children.size() && children[j].jailbreak_prompt != k.jailbreak_prompt) ++j;
            kept_feedback.push_back(j < parent_feedback_.size() ? parent_feedback_[j] : std::nullopt);
            ++j;
        }
        parent_feedback_ = std::move(kept_feedback);
        ++levels_;
        return kept;
    }

    void observe(QueryState&, std::span<const Instance> evaluated) override {
        std::vector<std::size_t> order(evaluated.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto score_of = [&](std::size_t i) { return evaluated[i].eval->score.value_or(-1); };
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score_of(a) > score_of(b); });
        if (order.size() > env_.config.knobs.tap_width) order.resize(env_.config.knobs.tap_width);
        frontier_.clear();
        for (std::size_t i : order)
            frontier_.push_back(Branch{evaluated[i].jailbreak_prompt, feedback_from(evaluated[i], parent_feedback_[i])});
    }

    bool finished(const QueryState&) const override {
        return levels_ >= env_.config.knobs.tap_depth || (levels_ > 0 && frontier_.empty());
    }

private:
    const RunEnvironment& env_;
    GenerativeMutator mutator_;
    std::vector<Branch> frontier_;
    std::vector<std::optional<MutationFeedback>> parent_feedback_;
    std::size_t levels_ = 0;
};

}  // namespace

std::unique_ptr<AttackStrategy> make_pair_strategy(const RunEnvironment& env) { return std::make_unique<PairStrategy>(env); }

std::unique_ptr<AttackStrategy> make_tap_strategy(const RunEnvironment& env) { return std::make_unique<TapStrategy>(env); }

}  // namespace jailkit::recipes
