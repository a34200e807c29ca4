#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "jailkit/core.hpp"

namespace jailkit {

class ModelBackend;
class Resources;

// Character trigram language model with Laplace smoothing. Texts are padded
// with two begin-of-text symbols; characters outside the training alphabet
// share one unknown symbol, so V = |alphabet| + 1 and
//   P(c | a b) = (count(a b c) + alpha) / (count(a b) + alpha * V).
class CharTrigramModel {
public:
    explicit CharTrigramModel(double alpha = 1.0);

    static CharTrigramModel trained_on(std::string_view corpus, double alpha = 1.0);

    // Fixes the alphabet on first call; later calls only add counts.
    void train(std::string_view corpus);

    // exp(mean negative log-likelihood per character); 1.0 for empty text.
    double perplexity(std::string_view text) const;

    std::size_t vocabulary_size() const noexcept { return alphabet_size_ + 1; }
    double alpha() const noexcept { return alpha_; }
    bool trained() const noexcept { return trained_; }

private:
    int symbol(unsigned char c) const noexcept;

    double alpha_;
    bool trained_ = false;
    std::size_t alphabet_size_ = 0;
    std::vector<int> symbol_of_;  // byte -> symbol id, -1 = unknown
    std::map<std::tuple<int, int, int>, std::size_t> trigrams_;
    std::map<std::pair<int, int>, std::size_t> contexts_;
};

enum class PerplexityMode { char_trigram, backend_logprob };

// Perplexity of candidate prompts, from a trigram model (default, offline)
// or from a backend's sequence log-probabilities over whitespace tokens.
class PerplexityScorer {
public:
    explicit PerplexityScorer(CharTrigramModel model, double threshold = std::numeric_limits<double>::infinity());
    PerplexityScorer(ModelBackend& backend, double threshold = std::numeric_limits<double>::infinity());

    PerplexityMode mode() const noexcept { return mode_; }
    double threshold() const noexcept { return threshold_; }
    void set_threshold(double t);

    double score(std::string_view text) const;
    std::vector<double> score_batch(std::span<const std::string> texts, Execution exec = Execution::parallel) const;

private:
    PerplexityMode mode_;
    std::optional<CharTrigramModel> model_;
    ModelBackend* backend_ = nullptr;
    double threshold_;
};

// Nearest-rank percentile (p in (0,1]) of the scores of `corpus`.
double calibrate_threshold(const PerplexityScorer& scorer, std::span<const std::string> corpus, double percentile = 0.95);

// Output of a constraint: an order-preserving subset of the input. Instances
// kept only because the judge's answer could not be parsed are listed in
// `flagged` (indices into the input); the instances themselves are untouched.
struct FilterResult {
    std::vector<Instance> kept;
    std::vector<std::size_t> kept_indices;
    std::vector<std::size_t> flagged;
};

// First standalone yes/no token, case-insensitive.
std::optional<bool> parse_yes_no(std::string_view judge_output);
// true = on-topic, false = off-topic, first label wins.
std::optional<bool> parse_on_topic(std::string_view judge_output);

FilterResult filter_harmless(std::span<const Instance> instances, ModelBackend& eval_backend, const Resources& resources,
                             Execution exec = Execution::parallel);

FilterResult filter_off_topic(std::span<const Instance> instances, const Query& original_query,
                              ModelBackend& eval_backend, const Resources& resources,
                              Execution exec = Execution::parallel);

// Keeps instances whose prompt perplexity is <= the scorer's threshold.
FilterResult filter_perplexity(std::span<const Instance> instances, const PerplexityScorer& scorer,
                               Execution exec = Execution::parallel);

class Constraint {
public:
    virtual ~Constraint() = default;
    virtual std::string name() const = 0;
    virtual FilterResult apply(std::span<const Instance> instances, const Query& original_query,
                               Execution exec) const = 0;
};

using ConstraintPtr = std::shared_ptr<const Constraint>;

class DeleteHarmless final : public Constraint {
public:
    DeleteHarmless(ModelBackend& eval_backend, const Resources& resources) : eval_(eval_backend), res_(resources) {}
    std::string name() const override { return "delete_harmless"; }
    FilterResult apply(std::span<const Instance> instances, const Query&, Execution exec) const override {
        return filter_harmless(instances, eval_, res_, exec);
    }

private:
    ModelBackend& eval_;
    const Resources& res_;
};

class DeleteOffTopic final : public Constraint {
public:
    DeleteOffTopic(ModelBackend& eval_backend, const Resources& resources) : eval_(eval_backend), res_(resources) {}
    std::string name() const override { return "delete_off_topic"; }
    FilterResult apply(std::span<const Instance> instances, const Query& original, Execution exec) const override {
        return filter_off_topic(instances, original, eval_, res_, exec);
    }

private:
    ModelBackend& eval_;
    const Resources& res_;
};

class PerplexityConstraint final : public Constraint {
public:
    explicit PerplexityConstraint(PerplexityScorer scorer) : scorer_(std::move(scorer)) {}
    std::string name() const override { return "perplexity"; }
    FilterResult apply(std::span<const Instance> instances, const Query&, Execution exec) const override {
        return filter_perplexity(instances, scorer_, exec);
    }
    const PerplexityScorer& scorer() const noexcept { return scorer_; }

private:
    PerplexityScorer scorer_;
};

}  // namespace jailkit
