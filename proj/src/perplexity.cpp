#include <algorithm>
#include <cmath>

#include "jailkit/backends.hpp"
#include "jailkit/constraints.hpp"
#include "jailkit/detail/parallel.hpp"
#include "jailkit/detail/text.hpp"
#include "jailkit/error.hpp"

namespace jailkit {

namespace {

constexpr int kBos = -2;
constexpr int kUnknown = -1;

}  // namespace

CharTrigramModel::CharTrigramModel(double alpha) : alpha_(alpha), symbol_of_(256, kUnknown) {
    if (!(alpha > 0.0)) throw ConfigError("trigram alpha must be > 0");
}

CharTrigramModel CharTrigramModel::trained_on(std::string_view corpus, double alpha) {
    CharTrigramModel m(alpha);
    m.train(corpus);
    return m;
}

int CharTrigramModel::symbol(unsigned char c) const noexcept { return symbol_of_[c]; }

void CharTrigramModel::train(std::string_view corpus) {
    if (!trained_) {
        std::vector<bool> seen(256, false);
        for (unsigned char c : corpus) seen[c] = true;
        int next = 0;
        for (int b = 0; b < 256; ++b)
            if (seen[b]) symbol_of_[b] = next++;
        alphabet_size_ = static_cast<std::size_t>(next);
        trained_ = true;
    }
    int a = kBos, b = kBos;
    for (unsigned char ch : corpus) {
        const int c = symbol(ch);
        ++trigrams_[{a, b, c}];
        ++contexts_[{a, b}];
        a = b;
        b = c;
    }
}

double CharTrigramModel::perplexity(std::string_view text) const {
    if (!trained_) throw Error("trigram model used before training");
    if (text.empty()) return 1.0;
    const double v = static_cast<double>(vocabulary_size());
    double nll = 0.0;
    int a = kBos, b = kBos;
    for (unsigned char ch : text) {
        const int c = symbol(ch);
        const auto tri = trigrams_.find({a, b, c});
        const auto ctx = contexts_.find({a, b});
        const double num = (tri == trigrams_.end() ? 0.0 : static_cast<double>(tri->second)) + alpha_;
        const double den = (ctx == contexts_.end() ? 0.0 : static_cast<double>(ctx->second)) + alpha_ * v;
        nll -= std::log(num / den);
        a = b;
        b = c;
    }
    return std::exp(nll / static_cast<double>(text.size()));
}

PerplexityScorer::PerplexityScorer(CharTrigramModel model, double threshold)
    : mode_(PerplexityMode::char_trigram), model_(std::move(model)), threshold_(threshold) {
    set_threshold(threshold);
}

PerplexityScorer::PerplexityScorer(ModelBackend& backend, double threshold)
    : mode_(PerplexityMode::backend_logprob), backend_(&backend), threshold_(threshold) {
    if (!backend.supports_sequence_scoring())
        throw CapabilityError("perplexity: backend " + backend.name() + " cannot score sequences");
    set_threshold(threshold);
}

void PerplexityScorer::set_threshold(double t) {
    if (!(t > 0.0)) throw ConfigError("perplexity threshold must be > 0");
    threshold_ = t;
}

double PerplexityScorer::score(std::string_view text) const {
    if (mode_ == PerplexityMode::char_trigram) return model_->perplexity(text);
    const auto tokens = detail::whitespace_tokens(text);
    if (tokens.empty()) return 1.0;
    const double logprob = backend_->sequence_logprob("", text);
    return std::exp(-logprob / static_cast<double>(tokens.size()));
}

std::vector<double> PerplexityScorer::score_batch(std::span<const std::string> texts, Execution exec) const {
    std::vector<double> out(texts.size());
    detail::for_each_index(texts.size(), exec, [&](std::size_t i) { out[i] = score(texts[i]); });
    return out;
}

double calibrate_threshold(const PerplexityScorer& scorer, std::span<const std::string> corpus, double percentile) {
    if (corpus.empty()) throw ConfigError("cannot calibrate a perplexity threshold on an empty corpus");
    if (!(percentile > 0.0 && percentile <= 1.0)) throw ConfigError("percentile must be in (0,1]");
    auto scores = scorer.score_batch(corpus, Execution::serial);
    std::sort(scores.begin(), scores.end());
    const auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(scores.size()) - 1e-9));
    return scores[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace jailkit
