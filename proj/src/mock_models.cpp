#include "jailkit/mock_models.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "jailkit/detail/text.hpp"
#include "jailkit/error.hpp"
#include "jailkit/resources.hpp"

namespace jailkit {

namespace {

std::string last_user_content(std::span<const Message> messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it)
        if (it->role == Role::user) return it->content;
    return {};
}

std::string flatten(std::span<const Message> messages) {
    std::string out;
    for (const auto& m : messages) {
        out += m.content;
        out += '\n';
    }
    return out;
}

ChatOutput replicate(std::string text, std::size_t n) { return ChatOutput{std::vector<std::string>(n, text), {}}; }

}  // namespace

std::optional<std::string> extract_tagged(std::string_view text, std::string_view tag) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    auto start = text.find(open);
    if (start == std::string_view::npos) return std::nullopt;
    start += open.size();
    auto end = text.find(close, start);
    if (end == std::string_view::npos) return std::nullopt;
    return std::string(text.substr(start, end - start));
}

// ---------------------------------------------------------------------------

std::vector<std::string> MockVictim::default_blocklist() {
    return {"bomb", "explosive", "weapon", "hack", "malware", "virus", "poison", "steal", "counterfeit", "drugs"};
}

std::vector<std::string> MockVictim::default_cues() { return {"decode", "translate", "expert", "story", "function"}; }

MockVictim::MockVictim(Config config) : config_(std::move(config)) {}

std::string MockVictim::respond(std::string_view rendered_prompt) const {
    for (const auto& word : config_.blocklist)
        if (detail::contains_ci(rendered_prompt, word)) return std::string(kRefusal);
    for (const auto& cue : config_.compliance_cues)
        if (detail::contains_ci(rendered_prompt, cue)) return std::string(kCompliance);
    return std::string(kDeflection);
}

ChatOutput MockVictim::do_chat(std::span<const Message> messages, const ChatOptions& opts) {
    ++calls_;
    return replicate(respond(render(config_.conversation, messages)), opts.n_samples);
}

// ---------------------------------------------------------------------------

ScriptedMock::ScriptedMock(Ordered script, std::string name)
    : name_(std::move(name)), keyed_(false), ordered_(std::move(script.replies)) {}

ScriptedMock::ScriptedMock(Keyed script, std::string name)
    : name_(std::move(name)), keyed_(true), table_(std::move(script.table)) {}

std::size_t ScriptedMock::calls() const {
    std::lock_guard lock(mu_);
    return seen_.size();
}

std::vector<std::string> ScriptedMock::prompts_seen() const {
    std::lock_guard lock(mu_);
    return seen_;
}

std::string ScriptedMock::next_reply(const std::string& conversation) {
    std::lock_guard lock(mu_);
    seen_.push_back(conversation);
    if (keyed_) {
        for (const auto& [key, reply] : table_)
            if (conversation.find(key) != std::string::npos) return reply;
        throw ScriptError(name_ + ": no scripted reply matches prompt: " + conversation.substr(0, 120));
    }
    if (cursor_ >= ordered_.size())
        throw ScriptError(name_ + ": script exhausted after " + std::to_string(ordered_.size()) + " replies");
    return ordered_[cursor_++];
}

ChatOutput ScriptedMock::do_chat(std::span<const Message> messages, const ChatOptions& opts) {
    const auto conversation = flatten(messages);
    ChatOutput out;
    for (std::size_t i = 0; i < opts.n_samples; ++i) out.texts.push_back(next_reply(conversation));
    return out;
}

// ---------------------------------------------------------------------------

MockJudge::MockJudge(std::vector<std::string> blocklist) : blocklist_(std::move(blocklist)) {}

namespace {

// The prompt with every <goal>, <prompt>, <response> and <reply> block removed.
std::string instruction_text(std::string_view prompt) {
    std::string out(prompt);
    for (std::string_view tag : {"goal", "prompt", "response", "reply"}) {
        const std::string open = "<" + std::string(tag) + ">", close = "</" + std::string(tag) + ">";
        for (auto pos = out.find(open); pos != std::string::npos; pos = out.find(open, pos)) {
            const auto end = out.find(close, pos + open.size());
            if (end == std::string::npos) break;
            out.erase(pos, end + close.size() - pos);
        }
    }
    return out;
}

}  // namespace

std::string MockJudge::judge(std::string_view prompt) const {
    const bool compliant = extract_tagged(prompt, "response").value_or("").find(kComplianceMarker) != std::string::npos;
    // The task is read from the instructions only; tagged inputs may contain
    // any word (the compliance marker itself says "harmful").
    const auto task = instruction_text(prompt);
    if (detail::contains_ci(task, "rating")) return compliant ? "Rating: 9" : "Rating: 1";

    const auto candidate = extract_tagged(prompt, "prompt").value_or("");
    if (detail::contains_ci(task, "off-topic")) {
        std::set<std::string> goal_words;
        for (auto& w : detail::word_tokens(extract_tagged(prompt, "goal").value_or("")))
            if (w.size() >= 4) goal_words.insert(w);
        for (const auto& w : detail::word_tokens(candidate))
            if (goal_words.count(w)) return "on-topic";
        return "off-topic";
    }
    if (detail::contains_ci(task, "harmful")) {
        for (const auto& word : blocklist_)
            if (detail::contains_ci(candidate, word)) return "Yes";
        return "No";
    }
    return compliant ? "1" : "0";
}

ChatOutput MockJudge::do_chat(std::span<const Message> messages, const ChatOptions& opts) {
    return replicate(judge(last_user_content(messages)), opts.n_samples);
}

// ---------------------------------------------------------------------------

ChatOutput EchoMock::do_chat(std::span<const Message> messages, const ChatOptions& opts) {
    const auto content = last_user_content(messages);
    auto echoed = extract_tagged(content, "prompt").value_or(content);
    return replicate(std::string(detail::trim(echoed)), opts.n_samples);
}

// ---------------------------------------------------------------------------

MockLogprobBackend::MockLogprobBackend(Config config) : config_(std::move(config)) {
    if (!(config_.default_logprob <= 0.0)) throw ConfigError("mock log-probabilities must be <= 0");
    for (const auto& [key, lp] : config_.rules)
        if (!(lp <= 0.0)) throw ConfigError("mock log-probability for '" + key + "' must be <= 0");
}

double MockLogprobBackend::per_token_logprob(std::string_view prompt) const {
    for (const auto& [key, lp] : config_.rules)
        if (prompt.find(key) != std::string_view::npos) return lp;
    return config_.default_logprob;
}

ChatOutput MockLogprobBackend::do_chat(std::span<const Message> messages, const ChatOptions& opts) {
    const auto prompt = last_user_content(messages);
    const std::string reply = "OK";
    ChatOutput out = replicate(reply, opts.n_samples);
    if (opts.want_logprobs) {
        std::vector<TokenLogprob> seq;
        for (auto& tok : detail::whitespace_tokens(reply)) seq.push_back({tok, per_token_logprob(prompt)});
        out.token_logprobs = std::vector<std::vector<TokenLogprob>>(opts.n_samples, seq);
    }
    return out;
}

double MockLogprobBackend::do_sequence_logprob(std::string_view prompt, std::string_view continuation) {
    return per_token_logprob(prompt) * static_cast<double>(detail::whitespace_tokens(continuation).size());
}

// ---------------------------------------------------------------------------

KeywordClassifier::KeywordClassifier(double bias, std::vector<Weight> weights)
    : bias_(bias), weights_(std::move(weights)) {
    for (auto& w : weights_) w.phrase = detail::to_lower(w.phrase);
}

KeywordClassifier KeywordClassifier::from_resources(const Resources& resources) {
    double bias = 0.0;
    std::vector<Weight> weights;
    for (const auto& line : resources.lines("classifier_keyword_weights")) {
        std::istringstream in(line);
        std::string head;
        in >> head;
        std::string rest;
        std::getline(in, rest);
        auto phrase = std::string(detail::trim(rest));
        if (head == "bias") {
            bias = std::stod(phrase);
            continue;
        }
        try {
            weights.push_back({phrase, std::stod(head)});
        } catch (const std::exception&) {
            throw ConfigError("classifier weights: malformed line '" + line + "'");
        }
    }
    return KeywordClassifier(bias, std::move(weights));
}

double KeywordClassifier::score(std::string_view response) const {
    double logit = bias_;
    const auto lowered = detail::to_lower(response);
    for (const auto& w : weights_)
        if (lowered.find(w.phrase) != std::string::npos) logit += w.weight;
    return 1.0 / (1.0 + std::exp(-logit));
}

}  // namespace jailkit
