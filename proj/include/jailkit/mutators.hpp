#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jailkit/backends.hpp"
#include "jailkit/codechameleon.hpp"
#include "jailkit/codecs.hpp"
#include "jailkit/core.hpp"
#include "jailkit/detail/random.hpp"

namespace jailkit {

class Resources;

// What score-driven refinement mutators see about the previous attempt.
struct MutationFeedback {
    std::string response;
    std::optional<int> score;
    std::vector<std::string> history;  // earlier prompts, oldest first
};

struct MutationContext {
    ModelBackend* attack_backend = nullptr;  // generative mutators only
    const Resources* resources = nullptr;    // nullptr = built-in resources
    Rng* rng = nullptr;                      // mutators that sample
    std::string_view partner_text;           // crossover's second parent
    std::optional<MutationFeedback> feedback;
    ChatOptions chat_options;

    const Resources& res() const;
};

// A transformation of the current jailbreak prompt. transform() works on
// plain text; apply() copies the instance, installs each candidate and
// appends the mutator's name to the trace exactly once.
class Mutator {
public:
    virtual ~Mutator() = default;

    virtual std::string name() const = 0;
    virtual bool needs_attack_model() const { return false; }

    // At least one candidate, or MutationError.
    virtual std::vector<std::string> transform(std::string_view text, const Query& query, MutationContext& ctx) const = 0;

    std::vector<Instance> apply(const Instance& parent, MutationContext& ctx) const;

    // apply(), but a MutationError drops the candidate with a logged reason.
    std::vector<Instance> try_apply(const Instance& parent, MutationContext& ctx) const;
};

using MutatorPtr = std::shared_ptr<const Mutator>;

// --- rule-based -------------------------------------------------------------

// The twelve transform variants of the JailBroken study.
enum class JailbrokenVariant {
    artificial,
    auto_obfuscation,
    auto_payload_splitting,
    base64_input_only,
    base64_raw,
    base64,
    combination_1,
    combination_2,
    combination_3,
    disemvowel,
    leetspeak,
    rot13,
};

std::vector<JailbrokenVariant> all_jailbroken_variants();
std::string_view to_string(JailbrokenVariant v);
JailbrokenVariant jailbroken_variant_from_string(std::string_view s);

// Payload of a combination prompt, fenced by kPayloadBegin / kPayloadEnd.
//   1, 2 - base64 of the text
//   3    - "a = <base64 of first half>" and "b = <base64 of second half>",
//          split at character ceil(L/2)
inline constexpr std::string_view kPayloadBegin = "-----BEGIN REQUEST-----";
inline constexpr std::string_view kPayloadEnd = "-----END REQUEST-----";
std::string combination_payload(int which, std::string_view text);
// Finds the fenced payload in a full prompt and undoes the chain.
std::string combination_decode(int which, std::string_view prompt);

// Frames `text` for one variant. The auto_* variants rewrite through the
// attack model when one is given and fall back to payload splitting.
std::string jailbroken_prompt(JailbrokenVariant variant, std::string_view text, const Resources& resources,
                              ModelBackend* attack_backend = nullptr, const ChatOptions& opts = {});

class JailbrokenMutator final : public Mutator {
public:
    explicit JailbrokenMutator(JailbrokenVariant variant) : variant_(variant) {}
    std::string name() const override { return std::string(to_string(variant_)); }
    std::vector<std::string> transform(std::string_view text, const Query& query, MutationContext& ctx) const override;

private:
    JailbrokenVariant variant_;
};

// Cipher persona preamble + encoded benign demonstrations + encoded text.
// Responses stay encoded; nothing decodes them before judging.
std::string wrap_with_expert_prompt(const RuleCodec& codec, std::string_view text, const Resources& resources);

class CipherExpertMutator final : public Mutator {
public:
    explicit CipherExpertMutator(RuleCodec codec) : codec_(std::move(codec)) {}
    // ascii_expert, caesar_expert, morse_expert, self_define_cipher
    std::string name() const override;
    std::vector<std::string> transform(std::string_view text, const Query& query, MutationContext& ctx) const override;

private:
    RuleCodec codec_;
};

class CodeChameleonMutator final : public Mutator {
public:
    explicit CodeChameleonMutator(EncryptionKind kind) : kind_(kind) {}
    std::string name() const override { return "codechameleon_" + std::string(to_string(kind_)); }
    std::vector<std::string> transform(std::string_view text, const Query& query, MutationContext& ctx) const override;

private:
    EncryptionKind kind_;
};

// --- human-designed templates ----------------------------------------------

// deep_inception, ica_demos, jailbroken_artificial, combination_1..3.
// ica_demos prepends the first k demonstrations; k = 0 leaves the text alone.
std::string static_template(std::string_view name, std::string_view text, const Resources& resources,
                            std::size_t ica_k = 3);
std::vector<std::string> static_template_names();

class StaticTemplateMutator final : public Mutator {
public:
    // Throws ConfigError for unknown names.
    explicit StaticTemplateMutator(std::string template_name, std::size_t ica_k = 3);
    std::string name() const override { return name_; }
    std::vector<std::string> transform(std::string_view text, const Query& query, MutationContext& ctx) const override;

private:
    std::string name_;
    std::size_t ica_k_;
};

// Nests the text into one scenario drawn uniformly from `renellm_scenarios`.
class ScenarioNestMutator final : public Mutator {
public:
    std::string name() const override { return "scenario_nest"; }
    std::vector<std::string> transform(std::string_view text, const Query& query, MutationContext& ctx) const override;
};

// --- generative -------------------------------------------------------------

enum class GenerativeKind {
    rephrase,
    expand,
    shorten,
    crossover,
    change_style,
    translate,
    generate_similar,
    insert_meaningless_chars,
    misspell_sensitive_words,
    alter_sentence_structure,
    replace_synonyms,
    historical_insight,
    introspect_generation,
    auto_obfuscation,
    auto_payload_splitting,
};

std::string_view to_string(GenerativeKind k);
GenerativeKind generative_kind_from_string(std::string_view s);
std::vector<GenerativeKind> all_generative_kinds();

// Full language name for a code ("zu" -> "Zulu"); unknown codes pass through.
std::string language_name(std::string_view code);

struct GenerativeOptions {
    std::string language = "zu";  // translate
    std::size_t n_outputs = 1;
};

// The filled meta-prompt sent to the attack model. Slots: [SEED] text,
// [SEED2] crossover partner, [GOAL] query, [LANGUAGE], [FEEDBACK], [SCORE],
// [HISTORY].
std::string build_mutation_prompt(GenerativeKind kind, std::string_view seed, const Query& query,
                                  const MutationContext& ctx, const GenerativeOptions& options = {});

// Text of the first <prompt>...</prompt> block, else the whole output;
// nullopt when that is blank.
std::optional<std::string> extract_mutation(std::string_view output);

class GenerativeMutator final : public Mutator {
public:
    explicit GenerativeMutator(GenerativeKind kind, GenerativeOptions options = {});
    std::string name() const override;
    bool needs_attack_model() const override { return true; }
    std::vector<std::string> transform(std::string_view text, const Query& query, MutationContext& ctx) const override;

    GenerativeKind kind() const noexcept { return kind_; }

private:
    GenerativeKind kind_;
    GenerativeOptions options_;
};

// Gradient-guided token mutation needs white-box access. This is the
// extension point a plugin fills; the library ships no implementation.
class GradientMutator : public Mutator {
public:
    bool needs_attack_model() const override { return false; }
};

}  // namespace jailkit
