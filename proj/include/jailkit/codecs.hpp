#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jailkit {

enum class CodecKind {
    base64,
    base64_input_only,
    base64_raw,
    rot13,
    caesar,
    morse,
    ascii_decimal,
    leetspeak,
    disemvowel,
    self_define_cipher,
    payload_split,
};

// A deterministic text transform. The three base64 kinds share one encoding
// and differ only in how a mutator frames them.
struct RuleCodec {
    CodecKind kind = CodecKind::base64;
    int caesar_shift = 3;
    // self_define_cipher: a permutation of its key characters; empty = identity.
    std::vector<std::pair<char, char>> substitution;
    std::size_t split_threshold = 5;  // payload_split: words at least this long are split

    // "base64", "rot13", "caesar" or "caesar:<shift>", "morse", "ascii_decimal",
    // "leetspeak", "disemvowel", "self_define_cipher", "payload_split", ...
    static RuleCodec named(std::string_view name);
    static RuleCodec caesar(int shift);
    // Throws ConfigError unless the table is a permutation of its keys.
    static RuleCodec self_define(std::vector<std::pair<char, char>> table);
    static std::vector<std::string> known_names();

    std::string name() const;
    bool invertible() const noexcept;
};

std::string encode(const RuleCodec& codec, std::string_view text);

// Throws CodecError naming the offending position on malformed input, and
// Error for codecs with no inverse (disemvowel, payload_split).
std::string decode(const RuleCodec& codec, std::string_view text);

// True when decode(encode(text)) == text is guaranteed. Morse covers upper-case
// letters, digits, ITU punctuation and spaces; leetspeak excludes the digits
// its table produces; the other invertible codecs accept any byte string.
bool in_domain(const RuleCodec& codec, std::string_view text);

// Splits a word into two fragments at ceil(L/2) when L >= threshold;
// shorter words come back as a single fragment.
std::vector<std::string> split_payload_word(std::string_view word, std::size_t threshold = 5);

// Fragments for every space-separated word, in order.
std::vector<std::string> split_payload(std::string_view text, std::size_t threshold = 5);

// Independent building blocks, also used by prompt builders.
std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);
std::string morse_encode(std::string_view text);
std::string morse_decode(std::string_view text);

}  // namespace jailkit
