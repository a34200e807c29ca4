#include "jailkit/codecs.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "jailkit/detail/text.hpp"
#include "jailkit/error.hpp"

namespace jailkit {

namespace {

constexpr std::string_view kBase64Alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

// ITU-R M.1677-1
const std::map<char, std::string_view>& morse_table() {
    static const std::map<char, std::string_view> table = {
        {'A', ".-"},     {'B', "-..."},   {'C', "-.-."},   {'D', "-.."},    {'E', "."},      {'F', "..-."},
        {'G', "--."},    {'H', "...."},   {'I', ".."},     {'J', ".---"},   {'K', "-.-"},    {'L', ".-.."},
        {'M', "--"},     {'N', "-."},     {'O', "---"},    {'P', ".--."},   {'Q', "--.-"},   {'R', ".-."},
        {'S', "..."},    {'T', "-"},      {'U', "..-"},    {'V', "...-"},   {'W', ".--"},    {'X', "-..-"},
        {'Y', "-.--"},   {'Z', "--.."},   {'0', "-----"},  {'1', ".----"},  {'2', "..---"},  {'3', "...--"},
        {'4', "....-"},  {'5', "....."},  {'6', "-...."},  {'7', "--..."},  {'8', "---.."},  {'9', "----."},
        {'.', ".-.-.-"}, {',', "--..--"}, {'?', "..--.."}, {'\'', ".----."}, {'!', "-.-.--"}, {'/', "-..-."},
        {'(', "-.--."},  {')', "-.--.-"}, {'&', ".-..."},  {':', "---..."}, {';', "-.-.-."}, {'=', "-...-"},
        {'+', ".-.-."},  {'-', "-....-"}, {'_', "..--.-"}, {'"', ".-..-."}, {'$', "...-..-"}, {'@', ".--.-."},
    };
    return table;
}

const std::map<std::string_view, char>& morse_reverse() {
    static const std::map<std::string_view, char> rev = [] {
        std::map<std::string_view, char> m;
        for (const auto& [c, code] : morse_table()) m.emplace(code, c);
        return m;
    }();
    return rev;
}

constexpr std::array<std::pair<char, char>, 6> kLeet = {
    {{'a', '4'}, {'e', '3'}, {'i', '1'}, {'o', '0'}, {'s', '5'}, {'t', '7'}}};

char shift_letter(char c, int shift) {
    const int s = ((shift % 26) + 26) % 26;
    if (c >= 'a' && c <= 'z') return static_cast<char>('a' + (c - 'a' + s) % 26);
    if (c >= 'A' && c <= 'Z') return static_cast<char>('A' + (c - 'A' + s) % 26);
    return c;
}

std::string shift_text(std::string_view text, int shift) {
    std::string out(text);
    for (auto& c : out) c = shift_letter(c, shift);
    return out;
}

bool is_vowel(char c) {
    switch (c) {
        case 'a': case 'e': case 'i': case 'o': case 'u':
        case 'A': case 'E': case 'I': case 'O': case 'U':
            return true;
        default:
            return false;
    }
}

std::string substitute(std::string_view text, const std::vector<std::pair<char, char>>& table, bool inverse) {
    std::array<char, 256> map{};
    for (int i = 0; i < 256; ++i) map[i] = static_cast<char>(i);
    for (auto [from, to] : table) {
        if (inverse)
            map[static_cast<unsigned char>(to)] = from;
        else
            map[static_cast<unsigned char>(from)] = to;
    }
    std::string out(text);
    for (auto& c : out) c = map[static_cast<unsigned char>(c)];
    return out;
}

std::string ascii_encode(std::string_view text) {
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(static_cast<unsigned char>(text[i]));
    }
    return out;
}

std::string ascii_decode(std::string_view text) {
    std::string out;
    if (text.empty()) return out;
    std::size_t pos = 0;
    for (const auto& tok : detail::split(text, ' ')) {
        unsigned value = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || value > 255)
            throw CodecError("ascii_decimal: invalid code '" + tok + "'", pos);
        out.push_back(static_cast<char>(value));
        pos += tok.size() + 1;
    }
    return out;
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t n = (static_cast<unsigned char>(bytes[i]) << 16) |
                                (static_cast<unsigned char>(bytes[i + 1]) << 8) | static_cast<unsigned char>(bytes[i + 2]);
        out += kBase64Alphabet[(n >> 18) & 63];
        out += kBase64Alphabet[(n >> 12) & 63];
        out += kBase64Alphabet[(n >> 6) & 63];
        out += kBase64Alphabet[n & 63];
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t n = static_cast<unsigned char>(bytes[i]) << 16;
        out += kBase64Alphabet[(n >> 18) & 63];
        out += kBase64Alphabet[(n >> 12) & 63];
        out += "==";
    } else if (rest == 2) {
        const std::uint32_t n = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += kBase64Alphabet[(n >> 18) & 63];
        out += kBase64Alphabet[(n >> 12) & 63];
        out += kBase64Alphabet[(n >> 6) & 63];
        out += '=';
    }
    return out;
}

std::string base64_decode(std::string_view text) {
    if (text.size() % 4 != 0)
        throw CodecError("base64: length " + std::to_string(text.size()) + " is not a multiple of 4", text.size());
    std::string out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        std::uint32_t n = 0;
        int pad = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            const char c = text[i + j];
            if (c == '=') {
                const bool last_block = i + 4 == text.size();
                if (!last_block || j < 2) throw CodecError("base64: unexpected padding", i + j);
                ++pad;
                n <<= 6;
                continue;
            }
            if (pad) throw CodecError("base64: data after padding", i + j);
            const auto idx = kBase64Alphabet.find(c);
            if (idx == std::string_view::npos) throw CodecError("base64: invalid character", i + j);
            n = (n << 6) | static_cast<std::uint32_t>(idx);
        }
        out += static_cast<char>((n >> 16) & 0xFF);
        if (pad < 2) out += static_cast<char>((n >> 8) & 0xFF);
        if (pad < 1) out += static_cast<char>(n & 0xFF);
    }
    return out;
}

std::string morse_encode(std::string_view text) {
    std::string out;
    std::size_t dropped = 0;
    for (char raw : text) {
        std::string_view token;
        if (raw == ' ') {
            token = "/";
        } else {
            const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
            auto it = morse_table().find(c);
            if (it == morse_table().end()) {
                ++dropped;
                continue;
            }
            token = it->second;
        }
        if (!out.empty()) out += ' ';
        out += token;
    }
    if (dropped) spdlog::warn("morse: dropped {} character(s) with no Morse code", dropped);
    return out;
}

std::string morse_decode(std::string_view text) {
    std::string out;
    if (text.empty()) return out;
    std::size_t pos = 0;
    for (const auto& tok : detail::split(text, ' ')) {
        if (tok == "/") {
            out += ' ';
        } else {
            auto it = morse_reverse().find(tok);
            if (it == morse_reverse().end()) throw CodecError("morse: unknown code '" + tok + "'", pos);
            out += it->second;
        }
        pos += tok.size() + 1;
    }
    return out;
}

RuleCodec RuleCodec::caesar(int shift) {
    RuleCodec c;
    c.kind = CodecKind::caesar;
    c.caesar_shift = shift;
    return c;
}

RuleCodec RuleCodec::self_define(std::vector<std::pair<char, char>> table) {
    std::set<char> keys, values;
    for (auto [from, to] : table) {
        if (!keys.insert(from).second) throw ConfigError("self_define_cipher: duplicate key in substitution table");
        values.insert(to);
    }
    if (keys != values) throw ConfigError("self_define_cipher: substitution table must be a permutation of its keys");
    RuleCodec c;
    c.kind = CodecKind::self_define_cipher;
    c.substitution = std::move(table);
    return c;
}

RuleCodec RuleCodec::named(std::string_view name) {
    RuleCodec c;
    if (name == "base64") c.kind = CodecKind::base64;
    else if (name == "base64_input_only") c.kind = CodecKind::base64_input_only;
    else if (name == "base64_raw") c.kind = CodecKind::base64_raw;
    else if (name == "rot13") c.kind = CodecKind::rot13;
    else if (name == "caesar") c.kind = CodecKind::caesar;
    else if (name.rfind("caesar:", 0) == 0) {
        int shift = 0;
        auto digits = name.substr(7);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), shift);
        if (ec != std::errc() || ptr != digits.data() + digits.size())
            throw ConfigError("invalid caesar shift in '" + std::string(name) + "'");
        return caesar(shift);
    } else if (name == "morse") c.kind = CodecKind::morse;
    else if (name == "ascii_decimal" || name == "ascii") c.kind = CodecKind::ascii_decimal;
    else if (name == "leetspeak") c.kind = CodecKind::leetspeak;
    else if (name == "disemvowel") c.kind = CodecKind::disemvowel;
    else if (name == "self_define_cipher") c.kind = CodecKind::self_define_cipher;
    else if (name == "payload_split") c.kind = CodecKind::payload_split;
    else throw ConfigError("unknown codec '" + std::string(name) + "'");
    return c;
}

std::vector<std::string> RuleCodec::known_names() {
    return {"base64",        "base64_input_only", "base64_raw", "rot13",
            "caesar",        "morse",             "ascii_decimal", "leetspeak",
            "disemvowel",    "self_define_cipher", "payload_split"};
}

std::string RuleCodec::name() const {
    switch (kind) {
        case CodecKind::base64: return "base64";
        case CodecKind::base64_input_only: return "base64_input_only";
        case CodecKind::base64_raw: return "base64_raw";
        case CodecKind::rot13: return "rot13";
        case CodecKind::caesar: return caesar_shift == 3 ? "caesar" : "caesar:" + std::to_string(caesar_shift);
        case CodecKind::morse: return "morse";
        case CodecKind::ascii_decimal: return "ascii_decimal";
        case CodecKind::leetspeak: return "leetspeak";
        case CodecKind::disemvowel: return "disemvowel";
        case CodecKind::self_define_cipher: return "self_define_cipher";
        case CodecKind::payload_split: return "payload_split";
    }
    return "unknown";
}

bool RuleCodec::invertible() const noexcept {
    return kind != CodecKind::disemvowel && kind != CodecKind::payload_split;
}

std::string encode(const RuleCodec& codec, std::string_view text) {
    switch (codec.kind) {
        case CodecKind::base64:
        case CodecKind::base64_input_only:
        case CodecKind::base64_raw:
            return base64_encode(text);
        case CodecKind::rot13: return shift_text(text, 13);
        case CodecKind::caesar: return shift_text(text, codec.caesar_shift);
        case CodecKind::morse: return morse_encode(text);
        case CodecKind::ascii_decimal: return ascii_encode(text);
        case CodecKind::leetspeak: {
            std::string out(text);
            for (auto& c : out)
                for (auto [plain, leet] : kLeet)
                    if (c == plain) {
                        c = leet;
                        break;
                    }
            return out;
        }
        case CodecKind::disemvowel: {
            std::string out;
            for (char c : text)
                if (!is_vowel(c)) out += c;
            return out;
        }
        case CodecKind::self_define_cipher: return substitute(text, codec.substitution, false);
        case CodecKind::payload_split: {
            std::vector<std::string> words;
            for (const auto& w : detail::split(text, ' ')) words.push_back(detail::join(split_payload_word(w, codec.split_threshold), " "));
            return detail::join(words, " ");
        }
    }
    return std::string(text);
}

std::string decode(const RuleCodec& codec, std::string_view text) {
    switch (codec.kind) {
        case CodecKind::base64:
        case CodecKind::base64_input_only:
        case CodecKind::base64_raw:
            return base64_decode(text);
        case CodecKind::rot13: return shift_text(text, 13);
        case CodecKind::caesar: return shift_text(text, -codec.caesar_shift);
        case CodecKind::morse: return morse_decode(text);
        case CodecKind::ascii_decimal: return ascii_decode(text);
        case CodecKind::leetspeak: {
            std::string out(text);
            for (auto& c : out)
                for (auto [plain, leet] : kLeet)
                    if (c == leet) {
                        c = plain;
                        break;
                    }
            return out;
        }
        case CodecKind::self_define_cipher: return substitute(text, codec.substitution, true);
        case CodecKind::disemvowel:
        case CodecKind::payload_split:
            break;
    }
    throw Error("codec " + codec.name() + " has no inverse");
}

bool in_domain(const RuleCodec& codec, std::string_view text) {
    switch (codec.kind) {
        case CodecKind::morse:
            for (char c : text)
                if (c != ' ' && (std::islower(static_cast<unsigned char>(c)) || !morse_table().count(c))) return false;
            return true;
        case CodecKind::leetspeak:
            for (char c : text)
                for (auto [plain, leet] : kLeet)
                    if (c == leet) return false;
            return true;
        case CodecKind::disemvowel:
        case CodecKind::payload_split:
            return false;
        default:
            return true;
    }
}

std::vector<std::string> split_payload_word(std::string_view word, std::size_t threshold) {
    if (word.size() < threshold || word.size() < 2) return {std::string(word)};
    const std::size_t cut = (word.size() + 1) / 2;
    return {std::string(word.substr(0, cut)), std::string(word.substr(cut))};
}

std::vector<std::string> split_payload(std::string_view text, std::size_t threshold) {
    std::vector<std::string> out;
    for (const auto& w : detail::split(text, ' '))
        for (auto& frag : split_payload_word(w, threshold)) out.push_back(std::move(frag));
    return out;
}

}  // namespace jailkit
