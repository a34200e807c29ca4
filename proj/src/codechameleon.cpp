#include "jailkit/codechameleon.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "jailkit/detail/text.hpp"
#include "jailkit/error.hpp"
#include "jailkit/resources.hpp"

namespace jailkit {

namespace {

using ojson = nlohmann::ordered_json;

ojson build_tree(const std::vector<std::string>& words, std::size_t lo, std::size_t hi) {
    if (lo >= hi) return nullptr;
    const std::size_t n = hi - lo;
    const std::size_t mid = lo + (n + 1) / 2 - 1;
    ojson node;
    node["value"] = words[mid];
    node["left"] = build_tree(words, lo, mid);
    node["right"] = build_tree(words, mid + 1, hi);
    return node;
}

void inorder(const ojson& node, std::vector<std::string>& out, std::size_t depth) {
    if (node.is_null()) return;
    if (depth > 10000) throw CodecError("binary_tree: structure too deep", 0);
    if (!node.is_object() || !node.contains("value") || !node.contains("left") || !node.contains("right") ||
        !node["value"].is_string())
        throw CodecError("binary_tree: node needs string 'value' and 'left'/'right' children", 0);
    inorder(node["left"], out, depth + 1);
    out.push_back(node["value"].get<std::string>());
    inorder(node["right"], out, depth + 1);
}

ojson parse_structure(std::string_view text) {
    try {
        return ojson::parse(text);
    } catch (const ojson::parse_error& e) {
        throw CodecError(std::string("malformed JSON structure: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
    }
}

std::string dump(const ojson& j) {
    try {
        return j.dump();
    } catch (const ojson::type_error& e) {
        throw CodecError(std::string("cannot serialize text: ") + e.what(), 0);
    }
}

}  // namespace

EncryptionKind encryption_kind_from_string(std::string_view s) {
    if (s == "binary_tree") return EncryptionKind::binary_tree;
    if (s == "length") return EncryptionKind::length;
    if (s == "reverse") return EncryptionKind::reverse;
    if (s == "odd_even") return EncryptionKind::odd_even;
    throw ConfigError("unknown encryption kind '" + std::string(s) + "'");
}

std::string_view to_string(EncryptionKind k) {
    switch (k) {
        case EncryptionKind::binary_tree: return "binary_tree";
        case EncryptionKind::length: return "length";
        case EncryptionKind::reverse: return "reverse";
        case EncryptionKind::odd_even: return "odd_even";
    }
    return "reverse";
}

std::vector<EncryptionKind> all_encryption_kinds() {
    return {EncryptionKind::binary_tree, EncryptionKind::length, EncryptionKind::reverse, EncryptionKind::odd_even};
}

std::string code_encrypt(EncryptionKind kind, std::string_view text) {
    auto words = detail::split(text, ' ');
    switch (kind) {
        case EncryptionKind::reverse:
            std::reverse(words.begin(), words.end());
            return detail::join(words, " ");
        case EncryptionKind::odd_even: {
            std::vector<std::string> out;
            for (std::size_t i = 0; i < words.size(); i += 2) out.push_back(words[i]);
            for (std::size_t i = 1; i < words.size(); i += 2) out.push_back(words[i]);
            return detail::join(out, " ");
        }
        case EncryptionKind::length: {
            std::vector<std::size_t> order(words.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return words[a].size() < words[b].size(); });
            ojson list = ojson::array();
            for (std::size_t i : order) list.push_back(ojson::array({words[i], i}));
            return dump(list);
        }
        case EncryptionKind::binary_tree:
            return dump(build_tree(words, 0, words.size()));
    }
    return std::string(text);
}

std::string code_decrypt(EncryptionKind kind, std::string_view structured) {
    switch (kind) {
        case EncryptionKind::reverse: {
            auto words = detail::split(structured, ' ');
            std::reverse(words.begin(), words.end());
            return detail::join(words, " ");
        }
        case EncryptionKind::odd_even: {
            const auto words = detail::split(structured, ' ');
            const std::size_t half = (words.size() + 1) / 2;
            std::vector<std::string> out(words.size());
            for (std::size_t i = 0; i < words.size(); ++i) out[i] = i % 2 == 0 ? words[i / 2] : words[half + i / 2];
            return detail::join(out, " ");
        }
        case EncryptionKind::length: {
            const auto list = parse_structure(structured);
            if (!list.is_array() || list.empty()) throw CodecError("length: expected a non-empty JSON list", 0);
            std::vector<std::string> words(list.size());
            std::vector<bool> filled(list.size(), false);
            for (std::size_t k = 0; k < list.size(); ++k) {
                const auto& pair = list[k];
                if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_number_unsigned())
                    throw CodecError("length: entry " + std::to_string(k) + " is not [word, index]", k);
                const auto index = pair[1].get<std::size_t>();
                if (index >= words.size() || filled[index])
                    throw CodecError("length: index " + std::to_string(index) + " out of range or repeated", k);
                words[index] = pair[0].get<std::string>();
                filled[index] = true;
            }
            return detail::join(words, " ");
        }
        case EncryptionKind::binary_tree: {
            const auto root = parse_structure(structured);
            if (root.is_null()) throw CodecError("binary_tree: empty tree", 0);
            std::vector<std::string> words;
            inorder(root, words, 0);
            return detail::join(words, " ");
        }
    }
    return std::string(structured);
}

std::string codechameleon_prompt(EncryptionKind kind, std::string_view text, const Resources& resources) {
    const auto frame = resources.get("codechameleon_frame");
    const auto decrypt_fn = resources.get("codechameleon_decrypt_" + std::string(to_string(kind)));
    const auto encrypted = code_encrypt(kind, text);
    return detail::fill_slots(frame, {{"DECRYPTION_FUNCTION", detail::trim(decrypt_fn)}, {"ENCRYPTED", encrypted}});
}

}  // namespace jailkit
