#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace jailkit {

class Resources;

// Word-level encryptions; the text is split on single spaces.
//   reverse     - words in reverse order
//   odd_even    - words at positions 1,3,5,... then 2,4,6,... (1-based)
//   length      - JSON list of [word, original_index], stably sorted by length
//   binary_tree - JSON tree {"value","left","right"}; the root of a span of n
//                 words is its word at 0-based index ceil(n/2)-1, and an
//                 in-order traversal restores the order
enum class EncryptionKind { binary_tree, length, reverse, odd_even };

EncryptionKind encryption_kind_from_string(std::string_view s);
std::string_view to_string(EncryptionKind k);
std::vector<EncryptionKind> all_encryption_kinds();

std::string code_encrypt(EncryptionKind kind, std::string_view text);

// Throws CodecError on malformed structure.
std::string code_decrypt(EncryptionKind kind, std::string_view structured);

// Problem-solving framing + the decryption routine for `kind` + the encrypted
// text. The clear text never appears verbatim unless the encryption leaves it
// unchanged (e.g. a one-word input).
std::string codechameleon_prompt(EncryptionKind kind, std::string_view text, const Resources& resources);

}  // namespace jailkit
