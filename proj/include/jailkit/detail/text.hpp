#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jailkit::detail {

std::string to_lower(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);
bool starts_with_ci(std::string_view s, std::string_view prefix);

std::string_view trim(std::string_view s);
std::string_view trim_left(std::string_view s);
std::string_view trim_right(std::string_view s);

// Splits on every occurrence of `sep`; adjacent separators yield empty pieces.
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string replace_all(std::string_view s, std::string_view from, std::string_view to);
std::size_t count_occurrences(std::string_view s, std::string_view needle);

// Replaces "[NAME]" slots of `tmpl` in one left-to-right pass; inserted text
// is never rescanned, and slots not listed are left as they are.
std::string fill_slots(std::string_view tmpl,
                       std::initializer_list<std::pair<std::string_view, std::string_view>> slots);

// Lower-cased runs of [A-Za-z0-9'-]; everything else separates.
std::vector<std::string> word_tokens(std::string_view s);

// Whitespace tokenization used by the mock log-prob backend and the
// backend perplexity mode.
std::vector<std::string> whitespace_tokens(std::string_view s);

}  // namespace jailkit::detail
