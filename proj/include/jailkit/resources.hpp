#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jailkit {

// Text resources (mutation templates, judge prompts, refusal patterns, seed
// templates) keyed by name. Built-in copies are compiled in from
// resources/*.txt; a templates directory holding `<name>.txt` files takes
// precedence when set.
class Resources {
public:
    Resources() = default;
    explicit Resources(std::filesystem::path override_dir);

    static const Resources& builtin();

    bool has(std::string_view name) const;
    // Throws ConfigError for unknown names.
    std::string get(std::string_view name) const;

    // Non-empty lines of a resource, skipping lines that start with '#'.
    std::vector<std::string> lines(std::string_view name) const;

    // Blocks separated by lines consisting of "---".
    std::vector<std::string> blocks(std::string_view name) const;

    static std::vector<std::string> builtin_names();

    const std::optional<std::filesystem::path>& override_dir() const noexcept { return override_dir_; }

private:
    std::optional<std::filesystem::path> override_dir_;
};

}  // namespace jailkit
