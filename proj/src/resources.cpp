#include "jailkit/resources.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include "jailkit/detail/text.hpp"
#include "jailkit/error.hpp"

namespace jailkit::detail {
extern const std::pair<std::string_view, std::string_view> kEmbeddedResources[];
extern const std::size_t kEmbeddedResourceCount;
}  // namespace jailkit::detail

namespace jailkit {

namespace {

std::optional<std::string_view> find_embedded(std::string_view name) {
    for (std::size_t i = 0; i < detail::kEmbeddedResourceCount; ++i)
        if (detail::kEmbeddedResources[i].first == name) return detail::kEmbeddedResources[i].second;
    return std::nullopt;
}

}  // namespace

Resources::Resources(std::filesystem::path override_dir) : override_dir_(std::move(override_dir)) {
    if (!std::filesystem::is_directory(*override_dir_))
        throw ConfigError("templates directory does not exist: " + override_dir_->string());
}

const Resources& Resources::builtin() {
    static const Resources instance;
    return instance;
}

bool Resources::has(std::string_view name) const {
    if (override_dir_ && std::filesystem::exists(*override_dir_ / (std::string(name) + ".txt"))) return true;
    return find_embedded(name).has_value();
}

std::string Resources::get(std::string_view name) const {
    if (override_dir_) {
        auto path = *override_dir_ / (std::string(name) + ".txt");
        if (std::filesystem::exists(path)) {
            std::ifstream in(path, std::ios::binary);
            std::ostringstream buf;
            buf << in.rdbuf();
            return buf.str();
        }
    }
    if (auto text = find_embedded(name)) return std::string(*text);
    throw ConfigError("unknown resource '" + std::string(name) + "'");
}

std::vector<std::string> Resources::lines(std::string_view name) const {
    std::vector<std::string> out;
    for (const auto& line : detail::split(get(name), '\n')) {
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        out.emplace_back(t);
    }
    return out;
}

std::vector<std::string> Resources::blocks(std::string_view name) const {
    std::vector<std::string> out;
    std::string cur;
    for (const auto& line : detail::split(get(name), '\n')) {
        if (detail::trim(line) == "---") {
            if (!detail::trim(cur).empty()) out.emplace_back(detail::trim(cur));
            cur.clear();
            continue;
        }
        cur += line;
        cur += '\n';
    }
    if (!detail::trim(cur).empty()) out.emplace_back(detail::trim(cur));
    return out;
}

std::vector<std::string> Resources::builtin_names() {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < detail::kEmbeddedResourceCount; ++i)
        names.emplace_back(detail::kEmbeddedResources[i].first);
    return names;
}

}  // namespace jailkit
