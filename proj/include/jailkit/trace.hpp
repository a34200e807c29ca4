#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace jailkit {

// Append-only JSONL sink shared by backends and the engine. Writes are
// serialized; each record is one line.
class TraceSink {
public:
    TraceSink() = default;  // in-memory only
    explicit TraceSink(const std::filesystem::path& path);

    void write(const nlohmann::ordered_json& record);

    // Records kept in memory (always, so tests can inspect them).
    std::vector<std::string> lines() const;

private:
    mutable std::mutex mu_;
    std::ofstream out_;
    std::vector<std::string> lines_;
};

}  // namespace jailkit
