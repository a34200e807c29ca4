#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "jailkit/core.hpp"

namespace jailkit {

enum class DatasetFormat { advbench_csv, jsonl };

DatasetFormat dataset_format_from_string(std::string_view s);
std::string_view to_string(DatasetFormat f);

struct JailbreakDataset {
    std::string name;
    std::vector<Query> queries;

    std::size_t size() const noexcept { return queries.size(); }
    bool empty() const noexcept { return queries.empty(); }

    // Throws DatasetError on an empty dataset, empty query text or duplicate ids.
    void validate() const;
};

// AdvBench-style CSV: header row naming `goal` and `target` (an optional `id`
// column is honoured). JSONL: one object per line with `query`, optional
// `reference_response` and `id`. Missing ids become zero-padded row indices.
JailbreakDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
JailbreakDataset parse_dataset(std::string_view content, DatasetFormat format, std::string name);

void save_dataset(const JailbreakDataset& dataset, const std::filesystem::path& path, DatasetFormat format);
std::string serialize_dataset(const JailbreakDataset& dataset, DatasetFormat format);

// "000", "001", ... ; widens past three digits when the dataset needs it.
std::string default_query_id(std::size_t index, std::size_t dataset_size);

}  // namespace jailkit
