#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "jailkit/core.hpp"

namespace jailkit {

inline constexpr int kReportSchemaVersion = 1;

struct QueryRecord {
    std::string query_id;
    std::string query_text;
    std::size_t attempts = 0;  // target calls spent on this query
    std::optional<std::size_t> first_success_round;
    std::optional<Instance> best_instance;
    std::vector<Instance> instances;
    bool errored = false;
    std::optional<std::string> error;

    bool succeeded() const noexcept { return first_success_round.has_value(); }
};

struct AttackReport {
    int schema_version = kReportSchemaVersion;
    std::string recipe;
    std::string dataset_name;
    double asr = 0.0;
    std::vector<QueryRecord> per_query;
    std::optional<double> mean_response_perplexity;
    nlohmann::ordered_json config_snapshot = nlohmann::ordered_json::object();
    double timing_seconds = 0.0;
    std::uint64_t rng_seed = 0;
    bool aborted = false;

    std::size_t total_target_calls() const noexcept;
    std::size_t errored_queries() const noexcept;
};

// Fraction of queries with at least one success. Throws on empty input or a
// query id that appears more than once.
double compute_asr(std::span<const QueryRecord> records);

nlohmann::ordered_json to_json(const Instance& instance);
Instance instance_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const EvalResult& eval);
EvalResult eval_from_json(const nlohmann::json& j);

// Stable field order. With include_timing = false the timing field is
// written as 0 so two runs of the same configuration compare byte-equal.
nlohmann::ordered_json report_to_json(const AttackReport& report, bool include_timing = true);
AttackReport report_from_json(const nlohmann::json& j);

std::string report_to_markdown(const AttackReport& report);

enum class ReportFormat { json, markdown };

// Writes report.json and/or report.md into out_dir (created if missing).
std::vector<std::filesystem::path> emit_report(const AttackReport& report, std::span<const ReportFormat> formats,
                                               const std::filesystem::path& out_dir);

// Percentage with one decimal, e.g. 0.4 -> "40.0%".
std::string format_percent(double fraction);

}  // namespace jailkit
