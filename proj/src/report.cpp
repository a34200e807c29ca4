#include "jailkit/report.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "jailkit/error.hpp"

namespace jailkit {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

std::size_t AttackReport::total_target_calls() const noexcept {
    std::size_t n = 0;
    for (const auto& r : per_query) n += r.attempts;
    return n;
}

std::size_t AttackReport::errored_queries() const noexcept {
    std::size_t n = 0;
    for (const auto& r : per_query) n += r.errored ? 1 : 0;
    return n;
}

double compute_asr(std::span<const QueryRecord> records) {
    if (records.empty()) throw Error("compute_asr: no query records");
    std::set<std::string> seen;
    std::size_t successes = 0;
    for (const auto& r : records) {
        if (!seen.insert(r.query_id).second)
            throw Error("compute_asr: query '" + r.query_id + "' appears more than once");
        if (r.succeeded()) ++successes;
    }
    return static_cast<double>(successes) / static_cast<double>(records.size());
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
    return buf;
}

ojson to_json(const EvalResult& eval) {
    ojson j;
    j["verdict"] = to_string(eval.verdict);
    j["score"] = eval.score ? ojson(*eval.score) : ojson(nullptr);
    j["evaluator"] = eval.evaluator_name;
    j["raw_judge_output"] = eval.raw_judge_output ? ojson(*eval.raw_judge_output) : ojson(nullptr);
    j["probability"] = eval.probability ? ojson(*eval.probability) : ojson(nullptr);
    j["warnings"] = eval.warnings;
    return j;
}

EvalResult eval_from_json(const json& j) {
    EvalResult e;
    e.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    if (!j.at("score").is_null()) e.score = j.at("score").get<int>();
    e.evaluator_name = j.at("evaluator").get<std::string>();
    if (!j.at("raw_judge_output").is_null()) e.raw_judge_output = j.at("raw_judge_output").get<std::string>();
    if (j.contains("probability") && !j.at("probability").is_null())
        e.probability = j.at("probability").get<double>();
    if (j.contains("warnings")) e.warnings = j.at("warnings").get<std::vector<std::string>>();
    return e;
}

ojson to_json(const Instance& inst) {
    ojson j;
    j["query_id"] = inst.query.id;
    j["query"] = inst.query.text;
    j["reference_response"] =
        inst.query.reference_response ? ojson(*inst.query.reference_response) : ojson(nullptr);
    j["round"] = inst.round;
    j["seed_id"] = inst.seed_id ? ojson(*inst.seed_id) : ojson(nullptr);
    j["mutation_trace"] = inst.mutation_trace;
    j["jailbreak_prompt"] = inst.jailbreak_prompt;
    j["responses"] = inst.responses;
    j["eval"] = inst.eval ? to_json(*inst.eval) : ojson(nullptr);
    j["flags"] = inst.flags;
    return j;
}

Instance instance_from_json(const json& j) {
    Instance inst;
    inst.query.id = j.at("query_id").get<std::string>();
    inst.query.text = j.at("query").get<std::string>();
    if (!j.at("reference_response").is_null())
        inst.query.reference_response = j.at("reference_response").get<std::string>();
    inst.round = j.at("round").get<std::size_t>();
    if (!j.at("seed_id").is_null()) inst.seed_id = j.at("seed_id").get<SeedId>();
    inst.mutation_trace = j.at("mutation_trace").get<std::vector<std::string>>();
    inst.jailbreak_prompt = j.at("jailbreak_prompt").get<std::string>();
    inst.responses = j.at("responses").get<std::vector<std::string>>();
    if (!j.at("eval").is_null()) inst.eval = eval_from_json(j.at("eval"));
    if (j.contains("flags")) inst.flags = j.at("flags").get<std::vector<std::string>>();
    return inst;
}

ojson report_to_json(const AttackReport& report, bool include_timing) {
    ojson j;
    j["schema_version"] = report.schema_version;
    j["recipe"] = report.recipe;
    j["dataset"] = report.dataset_name;
    j["asr"] = report.asr;
    j["rng_seed"] = report.rng_seed;
    j["aborted"] = report.aborted;
    j["total_target_calls"] = report.total_target_calls();
    j["mean_response_perplexity"] =
        report.mean_response_perplexity ? ojson(*report.mean_response_perplexity) : ojson(nullptr);
    j["timing"] = ojson{{"wall_seconds", include_timing ? report.timing_seconds : 0.0}};
    j["config_snapshot"] = report.config_snapshot;
    ojson rows = ojson::array();
    for (const auto& r : report.per_query) {
        ojson row;
        row["query_id"] = r.query_id;
        row["query"] = r.query_text;
        row["attempts"] = r.attempts;
        row["first_success_round"] = r.first_success_round ? ojson(*r.first_success_round) : ojson(nullptr);
        row["errored"] = r.errored;
        row["error"] = r.error ? ojson(*r.error) : ojson(nullptr);
        row["best_instance"] = r.best_instance ? to_json(*r.best_instance) : ojson(nullptr);
        ojson instances = ojson::array();
        for (const auto& inst : r.instances) instances.push_back(to_json(inst));
        row["instances"] = std::move(instances);
        rows.push_back(std::move(row));
    }
    j["per_query"] = std::move(rows);
    return j;
}

AttackReport report_from_json(const json& j) {
    AttackReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion)
        throw Error("unsupported report schema_version " + std::to_string(r.schema_version));
    r.recipe = j.at("recipe").get<std::string>();
    r.dataset_name = j.at("dataset").get<std::string>();
    r.asr = j.at("asr").get<double>();
    r.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    r.aborted = j.at("aborted").get<bool>();
    if (!j.at("mean_response_perplexity").is_null())
        r.mean_response_perplexity = j.at("mean_response_perplexity").get<double>();
    r.timing_seconds = j.at("timing").at("wall_seconds").get<double>();
    r.config_snapshot = ojson::parse(j.at("config_snapshot").dump());
    for (const auto& row : j.at("per_query")) {
        QueryRecord q;
        q.query_id = row.at("query_id").get<std::string>();
        q.query_text = row.at("query").get<std::string>();
        q.attempts = row.at("attempts").get<std::size_t>();
        if (!row.at("first_success_round").is_null())
            q.first_success_round = row.at("first_success_round").get<std::size_t>();
        q.errored = row.at("errored").get<bool>();
        if (!row.at("error").is_null()) q.error = row.at("error").get<std::string>();
        if (!row.at("best_instance").is_null()) q.best_instance = instance_from_json(row.at("best_instance"));
        for (const auto& inst : row.at("instances")) q.instances.push_back(instance_from_json(inst));
        r.per_query.push_back(std::move(q));
    }
    return r;
}

std::string report_to_markdown(const AttackReport& report) {
    std::ostringstream md;
    md << "# Attack report: " << report.recipe << "\n\n";
    md << "- Dataset: " << report.dataset_name << " (" << report.per_query.size() << " queries)\n";
    md << "- ASR: " << format_percent(report.asr) << "\n";
    md << "- Target calls: " << report.total_target_calls() << "\n";
    if (report.mean_response_perplexity) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", *report.mean_response_perplexity);
        md << "- Mean response perplexity: " << buf << "\n";
    }
    md << "- RNG seed: " << report.rng_seed << "\n";
    if (report.aborted) md << "- Run ABORTED: too many queries errored\n";
    md << "\n| query | attempts | first success round | status |\n";
    md << "|---|---|---|---|\n";
    for (const auto& r : report.per_query) {
        md << "| " << r.query_id << " | " << r.attempts << " | "
           << (r.first_success_round ? std::to_string(*r.first_success_round) : "-") << " | "
           << (r.errored ? "error" : (r.succeeded() ? "jailbroken" : "held")) << " |\n";
    }
    return md.str();
}

std::vector<std::filesystem::path> emit_report(const AttackReport& report, std::span<const ReportFormat> formats,
                                               const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create report directory " + out_dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    for (auto fmt : formats) {
        auto path = out_dir / (fmt == ReportFormat::json ? "report.json" : "report.md");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path.string());
        if (fmt == ReportFormat::json)
            out << report_to_json(report).dump(2) << "\n";
        else
            out << report_to_markdown(report);
        if (!out) throw Error("failed writing " + path.string());
        written.push_back(path);
    }
    return written;
}

}  // namespace jailkit
