#include "jailkit/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "jailkit/codechameleon.hpp"
#include "jailkit/codecs.hpp"
#include "jailkit/dataset.hpp"
#include "jailkit/detail/text.hpp"
#include "jailkit/engine.hpp"
#include "jailkit/error.hpp"
#include "jailkit/mock_models.hpp"
#include "jailkit/openai_client.hpp"
#include "jailkit/report.hpp"
#include "jailkit/resources.hpp"
#include "jailkit/trace.hpp"

namespace jailkit {

namespace {

// Exit code for configuration problems, distinct from run failures.
class UsageError : public Error {
public:
    using Error::Error;
};

void use_stderr_logger() {
    static const bool once = [] {
        auto logger = spdlog::stderr_color_mt("jailkit");
        spdlog::set_default_logger(logger);
        return true;
    }();
    (void)once;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- attack -----------------------------------------------------------------------

// Keys of the attack subcommand that are not recipe knobs.
const std::vector<std::string>& run_keys() {
    static const std::vector<std::string> keys = {
        "recipe",     "dataset",   "format",    "target-url", "target-model", "target-mock",
        "attack-url", "attack-model", "attack-mock", "eval-url", "eval-model", "eval-mock",
        "api-key-env", "out",      "trace",     "templates",  "report-format", "serial"};
    return keys;
}

struct AttackFlags {
    std::map<std::string, std::string> values;  // flag name -> text, from the command line only
    std::vector<std::string> sets;              // --set key=value
    std::string config_file;
};

bool truthy(const std::map<std::string, std::string>& m, const std::string& key) {
    auto it = m.find(key);
    if (it == m.end()) return false;
    const auto v = detail::to_lower(detail::trim(it->second));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) return false;
    throw ConfigError(key + ": expected true or false, got '" + it->second + "'");
}

std::string value_or(const std::map<std::string, std::string>& m, const std::string& key, std::string fallback) {
    auto it = m.find(key);
    return it == m.end() ? fallback : it->second;
}

std::shared_ptr<ModelBackend> remote_backend(const std::map<std::string, std::string>& m, const std::string& role,
                                             const std::shared_ptr<TraceSink>& trace) {
    OpenAIClientConfig cfg;
    cfg.base_url = m.at(role + "-url");
    cfg.model = value_or(m, role + "-model", "");
    if (cfg.model.empty()) throw ConfigError("--" + role + "-url needs --" + role + "-model");
    const auto key_var = value_or(m, "api-key-env", "EJ_API_KEY");
    if (const char* key = std::getenv(key_var.c_str())) cfg.api_key = key;
    cfg.trace = trace;
    return std::make_shared<OpenAICompatibleClient>(cfg);
}

DatasetFormat infer_format(const std::map<std::string, std::string>& m, const std::string& path) {
    if (auto it = m.find("format"); it != m.end()) {
        const auto f = detail::trim(it->second);
        if (f == "csv") return DatasetFormat::advbench_csv;
        return dataset_format_from_string(f);
    }
    return path.ends_with(".csv") ? DatasetFormat::advbench_csv : DatasetFormat::jsonl;
}

int run_attack_command(const AttackFlags& flags, const std::string& usage, std::ostream& out, std::ostream& err) {
    // Config file first, explicit flags on top.
    std::map<std::string, std::string> m;
    if (!flags.config_file.empty()) m = parse_flat_config(read_file(flags.config_file));
    for (const auto& [k, v] : flags.values) m[k] = v;

    const auto knob_keys = RecipeConfig::settable_keys();
    for (const auto& [k, v] : m) {
        const bool known = std::find(run_keys().begin(), run_keys().end(), k) != run_keys().end() ||
                           std::find(knob_keys.begin(), knob_keys.end(), k) != knob_keys.end();
        if (!known) throw ConfigError("unknown configuration key '" + k + "'");
    }

    const auto dataset_path = value_or(m, "dataset", "");
    if (dataset_path.empty()) {
        err << "error: --dataset is required\n\n" << usage;
        return 2;
    }

    const Resources resources = m.count("templates") ? Resources(m.at("templates")) : Resources();
    auto config = RecipeConfig::preset(value_or(m, "recipe", "direct"));
    for (const auto& [k, v] : m)
        if (std::find(knob_keys.begin(), knob_keys.end(), k) != knob_keys.end()) config.set(k, v);
    for (const auto& kv : flags.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        config.set(detail::trim(std::string_view(kv).substr(0, eq)), std::string_view(kv).substr(eq + 1));
    }
    config.validate();

    std::shared_ptr<TraceSink> trace;
    if (m.count("trace")) trace = std::make_shared<TraceSink>(m.at("trace"));

    Backends backends = Backends::offline(resources);
    const bool target_mock = truthy(m, "target-mock");
    const bool target_url = m.count("target-url") > 0;
    if (target_mock == target_url) throw ConfigError("choose exactly one of --target-url and --target-mock");
    if (target_url) backends.target = remote_backend(m, "target", trace);
    if (m.count("attack-url")) {
        if (truthy(m, "attack-mock")) throw ConfigError("choose one of --attack-url and --attack-mock");
        backends.attack = remote_backend(m, "attack", trace);
    }
    if (m.count("eval-url")) {
        if (truthy(m, "eval-mock")) throw ConfigError("choose one of --eval-url and --eval-mock");
        backends.eval = remote_backend(m, "eval", trace);
    }

    const auto dataset = load_dataset(dataset_path, infer_format(m, dataset_path));

    EngineOptions opts;
    opts.execution = truthy(m, "serial") ? Execution::serial : Execution::parallel;
    opts.resources = &resources;
    opts.trace = trace;
    const auto report = run_recipe(config, dataset, backends, opts);

    std::vector<ReportFormat> formats;
    for (const auto& f : detail::split(value_or(m, "report-format", "json,markdown"), ',')) {
        const auto t = detail::trim(f);
        if (t == "json") formats.push_back(ReportFormat::json);
        else if (t == "markdown" || t == "md") formats.push_back(ReportFormat::markdown);
        else if (!t.empty()) throw ConfigError("unknown report format '" + std::string(t) + "'");
    }
    const auto files = emit_report(report, formats, value_or(m, "out", "jailkit-out"));

    out << "recipe " << report.recipe << " on " << report.dataset_name << ": ASR " << format_percent(report.asr)
        << " over " << report.per_query.size() << " queries, " << report.total_target_calls() << " target calls\n";
    for (const auto& f : files) out << "wrote " << f.string() << "\n";
    if (report.aborted) {
        err << "run aborted: " << report.errored_queries() << " queries errored\n";
        return 1;
    }
    return 0;
}

// --- codecs ------------------------------------------------------------------------

int run_codecs_command(const std::string& name, const std::optional<std::string>& encode_text,
                       const std::optional<std::string>& decode_text, std::ostream& out) {
    if (encode_text.has_value() == decode_text.has_value())
        throw UsageError("give exactly one of --encode and --decode");
    if (name.starts_with("codechameleon:")) {
        const auto kind = encryption_kind_from_string(std::string_view(name).substr(14));
        out << (encode_text ? code_encrypt(kind, *encode_text) : code_decrypt(kind, *decode_text)) << "\n";
        return 0;
    }
    const auto codec = RuleCodec::named(name);
    out << (encode_text ? encode(codec, *encode_text) : decode(codec, *decode_text)) << "\n";
    return 0;
}

// --- report ------------------------------------------------------------------------

int run_report_command(const std::string& trace_path, std::ostream& out) {
    std::ifstream in(trace_path);
    if (!in) throw ConfigError("cannot read trace " + trace_path);
    std::vector<std::string> order;
    std::map<std::string, bool> success;
    std::size_t instances = 0, undetermined = 0, successes = 0;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DatasetError(std::string("malformed trace line: ") + e.what(), row);
        }
        if (j.value("type", "") != "instance") continue;
        const auto inst = instance_from_json(j.at("instance"));
        const auto id = j.at("query_id").get<std::string>();
        if (!success.count(id)) {
            order.push_back(id);
            success[id] = false;
        }
        ++instances;
        if (inst.eval && inst.eval->verdict == Verdict::undetermined) ++undetermined;
        if (inst.eval && inst.eval->succeeded()) {
            ++successes;
            success[id] = true;
        }
    }
    if (order.empty()) throw DatasetError("trace holds no instance records");
    std::size_t succeeded_queries = 0;
    for (const auto& id : order) succeeded_queries += success[id] ? 1 : 0;
    nlohmann::ordered_json summary;
    summary["queries"] = order.size();
    summary["succeeded_queries"] = succeeded_queries;
    summary["asr"] = static_cast<double>(succeeded_queries) / static_cast<double>(order.size());
    summary["instances"] = instances;
    summary["successful_instances"] = successes;
    summary["undetermined_instances"] = undetermined;
    out << summary.dump(2) << "\n";
    return 0;
}

// --- selftest ----------------------------------------------------------------------

int run_selftest_command(std::ostream& out) {
    const auto& res = Resources::builtin();
    const auto dataset = parse_dataset(res.get("selftest_dataset"), DatasetFormat::advbench_csv, "selftest");
    std::size_t failures = 0;
    auto check = [&](const std::string& name, bool ok) {
        out << (ok ? "PASS " : "FAIL ") << name << "\n";
        failures += ok ? 0 : 1;
    };
    auto run = [&](RecipeConfig cfg, Execution exec) {
        cfg.budget.rng_seed = 7;
        auto backends = Backends::offline(res);
        EngineOptions opts;
        opts.execution = exec;
        return run_recipe(cfg, dataset, backends, opts);
    };

    check("codec base64 \"Hi\" -> \"SGk=\"", encode(RuleCodec::named("base64"), "Hi") == "SGk=");
    check("codec morse \"SOS\" -> \"... --- ...\"", encode(RuleCodec::named("morse"), "SOS") == "... --- ...");
    check("codec caesar(3) \"abz\" -> \"dec\"", encode(RuleCodec::caesar(3), "abz") == "dec");
    check("codec rot13 \"Attack\" -> \"Nggnpx\"", encode(RuleCodec::named("rot13"), "Attack") == "Nggnpx");

    const auto direct = run(RecipeConfig::preset("direct"), Execution::parallel);
    check("direct query baseline ASR 0.0", direct.asr == 0.0);

    auto jb_cfg = RecipeConfig::preset("jailbroken");
    jb_cfg.budget.max_rounds = 1;
    const auto jb = run(jb_cfg, Execution::parallel);
    check("jailbroken ASR 1.0", jb.asr == 1.0);
    bool twelve = true;
    for (const auto& q : jb.per_query) twelve = twelve && q.attempts == 12;
    check("jailbroken issues 12 target calls per query", twelve);

    auto ica_cfg = RecipeConfig::preset("ica");
    ica_cfg.knobs.ica_k = 0;
    check("ica with k=0 ASR 0.0", run(ica_cfg, Execution::parallel).asr == 0.0);

    const auto again = run(jb_cfg, Execution::serial);
    check("jailbroken report byte-identical across runs (serial vs parallel)",
          report_to_json(jb, false).dump() == report_to_json(again, false).dump());

    out << (failures == 0 ? "selftest passed" : "selftest FAILED") << "\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace

std::map<std::string, std::string> parse_flat_config(std::string_view text) {
    std::map<std::string, std::string> out;
    std::size_t line_no = 0;
    for (const auto& raw : detail::split(text, '\n')) {
        ++line_no;
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        auto key = std::string(detail::trim(line.substr(0, eq)));
        if (key.starts_with("--")) key = key.substr(2);
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (!out.emplace(key, std::string(detail::trim(line.substr(eq + 1)))).second)
            throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key + "' repeated");
    }
    return out;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    use_stderr_logger();

    CLI::App app{"Compose and run jailbreak attack recipes against chat models"};
    app.name(args.empty() ? "jailkit" : args.front());
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

    // attack
    auto* attack = app.add_subcommand("attack", "Run a recipe over a dataset and write the report");
    AttackFlags flags;
    std::map<std::string, CLI::Option*> opts;
    std::map<std::string, std::string> texts;
    std::set<std::string> flag_keys;
    auto text_opt = [&](const std::string& key, const std::string& help) {
        opts[key] = attack->add_option("--" + key, texts[key], help);
    };
    auto flag_opt = [&](const std::string& key, const std::string& help) {
        opts[key] = attack->add_flag("--" + key, help);
        flag_keys.insert(key);
    };
    text_opt("recipe", "Recipe preset (" + detail::join(recipe_names(), ", ") + ")");
    text_opt("dataset", "Dataset file (AdvBench CSV or JSONL)");
    text_opt("format", "advbench_csv (or csv) or jsonl; inferred from the extension by default");
    text_opt("target-url", "OpenAI-compatible base URL of the target model");
    text_opt("target-model", "Model name sent to the target endpoint");
    flag_opt("target-mock", "Use the built-in mock victim as target");
    text_opt("attack-url", "OpenAI-compatible base URL of the attack model");
    text_opt("attack-model", "Model name sent to the attack endpoint");
    flag_opt("attack-mock", "Use the built-in echo mock as attack model (default)");
    text_opt("eval-url", "OpenAI-compatible base URL of the judge model");
    text_opt("eval-model", "Model name sent to the judge endpoint");
    flag_opt("eval-mock", "Use the built-in mock judge (default)");
    text_opt("api-key-env", "Environment variable holding the API key (default EJ_API_KEY)");
    text_opt("budget-queries", "Maximum target calls per query");
    text_opt("budget-rounds", "Maximum attack rounds per query");
    text_opt("rng-seed", "Seed of every random choice in the run");
    text_opt("out", "Report directory (default jailkit-out)");
    text_opt("trace", "Write a JSONL trace of requests and instances to this file");
    text_opt("templates", "Directory of <name>.txt files overriding built-in templates");
    text_opt("report-format", "Comma-separated: json, markdown");
    flag_opt("serial", "Run queries one after another instead of in parallel");
    attack->add_option("--config", flags.config_file, "Flat key = value file; explicit flags take precedence");
    attack->add_option("--set", flags.sets, "Override any recipe knob, e.g. --set tap-depth=3")->take_all();

    // codecs
    auto* codecs = app.add_subcommand("codecs", "Encode or decode one string with a named codec");
    std::string codec_name;
    std::optional<std::string> encode_text, decode_text;
    codecs->add_option("--name", codec_name,
                       "Codec: " + detail::join(RuleCodec::known_names(), ", ") +
                           ", or codechameleon:<reverse|odd_even|length|binary_tree>")
        ->required();
    codecs->add_option("--encode", encode_text, "Text to encode");
    codecs->add_option("--decode", decode_text, "Text to decode");

    // report
    auto* report = app.add_subcommand("report", "Recompute success metrics from a trace file");
    std::string trace_path;
    report->add_option("--trace", trace_path, "JSONL trace written by `attack --trace`")->required();

    // selftest
    auto* selftest = app.add_subcommand("selftest", "Run the offline mock-victim golden suite");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("jailkit");
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    const auto level = spdlog::level::from_str(log_level);
    if (level == spdlog::level::off && log_level != "off") {
        err << "error: unknown log level '" << log_level << "'\n";
        return 2;
    }
    spdlog::set_level(level);

    try {
        if (attack->parsed()) {
            for (const auto& [key, opt] : opts)
                if (opt->count() > 0) flags.values[key] = flag_keys.count(key) ? "true" : texts[key];
            return run_attack_command(flags, attack->help(), out, err);
        }
        if (codecs->parsed()) return run_codecs_command(codec_name, encode_text, decode_text, out);
        if (report->parsed()) return run_report_command(trace_path, out);
        if (selftest->parsed()) return run_selftest_command(out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const CapabilityError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const DatasetError& e) {
        err << "dataset error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace jailkit
