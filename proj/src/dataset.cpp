#include "jailkit/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "jailkit/detail/text.hpp"
#include "jailkit/error.hpp"

namespace jailkit {

namespace {

using json = nlohmann::json;

struct CsvRecord {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based line where the record starts
};

// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
// newlines.
std::vector<CsvRecord> read_csv(std::string_view text) {
    std::vector<CsvRecord> records;
    std::size_t i = 0, line = 1;
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;

    while (i < text.size()) {
        CsvRecord rec;
        rec.line = line;
        std::string field;
        bool in_quotes = false, field_was_quoted = false, done = false;
        while (!done) {
            if (i >= text.size()) {
                if (in_quotes) throw DatasetError("unterminated quoted field", rec.line);
                rec.fields.push_back(std::move(field));
                break;
            }
            char c = text[i];
            if (in_quotes) {
                if (c == '"') {
                    if (i + 1 < text.size() && text[i + 1] == '"') {
                        field.push_back('"');
                        i += 2;
                    } else {
                        in_quotes = false;
                        ++i;
                    }
                } else {
                    if (c == '\n') ++line;
                    field.push_back(c);
                    ++i;
                }
                continue;
            }
            switch (c) {
                case '"':
                    if (!field.empty() || field_was_quoted)
                        throw DatasetError("stray quote inside unquoted field", line);
                    in_quotes = field_was_quoted = true;
                    ++i;
                    break;
                case ',':
                    rec.fields.push_back(std::move(field));
                    field.clear();
                    field_was_quoted = false;
                    ++i;
                    break;
                case '\r':
                    ++i;
                    break;
                case '\n':
                    rec.fields.push_back(std::move(field));
                    ++i;
                    ++line;
                    done = true;
                    break;
                default:
                    if (field_was_quoted) throw DatasetError("text after closing quote", line);
                    field.push_back(c);
                    ++i;
            }
        }
        const bool blank = rec.fields.size() == 1 && detail::trim(rec.fields[0]).empty();
        if (!blank) records.push_back(std::move(rec));
    }
    return records;
}

std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    return "\"" + detail::replace_all(s, "\"", "\"\"") + "\"";
}

JailbreakDataset parse_csv(std::string_view content, std::string name) {
    auto records = read_csv(content);
    if (records.empty()) throw DatasetError("empty dataset");

    const auto& header = records.front().fields;
    std::optional<std::size_t> goal_col, target_col, id_col;
    for (std::size_t c = 0; c < header.size(); ++c) {
        auto h = detail::to_lower(detail::trim(header[c]));
        if (h == "goal") goal_col = c;
        else if (h == "target") target_col = c;
        else if (h == "id") id_col = c;
    }
    if (!goal_col || !target_col)
        throw DatasetError("CSV header must name the columns goal,target", records.front().line);
    if (records.size() == 1) throw DatasetError("empty dataset");

    JailbreakDataset ds;
    ds.name = std::move(name);
    const std::size_t n = records.size() - 1;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() != header.size())
            throw DatasetError("expected " + std::to_string(header.size()) + " fields, found " +
                                   std::to_string(rec.fields.size()),
                               rec.line);
        Query q;
        q.text = rec.fields[*goal_col];
        if (detail::trim(q.text).empty()) throw DatasetError("empty goal", rec.line);
        if (!rec.fields[*target_col].empty()) q.reference_response = rec.fields[*target_col];
        q.id = id_col && !rec.fields[*id_col].empty() ? rec.fields[*id_col] : default_query_id(r - 1, n);
        ds.queries.push_back(std::move(q));
    }
    return ds;
}

JailbreakDataset parse_jsonl(std::string_view content, std::string name) {
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::size_t line_no = 0;
    for (auto& line : detail::split(content, '\n')) {
        ++line_no;
        if (!detail::trim(line).empty()) lines.emplace_back(line_no, std::move(line));
    }
    if (lines.empty()) throw DatasetError("empty dataset");

    JailbreakDataset ds;
    ds.name = std::move(name);
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const auto& [no, text] = lines[r];
        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            throw DatasetError(std::string("invalid JSON: ") + e.what(), no);
        }
        if (!obj.is_object()) throw DatasetError("expected a JSON object", no);
        if (!obj.contains("query") || !obj["query"].is_string())
            throw DatasetError("missing string field 'query'", no);
        Query q;
        q.text = obj["query"].get<std::string>();
        if (detail::trim(q.text).empty()) throw DatasetError("empty query", no);
        if (obj.contains("reference_response") && !obj["reference_response"].is_null()) {
            if (!obj["reference_response"].is_string())
                throw DatasetError("'reference_response' must be a string", no);
            q.reference_response = obj["reference_response"].get<std::string>();
        }
        if (obj.contains("id") && !obj["id"].is_null()) {
            const auto& id = obj["id"];
            q.id = id.is_string() ? id.get<std::string>() : id.dump();
        } else {
            q.id = default_query_id(r, lines.size());
        }
        ds.queries.push_back(std::move(q));
    }
    return ds;
}

}  // namespace

DatasetFormat dataset_format_from_string(std::string_view s) {
    if (s == "advbench-csv" || s == "csv") return DatasetFormat::advbench_csv;
    if (s == "jsonl") return DatasetFormat::jsonl;
    throw ConfigError("unknown dataset format '" + std::string(s) + "' (expected advbench-csv or jsonl)");
}

std::string_view to_string(DatasetFormat f) {
    return f == DatasetFormat::advbench_csv ? "advbench-csv" : "jsonl";
}

std::string default_query_id(std::size_t index, std::size_t dataset_size) {
    std::size_t width = 3;
    for (std::size_t cap = 1000; dataset_size > cap; cap *= 10) ++width;
    auto digits = std::to_string(index);
    return digits.size() >= width ? digits : std::string(width - digits.size(), '0') + digits;
}

void JailbreakDataset::validate() const {
    if (queries.empty()) throw DatasetError("empty dataset");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (detail::trim(queries[i].text).empty()) throw DatasetError("empty query text", i + 1);
        if (!ids.insert(queries[i].id).second)
            throw DatasetError("duplicate query id '" + queries[i].id + "'", i + 1);
    }
}

JailbreakDataset parse_dataset(std::string_view content, DatasetFormat format, std::string name) {
    auto ds = format == DatasetFormat::advbench_csv ? parse_csv(content, std::move(name))
                                                    : parse_jsonl(content, std::move(name));
    ds.validate();
    return ds;
}

JailbreakDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open dataset file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), format, path.stem().string());
}

std::string serialize_dataset(const JailbreakDataset& dataset, DatasetFormat format) {
    std::string out;
    if (format == DatasetFormat::jsonl) {
        for (const auto& q : dataset.queries) {
            nlohmann::ordered_json obj;
            obj["id"] = q.id;
            obj["query"] = q.text;
            if (q.reference_response) obj["reference_response"] = *q.reference_response;
            out += obj.dump() + "\n";
        }
        return out;
    }
    bool default_ids = true;
    for (std::size_t i = 0; i < dataset.queries.size(); ++i)
        default_ids = default_ids && dataset.queries[i].id == default_query_id(i, dataset.queries.size());
    out = default_ids ? "goal,target\n" : "goal,target,id\n";
    for (const auto& q : dataset.queries) {
        out += csv_escape(q.text) + "," + csv_escape(q.reference_response.value_or(""));
        if (!default_ids) out += "," + csv_escape(q.id);
        out += "\n";
    }
    return out;
}

void save_dataset(const JailbreakDataset& dataset, const std::filesystem::path& path, DatasetFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DatasetError("cannot write dataset file " + path.string());
    out << serialize_dataset(dataset, format);
}

}  // namespace jailkit
