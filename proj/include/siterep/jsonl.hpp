#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "siterep/common.hpp"

namespace siterep {

using json = nlohmann::json;

// Every artifact file this toolkit writes is JSON Lines with a leading meta
// line: {"type":"meta","schema_version":...,"kind":...,"config_hash":...}.
// The meta line carries no data, so third-party JSONL (one record per line,
// no meta) is also accepted on read. Reading a meta line with the wrong
// schema_version raises SchemaError.

struct JsonlMeta {
    std::string kind;         // e.g. "corpus", "ratings", "features"
    std::string config_hash;  // hex fnv1a64 of the producing configuration

    json to_json() const {
        json j;
        j["type"] = "meta";
        j["schema_version"] = std::string(kSchemaVersion);
        j["kind"] = kind;
        j["config_hash"] = config_hash;
        return j;
    }
};

inline json parse_json_line(const std::string& line, std::size_t line_no,
                            const std::filesystem::path& path) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": malformed JSON line");
    return j;
}

// Reads a JSONL file, returning one parsed json object per record line.
// When the first line is a meta line it is validated and surfaced via
// meta_out instead of being returned as a record.
inline std::vector<json> read_jsonl(const std::filesystem::path& path,
                                    std::optional<JsonlMeta>* meta_out = nullptr) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<json> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j = parse_json_line(line, line_no, path);
        if (line_no == 1 && j.is_object() && j.value("type", "") == "meta") {
            std::string ver = j.value("schema_version", "");
            if (ver != kSchemaVersion)
                throw SchemaError(path.string() + ": schema_version \"" + ver +
                                  "\" does not match expected \"" +
                                  std::string(kSchemaVersion) + "\"");
            if (meta_out) {
                JsonlMeta meta;
                meta.kind = j.value("kind", "");
                meta.config_hash = j.value("config_hash", "");
                *meta_out = meta;
            }
            continue;
        }
        records.push_back(std::move(j));
    }
    return records;
}

// Serializes a json value deterministically: nlohmann::json orders object keys
// lexicographically and prints doubles with shortest round-trip formatting,
// so equal values always produce identical bytes.
inline std::string json_line(const json& j) { return j.dump(); }

inline void write_jsonl(const std::filesystem::path& path, const JsonlMeta& meta,
                        const std::vector<json>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << json_line(meta.to_json()) << '\n';
    for (const json& j : records) out << json_line(j) << '\n';
    if (!out) throw InputError("write failed for " + path.string());
}

// Writes a single JSON document (reports, models) with a trailing newline.
inline void write_json_file(const std::filesystem::path& path, const json& j,
                            int indent = 2) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << j.dump(indent) << '\n';
    if (!out) throw InputError("write failed for " + path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw DataError(path.string() + ": malformed JSON");
    return j;
}

}  // namespace siterep
