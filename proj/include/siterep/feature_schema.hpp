#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "siterep/jsonl.hpp"

namespace siterep {

// The feature lists are configuration, not code: extraction evaluates the
// names listed here, in this order, so dropping a feature (or reordering)
// is a schema edit. The shipped schema (data/feature_schema.json) matches
// these built-in defaults; artifacts record the schema version they were
// produced with and are rejected on mismatch.
struct FeatureSchema {
    std::string version{kSchemaVersion};
    std::vector<std::string> html_features;
    std::vector<std::string> js_features;

    bool operator==(const FeatureSchema&) const = default;
};

inline FeatureSchema default_feature_schema() {
    FeatureSchema s;
    s.html_features = {
        "iframe_count",
        "hidden_element_count",
        "script_element_count",
        "unknown_tag_pct",
        "malicious_pattern_count",
        "element_count",
        "char_count",
        "whitespace_pct",
        "embed_object_count",
        "form_count",
        "meta_refresh_count",
        "link_count",
        "out_of_place_tag_count",
        "small_area_element_count",
        "double_doc_tag_count",
        "img_count",
        "anchor_count",
        "title_present_flag",
        "external_script_src_count",
        "comment_char_count",
    };
    s.js_features = {
        "eval_count",
        "settimeout_setinterval_count",
        "dom_modification_fn_count",
        "script_char_count",
        "string_max_len",
        "string_avg_len",
        "fromcharcode_count",
        "unescape_count",
        "escape_count",
        "document_write_count",
        "suspicious_string_count",
        "long_variable_name_count",
        "keyword_to_word_ratio",
        "shellcode_like_string_count",
        "direct_assignment_count",
        "hex_or_unicode_escape_count",
        "whitespace_pct",
        "entropy_of_script",
        "function_count",
        "event_attachment_count",
        "iframe_injection_string_count",
        "setattribute_count",
        "activex_like_count",
        "comment_to_code_ratio",
    };
    return s;
}

inline json to_json(const FeatureSchema& s) {
    json j;
    j["version"] = s.version;
    j["families"]["H"] = s.html_features;
    j["families"]["J"] = s.js_features;
    return j;
}

inline FeatureSchema schema_from_json(const json& j) {
    FeatureSchema s;
    s.version = j.value("version", std::string{});
    if (s.version != kSchemaVersion)
        throw SchemaError("feature schema version \"" + s.version +
                          "\" does not match expected \"" +
                          std::string(kSchemaVersion) + "\"");
    if (!j.contains("families") || !j["families"].contains("H") ||
        !j["families"].contains("J"))
        throw DataError("feature schema needs families.H and families.J");
    s.html_features = j["families"]["H"].get<std::vector<std::string>>();
    s.js_features = j["families"]["J"].get<std::vector<std::string>>();
    if (s.html_features.empty() || s.js_features.empty())
        throw DataError("feature schema families must be non-empty");
    return s;
}

inline FeatureSchema load_feature_schema(const std::filesystem::path& path) {
    return schema_from_json(read_json_file(path));
}

inline void save_feature_schema(const std::filesystem::path& path,
                                const FeatureSchema& s) {
    write_json_file(path, to_json(s));
}

// Pattern lists for "malicious pattern" (HTML) and "suspicious string" (JS)
// counting. Matching is case-insensitive substring search; the shipped file
// (data/patterns.json) is editable without recompiling.
struct PatternConfig {
    std::vector<std::string> malicious_html_patterns;
    std::vector<std::string> suspicious_js_strings;

    bool operator==(const PatternConfig&) const = default;
};

inline PatternConfig default_patterns() {
    PatternConfig p;
    p.malicious_html_patterns = {
        "eval(unescape(",
        "document.write(unescape(",
        "string.fromcharcode(",
        "visibility:hidden\"><iframe",
        "width=\"0\" height=\"0\"><iframe",
        "<iframe src=\"http://",
        "c99shell",
        "r57shell",
        "webshell",
        "base64_decode(",
        "meta http-equiv=\"refresh\" content=\"0",
        ".ru:8080/",
        "heap spray",
        "shellcode",
    };
    p.suspicious_js_strings = {
        "eval(unescape(",
        "document.write(unescape(",
        "%u9090",
        "%u0c0c",
        "heap spray",
        "heapspray",
        "shellcode",
        "wscript.shell",
        "adodb.stream",
        "createelement(\"iframe\")",
        "createelement('iframe')",
        "document.cookie",
        "top.location.replace",
        "window.location.replace(unescape",
    };
    return p;
}

inline json to_json(const PatternConfig& p) {
    json j;
    j["version"] = std::string(kSchemaVersion);
    j["malicious_html_patterns"] = p.malicious_html_patterns;
    j["suspicious_js_strings"] = p.suspicious_js_strings;
    return j;
}

inline PatternConfig patterns_from_json(const json& j) {
    std::string ver = j.value("version", std::string{});
    if (ver != kSchemaVersion)
        throw SchemaError("patterns file version \"" + ver +
                          "\" does not match expected \"" +
                          std::string(kSchemaVersion) + "\"");
    PatternConfig p;
    p.malicious_html_patterns =
        j.value("malicious_html_patterns", std::vector<std::string>{});
    p.suspicious_js_strings =
        j.value("suspicious_js_strings", std::vector<std::string>{});
    return p;
}

inline PatternConfig load_patterns(const std::filesystem::path& path) {
    return patterns_from_json(read_json_file(path));
}

inline void save_patterns(const std::filesystem::path& path, const PatternConfig& p) {
    write_json_file(path, to_json(p));
}

}  // namespace siterep
