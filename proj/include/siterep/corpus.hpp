#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "siterep/html.hpp"
#include "siterep/jsonl.hpp"
#include "siterep/url.hpp"

namespace siterep {

// Failure classes recorded in PageRecord.http_status when a fetch never
// produced an HTTP status line. Real HTTP statuses are positive; these are
// negative so the two ranges cannot collide.
enum FetchFailure : int {
    kFetchInvalidUrl = -1,
    kFetchConnectError = -2,  // DNS / refused / TLS
    kFetchTimeout = -3,
    kFetchReadError = -4,
    kFetchNotHtml = -5,
    kFetchTooLarge = -6,
    kFetchRobotsDenied = -7,
};

// One crawled (or locally loaded) page, normalized for feature extraction.
struct PageRecord {
    std::string url;             // absolute, validated
    std::int64_t fetched_at = 0; // unix seconds UTC; 0 = not fetched (local parse)
    int http_status = 0;         // >0 real status, <0 FetchFailure, 0 = local
    std::string html;            // raw document text (lossily decoded)
    std::vector<std::string> scripts;    // inline bodies; fetched externals appended
    std::vector<std::string> out_links;  // absolute http(s), first-occurrence dedup
    std::string visible_text;            // markup-free, whitespace-collapsed
    std::string lang_hint;               // empty when the document declares none

    bool operator==(const PageRecord&) const = default;
};

inline json to_json(const PageRecord& p) {
    json j;
    j["url"] = p.url;
    j["fetched_at"] = p.fetched_at;
    j["http_status"] = p.http_status;
    j["html"] = p.html;
    j["scripts"] = p.scripts;
    j["out_links"] = p.out_links;
    j["visible_text"] = p.visible_text;
    j["lang_hint"] = p.lang_hint;
    return j;
}

inline PageRecord page_from_json(const json& j) {
    if (!j.is_object() || !j.contains("url"))
        throw DataError("page record missing required field \"url\": " + j.dump());
    PageRecord p;
    p.url = j.at("url").get<std::string>();
    p.fetched_at = j.value("fetched_at", std::int64_t{0});
    p.http_status = j.value("http_status", 0);
    p.html = j.value("html", std::string{});
    p.scripts = j.value("scripts", std::vector<std::string>{});
    p.out_links = j.value("out_links", std::vector<std::string>{});
    p.visible_text = j.value("visible_text", std::string{});
    p.lang_hint = j.value("lang_hint", std::string{});
    return p;
}

// Replaces bytes that are not valid UTF-8 with U+FFFD so downstream JSON
// serialization always succeeds. ASCII-compatible inputs pass through intact.
inline std::string lossy_utf8(std::string_view in) {
    std::string out;
    out.reserve(in.size());
    std::size_t i = 0;
    auto is_cont = [&](std::size_t k) {
        return k < in.size() && (static_cast<unsigned char>(in[k]) & 0xc0) == 0x80;
    };
    while (i < in.size()) {
        unsigned char c = static_cast<unsigned char>(in[i]);
        if (c < 0x80) {
            out += static_cast<char>(c);
            ++i;
        } else if ((c & 0xe0) == 0xc0 && c >= 0xc2 && is_cont(i + 1)) {
            out.append(in.substr(i, 2));
            i += 2;
        } else if ((c & 0xf0) == 0xe0 && is_cont(i + 1) && is_cont(i + 2)) {
            out.append(in.substr(i, 3));
            i += 3;
        } else if ((c & 0xf8) == 0xf0 && c <= 0xf4 && is_cont(i + 1) && is_cont(i + 2) &&
                   is_cont(i + 3)) {
            out.append(in.substr(i, 4));
            i += 4;
        } else {
            out += "\xef\xbf\xbd";  // U+FFFD replacement character
            ++i;
        }
    }
    return out;
}

// Static parse of a document into a PageRecord. Pure: no network, no clock
// (fetched_at stays 0; fetch paths stamp it afterwards). Never throws on
// malformed html; the url must be absolute and valid because out_link
// resolution is meaningless without a base.
inline PageRecord parse_page(const Url& base, std::string_view html_bytes) {
    PageRecord p;
    p.url = base.str();
    p.html = lossy_utf8(html_bytes);

    HtmlScan scan = scan_html(p.html);
    p.scripts = std::move(scan.inline_scripts);
    p.visible_text = std::move(scan.visible_text);
    p.lang_hint = std::move(scan.lang_hint);

    std::unordered_set<std::string> seen;
    for (const auto& [element, raw_ref] : scan.link_refs) {
        auto resolved = resolve_url(base, raw_ref);
        if (!resolved) continue;
        if (resolved->scheme != "http" && resolved->scheme != "https") continue;
        std::string abs = resolved->str();
        if (seen.insert(abs).second) p.out_links.push_back(std::move(abs));
    }
    return p;
}

inline PageRecord parse_page(std::string_view url, std::string_view html_bytes) {
    auto parsed = parse_url(url);
    if (!parsed) throw InputError("parse_page: url is not absolute and valid: " +
                                  std::string(url));
    return parse_page(*parsed, html_bytes);
}

inline void write_corpus(const std::filesystem::path& path,
                         const std::vector<PageRecord>& pages,
                         const std::string& config_hash = "") {
    JsonlMeta meta;
    meta.kind = "corpus";
    meta.config_hash = config_hash;
    std::vector<json> lines;
    lines.reserve(pages.size());
    for (const auto& p : pages) lines.push_back(to_json(p));
    write_jsonl(path, meta, lines);
}

inline std::vector<PageRecord> read_corpus(const std::filesystem::path& path) {
    std::vector<PageRecord> pages;
    for (const json& j : read_jsonl(path)) pages.push_back(page_from_json(j));
    return pages;
}

}  // namespace siterep
