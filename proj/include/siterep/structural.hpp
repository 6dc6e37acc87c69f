#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "siterep/corpus.hpp"
#include "siterep/feature_schema.hpp"
#include "siterep/reputation.hpp"

namespace siterep {

namespace detail {

// Non-overlapping substring occurrence count.
inline std::size_t count_occurrences(std::string_view haystack,
                                     std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t count = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

inline const std::unordered_set<std::string>& known_html_tags() {
    static const std::unordered_set<std::string> tags = {
        "a", "abbr", "acronym", "address", "applet", "area", "article", "aside",
        "audio", "b", "base", "basefont", "bdi", "bdo", "big", "blockquote",
        "body", "br", "button", "canvas", "caption", "center", "cite", "code",
        "col", "colgroup", "data", "datalist", "dd", "del", "details", "dfn",
        "dialog", "dir", "div", "dl", "dt", "em", "embed", "fieldset",
        "figcaption", "figure", "font", "footer", "form", "frame", "frameset",
        "h1", "h2", "h3", "h4", "h5", "h6", "head", "header", "hgroup", "hr",
        "html", "i", "iframe", "img", "input", "ins", "kbd", "label", "legend",
        "li", "link", "main", "map", "mark", "marquee", "math", "menu", "meta",
        "meter", "nav", "noframes", "noscript", "object", "ol", "optgroup",
        "option", "output", "p", "param", "path", "picture", "pre", "progress",
        "q", "rp", "rt", "ruby", "s", "samp", "script", "section", "select",
        "slot", "small", "source", "span", "strike", "strong", "style", "sub",
        "summary", "sup", "svg", "table", "tbody", "td", "template", "textarea",
        "tfoot", "th", "thead", "time", "title", "tr", "track", "tt", "u", "ul",
        "var", "video", "wbr",
    };
    return tags;
}

// Leading integer of an attribute value like "1", "2px", "100%"; nullopt when
// the value does not start with a digit.
inline std::optional<long> leading_number(std::string_view v) {
    v = trim(v);
    if (v.empty() || v[0] < '0' || v[0] > '9') return std::nullopt;
    long n = 0;
    std::size_t i = 0;
    while (i < v.size() && v[i] >= '0' && v[i] <= '9' && n < 1000000)
        n = n * 10 + (v[i++] - '0');
    return n;
}

inline bool style_hides(std::string_view style) {
    // Whitespace-insensitive match for display:none / visibility:hidden.
    std::string compact;
    compact.reserve(style.size());
    for (char c : style)
        if (!is_ascii_space(c)) compact += c;
    compact = ascii_lower(compact);
    return compact.find("display:none") != std::string::npos ||
           compact.find("visibility:hidden") != std::string::npos;
}

// Everything the HTML feature functions need, computed in one pass.
struct HtmlContext {
    const PageRecord* page = nullptr;
    HtmlScan scan;
    std::string html_lower;
    const PatternConfig* patterns = nullptr;

    std::size_t open_tags = 0;
    std::size_t unknown_open_tags = 0;
    std::map<std::string, std::size_t> open_count;  // per tag name
    std::size_t hidden_elements = 0;
    std::size_t small_area_elements = 0;
    std::size_t meta_refresh = 0;
    std::size_t out_of_place = 0;
    std::size_t double_doc = 0;
    std::size_t comment_chars = 0;
    std::size_t whitespace_chars = 0;

    static HtmlContext build(const PageRecord& page, const PatternConfig& patterns) {
        HtmlContext ctx;
        ctx.page = &page;
        ctx.patterns = &patterns;
        ctx.scan = scan_html(page.html);
        ctx.html_lower = ascii_lower(page.html);

        for (char c : page.html)
            if (is_ascii_space(c)) ++ctx.whitespace_chars;
        for (const auto& c : ctx.scan.comments) ctx.comment_chars += c.size();

        bool in_body = false;
        static const char* kHeadOnly[] = {"title", "meta", "link", "base"};
        static const char* kDocTags[] = {"html", "head", "body", "title"};
        for (const TagEvent& ev : ctx.scan.events) {
            if (ev.closing) continue;
            ++ctx.open_tags;
            ++ctx.open_count[ev.name];
            if (!known_html_tags().contains(ev.name)) ++ctx.unknown_open_tags;

            if (ev.name == "body") in_body = true;
            if (in_body)
                for (const char* t : kHeadOnly)
                    if (ev.name == t) ++ctx.out_of_place;

            // Hidden elements: hidden attribute, hiding inline style, or
            // hidden form input.
            bool hidden = ev.attr("hidden") != nullptr;
            if (const std::string* st = ev.attr("style"); st && style_hides(*st))
                hidden = true;
            if (ev.name == "input") {
                if (const std::string* ty = ev.attr("type");
                    ty && ascii_lower(*ty) == "hidden")
                    hidden = true;
            }
            if (hidden) ++ctx.hidden_elements;

            // Tiny render area (tracking pixels, invisible frames): both
            // dimensions given and the area is at most 4 px².
            const std::string* w = ev.attr("width");
            const std::string* h = ev.attr("height");
            if (w && h) {
                auto wn = leading_number(*w);
                auto hn = leading_number(*h);
                if (wn && hn && (*wn) * (*hn) <= 4) ++ctx.small_area_elements;
            }

            if (ev.name == "meta") {
                if (const std::string* he = ev.attr("http-equiv");
                    he && ascii_lower(*he) == "refresh")
                    ++ctx.meta_refresh;
            }
        }
        for (const char* t : kDocTags) {
            auto it = ctx.open_count.find(t);
            if (it != ctx.open_count.end() && it->second > 1)
                ctx.double_doc += it->second - 1;
        }
        return ctx;
    }

    std::size_t tag(const char* name) const {
        auto it = open_count.find(name);
        return it == open_count.end() ? 0 : it->second;
    }

    double malicious_pattern_count() const {
        std::size_t total = 0;
        for (const auto& p : patterns->malicious_html_patterns)
            total += count_occurrences(html_lower, ascii_lower(p));
        return static_cast<double>(total);
    }
};

// ---------------------------------------------------------------------------
// JavaScript lexing. A full ES parser is out of scope; this single-pass lexer
// tracks strings and comments, which is what the features need. Regex
// literals are not recognized (a '/' starts division or a comment here);
// the resulting miscounts are rare and affect both classes alike.
struct JsStats {
    std::size_t total_chars = 0;
    std::size_t whitespace_chars = 0;
    std::size_t comment_chars = 0;
    std::vector<std::string> literals;  // string literal contents
    std::string code_only;  // literals/comments blanked to spaces, scripts
                            // joined by '\n'
    std::size_t byte_freq[256] = {};

    static JsStats build(const std::vector<std::string>& scripts) {
        JsStats st;
        for (const std::string& s : scripts) {
            st.total_chars += s.size();
            for (unsigned char c : s) {
                ++st.byte_freq[c];
                if (is_ascii_space(static_cast<char>(c))) ++st.whitespace_chars;
            }
            st.lex(s);
            st.code_only += '\n';
        }
        return st;
    }

    double entropy_bits() const {
        if (total_chars == 0) return 0.0;
        double h = 0.0;
        for (std::size_t f : byte_freq) {
            if (f == 0) continue;
            double p = static_cast<double>(f) / static_cast<double>(total_chars);
            h -= p * std::log2(p);
        }
        return h;
    }

  private:
    void lex(std::string_view s) {
        std::size_t i = 0;
        while (i < s.size()) {
            char c = s[i];
            if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
                std::size_t end = s.find('\n', i);
                if (end == std::string_view::npos) end = s.size();
                comment_chars += end - i;
                code_only.append(end - i, ' ');
                i = end;
            } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
                std::size_t end = s.find("*/", i + 2);
                std::size_t stop = end == std::string_view::npos ? s.size() : end + 2;
                comment_chars += stop - i;
                code_only.append(stop - i, ' ');
                i = stop;
            } else if (c == '"' || c == '\'' || c == '`') {
                std::size_t j = i + 1;
                std::string lit;
                while (j < s.size() && s[j] != c) {
                    if (s[j] == '\\' && j + 1 < s.size()) {
                        lit += s[j];
                        lit += s[j + 1];
                        j += 2;
                    } else {
                        lit += s[j];
                        ++j;
                    }
                }
                std::size_t stop = j < s.size() ? j + 1 : s.size();
                code_only.append(stop - i, ' ');
                literals.push_back(std::move(lit));
                i = stop;
            } else {
                code_only += c;
                ++i;
            }
        }
    }
};

inline bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$';
}

inline bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
}

inline const std::unordered_set<std::string>& js_keywords() {
    static const std::unordered_set<std::string> kw = {
        "var",    "let",     "const",    "function", "return",     "if",
        "else",   "for",     "while",    "do",       "break",      "continue",
        "new",    "delete",  "typeof",   "instanceof", "in",       "of",
        "try",    "catch",   "finally",  "throw",    "switch",     "case",
        "default", "this",   "null",     "true",     "false",      "undefined",
        "void",   "with",    "class",    "extends",  "super",      "import",
        "export", "yield",   "async",    "await",
    };
    return kw;
}

struct JsContext {
    const PageRecord* page = nullptr;
    const PatternConfig* patterns = nullptr;
    JsStats stats;
    std::string all_lower;  // raw scripts, lowercased and concatenated

    // Derived from the identifier scan over code_only:
    std::size_t word_count = 0;
    std::size_t keyword_count = 0;
    std::size_t long_name_count = 0;   // identifier length >= 25
    std::size_t function_kw_count = 0;
    std::map<std::string, std::size_t> calls;  // identifier followed by '('
    std::size_t document_write_calls = 0;
    std::size_t direct_assignments = 0;

    static JsContext build(const PageRecord& page, const PatternConfig& patterns) {
        JsContext ctx;
        ctx.page = &page;
        ctx.patterns = &patterns;
        ctx.stats = JsStats::build(page.scripts);
        for (const std::string& s : page.scripts) ctx.all_lower += ascii_lower(s);
        ctx.scan_code();
        return ctx;
    }

    std::size_t call_count(const char* name) const {
        auto it = calls.find(name);
        return it == calls.end() ? 0 : it->second;
    }

    std::size_t pattern_hits(std::string_view needle_lower) const {
        return count_occurrences(all_lower, needle_lower);
    }

  private:
    void scan_code() {
        const std::string& code = stats.code_only;
        std::size_t i = 0;
        std::string prev_ident;
        bool prev_was_dot = false;     // "<ident> ." seen, waiting for member
        bool prev_ident_doc = false;   // previous identifier was "document"
        while (i < code.size()) {
            char c = code[i];
            if (is_ident_start(c)) {
                std::size_t start = i;
                while (i < code.size() && is_ident_char(code[i])) ++i;
                std::string ident = code.substr(start, i - start);
                ++word_count;
                if (js_keywords().contains(ident)) ++keyword_count;
                if (ident.size() >= 25) ++long_name_count;
                if (ident == "function") ++function_kw_count;

                std::size_t j = i;
                while (j < code.size() && is_ascii_space(code[j])) ++j;
                bool is_call = j < code.size() && code[j] == '(';
                if (is_call) {
                    ++calls[ident];
                    if (prev_was_dot && prev_ident_doc &&
                        (ident == "write" || ident == "writeln"))
                        ++document_write_calls;
                }
                prev_was_dot = false;
                prev_ident = std::move(ident);
                continue;
            }
            if (c == '.') {
                prev_was_dot = !prev_ident.empty();
                prev_ident_doc = prev_ident == "document";
                ++i;
                continue;
            }
            if (c == '=') {
                char prev = i > 0 ? code[i - 1] : '\0';
                char next = i + 1 < code.size() ? code[i + 1] : '\0';
                static const std::string_view compound = "=!<>+-*/%&|^";
                bool is_plain = compound.find(prev) == std::string_view::npos &&
                                next != '=' && next != '>';
                if (is_plain) ++direct_assignments;
                ++i;
                if (prev_was_dot) prev_was_dot = false;
                continue;
            }
            if (!is_ascii_space(c)) prev_was_dot = false;
            ++i;
        }
    }
};

inline std::size_t escape_sequence_count(std::string_view s) {
    auto is_hex = [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') ||
               (c >= 'A' && c <= 'F');
    };
    std::size_t count = 0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i] == '\\' && s[i + 1] == 'x' && i + 3 < s.size() && is_hex(s[i + 2]) &&
            is_hex(s[i + 3]))
            ++count;
        else if ((s[i] == '\\' || s[i] == '%') && s[i + 1] == 'u' && i + 5 < s.size() &&
                 is_hex(s[i + 2]) && is_hex(s[i + 3]) && is_hex(s[i + 4]) &&
                 is_hex(s[i + 5]))
            ++count;
    }
    return count;
}

inline bool looks_like_shellcode(std::string_view lit) {
    std::size_t escapes = 0;
    for (std::size_t i = 0; i + 1 < lit.size(); ++i)
        if ((lit[i] == '\\' && lit[i + 1] == 'x') ||
            ((lit[i] == '%' || lit[i] == '\\') && lit[i + 1] == 'u'))
            ++escapes;
    if (escapes >= 10) return true;
    if (lit.size() >= 128) {
        std::size_t hex_chars = 0;
        for (char c : lit)
            if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') ||
                (c >= 'A' && c <= 'F'))
                ++hex_chars;
        if (hex_chars * 10 >= lit.size() * 9) return true;  // >= 90% hex
    }
    return false;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Feature registries. Each schema name maps to one evaluation function; the
// schema file controls which features exist and their order.

using HtmlFeatureFn = std::function<double(const detail::HtmlContext&)>;
using JsFeatureFn = std::function<double(const detail::JsContext&)>;

inline const std::map<std::string, HtmlFeatureFn>& html_feature_registry() {
    using Ctx = detail::HtmlContext;
    static const std::map<std::string, HtmlFeatureFn> reg = {
        {"iframe_count", [](const Ctx& c) { return double(c.tag("iframe")); }},
        {"hidden_element_count",
         [](const Ctx& c) { return double(c.hidden_elements); }},
        {"script_element_count",
         [](const Ctx& c) { return double(c.tag("script")); }},
        {"unknown_tag_pct",
         [](const Ctx& c) {
             return c.open_tags == 0
                        ? 0.0
                        : 100.0 * double(c.unknown_open_tags) / double(c.open_tags);
         }},
        {"malicious_pattern_count",
         [](const Ctx& c) { return c.malicious_pattern_count(); }},
        {"element_count", [](const Ctx& c) { return double(c.open_tags); }},
        {"char_count", [](const Ctx& c) { return double(c.page->html.size()); }},
        {"whitespace_pct",
         [](const Ctx& c) {
             return c.page->html.empty() ? 0.0
                                         : 100.0 * double(c.whitespace_chars) /
                                               double(c.page->html.size());
         }},
        {"embed_object_count",
         [](const Ctx& c) { return double(c.tag("embed") + c.tag("object")); }},
        {"form_count", [](const Ctx& c) { return double(c.tag("form")); }},
        {"meta_refresh_count", [](const Ctx& c) { return double(c.meta_refresh); }},
        {"link_count", [](const Ctx& c) { return double(c.tag("link")); }},
        {"out_of_place_tag_count",
         [](const Ctx& c) { return double(c.out_of_place); }},
        {"small_area_element_count",
         [](const Ctx& c) { return double(c.small_area_elements); }},
        {"double_doc_tag_count", [](const Ctx& c) { return double(c.double_doc); }},
        {"img_count", [](const Ctx& c) { return double(c.tag("img")); }},
        {"anchor_count", [](const Ctx& c) { return double(c.tag("a")); }},
        {"title_present_flag",
         [](const Ctx& c) { return c.tag("title") > 0 ? 1.0 : 0.0; }},
        {"external_script_src_count",
         [](const Ctx& c) { return double(c.scan.external_scripts.size()); }},
        {"comment_char_count", [](const Ctx& c) { return double(c.comment_chars); }},
    };
    return reg;
}

inline const std::map<std::string, JsFeatureFn>& js_feature_registry() {
    using Ctx = detail::JsContext;
    static const std::map<std::string, JsFeatureFn> reg = {
        {"eval_count", [](const Ctx& c) { return double(c.call_count("eval")); }},
        {"settimeout_setinterval_count",
         [](const Ctx& c) {
             return double(c.call_count("setTimeout") + c.call_count("setInterval"));
         }},
        {"dom_modification_fn_count",
         [](const Ctx& c) {
             static const char* fns[] = {"appendChild",    "replaceChild",
                                         "insertBefore",   "removeChild",
                                         "createElement",  "createTextNode",
                                         "cloneNode",      "insertAdjacentHTML"};
             std::size_t n = 0;
             for (const char* f : fns) n += c.call_count(f);
             return double(n);
         }},
        {"script_char_count",
         [](const Ctx& c) { return double(c.stats.total_chars); }},
        {"string_max_len",
         [](const Ctx& c) {
             std::size_t m = 0;
             for (const auto& l : c.stats.literals) m = std::max(m, l.size());
             return double(m);
         }},
        {"string_avg_len",
         [](const Ctx& c) {
             if (c.stats.literals.empty()) return 0.0;
             std::size_t total = 0;
             for (const auto& l : c.stats.literals) total += l.size();
             return double(total) / double(c.stats.literals.size());
         }},
        {"fromcharcode_count",
         [](const Ctx& c) { return double(c.call_count("fromCharCode")); }},
        {"unescape_count",
         [](const Ctx& c) { return double(c.call_count("unescape")); }},
        {"escape_count", [](const Ctx& c) { return double(c.call_count("escape")); }},
        {"document_write_count",
         [](const Ctx& c) { return double(c.document_write_calls); }},
        {"suspicious_string_count",
         [](const Ctx& c) {
             std::size_t n = 0;
             for (const auto& p : c.patterns->suspicious_js_strings)
                 n += c.pattern_hits(ascii_lower(p));
             return double(n);
         }},
        {"long_variable_name_count",
         [](const Ctx& c) { return double(c.long_name_count); }},
        {"keyword_to_word_ratio",
         [](const Ctx& c) {
             return c.word_count == 0
                        ? 0.0
                        : double(c.keyword_count) / double(c.word_count);
         }},
        {"shellcode_like_string_count",
         [](const Ctx& c) {
             std::size_t n = 0;
             for (const auto& l : c.stats.literals)
                 if (detail::looks_like_shellcode(l)) ++n;
             return double(n);
         }},
        {"direct_assignment_count",
         [](const Ctx& c) { return double(c.direct_assignments); }},
        {"hex_or_unicode_escape_count",
         [](const Ctx& c) {
             std::size_t n = 0;
             for (const auto& s : c.page->scripts)
                 n += detail::escape_sequence_count(s);
             return double(n);
         }},
        {"whitespace_pct",
         [](const Ctx& c) {
             return c.stats.total_chars == 0
                        ? 0.0
                        : 100.0 * double(c.stats.whitespace_chars) /
                              double(c.stats.total_chars);
         }},
        {"entropy_of_script",
         [](const Ctx& c) { return c.stats.entropy_bits(); }},
        {"function_count",
         [](const Ctx& c) { return double(c.function_kw_count); }},
        {"event_attachment_count",
         [](const Ctx& c) {
             return double(c.call_count("addEventListener") +
                           c.call_count("attachEvent"));
         }},
        {"iframe_injection_string_count",
         [](const Ctx& c) {
             return double(c.pattern_hits("<iframe") + c.pattern_hits("%3ciframe"));
         }},
        {"setattribute_count",
         [](const Ctx& c) { return double(c.call_count("setAttribute")); }},
        {"activex_like_count",
         [](const Ctx& c) {
             return double(c.call_count("ActiveXObject") +
                           c.call_count("CreateObject"));
         }},
        {"comment_to_code_ratio",
         [](const Ctx& c) {
             return c.stats.total_chars == 0
                        ? 0.0
                        : double(c.stats.comment_chars) /
                              double(c.stats.total_chars);
         }},
    };
    return reg;
}

// HTML-family extraction. Total: every page (even an empty one) yields a
// vector, because HTML features are always available.
inline std::vector<double> extract_html(const PageRecord& page,
                                        const FeatureSchema& schema,
                                        const PatternConfig& patterns) {
    auto ctx = detail::HtmlContext::build(page, patterns);
    std::vector<double> out;
    out.reserve(schema.html_features.size());
    for (const std::string& name : schema.html_features) {
        auto it = html_feature_registry().find(name);
        if (it == html_feature_registry().end())
            throw InputError("unknown HTML feature in schema: " + name);
        out.push_back(it->second(ctx));
    }
    return out;
}

// JS-family extraction; absent (not zeros) when the page has no scripts, so
// the ensemble can exclude the family instead of feeding it fake values.
inline std::optional<std::vector<double>> extract_js(const PageRecord& page,
                                                     const FeatureSchema& schema,
                                                     const PatternConfig& patterns) {
    if (page.scripts.empty()) return std::nullopt;
    auto ctx = detail::JsContext::build(page, patterns);
    std::vector<double> out;
    out.reserve(schema.js_features.size());
    for (const std::string& name : schema.js_features) {
        auto it = js_feature_registry().find(name);
        if (it == js_feature_registry().end())
            throw InputError("unknown JS feature in schema: " + name);
        out.push_back(it->second(ctx));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Correlation-based feature selection.

struct FeatureMask {
    std::vector<bool> keep;
    std::vector<double> scores;  // |Pearson corr| with the label; 0 for
                                 // zero-variance columns (ranked last)

    std::size_t kept() const {
        std::size_t n = 0;
        for (bool b : keep)
            if (b) ++n;
        return n;
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        if (x.size() != keep.size())
            throw DataError("feature vector length " + std::to_string(x.size()) +
                            " does not match mask length " +
                            std::to_string(keep.size()));
        std::vector<double> out;
        out.reserve(kept());
        for (std::size_t i = 0; i < x.size(); ++i)
            if (keep[i]) out.push_back(x[i]);
        return out;
    }

    static FeatureMask all_true(std::size_t d) {
        FeatureMask m;
        m.keep.assign(d, true);
        m.scores.assign(d, 0.0);
        return m;
    }

    bool operator==(const FeatureMask&) const = default;
};

inline json to_json(const FeatureMask& m) {
    json j;
    j["keep"] = m.keep;
    j["scores"] = m.scores;
    return j;
}

inline FeatureMask mask_from_json(const json& j) {
    FeatureMask m;
    m.keep = j.at("keep").get<std::vector<bool>>();
    m.scores = j.at("scores").get<std::vector<double>>();
    if (m.keep.size() != m.scores.size())
        throw DataError("feature mask keep/scores length mismatch");
    return m;
}

// Ranks features by |Pearson correlation| between the column and the label
// encoded bad=1/good=0, then keeps the top ceil(keep_fraction * d). Ties are
// broken toward the lower feature index; zero-variance columns rank last.
inline FeatureMask select_features(const std::vector<std::vector<double>>& X,
                                   const std::vector<ClassLabel>& y,
                                   double keep_fraction) {
    if (keep_fraction <= 0.0 || keep_fraction > 1.0)
        throw InputError("keep_fraction must lie in (0,1]");
    const std::size_t n = X.size();
    if (n < 2 || y.size() != n)
        throw InputError("select_features needs >= 2 rows and matching labels");
    const std::size_t d = X[0].size();
    for (const auto& row : X)
        if (row.size() != d) throw DataError("ragged feature matrix");

    std::size_t n_bad = 0;
    for (ClassLabel c : y)
        if (c == ClassLabel::bad) ++n_bad;
    if (n_bad == 0 || n_bad == n)
        throw InputError("select_features requires both classes present");

    const double mean_y = static_cast<double>(n_bad) / static_cast<double>(n);
    const double var_y = mean_y * (1.0 - mean_y);  // Bernoulli variance

    FeatureMask mask;
    mask.keep.assign(d, false);
    mask.scores.assign(d, 0.0);
    std::vector<bool> degenerate(d, false);

    for (std::size_t f = 0; f < d; ++f) {
        double mean_x = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean_x += X[i][f];
        mean_x /= static_cast<double>(n);
        double cov = 0.0, var_x = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double dx = X[i][f] - mean_x;
            double dy = (y[i] == ClassLabel::bad ? 1.0 : 0.0) - mean_y;
            cov += dx * dy;
            var_x += dx * dx;
        }
        if (var_x <= 0.0) {
            degenerate[f] = true;
            continue;
        }
        double corr = cov / std::sqrt(var_x * (var_y * static_cast<double>(n)));
        mask.scores[f] = std::abs(corr);
    }

    std::vector<std::size_t> order(d);
    for (std::size_t i = 0; i < d; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         if (degenerate[a] != degenerate[b]) return !degenerate[a];
                         if (mask.scores[a] != mask.scores[b])
                             return mask.scores[a] > mask.scores[b];
                         return a < b;
                     });

    std::size_t m = static_cast<std::size_t>(
        std::ceil(keep_fraction * static_cast<double>(d)));
    if (m < 1) m = 1;
    if (m > d) m = d;
    for (std::size_t i = 0; i < m; ++i) mask.keep[order[i]] = true;
    return mask;
}

}  // namespace siterep
