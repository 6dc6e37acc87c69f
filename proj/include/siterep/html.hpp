#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "siterep/common.hpp"

namespace siterep {

// Error-tolerant HTML scan. This is deliberately not a DOM builder: feature
// extraction needs tag/attribute events, script payloads, comments and the
// visible text, and it must survive the malformed markup that is routine on
// low-reputation pages. Anything unparseable degrades to text or is skipped;
// no input makes the scanner throw.

struct HtmlAttr {
    std::string name;   // lowercase
    std::string value;  // entity-decoded
};

struct TagEvent {
    std::string name;  // lowercase
    bool closing = false;
    bool self_closing = false;
    std::vector<HtmlAttr> attrs;  // open tags only

    const std::string* attr(std::string_view name_) const {
        for (const auto& a : attrs)
            if (a.name == name_) return &a.value;
        return nullptr;
    }
};

struct HtmlScan {
    std::vector<TagEvent> events;               // document order
    std::vector<std::string> inline_scripts;    // script bodies without src=
    std::vector<std::string> external_scripts;  // src attribute values
    std::vector<std::string> comments;          // without <!-- --> delimiters
    // (element that referenced it, raw attribute value) for a[href],
    // area[href], iframe[src], frame[src], in document order.
    std::vector<std::pair<std::string, std::string>> link_refs;
    std::string visible_text;  // entity-decoded, whitespace-collapsed
    std::string lang_hint;     // html[lang] or content-language meta, first wins
};

namespace detail {

inline void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) cp = 0xfffd;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xc0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xe0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    } else {
        out += static_cast<char>(0xf0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    }
}

struct NamedEntity {
    std::string_view name;
    std::uint32_t cp;
};

inline const NamedEntity* named_entities(std::size_t& count) {
    static const NamedEntity table[] = {
        {"amp", '&'},      {"lt", '<'},       {"gt", '>'},      {"quot", '"'},
        {"apos", '\''},    {"nbsp", 0xa0},    {"copy", 0xa9},   {"reg", 0xae},
        {"trade", 0x2122}, {"mdash", 0x2014}, {"ndash", 0x2013}, {"hellip", 0x2026},
        {"lsquo", 0x2018}, {"rsquo", 0x2019}, {"ldquo", 0x201c}, {"rdquo", 0x201d},
        {"middot", 0xb7},  {"laquo", 0xab},   {"raquo", 0xbb},   {"deg", 0xb0},
    };
    count = sizeof(table) / sizeof(table[0]);
    return table;
}

}  // namespace detail

// Decodes numeric references and a pragmatic subset of named entities.
// Unrecognized references pass through untouched.
inline std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (c != '&') {
            out += c;
            ++i;
            continue;
        }
        std::size_t semi = s.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 10) {
            out += c;
            ++i;
            continue;
        }
        std::string_view body = s.substr(i + 1, semi - i - 1);
        if (body.size() >= 2 && body[0] == '#') {
            std::uint32_t cp = 0;
            bool ok = true;
            if (body[1] == 'x' || body[1] == 'X') {
                if (body.size() < 3) ok = false;
                for (std::size_t j = 2; ok && j < body.size(); ++j) {
                    char h = body[j];
                    std::uint32_t d;
                    if (h >= '0' && h <= '9') d = static_cast<std::uint32_t>(h - '0');
                    else if (h >= 'a' && h <= 'f') d = static_cast<std::uint32_t>(h - 'a' + 10);
                    else if (h >= 'A' && h <= 'F') d = static_cast<std::uint32_t>(h - 'A' + 10);
                    else { ok = false; break; }
                    cp = cp * 16 + d;
                }
            } else {
                for (std::size_t j = 1; ok && j < body.size(); ++j) {
                    char d = body[j];
                    if (d < '0' || d > '9') { ok = false; break; }
                    cp = cp * 10 + static_cast<std::uint32_t>(d - '0');
                }
            }
            if (ok) {
                detail::append_utf8(out, cp);
                i = semi + 1;
                continue;
            }
        } else {
            std::size_t count;
            const detail::NamedEntity* table = detail::named_entities(count);
            bool matched = false;
            for (std::size_t j = 0; j < count; ++j) {
                if (body == table[j].name) {
                    detail::append_utf8(out, table[j].cp);
                    matched = true;
                    break;
                }
            }
            if (matched) {
                i = semi + 1;
                continue;
            }
        }
        out += c;
        ++i;
    }
    return out;
}

namespace detail {

inline bool is_tag_name_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_tag_name_char(char c) {
    return is_tag_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == ':' ||
           c == '_';
}

class HtmlScanner {
  public:
    explicit HtmlScanner(std::string_view src) : s_(src) {}

    HtmlScan run() {
        while (pos_ < s_.size()) {
            std::size_t lt = s_.find('<', pos_);
            if (lt == std::string_view::npos) {
                emit_text(s_.substr(pos_));
                break;
            }
            emit_text(s_.substr(pos_, lt - pos_));
            pos_ = lt;
            scan_angle();
        }
        return std::move(out_);
    }

  private:
    void scan_angle() {
        // pos_ sits on '<'.
        if (s_.compare(pos_, 4, "<!--") == 0) {
            scan_comment();
            return;
        }
        if (s_.compare(pos_, 9, "<![CDATA[") == 0) {
            std::size_t end = s_.find("]]>", pos_ + 9);
            pos_ = end == std::string_view::npos ? s_.size() : end + 3;
            return;
        }
        if (pos_ + 1 < s_.size() && (s_[pos_ + 1] == '!' || s_[pos_ + 1] == '?')) {
            std::size_t end = s_.find('>', pos_ + 1);
            pos_ = end == std::string_view::npos ? s_.size() : end + 1;
            return;
        }
        if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '/') {
            scan_close_tag();
            return;
        }
        if (pos_ + 1 < s_.size() && is_tag_name_start(s_[pos_ + 1])) {
            scan_open_tag();
            return;
        }
        // Stray '<': treat as text.
        emit_text("<");
        ++pos_;
    }

    void scan_comment() {
        std::size_t body_start = pos_ + 4;
        std::size_t end = s_.find("-->", body_start);
        std::size_t body_end = end == std::string_view::npos ? s_.size() : end;
        out_.comments.emplace_back(s_.substr(body_start, body_end - body_start));
        pos_ = end == std::string_view::npos ? s_.size() : end + 3;
    }

    void scan_close_tag() {
        std::size_t p = pos_ + 2;
        std::size_t name_start = p;
        while (p < s_.size() && is_tag_name_char(s_[p])) ++p;
        std::string name = ascii_lower(s_.substr(name_start, p - name_start));
        std::size_t end = s_.find('>', p);
        pos_ = end == std::string_view::npos ? s_.size() : end + 1;
        mark_boundary();
        if (name.empty()) return;  // "</>" and friends: drop silently
        TagEvent ev;
        ev.name = std::move(name);
        ev.closing = true;
        out_.events.push_back(std::move(ev));
    }

    void scan_open_tag() {
        std::size_t p = pos_ + 1;
        std::size_t name_start = p;
        while (p < s_.size() && is_tag_name_char(s_[p])) ++p;
        TagEvent ev;
        ev.name = ascii_lower(s_.substr(name_start, p - name_start));

        // Attributes until '>' (or EOF, tolerated).
        while (p < s_.size() && s_[p] != '>') {
            if (is_ascii_space(s_[p])) {
                ++p;
                continue;
            }
            if (s_[p] == '/') {
                ++p;
                if (p < s_.size() && s_[p] == '>') ev.self_closing = true;
                continue;
            }
            std::size_t an_start = p;
            while (p < s_.size() && !is_ascii_space(s_[p]) && s_[p] != '=' &&
                   s_[p] != '>' && s_[p] != '/')
                ++p;
            HtmlAttr attr;
            attr.name = ascii_lower(s_.substr(an_start, p - an_start));
            while (p < s_.size() && is_ascii_space(s_[p])) ++p;
            if (p < s_.size() && s_[p] == '=') {
                ++p;
                while (p < s_.size() && is_ascii_space(s_[p])) ++p;
                if (p < s_.size() && (s_[p] == '"' || s_[p] == '\'')) {
                    char q = s_[p++];
                    std::size_t v_start = p;
                    std::size_t v_end = s_.find(q, p);
                    if (v_end == std::string_view::npos) v_end = s_.size();
                    attr.value = decode_entities(s_.substr(v_start, v_end - v_start));
                    p = v_end < s_.size() ? v_end + 1 : s_.size();
                } else {
                    std::size_t v_start = p;
                    while (p < s_.size() && !is_ascii_space(s_[p]) && s_[p] != '>')
                        ++p;
                    attr.value = decode_entities(s_.substr(v_start, p - v_start));
                }
            }
            if (!attr.name.empty()) ev.attrs.push_back(std::move(attr));
        }
        pos_ = p < s_.size() ? p + 1 : s_.size();

        record_open_tag(ev);

        std::string name = ev.name;
        bool self_closing = ev.self_closing;
        std::string src_value;
        bool has_src = false;
        if (const std::string* src = ev.attr("src"); src && !trim(*src).empty()) {
            src_value = std::string(trim(*src));
            has_src = true;
        }
        out_.events.push_back(std::move(ev));

        if (name == "script") {
            if (has_src) out_.external_scripts.push_back(src_value);
            if (!self_closing) {
                bool closed = false;
                std::string raw = consume_raw_text("</script", closed);
                if (!has_src) out_.inline_scripts.push_back(std::move(raw));
                if (closed) push_close("script");
            }
        } else if (name == "style" && !self_closing) {
            bool closed = false;
            consume_raw_text("</style", closed);
            if (closed) push_close("style");
        }
        mark_boundary();
    }

    void push_close(std::string name) {
        TagEvent close;
        close.name = std::move(name);
        close.closing = true;
        out_.events.push_back(std::move(close));
    }

    void record_open_tag(const TagEvent& ev) {
        auto push_ref = [&](const char* attr_name) {
            if (const std::string* v = ev.attr(attr_name); v && !trim(*v).empty())
                out_.link_refs.emplace_back(ev.name, std::string(trim(*v)));
        };
        if (ev.name == "a" || ev.name == "area") push_ref("href");
        if (ev.name == "iframe" || ev.name == "frame") push_ref("src");

        if (out_.lang_hint.empty()) {
            if (ev.name == "html") {
                if (const std::string* v = ev.attr("lang"); v && !v->empty())
                    out_.lang_hint = ascii_lower(*v);
                else if (const std::string* x = ev.attr("xml:lang"); x && !x->empty())
                    out_.lang_hint = ascii_lower(*x);
            } else if (ev.name == "meta") {
                const std::string* he = ev.attr("http-equiv");
                const std::string* ct = ev.attr("content");
                if (he && ct && ascii_lower(*he) == "content-language" && !ct->empty())
                    out_.lang_hint = ascii_lower(std::string(trim(*ct)));
            }
        }
    }

    // Raw-text mode for script/style: everything up to the matching close tag
    // (case-insensitive), or end of input when unterminated.
    std::string consume_raw_text(std::string_view close_prefix, bool& closed) {
        std::size_t search = pos_;
        std::size_t found = std::string_view::npos;
        while (search < s_.size()) {
            std::size_t lt = s_.find('<', search);
            if (lt == std::string_view::npos) break;
            if (lt + close_prefix.size() <= s_.size()) {
                bool match = true;
                for (std::size_t j = 0; j < close_prefix.size(); ++j) {
                    char a = s_[lt + j];
                    if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
                    if (a != close_prefix[j]) {
                        match = false;
                        break;
                    }
                }
                if (match) {
                    found = lt;
                    break;
                }
            }
            search = lt + 1;
        }
        std::string body;
        if (found == std::string_view::npos) {
            closed = false;
            body = std::string(s_.substr(pos_));
            pos_ = s_.size();
        } else {
            closed = true;
            body = std::string(s_.substr(pos_, found - pos_));
            std::size_t end = s_.find('>', found);
            pos_ = end == std::string_view::npos ? s_.size() : end + 1;
        }
        return body;
    }

    void emit_text(std::string_view raw) {
        if (raw.empty()) return;
        std::string decoded = decode_entities(raw);
        for (char c : decoded) {
            // Markup delimiters never appear in visible text, even when smuggled
            // in via entities; they collapse to whitespace.
            if (c == '<' || c == '>') c = ' ';
            if (is_ascii_space(c)) {
                pending_space_ = !out_.visible_text.empty();
            } else {
                flush_pending_space();
                out_.visible_text += c;
            }
        }
    }

    void flush_pending_space() {
        if (pending_space_) {
            out_.visible_text += ' ';
            pending_space_ = false;
        }
    }

    // Element tags end any word in progress so text runs from different
    // elements never fuse into one token. Comments, CDATA, and declarations
    // stay transparent, matching how the DOM splices their surroundings.
    void mark_boundary() { pending_space_ = !out_.visible_text.empty(); }

    std::string_view s_;
    std::size_t pos_ = 0;
    HtmlScan out_;
    bool pending_space_ = false;
};

}  // namespace detail

inline HtmlScan scan_html(std::string_view html) {
    return detail::HtmlScanner(html).run();
}

}  // namespace siterep
