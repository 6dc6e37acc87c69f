#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "siterep/common.hpp"

namespace siterep {

// Minimal absolute-URL value type. Fragments are never stored: they identify
// sub-resources of the same document and would only create duplicate corpus
// entries. str() recomposes a normalized form (lowercase scheme/host, default
// ports omitted, empty path rendered as "/"), so parse(str(u)).str() == str(u).
struct Url {
    std::string scheme;  // lowercase
    std::string host;    // lowercase
    int port = -1;       // -1 = scheme default
    std::string path;    // starts with '/' when non-empty
    std::string query;   // without leading '?'

    bool operator==(const Url&) const = default;

    std::string str() const {
        std::string out = scheme + "://" + host;
        if (port >= 0 && port != default_port(scheme)) {
            out += ':';
            out += std::to_string(port);
        }
        out += path.empty() ? "/" : path;
        if (!query.empty()) {
            out += '?';
            out += query;
        }
        return out;
    }

    static int default_port(std::string_view scheme) {
        if (scheme == "http") return 80;
        if (scheme == "https") return 443;
        return -1;
    }
};

namespace detail {

inline bool is_scheme_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_scheme_char(char c) {
    return is_scheme_start(c) || (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.';
}

// RFC 3986 section 5.2.4: collapse "." and ".." path segments.
inline std::string remove_dot_segments(std::string_view in) {
    std::string out;
    std::string_view input = in;
    while (!input.empty()) {
        if (input.starts_with("../")) {
            input.remove_prefix(3);
        } else if (input.starts_with("./")) {
            input.remove_prefix(2);
        } else if (input.starts_with("/./")) {
            input.remove_prefix(2);  // keep the leading '/'
        } else if (input == "/.") {
            input = "/";
        } else if (input.starts_with("/../")) {
            input.remove_prefix(3);
            auto pos = out.find_last_of('/');
            out.erase(pos == std::string::npos ? 0 : pos);
        } else if (input == "/..") {
            input = "/";
            auto pos = out.find_last_of('/');
            out.erase(pos == std::string::npos ? 0 : pos);
        } else if (input == "." || input == "..") {
            input = {};
        } else {
            std::size_t start = input.front() == '/' ? 1 : 0;
            std::size_t end = input.find('/', start);
            if (end == std::string_view::npos) end = input.size();
            out += input.substr(0, end);
            input.remove_prefix(end);
        }
    }
    return out;
}

}  // namespace detail

// Parses an absolute URL. Returns nullopt for anything that is not a
// well-formed scheme://host... reference. Fragment is dropped; userinfo is
// rejected (not seen in practice on rating targets, and a common obfuscation
// vector we do not want to silently mis-handle).
inline std::optional<Url> parse_url(std::string_view raw) {
    std::string_view s = trim(raw);
    if (s.empty() || !detail::is_scheme_start(s.front())) return std::nullopt;

    std::size_t colon = 0;
    while (colon < s.size() && detail::is_scheme_char(s[colon])) ++colon;
    if (colon >= s.size() || s[colon] != ':') return std::nullopt;

    Url u;
    u.scheme = ascii_lower(s.substr(0, colon));
    s.remove_prefix(colon + 1);
    if (!s.starts_with("//")) return std::nullopt;
    s.remove_prefix(2);

    std::size_t auth_end = s.find_first_of("/?#");
    std::string_view authority = s.substr(0, auth_end);
    s = auth_end == std::string_view::npos ? std::string_view{} : s.substr(auth_end);
    if (authority.empty() || authority.find('@') != std::string_view::npos)
        return std::nullopt;

    std::size_t port_sep = authority.rfind(':');
    if (port_sep != std::string_view::npos) {
        std::string_view port_str = authority.substr(port_sep + 1);
        if (port_str.empty()) return std::nullopt;
        int port = 0;
        for (char c : port_str) {
            if (c < '0' || c > '9') return std::nullopt;
            port = port * 10 + (c - '0');
            if (port > 65535) return std::nullopt;
        }
        u.port = port;
        authority = authority.substr(0, port_sep);
    }
    if (authority.empty()) return std::nullopt;
    u.host = ascii_lower(authority);
    for (char c : u.host)
        if (is_ascii_space(c) || c == '<' || c == '>') return std::nullopt;

    std::size_t frag = s.find('#');
    if (frag != std::string_view::npos) s = s.substr(0, frag);
    std::size_t qmark = s.find('?');
    if (qmark != std::string_view::npos) {
        u.query = std::string(s.substr(qmark + 1));
        s = s.substr(0, qmark);
    }
    u.path = detail::remove_dot_segments(s);
    if (u.port == Url::default_port(u.scheme)) u.port = -1;
    return u;
}

// Resolves a (possibly relative) reference against an absolute base, per
// RFC 3986 section 5.2. Returns the normalized absolute form, or nullopt when
// the reference is empty-ish garbage that cannot produce a URL.
inline std::optional<Url> resolve_url(const Url& base, std::string_view ref) {
    std::string_view r = trim(ref);

    // Strip any fragment first; a pure-fragment reference points at the base.
    std::size_t frag = r.find('#');
    if (frag != std::string_view::npos) r = r.substr(0, frag);
    if (r.empty()) return base;

    // Absolute reference with its own scheme.
    std::size_t colon = 0;
    if (detail::is_scheme_start(r.front())) {
        while (colon < r.size() && detail::is_scheme_char(r[colon])) ++colon;
        if (colon < r.size() && r[colon] == ':') return parse_url(r);
    }

    // Protocol-relative: inherit the base scheme.
    if (r.starts_with("//")) {
        std::string abs = base.scheme + ":" + std::string(r);
        return parse_url(abs);
    }

    Url out = base;
    if (r.starts_with("?")) {
        out.query = std::string(r.substr(1));
        return out;
    }
    out.query.clear();
    std::size_t qmark = r.find('?');
    if (qmark != std::string_view::npos) {
        out.query = std::string(r.substr(qmark + 1));
        r = r.substr(0, qmark);
    }
    if (r.empty()) {
        out.path = base.path;
        return out;
    }
    if (r.front() == '/') {
        out.path = detail::remove_dot_segments(r);
    } else {
        // Merge with the base path: everything up to its final '/'.
        std::string merged;
        std::size_t slash = base.path.find_last_of('/');
        if (slash == std::string::npos)
            merged = "/";
        else
            merged = base.path.substr(0, slash + 1);
        merged += std::string(r);
        out.path = detail::remove_dot_segments(merged);
    }
    return out;
}

// The host aggregated for rating lookups: ratings are keyed by registrable
// domain, not full hostname, because community ratings cover whole sites.
// Heuristic: last two labels, or last three when the second-level label is a
// well-known registry suffix (co.uk, com.au, ...). A full public-suffix list
// is overkill for the corpora this tool targets; the heuristic is documented
// behavior, not an attempt at PSL completeness.
inline std::string registrable_host(std::string_view host) {
    // IP literals stay as-is.
    bool all_digits_dots = !host.empty();
    for (char c : host)
        if (!(c >= '0' && c <= '9') && c != '.') all_digits_dots = false;
    if (all_digits_dots) return std::string(host);

    std::vector<std::string_view> labels;
    std::size_t start = 0;
    while (start <= host.size()) {
        std::size_t dot = host.find('.', start);
        if (dot == std::string_view::npos) {
            labels.push_back(host.substr(start));
            break;
        }
        labels.push_back(host.substr(start, dot - start));
        start = dot + 1;
    }
    if (labels.size() <= 2) return std::string(host);

    static const char* kRegistrySecond[] = {"co",  "com", "org", "net", "ac",
                                            "gov", "edu", "mil", "or"};
    std::string_view second = labels[labels.size() - 2];
    std::string_view tld = labels[labels.size() - 1];
    bool compound = false;
    if (tld.size() == 2) {  // country-code TLD
        for (const char* p : kRegistrySecond)
            if (second == p) compound = true;
    }
    std::size_t take = compound ? 3 : 2;
    std::string out;
    for (std::size_t i = labels.size() - take; i < labels.size(); ++i) {
        if (!out.empty()) out += '.';
        out += std::string(labels[i]);
    }
    return out;
}

inline std::string registrable_host(const Url& u) { return registrable_host(u.host); }

}  // namespace siterep
