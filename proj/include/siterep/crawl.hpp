#pragma once

#include <httplib.h>

// glibc's resolv.h (reached through the HTTP client) leaks an object-like
// `_res` macro that corrupts unrelated declarations, notably Eigen's. Nothing
// here touches the BIND-era resolver state, so drop it.
#ifdef _res
#undef _res
#endif

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "siterep/corpus.hpp"

namespace siterep {

struct CrawlConfig {
    int max_parallel = 4;
    int per_host_delay_ms = 500;
    double timeout_s = 10.0;
    std::size_t max_body_bytes = 2 * 1024 * 1024;
    std::string user_agent = "siterep/0.1";
    bool respect_robots = false;        // minimal allow/deny on robots.txt
    bool fetch_external_scripts = false;
};

namespace detail {

// Politeness and robots caching key: one origin = one server instance.
inline std::string host_key(const Url& u) {
    std::string key = u.host;
    if (u.port >= 0) key += ":" + std::to_string(u.port);
    return key;
}

// Minimal robots.txt reading: Disallow prefixes from every `User-agent: *`
// group. Anything fancier (wildcards, Allow precedence) is out of scope.
struct RobotsRules {
    std::vector<std::string> disallow;

    bool allows(const std::string& path) const {
        for (const auto& prefix : disallow)
            if (!prefix.empty() && path.rfind(prefix, 0) == 0) return false;
        return true;
    }
};

inline RobotsRules parse_robots(std::string_view body) {
    RobotsRules rules;
    bool star_group = false;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t eol = body.find('\n', pos);
        if (eol == std::string_view::npos) eol = body.size();
        std::string line(body.substr(pos, eol - pos));
        pos = eol + 1;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        std::string lower = ascii_lower(trim(line));
        if (lower.rfind("user-agent:", 0) == 0) {
            star_group = trim(lower.substr(11)) == "*";
        } else if (star_group && lower.rfind("disallow:", 0) == 0) {
            std::string path = std::string(trim(line.substr(9)));
            if (!path.empty()) rules.disallow.push_back(path);
        }
    }
    return rules;
}

struct FetchBody {
    int status = 0;  // HTTP status, or a FetchFailure code when negative
    std::string body;
};

inline httplib::Client make_client(const Url& u, const CrawlConfig& cfg) {
    std::string origin = u.scheme + "://" + u.host;
    if (u.port >= 0) origin += ":" + std::to_string(u.port);
    httplib::Client cli(origin);
    auto secs = static_cast<time_t>(cfg.timeout_s);
    auto usecs = static_cast<time_t>((cfg.timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    cli.set_follow_location(true);
    cli.set_default_headers({{"User-Agent", cfg.user_agent}});
    return cli;
}

inline FetchBody fetch_body(const Url& u, const CrawlConfig& cfg,
                            bool require_html) {
    using clock = std::chrono::steady_clock;
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (u.scheme == "https") return {kFetchConnectError, ""};
#endif
    auto cli = make_client(u, cfg);
    std::string target = u.path;
    if (!u.query.empty()) target += "?" + u.query;

    std::string body;
    bool too_large = false;
    bool not_html = false;
    auto started = clock::now();
    auto res = cli.Get(
        target,
        [&](const httplib::Response& response) {
            // A missing Content-Type is tolerated as HTML; an explicit
            // non-HTML type is a recorded failure.
            if (require_html) {
                auto ct = response.get_header_value("Content-Type");
                if (!ct.empty() &&
                    ascii_lower(ct).find("html") == std::string::npos) {
                    not_html = true;
                    return false;
                }
            }
            return true;
        },
        [&](const char* data, std::size_t len) {
            if (body.size() + len > cfg.max_body_bytes) {
                too_large = true;
                return false;
            }
            body.append(data, len);
            return true;
        });

    if (not_html) return {kFetchNotHtml, ""};
    if (too_large) return {kFetchTooLarge, ""};
    if (!res) {
        double elapsed =
            std::chrono::duration<double>(clock::now() - started).count();
        switch (res.error()) {
            case httplib::Error::ConnectionTimeout:
                return {kFetchTimeout, ""};
            case httplib::Error::Connection:
                return {kFetchConnectError, ""};
            case httplib::Error::Read:
            case httplib::Error::Write:
                // httplib reports a read timeout as a read error; use the
                // clock to tell the two apart.
                return {elapsed >= cfg.timeout_s * 0.9 ? kFetchTimeout
                                                       : kFetchReadError,
                        ""};
            default:
                return {kFetchConnectError, ""};
        }
    }
    return {res->status, std::move(body)};
}

}  // namespace detail

// Fetches every URL, bounded to max_parallel requests in flight with a
// per-origin politeness delay, and returns one PageRecord per input in input
// order. Failures never abort the batch; they yield a record whose
// http_status holds the (negative) failure class and whose html is empty.
inline std::vector<PageRecord> fetch_pages(const std::vector<std::string>& urls,
                                           const CrawlConfig& cfg = {}) {
    if (urls.empty()) throw InputError("fetch_pages: empty input");
    if (cfg.max_parallel < 1) throw InputError("max_parallel must be >= 1");
    if (cfg.timeout_s <= 0) throw InputError("timeout must be positive");

    using clock = std::chrono::steady_clock;
    std::vector<PageRecord> out(urls.size());

    std::mutex politeness_mu;
    std::map<std::string, clock::time_point> next_allowed;
    auto wait_for_turn = [&](const std::string& key) {
        clock::time_point wakeup;
        {
            std::lock_guard<std::mutex> lock(politeness_mu);
            auto now = clock::now();
            auto& slot = next_allowed[key];
            wakeup = slot < now ? now : slot;
            slot = wakeup + std::chrono::milliseconds(cfg.per_host_delay_ms);
        }
        std::this_thread::sleep_until(wakeup);
    };

    std::mutex robots_mu;
    std::map<std::string, detail::RobotsRules> robots_cache;
    auto robots_allow = [&](const Url& u) {
        if (!cfg.respect_robots) return true;
        const std::string key = detail::host_key(u);
        {
            std::lock_guard<std::mutex> lock(robots_mu);
            if (auto it = robots_cache.find(key); it != robots_cache.end())
                return it->second.allows(u.path);
        }
        Url robots = u;
        robots.path = "/robots.txt";
        robots.query.clear();
        wait_for_turn(key);
        auto res = detail::fetch_body(robots, cfg, false);
        detail::RobotsRules rules;
        if (res.status == 200) rules = detail::parse_robots(res.body);
        std::lock_guard<std::mutex> lock(robots_mu);
        auto [it, _] = robots_cache.try_emplace(key, std::move(rules));
        return it->second.allows(u.path);
    };

    auto fetch_one = [&](std::size_t i) {
        const std::string& raw = urls[i];
        auto parsed = parse_url(raw);
        auto now_unix = [] {
            return static_cast<std::int64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count());
        };
        if (!parsed) {
            out[i].url = raw;
            out[i].http_status = kFetchInvalidUrl;
            out[i].fetched_at = now_unix();
            return;
        }
        const Url& u = *parsed;
        if (!robots_allow(u)) {
            out[i].url = u.str();
            out[i].http_status = kFetchRobotsDenied;
            out[i].fetched_at = now_unix();
            return;
        }
        wait_for_turn(detail::host_key(u));
        auto res = detail::fetch_body(u, cfg, true);
        if (res.status < 0) {
            out[i].url = u.str();
            out[i].http_status = res.status;
            out[i].fetched_at = now_unix();
            return;
        }
        out[i] = parse_page(u, res.body);
        out[i].http_status = res.status;
        out[i].fetched_at = now_unix();

        if (cfg.fetch_external_scripts) {
            auto scan = scan_html(out[i].html);
            for (const auto& src : scan.external_scripts) {
                auto resolved = resolve_url(u, src);
                if (!resolved ||
                    (resolved->scheme != "http" && resolved->scheme != "https"))
                    continue;
                wait_for_turn(detail::host_key(*resolved));
                auto script = detail::fetch_body(*resolved, cfg, false);
                if (script.status == 200)
                    out[i].scripts.push_back(lossy_utf8(script.body));
            }
        }
    };

    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        while (true) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= urls.size()) return;
            fetch_one(i);
        }
    };
    std::size_t n_threads = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.max_parallel), urls.size());
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace siterep
