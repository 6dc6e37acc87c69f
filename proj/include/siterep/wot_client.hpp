#pragma once

#include <httplib.h>

// See crawl.hpp: glibc's resolv.h leaks a `_res` macro that breaks Eigen.
#ifdef _res
#undef _res
#endif

#include <chrono>
#include <cstdlib>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "siterep/jsonl.hpp"
#include "siterep/reputation.hpp"
#include "siterep/url.hpp"

namespace siterep {

inline constexpr const char* kApiKeyEnvVar = "SITEREP_API_KEY";

// Wire contract (public reputation-API shape):
//   GET <endpoint>?hosts=h1/h2/.../&key=KEY
// answered with a JSON object keyed by hostname:
//   {"h1": {"target": "h1", "0": [rating, confidence], "4": [rating, confidence]},
//    "h2": {"target": "h2"}}
// Component "0" is trustworthiness, "4" is child safety; a missing host or
// missing component means "no rating", which is not an error.
struct HttpRatingConfig {
    std::string endpoint;  // absolute URL of the query path
    std::string api_key;   // empty: read from SITEREP_API_KEY
    int chunk_size = 100;  // hosts per request
    int max_retries = 3;   // additional attempts after the first
    int retry_backoff_ms = 250;  // doubled on every retry
    double timeout_s = 10.0;
};

namespace detail {

inline std::string rating_component(Dimension dim) {
    return dim == Dimension::trustworthiness ? "0" : "4";
}

inline std::string percent_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        bool plain = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                     (c >= '0' && c <= '9') || c == '-' || c == '.' ||
                     c == '_' || c == '~';
        if (plain) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

inline std::string quoted_payload(std::string_view body) {
    constexpr std::size_t kMax = 200;
    std::string quoted(body.substr(0, kMax));
    if (body.size() > kMax) quoted += "...";
    return quoted;
}

}  // namespace detail

class HttpRatingSource : public RatingSource {
  public:
    explicit HttpRatingSource(HttpRatingConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.api_key.empty()) {
            if (const char* env = std::getenv(kApiKeyEnvVar)) cfg_.api_key = env;
        }
        if (cfg_.endpoint.empty())
            throw InputError("http rating source requires an endpoint");
        if (cfg_.api_key.empty())
            throw InputError(std::string("http rating source requires an API "
                                         "key (flag/config or ") +
                             kApiKeyEnvVar + ")");
        if (cfg_.chunk_size < 1) throw InputError("chunk_size must be >= 1");
        auto parsed = parse_url(cfg_.endpoint);
        if (!parsed || (parsed->scheme != "http" && parsed->scheme != "https"))
            throw InputError("http rating source endpoint is not a valid "
                             "http(s) URL: " + cfg_.endpoint);
        endpoint_ = *parsed;
    }

    std::vector<std::optional<RatingRecord>> get_ratings(
        const std::vector<std::string>& urls, Dimension dim) override {
        std::vector<std::optional<RatingRecord>> out(urls.size());
        if (urls.empty()) return out;

        // One query per registrable host, answers fanned back out per URL.
        std::vector<std::string> hosts;
        std::map<std::string, std::vector<std::size_t>> host_to_indices;
        for (std::size_t i = 0; i < urls.size(); ++i) {
            std::string key = rating_key(urls[i]);
            auto [it, fresh] = host_to_indices.try_emplace(key);
            if (fresh) hosts.push_back(key);
            it->second.push_back(i);
        }

        const std::string component = detail::rating_component(dim);
        for (std::size_t begin = 0; begin < hosts.size();
             begin += static_cast<std::size_t>(cfg_.chunk_size)) {
            std::size_t end = std::min(
                hosts.size(), begin + static_cast<std::size_t>(cfg_.chunk_size));
            json body = query_chunk(hosts, begin, end);
            for (std::size_t h = begin; h < end; ++h) {
                auto it = body.find(hosts[h]);
                if (it == body.end() || !it->is_object()) continue;
                auto comp = it->find(component);
                if (comp == it->end()) continue;
                if (!comp->is_array() || comp->empty() ||
                    !(*comp)[0].is_number_integer())
                    throw DataError("rating api: malformed component for host " +
                                    hosts[h] + " in payload: " +
                                    detail::quoted_payload(body.dump()));
                int rating = (*comp)[0].get<int>();
                if (rating < 0 || rating > 100)
                    throw DataError("rating api: rating out of range [0,100] "
                                    "for host " + hosts[h] + ": " +
                                    std::to_string(rating));
                std::optional<int> confidence;
                if (comp->size() > 1 && (*comp)[1].is_number_integer())
                    confidence = (*comp)[1].get<int>();
                for (std::size_t i : host_to_indices[hosts[h]]) {
                    RatingRecord rec;
                    rec.url = urls[i];
                    rec.dimension = dim;
                    rec.rating = rating;
                    rec.confidence = confidence;
                    out[i] = rec;
                }
            }
        }
        return out;
    }

  private:
    json query_chunk(const std::vector<std::string>& hosts, std::size_t begin,
                     std::size_t end) {
        std::string hosts_param;
        for (std::size_t h = begin; h < end; ++h)
            hosts_param += detail::percent_encode(hosts[h]) + "%2F";
        std::string target = endpoint_.path + "?hosts=" + hosts_param +
                             "&key=" + detail::percent_encode(cfg_.api_key);

        std::string origin = endpoint_.scheme + "://" + endpoint_.host;
        if (endpoint_.port >= 0) origin += ":" + std::to_string(endpoint_.port);

        int backoff_ms = cfg_.retry_backoff_ms;
        std::string last_error;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(backoff_ms));
                backoff_ms *= 2;
            }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
            if (endpoint_.scheme == "https")
                throw TransportError(
                    "rating api: https endpoint but TLS support is not "
                    "compiled in", false);
#endif
            httplib::Client cli(origin);
            auto secs = static_cast<time_t>(cfg_.timeout_s);
            cli.set_connection_timeout(secs, 0);
            cli.set_read_timeout(secs, 0);
            auto res = cli.Get(target);
            if (!res) {
                last_error = "transport error " + httplib::to_string(res.error());
                continue;  // retriable
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;  // retriable
            }
            if (res->status != 200)
                throw TransportError("rating api: HTTP " +
                                         std::to_string(res->status) +
                                         " for batch request",
                                     false);
            json parsed = json::parse(res->body, nullptr, false);
            if (parsed.is_discarded() || !parsed.is_object())
                throw DataError("rating api: response is not a JSON object: " +
                                detail::quoted_payload(res->body));
            return parsed;
        }
        throw TransportError("rating api: giving up after " +
                                 std::to_string(cfg_.max_retries + 1) +
                                 " attempts (" + last_error + ")",
                             true);
    }

    HttpRatingConfig cfg_;
    Url endpoint_;
};

}  // namespace siterep
