#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "siterep/jsonl.hpp"
#include "siterep/url.hpp"

namespace siterep {

// The two crowdsourced rating dimensions this toolkit predicts.
enum class Dimension { trustworthiness, child_safety };

inline std::string to_string(Dimension d) {
    return d == Dimension::trustworthiness ? "trustworthiness" : "child_safety";
}

// Accepts both the full names used in files and the short CLI tokens.
inline Dimension dimension_from_string(std::string_view s) {
    if (s == "trustworthiness" || s == "trust") return Dimension::trustworthiness;
    if (s == "child_safety" || s == "child") return Dimension::child_safety;
    throw InputError("unknown dimension \"" + std::string(s) +
                     "\" (expected trust|child)");
}

// bad is the positive class for every metric in the toolkit.
enum class ClassLabel { bad = 0, good = 1 };

inline std::string to_string(ClassLabel c) {
    return c == ClassLabel::bad ? "bad" : "good";
}

inline ClassLabel class_from_string(std::string_view s) {
    if (s == "bad") return ClassLabel::bad;
    if (s == "good") return ClassLabel::good;
    throw DataError("unknown class label \"" + std::string(s) + "\"");
}

// Rating-to-class threshold. 40 and 60 are the supported presets; other
// values in (0,100) are accepted but flagged as non-preset by the CLI.
struct Threshold {
    int value = 40;

    explicit Threshold(int v = 40) : value(v) {
        if (v <= 0 || v >= 100)
            throw InputError("threshold must lie in (0,100), got " +
                             std::to_string(v));
    }

    bool operator==(const Threshold&) const = default;
};

// A rating r in [0,100] maps to bad exactly when r < T_h; the boundary
// rating r == T_h is good.
inline ClassLabel label(int rating, Threshold th) {
    if (rating < 0 || rating > 100)
        throw DataError("rating out of range [0,100]: " + std::to_string(rating));
    return rating < th.value ? ClassLabel::bad : ClassLabel::good;
}

struct RatingRecord {
    std::string url;  // URL or bare hostname as supplied by the source
    Dimension dimension = Dimension::trustworthiness;
    int rating = 0;  // [0,100]
    std::optional<int> confidence;

    bool operator==(const RatingRecord&) const = default;
};

inline json to_json(const RatingRecord& r) {
    json j;
    j["url"] = r.url;
    j["dimension"] = to_string(r.dimension);
    j["rating"] = r.rating;
    if (r.confidence) j["confidence"] = *r.confidence;
    return j;
}

inline RatingRecord rating_from_json(const json& j) {
    if (!j.is_object() || !j.contains("url") || !j.contains("rating"))
        throw DataError("rating record needs url and rating: " + j.dump());
    RatingRecord r;
    r.url = j.at("url").get<std::string>();
    r.dimension = dimension_from_string(
        j.value("dimension", std::string("trustworthiness")));
    r.rating = j.at("rating").get<int>();
    if (r.rating < 0 || r.rating > 100)
        throw DataError("rating out of range [0,100] in record: " + j.dump());
    if (j.contains("confidence") && !j.at("confidence").is_null())
        r.confidence = j.at("confidence").get<int>();
    return r;
}

// Ratings are keyed by registrable host: the upstream system rates whole
// sites, so two URLs on the same registrable domain share one rating.
// Accepts full URLs and bare hostnames.
inline std::string rating_key(std::string_view url_or_host) {
    if (auto u = parse_url(url_or_host)) return registrable_host(u->host);
    return registrable_host(ascii_lower(trim(url_or_host)));
}

// Common interface for rating backends, so feature extraction and tests are
// agnostic to whether ratings come from a file or an HTTP service.
class RatingSource {
  public:
    virtual ~RatingSource() = default;

    // One entry per queried URL, in query order. URLs with no known rating
    // map to nullopt — absence is meaningful (family unavailability), never
    // substituted with a default rating.
    virtual std::vector<std::optional<RatingRecord>> get_ratings(
        const std::vector<std::string>& urls, Dimension dim) = 0;
};

// In-memory source backed by a JSONL fixture of RatingRecords.
class FixtureRatingSource : public RatingSource {
  public:
    explicit FixtureRatingSource(const std::filesystem::path& path) {
        for (const json& j : read_jsonl(path)) add(rating_from_json(j));
    }
    FixtureRatingSource() = default;

    void add(RatingRecord rec) {
        std::string key = rating_key(rec.url);
        table_[{key, rec.dimension}] = std::move(rec);
    }

    std::vector<std::optional<RatingRecord>> get_ratings(
        const std::vector<std::string>& urls, Dimension dim) override {
        std::vector<std::optional<RatingRecord>> out;
        out.reserve(urls.size());
        for (const auto& u : urls) {
            auto it = table_.find({rating_key(u), dim});
            if (it == table_.end())
                out.emplace_back(std::nullopt);
            else
                out.emplace_back(it->second);
        }
        return out;
    }

    std::size_t size() const { return table_.size(); }

  private:
    std::map<std::pair<std::string, Dimension>, RatingRecord> table_;
};

inline void write_ratings(const std::filesystem::path& path,
                          const std::vector<RatingRecord>& records,
                          const std::string& config_hash = "") {
    JsonlMeta meta;
    meta.kind = "ratings";
    meta.config_hash = config_hash;
    std::vector<json> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back(to_json(r));
    write_jsonl(path, meta, lines);
}

inline std::vector<RatingRecord> read_ratings(const std::filesystem::path& path) {
    std::vector<RatingRecord> out;
    for (const json& j : read_jsonl(path)) out.push_back(rating_from_json(j));
    return out;
}

}  // namespace siterep
