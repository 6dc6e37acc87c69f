#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "siterep/jsonl.hpp"
#include "siterep/reputation.hpp"

namespace siterep {

// The four feature families. H (HTML structure) is always available; J
// (JavaScript) exists only for pages with scripts; E (embedded-link rating
// ECDF) only when at least one out-link has a rating at or below C_r; T
// (topic proportions) only when the page has tokens known to the topic model.
enum class Family { H = 0, J = 1, E = 2, T = 3 };

inline constexpr std::array<Family, 4> kAllFamilies = {Family::H, Family::J,
                                                       Family::E, Family::T};

inline std::string to_string(Family f) {
    switch (f) {
        case Family::H: return "H";
        case Family::J: return "J";
        case Family::E: return "E";
        case Family::T: return "T";
    }
    throw Error("unreachable family");
}

inline Family family_from_string(std::string_view s) {
    if (s == "H") return Family::H;
    if (s == "J") return Family::J;
    if (s == "E") return Family::E;
    if (s == "T") return Family::T;
    throw InputError("unknown feature family \"" + std::string(s) +
                     "\" (expected H, J, E or T)");
}

// Per-page feature vectors, one optional slot per family. An absent family
// carries no vector — downstream code must branch on availability, never
// read zeros.
struct FeatureBundle {
    std::string url;
    std::optional<ClassLabel> label;
    std::array<std::optional<std::vector<double>>, 4> families;

    const std::optional<std::vector<double>>& family(Family f) const {
        return families[static_cast<std::size_t>(f)];
    }
    std::optional<std::vector<double>>& family(Family f) {
        return families[static_cast<std::size_t>(f)];
    }
    bool has(Family f) const { return family(f).has_value(); }

    bool operator==(const FeatureBundle&) const = default;
};

inline json to_json(const FeatureBundle& b) {
    json j;
    j["url"] = b.url;
    if (b.label)
        j["label"] = to_string(*b.label);
    else
        j["label"] = nullptr;
    for (Family f : kAllFamilies) {
        json fam;
        const auto& vec = b.family(f);
        fam["available"] = vec.has_value();
        if (vec) fam["values"] = *vec;
        j[to_string(f)] = fam;
    }
    return j;
}

inline FeatureBundle bundle_from_json(const json& j) {
    if (!j.is_object() || !j.contains("url"))
        throw DataError("feature bundle missing url: " + j.dump());
    FeatureBundle b;
    b.url = j.at("url").get<std::string>();
    if (j.contains("label") && !j.at("label").is_null())
        b.label = class_from_string(j.at("label").get<std::string>());
    for (Family f : kAllFamilies) {
        std::string key = to_string(f);
        if (!j.contains(key)) continue;
        const json& fam = j.at(key);
        if (fam.value("available", false)) {
            if (!fam.contains("values"))
                throw DataError("family " + key + " marked available but has no values");
            b.family(f) = fam.at("values").get<std::vector<double>>();
        }
    }
    if (!b.has(Family::H))
        throw DataError("feature bundle for " + b.url +
                        " lacks the always-available H family");
    return b;
}

inline void write_bundles(const std::filesystem::path& path,
                          const std::vector<FeatureBundle>& bundles,
                          const std::string& config_hash = "") {
    JsonlMeta meta;
    meta.kind = "features";
    meta.config_hash = config_hash;
    std::vector<json> lines;
    lines.reserve(bundles.size());
    for (const auto& b : bundles) lines.push_back(to_json(b));
    write_jsonl(path, meta, lines);
}

inline std::vector<FeatureBundle> read_bundles(const std::filesystem::path& path) {
    std::vector<FeatureBundle> out;
    for (const json& j : read_jsonl(path)) out.push_back(bundle_from_json(j));
    return out;
}

}  // namespace siterep
