#pragma once

#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "siterep/corpus.hpp"
#include "siterep/ecdf.hpp"
#include "siterep/ensemble.hpp"
#include "siterep/feature_schema.hpp"
#include "siterep/structural.hpp"
#include "siterep/topic.hpp"

namespace siterep {

struct TopicConfig {
    int topics = kDefaultTopics;  // K
    double alpha = -1.0;          // negative: 50/K
    double eta = kDefaultEta;
    int train_sweeps = kDefaultTrainSweeps;
    int min_df = 1;

    double effective_alpha() const {
        return alpha > 0.0 ? alpha : default_alpha(topics);
    }

    json echo() const {
        json j;
        j["topics"] = topics;
        j["alpha"] = effective_alpha();
        j["eta"] = eta;
        j["train_sweeps"] = train_sweeps;
        j["min_df"] = min_df;
        return j;
    }
};

struct ExtractConfig {
    Dimension dimension = Dimension::trustworthiness;
    Threshold th{40};
    int critical_override = -1;  // C_r; negative tracks T_h
    int ecdf_bins = 75;          // k
    bool topics_enabled = true;
    int fold_in_sweeps = kDefaultFoldInSweeps;
    std::uint64_t seed = 0;

    int critical() const {
        return critical_override >= 0 ? critical_override : th.value;
    }

    json echo() const {
        json j;
        j["dimension"] = to_string(dimension);
        j["th"] = th.value;
        j["cr"] = critical();
        j["ecdf_bins"] = ecdf_bins;
        j["topics_enabled"] = topics_enabled;
        j["fold_in_sweeps"] = fold_in_sweeps;
        j["seed"] = seed;
        return j;
    }
};

inline std::string config_hash(const json& echo) {
    return to_hex(fnv1a64(echo.dump()));
}

// Topic model over the corpus' visible text. The topic family is
// unsupervised, so the model may be trained once on the full corpus and the
// resulting proportions reused across evaluation folds.
inline TopicModel train_topic_model(
    const std::vector<PageRecord>& pages, const TopicConfig& cfg,
    const std::unordered_set<std::string>& stopwords, std::uint64_t seed,
    const std::optional<std::unordered_set<std::string>>& dictionary =
        std::nullopt) {
    if (pages.empty()) throw InputError("train_topic_model: empty corpus");
    std::vector<std::string> texts;
    texts.reserve(pages.size());
    for (const auto& p : pages) texts.push_back(p.visible_text);
    Vocabulary vocab = build_vocabulary(texts, stopwords, dictionary, cfg.min_df);
    std::vector<std::vector<int>> ids;
    ids.reserve(texts.size());
    for (const auto& t : texts) ids.push_back(to_word_ids(tokenize(t), vocab));
    return train_lda(ids, vocab, cfg.topics, cfg.effective_alpha(), cfg.eta,
                     cfg.train_sweeps, seed);
}

// Assembles one FeatureBundle per page:
//   H  structural HTML features, always present;
//   J  script features, present when the page has script bodies;
//   E  ECDF over rated out-links at or below C_r, absent without such links;
//   T  fold-in topic proportions, absent when no corpus word is known.
// The label comes from the page's own rating thresholded at T_h; pages the
// source cannot rate stay unlabeled (usable for prediction, not training).
inline std::vector<FeatureBundle> extract_bundles(
    const std::vector<PageRecord>& pages, RatingSource* ratings,
    const TopicModel* topics, const ExtractConfig& cfg,
    const FeatureSchema& schema, const PatternConfig& patterns) {
    if (pages.empty()) throw InputError("extract_bundles: empty corpus");

    // Batch every rating lookup: one query for page labels, one for links.
    std::vector<std::optional<RatingRecord>> page_ratings(pages.size());
    std::vector<std::optional<RatingRecord>> link_ratings;
    std::vector<std::size_t> link_offsets(pages.size() + 1, 0);
    if (ratings) {
        std::vector<std::string> page_urls;
        page_urls.reserve(pages.size());
        for (const auto& p : pages) page_urls.push_back(p.url);
        page_ratings = ratings->get_ratings(page_urls, cfg.dimension);

        std::vector<std::string> link_urls;
        for (std::size_t i = 0; i < pages.size(); ++i) {
            link_offsets[i] = link_urls.size();
            for (const auto& l : pages[i].out_links) link_urls.push_back(l);
        }
        link_offsets[pages.size()] = link_urls.size();
        link_ratings = ratings->get_ratings(link_urls, cfg.dimension);
    }

    std::vector<FeatureBundle> bundles;
    bundles.reserve(pages.size());
    for (std::size_t i = 0; i < pages.size(); ++i) {
        const PageRecord& page = pages[i];
        FeatureBundle b;
        b.url = page.url;
        if (page_ratings[i])
            b.label = label(page_ratings[i]->rating, cfg.th);

        b.family(Family::H) = extract_html(page, schema, patterns);
        b.family(Family::J) = extract_js(page, schema, patterns);

        if (ratings) {
            std::vector<int> rated;
            for (std::size_t l = link_offsets[i]; l < link_offsets[i + 1]; ++l)
                if (link_ratings[l]) rated.push_back(link_ratings[l]->rating);
            b.family(Family::E) = ecdf_features(
                LinkRatings::filtered(rated, cfg.critical()), cfg.ecdf_bins);
        }

        if (topics && cfg.topics_enabled) {
            auto theta = infer_theta(*topics, tokenize(page.visible_text),
                                     cfg.fold_in_sweeps,
                                     derive_seed(cfg.seed, "fold-in", i));
            if (theta.available) b.family(Family::T) = std::move(theta.theta);
        }
        bundles.push_back(std::move(b));
    }
    return bundles;
}

// Human-readable feature names per family, aligned with a trained ensemble's
// masks. H and J take names from the feature schema; E bins and topics are
// synthesized.
inline std::vector<std::string> family_feature_names(Family f,
                                                     const FeatureSchema& schema,
                                                     std::size_t dimension) {
    std::vector<std::string> names;
    switch (f) {
        case Family::H: names = schema.html_features; break;
        case Family::J: names = schema.js_features; break;
        case Family::E: {
            for (std::size_t i = 0; i + 1 < dimension; ++i)
                names.push_back("ecdf_bin_" + std::to_string(i + 1));
            names.push_back("ecdf_mean");
            break;
        }
        case Family::T: {
            for (std::size_t i = 0; i < dimension; ++i)
                names.push_back("topic_" + std::to_string(i));
            break;
        }
    }
    if (names.size() != dimension)
        throw DataError("feature name table for family " + to_string(f) +
                        " has " + std::to_string(names.size()) +
                        " entries, expected " + std::to_string(dimension));
    return names;
}

}  // namespace siterep
