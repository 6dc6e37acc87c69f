#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <unordered_set>
#include <vector>

#include "siterep/pipeline.hpp"

using namespace siterep;

namespace {

PageRecord make_page(const std::string& url, const std::string& body_html,
                     bool with_script = false,
                     const std::vector<std::string>& links = {}) {
    std::string html = "<html><head><title>t</title></head><body>";
    if (with_script) html += "<script>var x = eval('1');</script>";
    for (const auto& l : links) html += "<a href=\"" + l + "\">link</a> ";
    html += body_html;
    html += "</body></html>";
    return parse_page(url, html);
}

std::vector<PageRecord> topic_corpus() {
    // Two crisp themes so a tiny LDA run separates them.
    std::vector<PageRecord> pages;
    for (int i = 0; i < 6; ++i) {
        std::string text;
        for (int r = 0; r < 30; ++r)
            text += (i % 2 == 0) ? "piano violin concert orchestra melody "
                                 : "tiger jungle safari elephant savanna ";
        pages.push_back(make_page(
            "http://site" + std::to_string(i) + ".test/", "<p>" + text + "</p>"));
    }
    return pages;
}

}  // namespace

TEST_CASE("extract config critical rating tracks the class threshold") {
    ExtractConfig cfg;
    cfg.th = Threshold{40};
    CHECK(cfg.critical() == 40);
    cfg.th = Threshold{60};
    CHECK(cfg.critical() == 60);
    cfg.critical_override = 55;
    CHECK(cfg.critical() == 55);
    cfg.critical_override = 0;
    CHECK(cfg.critical() == 0);
}

TEST_CASE("config hash is stable and sensitive to every knob") {
    ExtractConfig a;
    std::string base = config_hash(a.echo());
    CHECK(base.size() == 16);
    CHECK(base == config_hash(a.echo()));

    ExtractConfig b = a;
    b.th = Threshold{60};
    CHECK(config_hash(b.echo()) != base);
    b = a;
    b.ecdf_bins = 10;
    CHECK(config_hash(b.echo()) != base);
    b = a;
    b.seed = 7;
    CHECK(config_hash(b.echo()) != base);
    b = a;
    b.dimension = Dimension::child_safety;
    CHECK(config_hash(b.echo()) != base);
}

TEST_CASE("topic config substitutes the default alpha when unset") {
    TopicConfig t;
    t.topics = 25;
    CHECK(t.effective_alpha() == Catch::Approx(2.0));
    t.alpha = 0.3;
    CHECK(t.effective_alpha() == Catch::Approx(0.3));
    CHECK(t.echo().at("alpha").get<double>() == Catch::Approx(0.3));
}

TEST_CASE("bundles carry H always and J only when scripts exist") {
    std::vector<PageRecord> pages = {
        make_page("http://a.test/", "<p>plain words here</p>", false),
        make_page("http://b.test/", "<p>scripted page</p>", true)};
    ExtractConfig cfg;
    FeatureSchema schema = default_feature_schema();
    PatternConfig patterns = default_patterns();

    auto bundles = extract_bundles(pages, nullptr, nullptr, cfg, schema, patterns);
    REQUIRE(bundles.size() == 2);
    CHECK(bundles[0].url == "http://a.test/");
    CHECK(bundles[0].has(Family::H));
    CHECK_FALSE(bundles[0].has(Family::J));
    CHECK(bundles[1].has(Family::H));
    CHECK(bundles[1].has(Family::J));
    // No rating source and no topic model: E and T are absent, labels unset.
    for (const auto& b : bundles) {
        CHECK_FALSE(b.has(Family::E));
        CHECK_FALSE(b.has(Family::T));
        CHECK_FALSE(b.label.has_value());
    }
    CHECK(bundles[0].family(Family::H)->size() == schema.html_features.size());
    CHECK(bundles[1].family(Family::J)->size() == schema.js_features.size());
}

TEST_CASE("labels come from page ratings thresholded strictly below T_h") {
    std::vector<PageRecord> pages = {
        make_page("http://bad.test/", "<p>x</p>"),
        make_page("http://edge.test/", "<p>x</p>"),
        make_page("http://good.test/", "<p>x</p>"),
        make_page("http://unrated.test/", "<p>x</p>")};
    FixtureRatingSource src;
    src.add({"bad.test", Dimension::trustworthiness, 39, std::nullopt});
    src.add({"edge.test", Dimension::trustworthiness, 40, std::nullopt});
    src.add({"good.test", Dimension::trustworthiness, 90, std::nullopt});

    ExtractConfig cfg;
    cfg.th = Threshold{40};
    auto bundles = extract_bundles(pages, &src, nullptr, cfg, default_feature_schema(),
                                   default_patterns());
    REQUIRE(bundles.size() == 4);
    REQUIRE(bundles[0].label.has_value());
    CHECK(*bundles[0].label == ClassLabel::bad);
    REQUIRE(bundles[1].label.has_value());
    CHECK(*bundles[1].label == ClassLabel::good);  // boundary rating is good
    REQUIRE(bundles[2].label.has_value());
    CHECK(*bundles[2].label == ClassLabel::good);
    CHECK_FALSE(bundles[3].label.has_value());
}

TEST_CASE("E family appears only when rated out-links survive the cutoff") {
    std::vector<PageRecord> pages = {
        make_page("http://hub.test/", "<p>x</p>", false,
                  {"http://l1.test/", "http://l2.test/", "http://l3.test/"}),
        make_page("http://clean.test/", "<p>x</p>", false,
                  {"http://l3.test/"}),
        make_page("http://island.test/", "<p>x</p>")};
    FixtureRatingSource src;
    src.add({"l1.test", Dimension::trustworthiness, 10, std::nullopt});
    src.add({"l2.test", Dimension::trustworthiness, 35, std::nullopt});
    src.add({"l3.test", Dimension::trustworthiness, 80, std::nullopt});

    ExtractConfig cfg;
    cfg.th = Threshold{40};  // C_r tracks it
    cfg.ecdf_bins = 4;
    auto bundles = extract_bundles(pages, &src, nullptr, cfg, default_feature_schema(),
                                   default_patterns());
    REQUIRE(bundles.size() == 3);
    // hub links to two ratings <= 40, so E exists with k+1 values.
    REQUIRE(bundles[0].has(Family::E));
    CHECK(bundles[0].family(Family::E)->size() == 5);
    // clean's only rated link is above the cutoff; island has no links.
    CHECK_FALSE(bundles[1].has(Family::E));
    CHECK_FALSE(bundles[2].has(Family::E));

    // sorted kept ratings {10,35}; quantile indices for k=4 land on them.
    const auto& e = *bundles[0].family(Family::E);
    CHECK(e[0] == Catch::Approx(10.0));
    CHECK(e[3] == Catch::Approx(35.0));
    CHECK(e[4] == Catch::Approx(22.5));  // mean

    // Raising the cutoff lets the 80 through.
    cfg.critical_override = 100;
    auto wide = extract_bundles(pages, &src, nullptr, cfg, default_feature_schema(),
                                default_patterns());
    REQUIRE(wide[1].has(Family::E));
    CHECK((*wide[1].family(Family::E))[4] == Catch::Approx(80.0));
}

TEST_CASE("link ratings batch through one source query in page order") {
    // A counting source verifies extract_bundles makes exactly two queries:
    // one for page labels, one for all out-links concatenated.
    struct CountingSource : RatingSource {
        int calls = 0;
        std::vector<std::size_t> sizes;
        std::vector<std::optional<RatingRecord>> get_ratings(
            const std::vector<std::string>& urls, Dimension dim) override {
            ++calls;
            sizes.push_back(urls.size());
            std::vector<std::optional<RatingRecord>> out;
            for (const auto& u : urls)
                out.push_back(RatingRecord{u, dim, 50, std::nullopt});
            return out;
        }
    } src;

    std::vector<PageRecord> pages = {
        make_page("http://a.test/", "<p>x</p>", false,
                  {"http://x.test/", "http://y.test/"}),
        make_page("http://b.test/", "<p>x</p>", false, {"http://z.test/"})};
    ExtractConfig cfg;
    cfg.critical_override = 100;
    auto bundles = extract_bundles(pages, &src, nullptr, cfg, default_feature_schema(),
                                   default_patterns());
    CHECK(src.calls == 2);
    REQUIRE(src.sizes.size() == 2);
    CHECK(src.sizes[0] == 2);  // page labels
    CHECK(src.sizes[1] == 3);  // concatenated out-links
    REQUIRE(bundles[0].has(Family::E));
    REQUIRE(bundles[1].has(Family::E));
}

TEST_CASE("topic model training and fold-in populate the T family") {
    auto pages = topic_corpus();
    TopicConfig tcfg;
    tcfg.topics = 2;
    tcfg.train_sweeps = 120;
    std::unordered_set<std::string> stop{"t"};  // drop the shared title token
    TopicModel model = train_topic_model(pages, tcfg, stop, 11);
    CHECK(model.K == 2);
    CHECK(model.vocab.size() == 10);

    ExtractConfig cfg;
    cfg.topics_enabled = true;
    cfg.fold_in_sweeps = 40;
    cfg.seed = 5;
    auto bundles = extract_bundles(pages, nullptr, &model, cfg, default_feature_schema(),
                                   default_patterns());
    for (const auto& b : bundles) {
        REQUIRE(b.has(Family::T));
        const auto& theta = *b.family(Family::T);
        REQUIRE(theta.size() == 2);
        double sum = theta[0] + theta[1];
        CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    }
    // The two themes dominate opposite topics.
    const auto& t0 = *bundles[0].family(Family::T);
    const auto& t1 = *bundles[1].family(Family::T);
    int top0 = t0[0] > t0[1] ? 0 : 1;
    int top1 = t1[0] > t1[1] ? 0 : 1;
    CHECK(top0 != top1);
    CHECK(std::max(t0[0], t0[1]) > 0.8);

    SECTION("pages with no known vocabulary get no T family") {
        auto alien = make_page("http://alien.test/",
                               "<p>zzz qqq www unseen terms only</p>");
        auto ab = extract_bundles({alien}, nullptr, &model, cfg,
                                  default_feature_schema(), default_patterns());
        CHECK(ab[0].has(Family::H));
        CHECK_FALSE(ab[0].has(Family::T));
    }

    SECTION("topics_enabled=false suppresses T even with a model") {
        cfg.topics_enabled = false;
        auto nb = extract_bundles(pages, nullptr, &model, cfg, default_feature_schema(),
                                  default_patterns());
        for (const auto& b : nb) CHECK_FALSE(b.has(Family::T));
    }
}

TEST_CASE("extraction is deterministic in the seed") {
    auto pages = topic_corpus();
    TopicConfig tcfg;
    tcfg.topics = 2;
    tcfg.train_sweeps = 60;
    std::unordered_set<std::string> stop;
    TopicModel model = train_topic_model(pages, tcfg, stop, 3);

    ExtractConfig cfg;
    cfg.seed = 42;
    cfg.fold_in_sweeps = 30;
    auto a = extract_bundles(pages, nullptr, &model, cfg, default_feature_schema(),
                             default_patterns());
    auto b = extract_bundles(pages, nullptr, &model, cfg, default_feature_schema(),
                             default_patterns());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    // Same model, different fold-in seed: thetas may move, structure stays.
    cfg.seed = 43;
    auto c = extract_bundles(pages, nullptr, &model, cfg, default_feature_schema(),
                             default_patterns());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].family(Family::H) == c[i].family(Family::H));
        CHECK(a[i].has(Family::T) == c[i].has(Family::T));
    }
}

TEST_CASE("empty inputs are rejected") {
    TopicConfig tcfg;
    std::unordered_set<std::string> stop;
    CHECK_THROWS_AS(train_topic_model({}, tcfg, stop, 1), InputError);
    ExtractConfig cfg;
    CHECK_THROWS_AS(extract_bundles({}, nullptr, nullptr, cfg, default_feature_schema(),
                                    default_patterns()),
                    InputError);
}

TEST_CASE("feature name tables align with family dimensions") {
    FeatureSchema schema = default_feature_schema();
    auto h = family_feature_names(Family::H, schema, schema.html_features.size());
    CHECK(h == schema.html_features);
    auto j = family_feature_names(Family::J, schema, schema.js_features.size());
    CHECK(j == schema.js_features);

    auto e = family_feature_names(Family::E, schema, 6);
    REQUIRE(e.size() == 6);
    CHECK(e[0] == "ecdf_bin_1");
    CHECK(e[4] == "ecdf_bin_5");
    CHECK(e[5] == "ecdf_mean");

    auto t = family_feature_names(Family::T, schema, 3);
    CHECK(t == std::vector<std::string>{"topic_0", "topic_1", "topic_2"});

    CHECK_THROWS_AS(family_feature_names(Family::H, schema, 3), DataError);
}
