#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "siterep/bundle.hpp"

using namespace siterep;
namespace fs = std::filesystem;

namespace {
FeatureBundle sample_bundle() {
    FeatureBundle b;
    b.url = "http://a.test/";
    b.label = ClassLabel::bad;
    b.family(Family::H) = std::vector<double>{1, 2, 3};
    b.family(Family::J) = std::vector<double>{0.5};
    // E and T left absent.
    return b;
}
}  // namespace

TEST_CASE("bundle JSON carries availability flags, not zero fills") {
    json j = to_json(sample_bundle());
    CHECK(j["H"]["available"] == true);
    CHECK(j["J"]["available"] == true);
    CHECK(j["E"]["available"] == false);
    CHECK_FALSE(j["E"].contains("values"));
    CHECK(j["T"]["available"] == false);
    CHECK(j["label"] == "bad");
}

TEST_CASE("bundle JSON round trip") {
    auto b = sample_bundle();
    CHECK(bundle_from_json(to_json(b)) == b);

    b.label.reset();
    b.family(Family::E) = std::vector<double>{10, 20, 15.5};
    CHECK(bundle_from_json(to_json(b)) == b);
}

TEST_CASE("bundle without H family is rejected") {
    json j;
    j["url"] = "http://a.test/";
    j["label"] = nullptr;
    j["H"]["available"] = false;
    CHECK_THROWS_AS(bundle_from_json(j), DataError);
}

TEST_CASE("available family without values is rejected") {
    json j = to_json(sample_bundle());
    j["J"] = json{{"available", true}};
    CHECK_THROWS_AS(bundle_from_json(j), DataError);
}

TEST_CASE("bundle JSONL file round trip") {
    auto dir = fs::temp_directory_path() / "siterep_test";
    fs::create_directories(dir);
    auto path = dir / "bundles.jsonl";

    std::vector<FeatureBundle> bundles = {sample_bundle()};
    bundles.push_back(sample_bundle());
    bundles[1].url = "http://b.test/";
    bundles[1].label = ClassLabel::good;
    bundles[1].family(Family::J).reset();

    write_bundles(path, bundles, "beef");
    auto back = read_bundles(path);
    CHECK(back == bundles);
}

TEST_CASE("family name mapping") {
    CHECK(family_from_string("H") == Family::H);
    CHECK(family_from_string("T") == Family::T);
    CHECK(to_string(Family::E) == "E");
    CHECK_THROWS_AS(family_from_string("X"), InputError);
}
