#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "siterep/feature_schema.hpp"

using namespace siterep;
namespace fs = std::filesystem;

static const fs::path kDataDir = fs::path(SITEREP_SOURCE_DIR) / "data";

TEST_CASE("shipped feature schema matches the built-in defaults") {
    auto shipped = load_feature_schema(kDataDir / "feature_schema.json");
    CHECK(shipped == default_feature_schema());
}

TEST_CASE("shipped pattern file matches the built-in defaults") {
    auto shipped = load_patterns(kDataDir / "patterns.json");
    CHECK(shipped == default_patterns());
}

TEST_CASE("shipped stopword list exists and is plausible") {
    REQUIRE(fs::exists(kDataDir / "stopwords_en.txt"));
    CHECK(fs::file_size(kDataDir / "stopwords_en.txt") > 100);
}
