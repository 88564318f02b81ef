#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "tqa/articles.hpp"

using namespace tqa;

TEST_CASE("article construction validates") {
    CHECK_THROWS_AS(TimestampedArticle(Date{2020, 1, 1}, "e", ""), SchemaError);
    CHECK_THROWS_AS(TimestampedArticle(Date{2020, 13, 1}, "e", "x"), SchemaError);
}

TEST_CASE("unified document sorts by date and renders date headers") {
    std::vector<TimestampedArticle> arts = {
        {Date::parse("2015-06-01"), "Alice", "second"},
        {Date::parse("2013-01-05"), "Alice", "first"},
        {Date::parse("2020-12-31"), "Alice", "third"},
    };
    EvidenceBundle b = build_unified_document(arts);
    CHECK(b.mode == BundleMode::unified);
    REQUIRE(b.texts.size() == 3);
    CHECK(b.texts[0] == std::pair<std::string, std::string>{"2013-01-05", "first"});
    CHECK(b.texts[2] == std::pair<std::string, std::string>{"2020-12-31", "third"});
    CHECK(b.rendered().rfind("[2013-01-05]\nfirst", 0) == 0);
}

TEST_CASE("unified document is permutation-invariant") {
    std::vector<TimestampedArticle> arts = {
        {Date::parse("2013-01-05"), "Alice", "a"},
        {Date::parse("2013-01-05"), "Alice", "b"},  // same-day tie broken by text
        {Date::parse("2015-06-01"), "Alice", "c"},
        {Date::parse("2011-02-02"), "Alice", "d"},
    };
    std::string reference = build_unified_document(arts).rendered();
    std::mt19937 rng(3);
    for (int i = 0; i < 20; ++i) {
        std::shuffle(arts.begin(), arts.end(), rng);
        CHECK(build_unified_document(arts).rendered() == reference);
    }
}

TEST_CASE("mixed entities are rejected with both names in the message") {
    std::vector<TimestampedArticle> arts = {
        {Date::parse("2013-01-05"), "Alice", "a"},
        {Date::parse("2014-01-05"), "Bob", "b"},
    };
    try {
        build_unified_document(arts);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        std::string msg = e.what();
        CHECK(msg.find("Alice") != std::string::npos);
        CHECK(msg.find("Bob") != std::string::npos);
    }
}

TEST_CASE("articles JSONL parses and reports bad lines by number") {
    std::string good =
        R"({"entity": "Alice", "timestamp": "2013-01-05", "text": "t1"})" "\n"
        "\n"
        R"({"entity": "BOB", "timestamp": "2014-02-06", "text": "t2"})" "\n";
    auto arts = parse_articles_jsonl(good);
    REQUIRE(arts.size() == 2);
    CHECK(arts[0].entity == "Alice");
    CHECK(arts[1].timestamp == Date{2014, 2, 6});

    try {
        parse_articles_jsonl("{\"entity\": \"A\"}\n{broken\n");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("grouping keys by normalized entity") {
    auto groups = group_articles_by_entity({
        {Date::parse("2013-01-05"), "Alice  Smith", "a"},
        {Date::parse("2014-01-05"), "alice smith", "b"},
        {Date::parse("2014-01-05"), "Bob", "c"},
    });
    REQUIRE(groups.size() == 2);
    CHECK(groups.at("alice smith").size() == 2);
    CHECK(groups.at("bob").size() == 1);
}
