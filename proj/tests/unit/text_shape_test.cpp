#include <gtest/gtest.h>

#include <random>

#include "ed2d/shape.hpp"
#include "ed2d/text.hpp"

using namespace ed2d;

TEST(Text, CountsWordRunsAndSymbols) {
    EXPECT_EQ(text::count_tokens(""), 0u);
    EXPECT_EQ(text::count_tokens("   "), 0u);
    EXPECT_EQ(text::count_tokens("Hello, world!"), 4u);
    EXPECT_EQ(text::count_tokens("COVID19 spreads"), 2u);
    // Three CJK ideographs and a full-width comma.
    EXPECT_EQ(text::count_tokens("\xe5\x81\x87\xe6\x96\xb0\xe9\x97\xbb\xef\xbc\x8c"), 4u);
}

TEST(Text, CountIsMonotoneUnderConcatenation) {
    std::mt19937 rng(7);
    const std::string alphabet = "ab1 ,.!\n";
    for (int i = 0; i < 500; ++i) {
        std::string a, b;
        for (int n = rng() % 20; n > 0; --n) a += alphabet[rng() % alphabet.size()];
        for (int n = rng() % 20; n > 0; --n) b += alphabet[rng() % alphabet.size()];
        const auto ab = text::count_tokens(a + b);
        EXPECT_GE(ab, text::count_tokens(a));
        EXPECT_GE(ab, text::count_tokens(b));
        EXPECT_LE(ab, text::count_tokens(a) + text::count_tokens(b));
    }
}

TEST(Text, TruncateKeepsPrefixWithinBudget) {
    const std::string s = "one two three, four five";
    EXPECT_EQ(text::truncate_tokens(s, 2), "one two");
    EXPECT_EQ(text::truncate_tokens(s, 4), "one two three,");
    EXPECT_EQ(text::truncate_tokens(s, 100), s);
    EXPECT_EQ(text::truncate_tokens(s, 0), "");
    for (std::size_t k = 0; k < 8; ++k) {
        const auto t = text::truncate_tokens(s, k);
        EXPECT_LE(text::count_tokens(t), k);
        EXPECT_EQ(s.rfind(t, 0), 0u);
    }
}

TEST(Text, NormalizeAndCodePoints) {
    EXPECT_EQ(text::normalize_phrase("  Toilet \t PLUME "), "toilet plume");
    EXPECT_EQ(text::code_points("abc"), 3u);
    EXPECT_EQ(text::code_points("\xe5\x81\x87\xe6\x96\xb0"), 2u);
    EXPECT_EQ(text::strip_markup("a <span class=\"x\">b</span> &amp; c"), "a b & c");
}

TEST(Shape, ConformsAndCanonicalisesEnums) {
    const auto shape = Shape::object({Shape::field("label", Shape::one_of({"real", "fake"})),
                                      Shape::field("reasoning", Shape::text(), false)});
    nlohmann::json v = {{"label", "  FAKE "}};
    EXPECT_TRUE(shape.conform(v).empty());
    EXPECT_EQ(v["label"], "fake");

    nlohmann::json bad = {{"label", "maybe"}, {"reasoning", 3}};
    const auto violations = shape.conform(bad);
    ASSERT_EQ(violations.size(), 2u);
}

TEST(Shape, ReportsListBoundsAndMissingFields) {
    const auto persona = Shape::object({Shape::field("name", Shape::text()), Shape::field("persona", Shape::text())});
    const auto shape = Shape::object({Shape::field("team", Shape::list_of(persona, 4, 4))});
    nlohmann::json three = {{"team", nlohmann::json::array({{{"name", "a"}, {"persona", "b"}},
                                                            {{"name", "a"}, {"persona", "b"}},
                                                            {{"name", "a"}}})}};
    const auto violations = shape.conform(three);
    ASSERT_EQ(violations.size(), 2u);
    EXPECT_EQ(violations[0], "team[2].persona: missing");
    EXPECT_EQ(violations[1], "team: expected 4 items, got 3");
}

TEST(Shape, IntegerBounds) {
    const auto shape = Shape::object({Shape::field("n", Shape::integer(0, 7))});
    nlohmann::json ok = {{"n", 7}};
    nlohmann::json over = {{"n", 8}};
    nlohmann::json fractional = {{"n", 2.5}};
    EXPECT_TRUE(shape.conform(ok).empty());
    EXPECT_EQ(shape.conform(over).size(), 1u);
    EXPECT_EQ(shape.conform(fractional).size(), 1u);
}

TEST(ExtractJson, FindsObjectInProse) {
    const auto shape = Shape::object({Shape::field("label", Shape::one_of({"real", "fake"}))});
    EXPECT_EQ(extract_json(R"({"label":"fake"})", shape)->at("label"), "fake");
    EXPECT_EQ(extract_json("Here you go:\n```json\n{\"label\": \"real\"}\n```\nDone.", shape)->at("label"), "real");
    EXPECT_EQ(extract_json("Answer: {\"label\": \"fake\"} thanks", shape)->at("label"), "fake");
    EXPECT_EQ(extract_json("FAKE", shape)->at("label"), "fake");
    EXPECT_EQ(extract_json("\"Real.\"", shape)->at("label"), "real");
    EXPECT_FALSE(extract_json("I cannot tell", shape).has_value());
    EXPECT_FALSE(extract_json("", shape).has_value());
}

TEST(ExtractJson, BareEnumNeedsSingleRequiredField) {
    const auto shape = Shape::object(
        {Shape::field("label", Shape::one_of({"real", "fake"})), Shape::field("reasoning", Shape::text())});
    EXPECT_FALSE(extract_json("fake", shape).has_value());
}
