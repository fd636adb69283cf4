#include "slatejudge/prompting.h"

#include <gtest/gtest.h>

#include "slatejudge/errors.h"
#include "slatejudge/hashing.h"
#include "test_support.h"

namespace slatejudge {
namespace {

using testing::numbered_catalog;
using testing::user_with_utilities;

const std::vector<TemplateFamily> kFamilies = {TemplateFamily::kStandardChat,
                                               TemplateFamily::kChatMl, TemplateFamily::kInst};

Placeholders movie_values() {
  return with_placeholder_defaults({{"PLATFORM_NAME", "MovieLens"},
                                    {"DOMAIN_NOUN", "movie"},
                                    {"RATING_MIN", "1"},
                                    {"RATING_MAX", "5"},
                                    {"CRITERIA_POPULARITY", "favour well-known films"},
                                    {"CRITERIA_DIVERSITY", "Genre diversity"}});
}

TEST(SubstituteTest, SinglePassNoRescan) {
  EXPECT_EQ(substitute("a {X} b {Y}", {{"X", "{Y}"}, {"Y", "y"}}), "a {Y} b y");
  EXPECT_EQ(substitute("{X}{X}", {{"X", "1"}}), "11");
  // Lowercase braces and unclosed tokens are plain text.
  EXPECT_EQ(substitute("{x} {X", {}), "{x} {X");
  EXPECT_THROW(substitute("{MISSING}", {}), MissingPlaceholder);
}

TEST(SubstituteTest, FindPlaceholdersInOrder) {
  EXPECT_EQ(find_placeholders("{B} {A} {B} {c} {A_1}"),
            (std::vector<std::string>{"B", "A", "A_1"}));
}

TEST(PlaceholderTest, DefaultsAndMissing) {
  const Placeholders p = with_placeholder_defaults({{"LIST_1_TAG", "ONE"}});
  EXPECT_EQ(p.at("LIST_1_TAG"), "ONE");
  EXPECT_EQ(p.at("LIST_2_TAG"), "LIST_B");
  EXPECT_EQ(p.at("VERDICT_TAG"), "VERDICT");
  const auto missing = missing_placeholders(p);
  EXPECT_EQ(missing.front(), "PLATFORM_NAME");
  EXPECT_TRUE(missing_placeholders(movie_values()).empty());
  Placeholders no_max = movie_values();
  no_max.erase("RATING_MAX");
  EXPECT_EQ(missing_placeholders(no_max), std::vector<std::string>{"RATING_MAX"});
}

TEST(TemplateTest, DefaultsReferenceRequiredTokens) {
  for (auto f : kFamilies) {
    const auto duel = default_duel_template(f);
    EXPECT_EQ(duel.kind, PromptKind::kDuel);
    for (const char* n : {"VERDICT_TAG", "LIST_1_TAG", "LIST_2_TAG", "LIST_1", "LIST_2", "HISTORY"}) {
      EXPECT_TRUE(duel.required_placeholders.contains(n)) << to_string(f) << " " << n;
    }
    const auto rating = default_rating_template(f);
    EXPECT_EQ(rating.kind, PromptKind::kRating);
    EXPECT_TRUE(rating.required_placeholders.contains("LIST_1"));
    EXPECT_FALSE(rating.required_placeholders.contains("LIST_2"));
    for (const auto& n : duel.required_placeholders) {
      EXPECT_NE(std::find(schema_placeholders().begin(), schema_placeholders().end(), n),
                schema_placeholders().end())
          << n;
    }
  }
}

TEST(TemplateTest, MakeRejectsTemplatesWithoutTags) {
  EXPECT_THROW(PromptTemplate::make(TemplateFamily::kInst, PromptKind::kDuel, "{LIST_1} {LIST_2}"),
               InvalidTemplate);
  EXPECT_NO_THROW(PromptTemplate::make(TemplateFamily::kInst, PromptKind::kRating,
                                       "<{LIST_1_TAG}>{LIST_1}</{LIST_1_TAG}> <{VERDICT_TAG}>"));
}

TEST(TemplateTest, TieOptionAddsVerdictZero) {
  for (auto f : kFamilies) {
    const auto t = with_tie_option(default_duel_template(f));
    const std::string text = substitute(t.body, [] {
      Placeholders p = movie_values();
      p["HISTORY"] = "h";
      p["LIST_1"] = "a";
      p["LIST_2"] = "b";
      return p;
    }());
    EXPECT_NE(text.find("<VERDICT>0</VERDICT>"), std::string::npos);
    EXPECT_NE(text.find("<VERDICT>2</VERDICT>"), std::string::npos);
  }
  EXPECT_THROW(with_tie_option(default_rating_template(TemplateFamily::kInst)), InvalidTemplate);
}

class RenderTest : public ::testing::Test {
 protected:
  Catalog catalog = numbered_catalog(12);
  UserRecord user = user_with_utilities(catalog, "u1", {0.2, 0.8}, 3);

  void SetUp() override {
    for (int i = 6; i < 12; ++i) {
      user.history.push_back({testing::item_name(i), i % 3 ? std::optional<double>(i % 5 + 1)
                                                          : std::nullopt});
    }
  }
};

TEST_F(RenderTest, DuelPromptIsFullySubstituted) {
  for (auto f : kFamilies) {
    const auto p = render_duel_prompt(default_duel_template(f), movie_values(), user,
                                      user.slates[0], user.slates[1], catalog);
    EXPECT_FALSE(has_unsubstituted_placeholder(p.text)) << to_string(f);
    EXPECT_EQ(p.verdict_tag, "VERDICT");
    EXPECT_EQ(p.digest, sha256_hex(p.text));
    if (f == TemplateFamily::kStandardChat) {
      EXPECT_NE(p.text.find("MovieLens"), std::string::npos);
    }
    EXPECT_NE(p.text.find(format_slate(user.slates[0], catalog)), std::string::npos);
    EXPECT_NE(p.text.find(format_slate(user.slates[1], catalog)), std::string::npos);
  }
}

TEST_F(RenderTest, PresentationOrderIsRespected) {
  const auto t = default_duel_template(TemplateFamily::kStandardChat);
  const auto ab = render_duel_prompt(t, movie_values(), user, user.slates[0], user.slates[1], catalog);
  const auto ba = render_duel_prompt(t, movie_values(), user, user.slates[1], user.slates[0], catalog);
  EXPECT_NE(ab.digest, ba.digest);
  EXPECT_LT(ab.text.find(format_slate(user.slates[0], catalog)),
            ab.text.find(format_slate(user.slates[1], catalog)));
  EXPECT_LT(ba.text.find(format_slate(user.slates[1], catalog)),
            ba.text.find(format_slate(user.slates[0], catalog)));
}

TEST_F(RenderTest, DomainSwitchOnlyChangesVariables) {
  const auto t = default_duel_template(TemplateFamily::kStandardChat);
  Placeholders news = movie_values();
  news["PLATFORM_NAME"] = "NewsWire";
  news["DOMAIN_NOUN"] = "article";
  const auto a = render_duel_prompt(t, movie_values(), user, user.slates[0], user.slates[1], catalog);
  const auto b = render_duel_prompt(t, news, user, user.slates[0], user.slates[1], catalog);
  EXPECT_EQ(b.text.find("MovieLens"), std::string::npos);
  EXPECT_NE(b.text.find("NewsWire"), std::string::npos);
  EXPECT_NE(a.text, b.text);
}

TEST_F(RenderTest, MissingPlaceholderNamesKey) {
  Placeholders p = movie_values();
  p.erase("PLATFORM_NAME");
  try {
    render_duel_prompt(default_duel_template(TemplateFamily::kStandardChat), p, user, user.slates[0],
                       user.slates[1], catalog);
    FAIL() << "expected MissingPlaceholder";
  } catch (const MissingPlaceholder& e) {
    EXPECT_NE(std::string(e.what()).find("PLATFORM_NAME"), std::string::npos);
  }
}

TEST_F(RenderTest, HistoryKeepsMostRecentOldestFirst) {
  const std::string h = format_history(user, catalog, movie_values(), 3);
  EXPECT_EQ(std::count(h.begin(), h.end(), '\n'), 2);
  EXPECT_EQ(h.find("Title 8"), std::string::npos);
  EXPECT_LT(h.find("Title 9"), h.find("Title 10"));
  EXPECT_LT(h.find("Title 10"), h.find("Title 11"));
  EXPECT_NE(h.find("not rated"), std::string::npos);  // item 9 has no rating
  EXPECT_NE(h.find("(1-5)"), std::string::npos);
  UserRecord empty = user;
  empty.history.clear();
  EXPECT_EQ(format_history(empty, catalog, movie_values(), 5), "(no history)");
}

TEST_F(RenderTest, SlateLinesAreNumbered) {
  const std::string s = format_slate(user.slates[0], catalog);
  EXPECT_EQ(s, "1. Title 0 (comedy)\n2. Title 1 (drama)\n3. Title 2 (comedy)");
}

TEST_F(RenderTest, RatingPrompt) {
  const auto p = render_rating_prompt(default_rating_template(TemplateFamily::kStandardChat),
                                      movie_values(), user, user.slates[1], catalog);
  EXPECT_FALSE(has_unsubstituted_placeholder(p.text));
  EXPECT_NE(p.text.find(format_slate(user.slates[1], catalog)), std::string::npos);
  EXPECT_THROW(render_rating_prompt(default_duel_template(TemplateFamily::kStandardChat),
                                    movie_values(), user, user.slates[1], catalog),
               InvalidTemplate);
}

TEST(FamilyTest, PatternMatching) {
  const auto patterns = default_family_patterns();
  EXPECT_EQ(family_for_model("meta-llama/Llama-3-8B", patterns).family, TemplateFamily::kChatMl);
  EXPECT_EQ(family_for_model("Mistral-7B-Instruct", patterns).family, TemplateFamily::kInst);
  EXPECT_EQ(family_for_model("qwen2", patterns).family, TemplateFamily::kStandardChat);
  const auto unknown = family_for_model("mystery-model", patterns);
  EXPECT_EQ(unknown.family, TemplateFamily::kStandardChat);
  EXPECT_TRUE(unknown.fallback);
  EXPECT_FALSE(family_for_model("qwen2", patterns).fallback);
  EXPECT_EQ(family_from_string("CHATML"), TemplateFamily::kChatMl);
  EXPECT_THROW(family_from_string("alpaca"), InvalidArgument);
}

}  // namespace
}  // namespace slatejudge
