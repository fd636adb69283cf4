#include "slatejudge/judge.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "slatejudge/errors.h"
#include "slatejudge/hashing.h"

namespace slatejudge {
namespace {

using nlohmann::json;

std::vector<json> load_corpus() {
  std::ifstream in(std::string(SLATEJUDGE_FIXTURES) + "/verdict_corpus.jsonl");
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

TEST(ParseVerdictTest, FixtureCorpus) {
  const auto corpus = load_corpus();
  ASSERT_GE(corpus.size(), 40u);
  for (const auto& c : corpus) {
    const std::string response = c["response"];
    const Verdict v = parse_verdict(response, c["tag"].get<std::string>(), c["allow_tie"]);
    EXPECT_EQ(to_string(v.choice), c["expected"].get<std::string>()) << json(response).dump();
    if (c["reason"].is_null()) {
      EXPECT_FALSE(v.abstain_reason.has_value()) << json(response).dump();
    } else {
      EXPECT_EQ(v.abstain_reason, c["reason"].get<std::string>()) << json(response).dump();
    }
    EXPECT_EQ(v.raw_response_digest, sha256_hex(response));
  }
}

TEST(ParseVerdictTest, CorpusCoversEveryReason) {
  std::set<std::string> reasons;
  for (const auto& c : load_corpus()) {
    if (c["reason"].is_string()) reasons.insert(c["reason"].get<std::string>());
  }
  EXPECT_EQ(reasons, (std::set<std::string>{"empty-response", "tag-not-first", "invalid-value",
                                            "truncated", "tag-mismatch"}));
}

TEST(ParseRatingTest, IntegersInsideScale) {
  const RatingScale scale{1, 5};
  EXPECT_EQ(parse_rating("<VERDICT>4</VERDICT> fits well", "VERDICT", scale).rating, 4);
  EXPECT_EQ(parse_rating("<VERDICT>1</VERDICT>", "VERDICT", scale).rating, 1);
  EXPECT_EQ(parse_rating("<VERDICT>6</VERDICT>", "VERDICT", scale).abstain_reason,
            "out-of-range");
  EXPECT_EQ(parse_rating("<VERDICT>0</VERDICT>", "VERDICT", scale).abstain_reason,
            "out-of-range");
  EXPECT_EQ(parse_rating("<VERDICT>4.5</VERDICT>", "VERDICT", scale).abstain_reason,
            "not-an-integer");
  EXPECT_EQ(parse_rating("<VERDICT>-2</VERDICT>", "VERDICT", RatingScale{-3, 3}).rating, -2);
  EXPECT_EQ(parse_rating("Rating: 4", "VERDICT", scale).abstain_reason, "tag-not-first");
  EXPECT_EQ(parse_rating("", "VERDICT", scale).abstain_reason, "empty-response");
}

TEST(SyntheticSpecTest, ParametersMustMatchKind) {
  SyntheticJudgeSpec s;
  s.kind = SyntheticKind::kNoisyOracle;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.beta = 0.0;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.beta = 2.0;
  EXPECT_NO_THROW(s.validate());
  s.position_bias = 0.5;
  EXPECT_THROW(s.validate(), InvalidArgument);
  SyntheticJudgeSpec p{SyntheticKind::kPositional, std::nullopt, 1.5, 0};
  EXPECT_THROW(p.validate(), InvalidArgument);
  EXPECT_EQ(synthetic_kind_from_string("NOISY_ORACLE"), SyntheticKind::kNoisyOracle);
  EXPECT_THROW(synthetic_kind_from_string("sage"), InvalidArgument);
}

DuelSpec duel_for(int i, int sample = 0) {
  return {"user-" + std::to_string(i), "x", "y", "j", sample};
}

TEST(SyntheticVerdictTest, OraclePicksHigherUtility) {
  const SyntheticJudgeSpec s{SyntheticKind::kOracle, std::nullopt, std::nullopt, 1};
  EXPECT_EQ(synthetic_verdict(s, {0.2, 0.8}, duel_for(0)).choice, Choice::kSecond);
  EXPECT_EQ(synthetic_verdict(s, {0.9, 0.8}, duel_for(0)).choice, Choice::kFirst);
  EXPECT_EQ(synthetic_verdict(s, {0.5, 0.5}, duel_for(0)).choice, Choice::kFirst);
  EXPECT_EQ(synthetic_verdict(s, {0.5, 0.5}, duel_for(0), true).choice, Choice::kTie);
}

TEST(SyntheticVerdictTest, RandomIsFairCoin) {
  const SyntheticJudgeSpec s{SyntheticKind::kRandom, std::nullopt, std::nullopt, 5};
  const int n = 20000;
  int first = 0;
  for (int i = 0; i < n; ++i) first += synthetic_verdict(s, {0.1, 0.9}, duel_for(i)).choice == Choice::kFirst;
  // 4 standard deviations of a Binomial(n, 1/2) proportion.
  EXPECT_NEAR(first / double(n), 0.5, 4 * std::sqrt(0.25 / n));
}

TEST(SyntheticVerdictTest, RandomWithTieIsUniformOverThree) {
  const SyntheticJudgeSpec s{SyntheticKind::kRandom, std::nullopt, std::nullopt, 5};
  const int n = 30000;
  std::map<Choice, int> counts;
  for (int i = 0; i < n; ++i) ++counts[synthetic_verdict(s, {0.1, 0.9}, duel_for(i), true).choice];
  const double sd = std::sqrt((1.0 / 3) * (2.0 / 3) / n);
  for (Choice c : {Choice::kFirst, Choice::kSecond, Choice::kTie}) {
    EXPECT_NEAR(counts[c] / double(n), 1.0 / 3, 4 * sd);
  }
}

TEST(SyntheticVerdictTest, NoisyOracleFollowsLogistic) {
  for (double beta : {0.5, 2.0, 8.0}) {
    const SyntheticJudgeSpec s{SyntheticKind::kNoisyOracle, beta, std::nullopt, 9};
    const double du = 0.3;
    const double p = 1.0 / (1.0 + std::exp(-beta * du));
    const int n = 20000;
    int correct = 0;
    for (int i = 0; i < n; ++i) {
      correct += synthetic_verdict(s, {0.4, 0.4 + du}, duel_for(i)).choice == Choice::kSecond;
    }
    EXPECT_NEAR(correct / double(n), p, 4 * std::sqrt(p * (1 - p) / n)) << "beta=" << beta;
  }
}

TEST(SyntheticVerdictTest, NoisyOracleIsMonotoneInBetaPathwise) {
  // Common random numbers: a duel answered correctly at some beta stays
  // correct at every larger beta.
  const std::vector<double> betas = {0.5, 2.0, 8.0, 32.0};
  for (int i = 0; i < 2000; ++i) {
    bool was_correct = false;
    for (double beta : betas) {
      const SyntheticJudgeSpec s{SyntheticKind::kNoisyOracle, beta, std::nullopt, 3};
      const bool correct =
          synthetic_verdict(s, {0.7, 0.55}, duel_for(i)).choice == Choice::kFirst;
      EXPECT_TRUE(correct || !was_correct);
      was_correct = correct;
    }
  }
}

TEST(SyntheticVerdictTest, PositionalBias) {
  const SyntheticJudgeSpec always{SyntheticKind::kPositional, std::nullopt, 1.0, 0};
  for (int i = 0; i < 500; ++i) {
    EXPECT_EQ(synthetic_verdict(always, {0.9, 0.1}, duel_for(i)).choice, Choice::kFirst);
  }
  const SyntheticJudgeSpec partial{SyntheticKind::kPositional, std::nullopt, 0.3, 0};
  const int n = 20000;
  int first = 0;
  for (int i = 0; i < n; ++i) {
    first += synthetic_verdict(partial, {0.9, 0.1}, duel_for(i)).choice == Choice::kFirst;
  }
  EXPECT_NEAR(first / double(n), 0.3, 4 * std::sqrt(0.21 / n));
}

TEST(SyntheticVerdictTest, DeterministicAndKeyed) {
  const SyntheticJudgeSpec s{SyntheticKind::kRandom, std::nullopt, std::nullopt, 77};
  int differ_by_sample = 0;
  int differ_by_seed = 0;
  const SyntheticJudgeSpec other{SyntheticKind::kRandom, std::nullopt, std::nullopt, 78};
  for (int i = 0; i < 200; ++i) {
    const auto a = synthetic_verdict(s, {0.1, 0.2}, duel_for(i));
    EXPECT_EQ(a, synthetic_verdict(s, {0.1, 0.2}, duel_for(i)));
    differ_by_sample += a.choice != synthetic_verdict(s, {0.1, 0.2}, duel_for(i, 1)).choice;
    differ_by_seed += a.choice != synthetic_verdict(other, {0.1, 0.2}, duel_for(i)).choice;
  }
  EXPECT_GT(differ_by_sample, 50);
  EXPECT_GT(differ_by_seed, 50);
}

TEST(SyntheticRatingTest, OracleRoundsUtility) {
  const SyntheticJudgeSpec s{SyntheticKind::kOracle, std::nullopt, std::nullopt, 0};
  const RatingScale scale{1, 5};
  EXPECT_EQ(synthetic_rating(s, 0.0, scale, "u", "s", "j"), 1);
  EXPECT_EQ(synthetic_rating(s, 1.0, scale, "u", "s", "j"), 5);
  EXPECT_EQ(synthetic_rating(s, 0.5, scale, "u", "s", "j"), 3);
  EXPECT_EQ(synthetic_rating(s, 0.3, scale, "u", "s", "j"), 2);
  // Monotone in utility.
  int last = 0;
  for (int i = 0; i <= 100; ++i) {
    const int r = synthetic_rating(s, i / 100.0, scale, "u", "s", "j");
    EXPECT_GE(r, last);
    last = r;
  }
}

TEST(SyntheticRatingTest, RandomCoversScale) {
  const SyntheticJudgeSpec s{SyntheticKind::kRandom, std::nullopt, std::nullopt, 0};
  std::set<int> seen;
  for (int i = 0; i < 500; ++i) {
    const int r = synthetic_rating(s, 0.5, RatingScale{1, 5}, "u" + std::to_string(i), "s", "j");
    EXPECT_GE(r, 1);
    EXPECT_LE(r, 5);
    seen.insert(r);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(SyntheticJudgeTest, RepliesParseBack) {
  const SyntheticJudge judge("oracle", {SyntheticKind::kOracle, std::nullopt, std::nullopt, 0});
  const DuelSpec d = duel_for(1);
  const DuelRequest req{&d, {0.1, 0.6}, nullptr, false};
  const JudgeAnswer a = judge.duel(req);
  EXPECT_EQ(parse_verdict(a.raw_response, "VERDICT"), a.verdict);
  EXPECT_EQ(judge.describe(), "oracle");
  EXPECT_FALSE(judge.needs_prompts());
  EXPECT_TRUE(is_hex_digest(judge.duel_cache_key(req)));
  const DuelSpec d2 = duel_for(1, 1);
  EXPECT_NE(judge.duel_cache_key(req), judge.duel_cache_key({&d2, {0.1, 0.6}, nullptr, false}));
}

TEST(JudgeEndpointTest, Validation) {
  JudgeEndpoint e{"j", "http://localhost:1", "m", "", 0.0, 10};
  EXPECT_NO_THROW(e.validate());
  e.retry_limit = -1;
  EXPECT_THROW(e.validate(), InvalidArgument);
  e.retry_limit = 1;
  e.base_url.clear();
  EXPECT_THROW(e.validate(), InvalidArgument);
}

}  // namespace
}  // namespace slatejudge
