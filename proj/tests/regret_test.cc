#include "slatejudge/regret.h"

#include <gtest/gtest.h>

#include <random>

#include "slatejudge/errors.h"
#include "test_support.h"

namespace slatejudge {
namespace {

using testing::decided;
using testing::numbered_catalog;
using testing::regret_by_enumeration;
using testing::tied;
using testing::user_with_utilities;

struct Instance {
  Catalog catalog;
  std::vector<UserRecord> users;
  std::vector<AggregatedOutcome> outcomes;
};

// Random users with 2..6 slates; each pair is won by either side or tied.
Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_users(1, 4), n_slates(2, 6), kind(0, 4);
  std::uniform_real_distribution<double> util(0.0, 1.0);
  Instance inst;
  inst.catalog = numbered_catalog(4 * 6);
  const int users = n_users(rng);
  for (int u = 0; u < users; ++u) {
    std::vector<double> us;
    const int n = n_slates(rng);
    for (int s = 0; s < n; ++s) us.push_back(kind(rng) == 0 ? 0.5 : util(rng));
    inst.users.push_back(user_with_utilities(inst.catalog, "u" + std::to_string(u), us, 1, u * 6));
  }
  for (const auto& u : inst.users) {
    for (std::size_t i = 0; i < u.slates.size(); ++i) {
      for (std::size_t k = i + 1; k < u.slates.size(); ++k) {
        const auto& a = u.slates[i].slate_id;
        const auto& b = u.slates[k].slate_id;
        const int c = kind(rng);
        inst.outcomes.push_back(c == 0 ? tied(u.user_id, a, b)
                                       : c % 2 ? decided(u.user_id, a, b) : decided(u.user_id, b, a));
      }
    }
  }
  return inst;
}

const AggregatedOutcome& find_outcome(const std::vector<AggregatedOutcome>& outcomes,
                                      const std::string& user, const std::string& x,
                                      const std::string& y) {
  const auto [a, b] = unordered_pair(x, y);
  for (const auto& o : outcomes) {
    if (o.user_id == user && o.slate_a == a && o.slate_b == b) return o;
  }
  throw std::logic_error("outcome missing in test instance");
}

// Regret by enumeration with TIE pairs charged the mean of the two utilities.
double expected_tie_regret_by_enumeration(const Instance& inst) {
  double total = 0.0;
  for (const auto& u : inst.users) {
    double sum = 0.0;
    for (const auto& x : u.slates) {
      for (const auto& y : u.slates) {
        if (x.slate_id == y.slate_id) continue;
        const double ux = u.utilities.at(x.slate_id), uy = u.utilities.at(y.slate_id);
        const auto& o = find_outcome(inst.outcomes, u.user_id, x.slate_id, y.slate_id);
        const double f = o.is_tie() ? (ux + uy) / 2 : u.utilities.at(*o.winner);
        sum += std::max(ux, uy) - f;
      }
    }
    total += sum / double(u.slates.size() * u.slates.size());
  }
  return total / double(inst.users.size());
}

TEST(RegretTest, MatchesBruteForceEnumeration) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance inst = random_instance(rng);
    const double oracle = regret_by_enumeration(
        inst.users, [&](const std::string& user, const std::string& x, const std::string& y) {
          return find_outcome(inst.outcomes, user, x, y).preferred();
        });
    const RegretReport r = empirical_regret(inst.users, inst.outcomes);
    EXPECT_NEAR(r.aggregate, oracle, 1e-12);
    EXPECT_NEAR(empirical_regret(inst.users, inst.outcomes, TieScoring::kExpected).aggregate,
                expected_tie_regret_by_enumeration(inst), 1e-12);
  }
}

TEST(RegretTest, TwoSlateWorkedExample) {
  const Catalog c = numbered_catalog(4);
  const std::vector<UserRecord> users = {user_with_utilities(c, "u", {0.2, 0.8})};
  const auto& lo = users[0].slates[0].slate_id;
  const auto& hi = users[0].slates[1].slate_id;
  const std::vector<AggregatedOutcome> wrong = {decided("u", lo, hi)};
  const RegretReport r = empirical_regret(users, wrong);
  EXPECT_NEAR(r.aggregate, 0.3, 1e-12);
  EXPECT_NEAR(r.random_baseline, 0.15, 1e-12);
  EXPECT_NEAR(r.per_user.at("u"), 0.3, 1e-12);
  ASSERT_EQ(r.pair_terms.size(), 1u);
  EXPECT_NEAR(r.pair_terms[0].loss(), 0.6, 1e-12);
  const std::vector<AggregatedOutcome> right = {decided("u", hi, lo)};
  EXPECT_EQ(empirical_regret(users, right).aggregate, 0.0);
}

TEST(RegretTest, AlwaysWrongIsTwiceBaselineOnTwoSlateUsers) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> util(0.0, 1.0);
  const Catalog c = numbered_catalog(200);
  std::vector<UserRecord> users;
  std::vector<AggregatedOutcome> outcomes;
  for (int u = 0; u < 50; ++u) {
    users.push_back(user_with_utilities(c, "u" + std::to_string(u), {util(rng), util(rng)}, 2, u * 4));
    const auto& a = users.back().slates[0].slate_id;
    const auto& b = users.back().slates[1].slate_id;
    const bool a_better = users.back().utility(a) >= users.back().utility(b);
    outcomes.push_back(a_better ? decided(users.back().user_id, b, a)
                                : decided(users.back().user_id, a, b));
  }
  const RegretReport r = empirical_regret(users, outcomes);
  EXPECT_NEAR(r.aggregate, 2 * r.random_baseline, 1e-12);
}

TEST(RegretTest, BaselineEqualsMeanOverAllOrientations) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> util(0.0, 1.0);
  const Catalog c = numbered_catalog(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 3;
    std::vector<double> us;
    for (std::size_t i = 0; i < n; ++i) us.push_back(util(rng));
    const std::vector<UserRecord> users = {user_with_utilities(c, "u", us, 1)};
    std::vector<SlatePair> pairs;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = i + 1; k < n; ++k)
        pairs.emplace_back(users[0].slates[i].slate_id, users[0].slates[k].slate_id);
    double mean = 0.0;
    const std::size_t orientations = std::size_t{1} << pairs.size();
    for (std::size_t mask = 0; mask < orientations; ++mask) {
      std::vector<AggregatedOutcome> o;
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        o.push_back(mask >> p & 1 ? decided("u", pairs[p].first, pairs[p].second)
                                  : decided("u", pairs[p].second, pairs[p].first));
      }
      mean += empirical_regret(users, o).aggregate / double(orientations);
    }
    EXPECT_NEAR(random_baseline_regret(users), mean, 1e-12);
  }
}

TEST(RegretTest, MissingOutcomeAndEmptyUsers) {
  const Catalog c = numbered_catalog(6);
  const std::vector<UserRecord> users = {user_with_utilities(c, "u", {0.1, 0.5, 0.9}, 2)};
  const std::vector<AggregatedOutcome> partial = {
      decided("u", users[0].slates[0].slate_id, users[0].slates[1].slate_id)};
  EXPECT_THROW(empirical_regret(users, partial), MissingOutcome);
  EXPECT_THROW(empirical_regret({}, partial), InvalidArgument);
}

TEST(CorrelateTest, KnownValues) {
  const std::vector<std::pair<double, double>> small = {{1, 2}, {2, 1}, {3, 3}};
  const Correlation c = correlate(small);
  EXPECT_NEAR(c.pearson, 0.5, 1e-12);
  EXPECT_NEAR(c.spearman, 0.5, 1e-12);

  const std::vector<std::pair<double, double>> monotone = {{1, 1}, {2, 4}, {3, 9}, {4, 100}};
  const Correlation m = correlate(monotone);
  EXPECT_NEAR(m.spearman, 1.0, 1e-12);
  EXPECT_LT(m.pearson, 1.0);

  // Ties take the average rank: x ranks (1.5, 1.5, 3).
  const std::vector<std::pair<double, double>> tied_x = {{0, 1}, {0, 2}, {1, 3}};
  EXPECT_NEAR(correlate(tied_x).spearman, std::sqrt(3.0) / 2, 1e-12);

  const std::vector<std::pair<double, double>> anti = {{1, 3}, {2, 2}, {3, 1}};
  EXPECT_NEAR(correlate(anti).pearson, -1.0, 1e-12);
}

TEST(CorrelateTest, Degenerate) {
  const std::vector<std::pair<double, double>> two = {{1, 2}, {2, 3}};
  EXPECT_THROW(correlate(two), InvalidArgument);
  const std::vector<std::pair<double, double>> flat = {{1, 2}, {2, 2}, {3, 2}};
  EXPECT_THROW(correlate(flat), DegenerateVariance);
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s;
}

TEST(HashingEmbedderTest, UnitNormAndDeterministic) {
  const HashingEmbedder e(64);
  const Item heat{"m1", "Heat", "Crime", std::nullopt};
  const auto v = e.embed(heat);
  EXPECT_EQ(v.values.size(), 64u);
  EXPECT_NEAR(dot(v, v), 1.0, 1e-12);
  EXPECT_EQ(v.values, e.embed(heat).values);
  // Case and punctuation do not matter.
  EXPECT_EQ(e.embed({"m2", "HEAT!", "crime", std::nullopt}).values, v.values);
  EXPECT_THROW(e.embed({"m3", "", "Crime", std::nullopt}), EmptyText);
  EXPECT_THROW(e.embed({"m3", "?!", "", std::nullopt}), EmptyText);
  EXPECT_THROW(HashingEmbedder(0), InvalidArgument);
}

TEST(HashingEmbedderTest, TokenOverlapRaisesSimilarity) {
  const HashingEmbedder e(4096);
  const auto a = e.embed({"a", "red river valley", "western", std::nullopt});
  const auto b = e.embed({"b", "red river canyon", "western", std::nullopt});
  const auto c = e.embed({"c", "quantum spaghetti", "opera", std::nullopt});
  EXPECT_GT(dot(a, b), 0.5);
  EXPECT_LT(std::abs(dot(a, c)), dot(a, b));
}

TEST(SlateSimilarityTest, RangeAndIdentity) {
  Catalog c;
  c.add({"a", "Red River", "Western", std::nullopt});
  c.add({"b", "Blue Lagoon", "Romance", std::nullopt});
  c.add({"x", "Space Opera", "SciFi", std::nullopt});
  const HashingEmbedder e;
  const std::vector<std::string> ab = {"a", "b"}, ba = {"b", "a"}, x = {"x"};
  const Slate s1 = make_slate(ab, c), s2 = make_slate(ba, c), s3 = make_slate(x, c);
  EXPECT_NEAR(slate_similarity(s1, s2, c, e), 1.0, 1e-12);  // order-free mean
  const double sim = slate_similarity(s1, s3, c, e);
  EXPECT_GE(sim, -1.0);
  EXPECT_LE(sim, 1.0);
  UserRecord u;
  u.user_id = "u";
  u.slates = {s1, s2, s3};
  const std::vector<UserRecord> users = {u};
  EXPECT_EQ(pair_similarities(users, c, e).size(), 3u);
}

class CountingEmbedder final : public Embedder {
 public:
  std::string describe() const override { return "counting"; }
  EmbeddingVector embed(const Item&) const override {
    ++calls;
    return {{1.0, 0.0}};
  }
  mutable int calls = 0;
};

TEST(CachingEmbedderTest, MemoizesByItem) {
  CountingEmbedder inner;
  const CachingEmbedder cached(inner);
  const Item i{"m", "T", "", std::nullopt};
  cached.embed(i);
  cached.embed(i);
  cached.embed({"n", "U", "", std::nullopt});
  EXPECT_EQ(inner.calls, 2);
  EXPECT_EQ(cached.describe(), "counting");
}

TEST(SlateSimilarityTest, ZeroMeanIsDegenerate) {
  class Opposite final : public Embedder {
   public:
    std::string describe() const override { return "opp"; }
    EmbeddingVector embed(const Item& item) const override {
      return {{item.item_id == "a" ? 1.0 : -1.0}};
    }
  };
  Catalog c;
  c.add({"a", "A", "", std::nullopt});
  c.add({"b", "B", "", std::nullopt});
  const std::vector<std::string> ab = {"a", "b"}, a = {"a"};
  EXPECT_THROW(slate_similarity(make_slate(ab, c), make_slate(a, c), c, Opposite()),
               DegenerateEmbedding);
}

}  // namespace
}  // namespace slatejudge
