#include "slatejudge/coherence.h"

#include <tuple>

#include "slatejudge/errors.h"

namespace slatejudge {

MetricValue& MetricValue::operator+=(const MetricValue& other) {
  satisfied += other.satisfied;
  denominator += other.denominator;
  excluded += other.excluded;
  return *this;
}

std::vector<OrderChoices> collect_order_choices(std::span<const DuelRecord> records) {
  using Key = std::tuple<std::string, std::string, SlatePair, int>;
  std::map<Key, std::size_t> index;
  std::vector<OrderChoices> out;
  std::vector<std::pair<bool, bool>> seen;

  for (const auto& r : records) {
    const DuelSpec& d = r.duel;
    if (d.is_self_duel()) continue;
    const SlatePair pair = unordered_pair(d.first, d.second);
    Key key{d.user_id, d.judge_id, pair, d.sample_index};
    auto [it, inserted] = index.try_emplace(key, out.size());
    if (inserted) {
      out.push_back({d.user_id, d.judge_id, pair, d.sample_index, std::nullopt, std::nullopt});
      seen.emplace_back(false, false);
    }
    const bool ab = d.first == pair.first;
    bool& flag = ab ? seen[it->second].first : seen[it->second].second;
    if (flag) {
      throw InvalidArgument("duplicate duel for user '" + d.user_id + "', judge '" +
                            d.judge_id + "', order (" + d.first + ", " + d.second + ")");
    }
    flag = true;
    (ab ? out[it->second].chosen_ab : out[it->second].chosen_ba) = chosen_slate(d, r.verdict);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!seen[i].first || !seen[i].second) {
      throw InvalidArgument("pair {" + out[i].pair.first + ", " + out[i].pair.second +
                            "} of user '" + out[i].user_id + "' lacks one presentation order");
    }
  }
  return out;
}

MetricValue asymmetry_score(std::span<const OrderChoices> choices) {
  MetricValue m;
  for (const auto& c : choices) {
    if (!c.chosen_ab || !c.chosen_ba) {
      ++m.excluded;
      continue;
    }
    ++m.denominator;
    if (*c.chosen_ab == *c.chosen_ba) ++m.satisfied;
  }
  return m;
}

MetricValue transitivity_score(const PreferenceRelation& relation) {
  MetricValue m;
  const auto& nodes = relation.nodes();
  const std::size_t n = nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        const std::string* t[3] = {&nodes[i], &nodes[j], &nodes[k]};
        bool complete = true;
        int wins[3] = {0, 0, 0};
        for (int x = 0; x < 3 && complete; ++x) {
          for (int y = x + 1; y < 3; ++y) {
            const PreferenceEdge* e = relation.edge_between(*t[x], *t[y]);
            if (e == nullptr) {
              complete = false;
              break;
            }
            ++wins[e->from == *t[x] ? x : y];
          }
        }
        if (!complete) {
          ++m.excluded;
          continue;
        }
        ++m.denominator;
        // A 3-tournament is cyclic iff every node wins exactly once.
        if (!(wins[0] == 1 && wins[1] == 1 && wins[2] == 1)) ++m.satisfied;
      }
    }
  }
  return m;
}

MetricValue irreflexivity_score(std::span<const SelfDuelRecord> self_duels,
                                IrreflexivityStrategy strategy) {
  MetricValue m;
  for (const auto& s : self_duels) {
    if (strategy == IrreflexivityStrategy::kPositionFlip) {
      if (s.samples.size() != 2) {
        throw InvalidArgument("position-flip self-duels need exactly two samples");
      }
      if (s.samples[0].abstained() || s.samples[1].abstained()) {
        ++m.excluded;
        continue;
      }
      ++m.denominator;
      if (s.samples[0].choice != s.samples[1].choice) ++m.satisfied;
    } else {
      if (s.samples.size() != 1) {
        throw InvalidArgument("tie-allowed self-duels need exactly one sample");
      }
      if (s.samples[0].abstained()) {
        ++m.excluded;
        continue;
      }
      ++m.denominator;
      if (s.samples[0].choice == Choice::kTie) ++m.satisfied;
    }
  }
  return m;
}

MetricValue rating_transitivity_score(std::span<const AggregatedOutcome> outcomes,
                                      std::span<const RatingRecord> ratings,
                                      const std::set<std::string>& judge_ids) {
  std::map<std::tuple<std::string, std::string, std::string>, int> lookup;
  for (const auto& r : ratings) {
    if (r.rating.rating && judge_ids.contains(r.judge_id)) {
      lookup[{r.user_id, r.slate_id, r.judge_id}] = *r.rating.rating;
    }
  }
  MetricValue m;
  for (const auto& o : outcomes) {
    for (const auto& judge : judge_ids) {
      if (o.is_tie()) {
        ++m.excluded;
        continue;
      }
      const std::string& winner = *o.winner;
      const std::string& loser = o.other(winner);
      auto w = lookup.find({o.user_id, winner, judge});
      auto l = lookup.find({o.user_id, loser, judge});
      if (w == lookup.end() || l == lookup.end() || w->second == l->second) {
        ++m.excluded;
        continue;
      }
      ++m.denominator;
      if (w->second > l->second) ++m.satisfied;
    }
  }
  return m;
}

std::map<std::string, std::size_t> CoherenceReport::denominators() const {
  return {{"irreflexivity", irreflexivity.denominator},
          {"asymmetry", asymmetry.denominator},
          {"transitivity", transitivity.denominator},
          {"rating_transitivity", rating_transitivity.denominator}};
}

CoherenceReport evaluate_coherence(const ExecutionResult& result,
                                   const std::set<std::string>& judge_ids,
                                   IrreflexivityStrategy strategy,
                                   const std::vector<AggregatedOutcome>* outcomes) {
  CoherenceReport report;
  report.strategy = strategy;

  std::vector<DuelRecord> duels;
  for (const auto& d : result.duels) {
    if (judge_ids.contains(d.duel.judge_id)) duels.push_back(d);
  }
  report.asymmetry = asymmetry_score(collect_order_choices(duels));

  std::vector<SelfDuelRecord> selfs;
  for (const auto& s : result.self_duels) {
    if (judge_ids.contains(s.judge_id)) selfs.push_back(s);
  }
  report.irreflexivity = irreflexivity_score(selfs, strategy);

  std::vector<AggregatedOutcome> recomputed;
  if (outcomes == nullptr) {
    recomputed = aggregate_all(duels);
    outcomes = &recomputed;
  }
  report.rating_transitivity = rating_transitivity_score(*outcomes, result.ratings, judge_ids);

  std::map<std::string, std::vector<AggregatedOutcome>> by_user;
  for (const auto& o : *outcomes) by_user[o.user_id].push_back(o);
  for (const auto& [user, list] : by_user) {
    report.transitivity += transitivity_score(derive_preference_relation(list));
  }
  return report;
}

}  // namespace slatejudge
