#pragma once

// Internal-consistency metrics of a judge or ensemble: irreflexivity,
// asymmetry, transitivity and rating transitivity. Every metric is a ratio of
// counts; a zero denominator makes the metric absent rather than 0 or 1.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "slatejudge/core.h"
#include "slatejudge/duel_engine.h"

namespace slatejudge {

struct MetricValue {
  std::size_t satisfied = 0;
  std::size_t denominator = 0;
  std::size_t excluded = 0;  // candidates left out by the metric's exclusion rule

  std::optional<double> value() const {
    if (denominator == 0) return std::nullopt;
    return static_cast<double>(satisfied) / static_cast<double>(denominator);
  }
  // Pools the counts (micro-average).
  MetricValue& operator+=(const MetricValue& other);
  friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

// What one judge chose for one sample of an unordered pair under each
// presentation order, as slate contents. nullopt marks an abstention.
struct OrderChoices {
  std::string user_id;
  std::string judge_id;
  SlatePair pair;  // (a, b), a < b
  int sample_index = 0;
  std::optional<std::string> chosen_ab;  // presented as (a, b)
  std::optional<std::string> chosen_ba;  // presented as (b, a)
};

// Pairs up the two presentation orders of every (user, pair, judge, sample).
// Self-duels are skipped. Throws InvalidArgument when an order is missing or
// duplicated.
std::vector<OrderChoices> collect_order_choices(std::span<const DuelRecord> records);

// Consistent iff the same content wins under both orders. Entries with an
// abstention in either order are excluded.
MetricValue asymmetry_score(std::span<const OrderChoices> choices);

// Counts unordered triples whose three pairs all carry edges; a triple is
// satisfied iff its sub-tournament is acyclic. Triples touching a TIE pair
// are excluded.
MetricValue transitivity_score(const PreferenceRelation& relation);

// POSITION_FLIP: passes iff the two samples did not pick the same position.
// TIE_ALLOWED: passes iff the single sample answered TIE. Records whose
// samples abstained are excluded.
MetricValue irreflexivity_score(std::span<const SelfDuelRecord> self_duels,
                                IrreflexivityStrategy strategy);

// Each non-TIE outcome is compared with the ratings of every judge in
// `judge_ids`; consistent iff the winner is rated strictly higher. Equal,
// missing or abstained ratings and TIE outcomes are excluded.
MetricValue rating_transitivity_score(std::span<const AggregatedOutcome> outcomes,
                                      std::span<const RatingRecord> ratings,
                                      const std::set<std::string>& judge_ids);

struct CoherenceReport {
  MetricValue irreflexivity;
  MetricValue asymmetry;
  MetricValue transitivity;
  MetricValue rating_transitivity;
  IrreflexivityStrategy strategy = IrreflexivityStrategy::kPositionFlip;

  std::map<std::string, std::size_t> denominators() const;
};

// All four metrics for the judges in `judge_ids`, pooled over users. The
// relation behind transitivity and rating transitivity is the majority vote
// of exactly those judges, or `outcomes` when given.
CoherenceReport evaluate_coherence(const ExecutionResult& result,
                                   const std::set<std::string>& judge_ids,
                                   IrreflexivityStrategy strategy,
                                   const std::vector<AggregatedOutcome>* outcomes = nullptr);

}  // namespace slatejudge
