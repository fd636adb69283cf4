#pragma once

// Plans every duel a run needs, executes them through the judges with a
// response cache and bounded concurrency, and aggregates the votes of each
// unordered pair by majority over both presentation orders and all judges.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "slatejudge/core.h"
#include "slatejudge/ingestion.h"
#include "slatejudge/judge.h"
#include "slatejudge/persistence.h"
#include "slatejudge/prompting.h"

namespace slatejudge {

enum class TieScoring { kDeterministic, kExpected };
enum class IrreflexivityStrategy { kPositionFlip, kTieAllowed };

std::string_view to_string(TieScoring t);
TieScoring tie_scoring_from_string(std::string_view name);
std::string_view to_string(IrreflexivityStrategy s);
IrreflexivityStrategy irreflexivity_from_string(std::string_view name);

struct SelfDuelSpec {
  std::string user_id;
  std::string slate_id;
  std::string judge_id;
};

struct RatingQuery {
  std::string user_id;
  std::string slate_id;
  std::string judge_id;
};

struct DuelPlan {
  std::vector<DuelSpec> duels;
  std::vector<SelfDuelSpec> self_duels;
  std::vector<RatingQuery> rating_queries;
  int samples_per_order = 1;
  std::size_t ensemble_size = 0;
};

// For every unordered pair of distinct slates of every user: both orders x
// every judge x samples_per_order duels. Diagonal pairs only appear as
// self-duels, once per (slate, judge). Throws EmptyEnsemble, or
// InvalidArgument for samples_per_order < 1 or a user with < 2 slates.
DuelPlan build_plan(std::span<const UserRecord> users,
                    std::span<const std::string> judge_ids,
                    int samples_per_order = 1);

struct DuelRecord {
  DuelSpec duel;
  Verdict verdict;
};

// One self-duel check: two samples under POSITION_FLIP, one tie-offering
// sample under TIE_ALLOWED.
struct SelfDuelRecord {
  std::string user_id;
  std::string slate_id;
  std::string judge_id;
  std::vector<Verdict> samples;
};

struct RatingRecord {
  std::string user_id;
  std::string slate_id;
  std::string judge_id;
  RatingVerdict rating;
};

// Templates per family, used for judges that need rendered prompts.
struct PromptSet {
  std::map<TemplateFamily, PromptTemplate> duel;
  std::map<TemplateFamily, PromptTemplate> rating;

  static PromptSet defaults();
};

struct ExecutionOptions {
  std::size_t concurrency_limit = 1;
  IrreflexivityStrategy irreflexivity = IrreflexivityStrategy::kPositionFlip;
  bool include_self_duels = true;
  bool include_ratings = true;
  const ResponseCache* cache = nullptr;  // optional
  PromptSet prompts = PromptSet::defaults();
  RenderOptions render;
  // Scale used for rating queries; required when ratings are included.
  std::optional<RatingScale> rating_scale;
};

struct ExecutionCounts {
  std::size_t planned = 0;  // individual judge calls, including self-duel samples
  std::size_t cached = 0;
  std::size_t queried = 0;
  std::size_t abstained = 0;
};

struct ExecutionResult {
  std::vector<DuelRecord> duels;  // plan order
  std::vector<SelfDuelRecord> self_duels;
  std::vector<RatingRecord> ratings;
  ExecutionCounts counts;
};

// Resolves every planned query from the cache or a fresh judge call. Output
// order is the plan order whatever the completion order. Transport, auth and
// cache-write failures become ABSTAIN for that query only.
ExecutionResult execute(const DuelPlan& plan, std::span<const Judge* const> judges,
                        const DatasetBundle& bundle, const ExecutionOptions& options);

// Majority vote over all verdicts of one unordered pair. Verdicts must cover
// both presentation orders of a single (user, pair). Equal votes give TIE,
// resolved to the lexicographically smaller slate_id. Throws InvalidArgument.
AggregatedOutcome aggregate(std::span<const DuelRecord> pair_verdicts);

// Groups records by (user, unordered pair) in first-appearance order and
// aggregates each group. With `judge_ids`, only those judges vote.
std::vector<AggregatedOutcome> aggregate_all(
    std::span<const DuelRecord> records,
    const std::optional<std::set<std::string>>& judge_ids = std::nullopt);

}  // namespace slatejudge
