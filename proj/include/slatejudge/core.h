#pragma once

// Domain model shared by every stage of the harness: the item catalog, slates,
// users with their evaluated slates and utilities, duels and their verdicts,
// and the per-user preference relation derived from aggregated duels.
//
// All types are plain values. Once built they are not mutated, so they can be
// shared freely between threads.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace slatejudge {

struct Item {
  std::string item_id;
  std::string title;
  std::string category;
  std::optional<std::string> description;
};

class Catalog {
 public:
  Catalog() = default;

  // Throws DuplicateItem for a repeated id and InvalidArgument for an empty
  // id or title.
  void add(Item item);

  const Item* find(std::string_view item_id) const;
  // Throws UnknownItem.
  const Item& at(std::string_view item_id) const;
  bool contains(std::string_view item_id) const { return find(item_id) != nullptr; }
  std::size_t size() const { return items_.size(); }

  // Iteration is ordered by item_id.
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::map<std::string, Item, std::less<>> items_;
};

struct Slate {
  std::string slate_id;
  std::vector<std::string> item_ids;

  std::size_t k() const { return item_ids.size(); }
  friend bool operator==(const Slate&, const Slate&) = default;
};

// Digest of the ordered item sequence, used as slate_id when none is given.
std::string slate_content_id(std::span<const std::string> item_ids);

// Builds a validated slate. Throws InvalidArgument (empty sequence),
// DuplicateItem or UnknownItem.
Slate make_slate(std::span<const std::string> item_ids, const Catalog& catalog,
                 std::optional<std::string> slate_id = std::nullopt);

struct HistoryEntry {
  std::string item_id;
  std::optional<double> rating;  // native dataset scale
};

struct UserRecord {
  std::string user_id;
  std::vector<HistoryEntry> history;  // oldest first
  std::vector<Slate> slates;          // the evaluated slates, in file order
  std::map<std::string, double> utilities;  // slate_id -> [0, 1]

  const Slate* find_slate(std::string_view slate_id) const;
  // Throws InvalidArgument when the slate is not evaluated for this user.
  double utility(const std::string& slate_id) const;
};

// Throws InvalidArgument when utilities do not match the evaluated slates
// exactly or fall outside [0, 1].
void check_user_record(const UserRecord& user);

using SlatePair = std::pair<std::string, std::string>;

// (min, max) of the two ids.
SlatePair unordered_pair(const std::string& a, const std::string& b);

enum class Choice { kFirst, kSecond, kAbstain, kTie };

std::string_view to_string(Choice choice);
// Throws InvalidArgument.
Choice choice_from_string(std::string_view text);

// One judge query. (first, second) is the presentation order; the
// order-swapped twin is a distinct DuelSpec.
struct DuelSpec {
  std::string user_id;
  std::string first;
  std::string second;
  std::string judge_id;
  int sample_index = 0;

  bool is_self_duel() const { return first == second; }
  friend bool operator==(const DuelSpec&, const DuelSpec&) = default;
};

// Parsed judge answer. kTie is only produced when the prompt offered the tie
// option (self-duels under the tie-allowed irreflexivity strategy).
struct Verdict {
  Choice choice = Choice::kAbstain;
  std::optional<std::string> abstain_reason;  // set iff choice == kAbstain
  std::string raw_response_digest;

  static Verdict pick(Choice choice, std::string digest);
  static Verdict abstain(std::string reason, std::string digest = {});
  bool abstained() const { return choice == Choice::kAbstain; }
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

// Slate id chosen by `verdict` for `duel`, or nullopt when it expressed no
// strict preference.
std::optional<std::string> chosen_slate(const DuelSpec& duel,
                                        const Verdict& verdict);

// Majority-vote result for one unordered pair of one user.
struct AggregatedOutcome {
  std::string user_id;
  std::string slate_a;  // slate_a < slate_b
  std::string slate_b;
  std::optional<std::string> winner;  // nullopt means TIE
  std::map<std::string, int> votes;   // both slates always present
  int abstentions = 0;
  std::optional<std::string> tie_resolved_to;  // set iff TIE

  bool is_tie() const { return !winner.has_value(); }
  int total_votes() const;
  // Winner, or the deterministic tie resolution.
  const std::string& preferred() const;
  const std::string& other(const std::string& slate_id) const;
  friend bool operator==(const AggregatedOutcome&,
                         const AggregatedOutcome&) = default;
};

struct PreferenceEdge {
  std::string from;  // preferred
  std::string to;
  int margin = 0;    // winner votes minus loser votes
  friend bool operator==(const PreferenceEdge&, const PreferenceEdge&) = default;
};

// Irreflexivity check for one (user, slate, judge).
struct SelfDuelResult {
  std::string user_id;
  std::string slate_id;
  std::string judge_id;
  bool passed = false;
};

class PreferenceRelation;

// Builds one user's relation. Throws ConflictingOutcomes when an unordered
// pair appears twice and InvalidArgument when outcomes span several users.
// A slate's self-duel entry passes only if every judge's self-duel passed.
PreferenceRelation derive_preference_relation(
    std::span<const AggregatedOutcome> outcomes,
    std::span<const SelfDuelResult> self_duels = {});

// Articulated preference relation of one user. At most one edge per unordered
// pair; TIE pairs carry no edge.
class PreferenceRelation {
 public:
  const std::string& user_id() const { return user_id_; }
  // Slates mentioned by any outcome, sorted.
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::map<SlatePair, PreferenceEdge>& edges()
      const {
    return edges_;
  }
  const std::map<std::string, bool>& self_duel_results() const {
    return self_duel_results_;
  }

  // Edge between a and b in either direction.
  const PreferenceEdge* edge_between(const std::string& a,
                                     const std::string& b) const;
  bool prefers(const std::string& a, const std::string& b) const;

  friend PreferenceRelation derive_preference_relation(
      std::span<const AggregatedOutcome> outcomes,
      std::span<const SelfDuelResult> self_duels);
  friend bool operator==(const PreferenceRelation&,
                         const PreferenceRelation&) = default;

 private:
  std::string user_id_;
  std::vector<std::string> nodes_;
  std::map<SlatePair, PreferenceEdge> edges_;
  std::map<std::string, bool> self_duel_results_;
};

}  // namespace slatejudge
