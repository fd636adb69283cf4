#include "slatejudge/core.h"

#include <algorithm>
#include <set>

#include "slatejudge/errors.h"
#include "slatejudge/hashing.h"

namespace slatejudge {

void Catalog::add(Item item) {
  if (item.item_id.empty()) throw InvalidArgument("item_id must not be empty");
  if (item.title.empty()) {
    throw InvalidArgument("item '" + item.item_id + "' has an empty title");
  }
  if (items_.contains(item.item_id)) {
    throw DuplicateItem("duplicate item_id '" + item.item_id + "'");
  }
  std::string key = item.item_id;
  items_.emplace(std::move(key), std::move(item));
}

const Item* Catalog::find(std::string_view item_id) const {
  auto it = items_.find(item_id);
  return it == items_.end() ? nullptr : &it->second;
}

const Item& Catalog::at(std::string_view item_id) const {
  if (const Item* item = find(item_id)) return *item;
  throw UnknownItem("unknown item_id '" + std::string(item_id) + "'");
}

std::string slate_content_id(std::span<const std::string> item_ids) {
  std::string joined;
  for (const auto& id : item_ids) {
    joined += id;
    joined.push_back('\x1f');
  }
  return "s-" + sha256_hex(joined).substr(0, 16);
}

Slate make_slate(std::span<const std::string> item_ids, const Catalog& catalog,
                 std::optional<std::string> slate_id) {
  if (item_ids.empty()) throw InvalidArgument("a slate needs at least one item");
  std::set<std::string_view> seen;
  for (const auto& id : item_ids) {
    if (!seen.insert(id).second) {
      throw DuplicateItem("item '" + id + "' appears twice in one slate");
    }
    if (!catalog.contains(id)) {
      throw UnknownItem("unknown item_id '" + id + "'");
    }
  }
  Slate slate;
  slate.item_ids.assign(item_ids.begin(), item_ids.end());
  slate.slate_id = slate_id && !slate_id->empty() ? std::move(*slate_id)
                                                  : slate_content_id(item_ids);
  return slate;
}

const Slate* UserRecord::find_slate(std::string_view slate_id) const {
  for (const auto& s : slates) {
    if (s.slate_id == slate_id) return &s;
  }
  return nullptr;
}

double UserRecord::utility(const std::string& slate_id) const {
  auto it = utilities.find(slate_id);
  if (it == utilities.end()) {
    throw InvalidArgument("slate '" + slate_id + "' is not evaluated for user '" +
                          user_id + "'");
  }
  return it->second;
}

void check_user_record(const UserRecord& user) {
  if (user.utilities.size() != user.slates.size()) {
    throw InvalidArgument("user '" + user.user_id +
                          "': utilities must cover exactly the evaluated slates");
  }
  for (const auto& slate : user.slates) {
    auto it = user.utilities.find(slate.slate_id);
    if (it == user.utilities.end()) {
      throw InvalidArgument("user '" + user.user_id + "': no utility for slate '" +
                            slate.slate_id + "'");
    }
    if (!(it->second >= 0.0 && it->second <= 1.0)) {
      throw InvalidArgument("user '" + user.user_id + "': utility of slate '" +
                            slate.slate_id + "' is outside [0, 1]");
    }
  }
}

SlatePair unordered_pair(const std::string& a, const std::string& b) {
  return a < b ? SlatePair{a, b} : SlatePair{b, a};
}

std::string_view to_string(Choice choice) {
  switch (choice) {
    case Choice::kFirst: return "FIRST";
    case Choice::kSecond: return "SECOND";
    case Choice::kAbstain: return "ABSTAIN";
    case Choice::kTie: return "TIE";
  }
  return "ABSTAIN";
}

Choice choice_from_string(std::string_view text) {
  if (text == "FIRST") return Choice::kFirst;
  if (text == "SECOND") return Choice::kSecond;
  if (text == "ABSTAIN") return Choice::kAbstain;
  if (text == "TIE") return Choice::kTie;
  throw InvalidArgument("unknown choice '" + std::string(text) + "'");
}

Verdict Verdict::pick(Choice choice, std::string digest) {
  if (choice == Choice::kAbstain) {
    throw InvalidArgument("use Verdict::abstain for abstentions");
  }
  return Verdict{choice, std::nullopt, std::move(digest)};
}

Verdict Verdict::abstain(std::string reason, std::string digest) {
  if (reason.empty()) reason = "unspecified";
  return Verdict{Choice::kAbstain, std::move(reason), std::move(digest)};
}

std::optional<std::string> chosen_slate(const DuelSpec& duel,
                                        const Verdict& verdict) {
  switch (verdict.choice) {
    case Choice::kFirst: return duel.first;
    case Choice::kSecond: return duel.second;
    default: return std::nullopt;
  }
}

int AggregatedOutcome::total_votes() const {
  int total = 0;
  for (const auto& [id, n] : votes) total += n;
  return total;
}

const std::string& AggregatedOutcome::preferred() const {
  if (winner) return *winner;
  if (tie_resolved_to) return *tie_resolved_to;
  throw InvalidArgument("tied outcome without a resolution");
}

const std::string& AggregatedOutcome::other(const std::string& slate_id) const {
  if (slate_id == slate_a) return slate_b;
  if (slate_id == slate_b) return slate_a;
  throw InvalidArgument("slate '" + slate_id + "' is not part of this pair");
}

const PreferenceEdge* PreferenceRelation::edge_between(
    const std::string& a, const std::string& b) const {
  auto it = edges_.find(unordered_pair(a, b));
  return it == edges_.end() ? nullptr : &it->second;
}

bool PreferenceRelation::prefers(const std::string& a,
                                 const std::string& b) const {
  const PreferenceEdge* e = edge_between(a, b);
  return e != nullptr && e->from == a && e->to == b;
}

PreferenceRelation derive_preference_relation(
    std::span<const AggregatedOutcome> outcomes,
    std::span<const SelfDuelResult> self_duels) {
  PreferenceRelation rel;
  std::set<std::string> nodes;
  std::set<SlatePair> seen;
  bool have_user = false;
  auto claim_user = [&](const std::string& user_id) {
    if (!have_user) {
      rel.user_id_ = user_id;
      have_user = true;
    } else if (rel.user_id_ != user_id) {
      throw InvalidArgument("outcomes for users '" + rel.user_id_ + "' and '" +
                            user_id + "' cannot form one relation");
    }
  };

  for (const auto& o : outcomes) {
    claim_user(o.user_id);
    if (o.slate_a == o.slate_b) {
      throw InvalidArgument("self-duel outcome for slate '" + o.slate_a +
                            "' passed as a preference outcome");
    }
    auto key = unordered_pair(o.slate_a, o.slate_b);
    if (!seen.insert(key).second) {
      throw ConflictingOutcomes("two outcomes for pair {" + key.first + ", " +
                                key.second + "} of user '" + o.user_id + "'");
    }
    nodes.insert(o.slate_a);
    nodes.insert(o.slate_b);
    if (o.is_tie()) continue;
    const std::string& win = *o.winner;
    const std::string& lose = o.other(win);
    auto vote = [&](const std::string& id) {
      auto it = o.votes.find(id);
      return it == o.votes.end() ? 0 : it->second;
    };
    rel.edges_.emplace(key, PreferenceEdge{win, lose, vote(win) - vote(lose)});
  }

  for (const auto& s : self_duels) {
    claim_user(s.user_id);
    auto [it, inserted] = rel.self_duel_results_.emplace(s.slate_id, s.passed);
    if (!inserted) it->second = it->second && s.passed;
  }

  rel.nodes_.assign(nodes.begin(), nodes.end());
  return rel;
}

}  // namespace slatejudge
